//! From raw interaction logs to the embedded model input sequence.

mod embed;
mod interaction;
mod transform;
mod window;

pub use embed::{
    embed_backward, embed_forward, embed_window, EmbedCache, EmbedParams, EmbeddedSequence,
    N_CORRECTNESS_TOKENS, N_PART_TOKENS,
};
pub use interaction::{Interaction, UserHistory};
pub use transform::{compute_tdiff, normalize_continuous, transform_elapsed, ELAPSED_CAP_MS, TDIFF_CAP_MS};
pub use window::{
    build_window, window_ends, FeatureWindow, UserFeatures, PAD, TOKEN_CORRECT, TOKEN_INCORRECT,
    TOKEN_UNKNOWN,
};

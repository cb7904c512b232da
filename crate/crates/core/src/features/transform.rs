//! Raw-log transforms: elapsed-time shift, clipped timestamp gaps and
//! normalization of both continuous channels to `[0, 1]`.

use crate::error::{Error, Result};

/// Three days in milliseconds; timestamp gaps are clipped here.
pub const TDIFF_CAP_MS: u64 = 3 * 24 * 3600 * 1000;

/// Solve times above five minutes are treated as five minutes.
pub const ELAPSED_CAP_MS: u64 = 300_000;

/// Turns "time spent on the previous question" into "time spent on this
/// question" by shifting left one step. The last entry is unknown when the
/// prediction is made and becomes 0, as do missing values.
pub fn transform_elapsed(prior_elapsed: &[Option<u64>]) -> Vec<u64> {
    let n = prior_elapsed.len();
    (0..n)
        .map(|k| {
            if k + 1 < n {
                prior_elapsed[k + 1].unwrap_or(0)
            } else {
                0
            }
        })
        .collect()
}

/// Gap to the previous timestamp, clipped at [`TDIFF_CAP_MS`]; 0 for the
/// first event.
pub fn compute_tdiff(user_id: u64, timestamps: &[u64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(timestamps.len());
    for (k, &t) in timestamps.iter().enumerate() {
        if k == 0 {
            out.push(0);
            continue;
        }
        let prev = timestamps[k - 1];
        if t < prev {
            return Err(Error::Data(format!(
                "user {user_id}: timestamp decreases at index {k} ({prev} -> {t})"
            )));
        }
        out.push((t - prev).min(TDIFF_CAP_MS));
    }
    Ok(out)
}

/// Maps `(elapsed_ms, tdiff_ms)` onto `[0, 1]²`.
pub fn normalize_continuous(elapsed_ms: u64, tdiff_ms: u64) -> (f64, f64) {
    let e = elapsed_ms.min(ELAPSED_CAP_MS) as f64 / ELAPSED_CAP_MS as f64;
    let t = tdiff_ms.min(TDIFF_CAP_MS) as f64 / TDIFF_CAP_MS as f64;
    (e, t)
}

//! Synthetic interaction logs with a known skill model, and CSV ingestion.

mod csv_io;
mod synth;

pub use csv_io::{
    ingest_csv, ingest_dir, read_questions, read_truth, write_corpus, write_interactions, write_questions, write_truth,
    INTERACTIONS_FILE, QUESTIONS_FILE, TRUTH_FILE,
};
pub use synth::{generate, QuestionMeta, SynthConfig, SyntheticCorpus, TruthEvent};

//! Competition-format CSV files and the latent-truth sidecar.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::synth::{QuestionMeta, SyntheticCorpus, TruthEvent};
use crate::error::{Error, Result};
use crate::features::{Interaction, UserHistory};

pub const INTERACTIONS_FILE: &str = "interactions.csv";
pub const QUESTIONS_FILE: &str = "questions.csv";
pub const TRUTH_FILE: &str = "truth.tsv";

const INTERACTION_COLUMNS: [&str; 6] = [
    "timestamp",
    "user_id",
    "content_id",
    "content_type_id",
    "answered_correctly",
    "prior_question_elapsed_time",
];

pub fn write_interactions(path: &Path, users: &[UserHistory]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(INTERACTION_COLUMNS)?;
    for it in users.iter().flat_map(|u| &u.interactions) {
        w.write_record([
            it.timestamp_ms.to_string(),
            it.user_id.to_string(),
            it.question_id.to_string(),
            "0".to_string(),
            (it.answered_correctly as u8).to_string(),
            it.prior_elapsed_ms.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_questions(path: &Path, questions: &[QuestionMeta]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["question_id", "part"])?;
    for q in questions {
        w.write_record([q.question_id.to_string(), q.part.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One line per event: `user_id  event_index  p_true`, tab-separated.
pub fn write_truth(path: &Path, truth: &[TruthEvent]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in truth {
        writeln!(w, "{}\t{}\t{:?}", t.user_id, t.event_index, t.p_true)?;
    }
    w.flush()?;
    Ok(())
}

/// `(user_id, event_index) → p_true`.
pub fn read_truth(path: &Path) -> Result<HashMap<(u64, usize), f64>> {
    let mut out = HashMap::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = || Error::Data(format!("{}: malformed line {}", path.display(), n + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        let user: u64 = fields[0].parse().map_err(|_| bad())?;
        let idx: usize = fields[1].parse().map_err(|_| bad())?;
        let p: f64 = fields[2].parse().map_err(|_| bad())?;
        out.insert((user, idx), p);
    }
    Ok(out)
}

/// Writes the interactions, questions and truth files into `dir`.
pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_interactions(&dir.join(INTERACTIONS_FILE), &corpus.users)?;
    write_questions(&dir.join(QUESTIONS_FILE), &corpus.questions)?;
    write_truth(&dir.join(TRUTH_FILE), &corpus.truth)
}

fn column(headers: &csv::StringRecord, name: &str, file: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", file.display())))
}

/// `question_id → part` from a questions file.
pub fn read_questions(path: &Path) -> Result<HashMap<u32, u8>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let qi = column(&headers, "question_id", path)?;
    let pi = column(&headers, "part", path)?;
    let mut parts = HashMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Data(format!("{}: row {}: bad {what}", path.display(), n + 2));
        let q: u32 = rec[qi].trim().parse().map_err(|_| bad("question_id"))?;
        let part: u8 = rec[pi].trim().parse().map_err(|_| bad("part"))?;
        if !(1..=7).contains(&part) {
            return Err(bad("part"));
        }
        if parts.insert(q, part).is_some() {
            return Err(Error::Data(format!("{}: duplicate question_id {q}", path.display())));
        }
    }
    Ok(parts)
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Option<T> {
    let s = s.trim();
    s.parse().ok().or_else(|| {
        // integer columns are sometimes written as floats, e.g. `21000.0`
        let f: f64 = s.parse().ok()?;
        (f.fract() == 0.0 && f >= 0.0).then(|| format!("{f:.0}").parse().ok()).flatten()
    })
}

/// Reads question rows of an interactions file, grouped by user in order of
/// first appearance, rows kept in file order. Lecture rows
/// (`content_type_id != 0`) are dropped.
pub fn ingest_csv(interactions_path: &Path, questions_path: &Path) -> Result<Vec<UserHistory>> {
    let parts = read_questions(questions_path)?;
    let path = interactions_path;
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = INTERACTION_COLUMNS
        .iter()
        .map(|c| column(&headers, c, path))
        .collect::<Result<_>>()?;
    let [ts, user, content, ctype, correct, elapsed] = idx[..] else {
        unreachable!()
    };

    let mut groups: IndexMap<u64, Vec<Interaction>> = IndexMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = n + 2;
        let bad = |col: &str, value: &str| Error::Data(format!("{}: row {row}: bad {col} `{value}`", path.display()));
        let content_type: u8 = parse_num(&rec[ctype]).ok_or_else(|| bad("content_type_id", &rec[ctype]))?;
        if content_type != 0 {
            continue;
        }
        let question_id: u32 = parse_num(&rec[content]).ok_or_else(|| bad("content_id", &rec[content]))?;
        let part = *parts.get(&question_id).ok_or_else(|| {
            Error::Data(format!(
                "{}: row {row}: content_id {question_id} not in {}",
                path.display(),
                questions_path.display()
            ))
        })?;
        let answered_correctly = match rec[correct].trim() {
            "0" => false,
            "1" => true,
            v => return Err(bad("answered_correctly", v)),
        };
        let prior_elapsed_ms = match rec[elapsed].trim() {
            "" | "nan" | "NaN" => None,
            s => {
                let v: f64 = s.parse().map_err(|_| bad("prior_question_elapsed_time", s))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(bad("prior_question_elapsed_time", s));
                }
                Some(v.round() as u64)
            }
        };
        let user_id: u64 = parse_num(&rec[user]).ok_or_else(|| bad("user_id", &rec[user]))?;
        groups.entry(user_id).or_default().push(Interaction {
            user_id,
            question_id,
            part,
            timestamp_ms: parse_num(&rec[ts]).ok_or_else(|| bad("timestamp", &rec[ts]))?,
            answered_correctly,
            prior_elapsed_ms,
        });
    }
    Ok(groups
        .into_iter()
        .map(|(user_id, interactions)| UserHistory { user_id, interactions })
        .collect())
}

/// Reads `interactions.csv` and `questions.csv` from `dir`.
pub fn ingest_dir(dir: &Path) -> Result<Vec<UserHistory>> {
    ingest_csv(&dir.join(INTERACTIONS_FILE), &dir.join(QUESTIONS_FILE))
}

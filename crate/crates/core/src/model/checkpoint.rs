//! Checkpoint file format.
//!
//! ```text
//! lastquery-checkpoint v1 scalar=f64 d=32 n_heads=2 seq_len=128 d_ff=128 d_e=32 n_questions=100 tensors=33\n
//! <name> <rows> <cols>\n<rows·cols little-endian f64 values>\n
//! ...
//! ```
//!
//! Values are always stored as 64-bit floats, so both `f64` and `f32` models
//! round-trip bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::config::ModelConfig;
use super::network::ModelParams;
use crate::error::{Error, Result};
use crate::numcore::{Parameters, Rng};
use crate::scalar::Scalar;

const MAGIC: &str = "lastquery-checkpoint";
const VERSION: &str = "v1";

pub fn write_checkpoint<T: Scalar, W: Write>(theta: &ModelParams<T>, mut out: W) -> Result<()> {
    let c = &theta.config;
    let params = theta.params();
    writeln!(
        out,
        "{MAGIC} {VERSION} scalar={} d={} n_heads={} seq_len={} d_ff={} d_e={} n_questions={} tensors={}",
        T::NAME,
        c.d,
        c.n_heads,
        c.seq_len,
        c.d_ff,
        c.d_e,
        c.n_questions,
        params.len()
    )?;
    for p in params {
        let (r, cols) = p.shape();
        writeln!(out, "{} {} {}", p.name, r, cols)?;
        for &v in p.value.data() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_checkpoint<T: Scalar>(theta: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(theta, BufWriter::new(File::create(path)?))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_line<R: BufRead>(input: &mut R) -> Result<String> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Err(bad("unexpected end of file"));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

fn parse_header(line: &str) -> Result<(ModelConfig, usize)> {
    let mut fields = line.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(bad("not a lastquery checkpoint"));
    }
    match fields.next() {
        Some(VERSION) => {}
        other => return Err(bad(format!("unsupported version {other:?}"))),
    }
    let mut get = std::collections::HashMap::new();
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| bad(format!("bad header field `{f}`")))?;
        get.insert(k, v);
    }
    let num = |k: &str| -> Result<usize> {
        get.get(k)
            .ok_or_else(|| bad(format!("header missing `{k}`")))?
            .parse()
            .map_err(|_| bad(format!("header field `{k}` is not a number")))
    };
    let config = ModelConfig {
        d: num("d")?,
        n_heads: num("n_heads")?,
        seq_len: num("seq_len")?,
        d_ff: num("d_ff")?,
        d_e: num("d_e")?,
        n_questions: num("n_questions")?,
    };
    Ok((config, num("tensors")?))
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(mut input: R) -> Result<ModelParams<T>> {
    let (config, n_tensors) = parse_header(&read_line(&mut input)?)?;
    config.validate()?;
    let mut theta = ModelParams::<T>::new(config, &mut Rng::new(0))?;
    let mut params = theta.params_mut();
    if params.len() != n_tensors {
        return Err(bad(format!("expected {} tensors, header says {n_tensors}", params.len())));
    }
    let mut buf = [0u8; 8];
    for p in params.iter_mut() {
        let line = read_line(&mut input)?;
        let parts: Vec<&str> = line.split(' ').collect();
        let [name, rows, cols] = parts[..] else {
            return Err(bad(format!("bad tensor header `{line}`")));
        };
        let shape = (
            rows.parse::<usize>().map_err(|_| bad("bad row count"))?,
            cols.parse::<usize>().map_err(|_| bad("bad column count"))?,
        );
        if name != p.name || shape != p.shape() {
            return Err(bad(format!(
                "tensor `{name}` {shape:?} does not match expected `{}` {:?}",
                p.name,
                p.shape()
            )));
        }
        for v in p.value.data_mut() {
            input.read_exact(&mut buf)?;
            *v = T::lit(f64::from_le_bytes(buf));
        }
        let mut nl = [0u8; 1];
        input.read_exact(&mut nl)?;
        if nl[0] != b'\n' {
            return Err(bad(format!("missing terminator after `{name}`")));
        }
    }
    Ok(theta)
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelParams<T>> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

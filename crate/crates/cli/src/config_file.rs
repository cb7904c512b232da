//! `--config FILE` support: `key=value` lines become `--key value` flags
//! placed before the command-line flags, so explicit flags win.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// `key=true` becomes a bare switch and `key=false` is dropped.
pub fn flags_from_config(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got `{line}`", n + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key `{key}`", n + 1);
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Replaces `--config FILE` in `args` (after the subcommand) by the flags it
/// holds. `check-grad` keeps its own `--config` (a preset name).
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    if args.len() < 2 || args[1] == "check-grad" {
        return Ok(args);
    }
    let mut head: Vec<OsString> = args[..2].to_vec();
    let mut rest = Vec::new();
    let mut it = args.into_iter().skip(2);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        let path = if s == "--config" {
            Some(it.next().context("--config needs a file path")?)
        } else {
            s.strip_prefix("--config=").map(OsString::from)
        };
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading config {}", p.to_string_lossy()))?;
                head.extend(flags_from_config(&text)?);
            }
            None => rest.push(a),
        }
    }
    head.extend(rest);
    Ok(head)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let f = flags_from_config("# c\nepochs = 3\n\nbatch_size=8\nparallel=true\nfoo=false\n").unwrap();
        assert_eq!(f, ["--epochs", "3", "--batch-size", "8", "--parallel"].map(OsString::from));
        assert!(flags_from_config("nonsense").is_err());
    }

    #[test]
    fn check_grad_is_untouched() {
        let a: Vec<OsString> = ["lq", "check-grad", "--config", "tiny"].map(OsString::from).to_vec();
        assert_eq!(expand(a.clone()).unwrap(), a);
    }
}

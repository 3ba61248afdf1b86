//! `key = value` configuration files.
//!
//! Keys are long flag names (`d_max` and `d-max` are the same key). Entries are
//! appended to the command line as `--key=value` unless the flag was given
//! there already, so flags always win and unknown keys are rejected by the
//! argument parser like any other unknown flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
    pub dir: PathBuf,
}

pub fn parse(text: &str, dir: &Path) -> Result<ConfigFile> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got `{line}`", no + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key `{}`", no + 1, k.trim());
        }
        let val = v.trim().trim_matches('"').to_string();
        if entries.iter().any(|(e, _)| *e == key) {
            bail!("config line {}: key `{key}` repeated", no + 1);
        }
        entries.push((key, val));
    }
    Ok(ConfigFile { entries, dir: dir.to_path_buf() })
}

pub fn load(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &dir)
}

/// Path of `--config FILE` / `--config=FILE`, if any.
pub fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn given(argv: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let eq = format!("{flag}=");
    argv.iter().any(|a| *a == flag || a.starts_with(&eq))
}

/// Weight tables and function files named in a config resolve against its directory.
fn resolve_paths(val: &str, dir: &Path) -> String {
    let mut toks: Vec<String> = val.split_whitespace().map(str::to_string).collect();
    match toks.first().map(String::as_str) {
        Some("table") => {
            for t in toks.iter_mut().skip(1) {
                if let Some(f) = t.strip_prefix("file=") {
                    if Path::new(f).is_relative() {
                        *t = format!("file={}", dir.join(f).display());
                    }
                }
            }
        }
        Some("file") if toks.len() == 2 && Path::new(&toks[1]).is_relative() => {
            toks[1] = dir.join(&toks[1]).display().to_string();
        }
        _ => return val.to_string(),
    }
    toks.join(" ")
}

/// `argv` with the config entries that were not given on the command line.
pub fn merge(argv: &[String], cfg: &ConfigFile) -> Vec<String> {
    let mut out = argv.to_vec();
    for (k, v) in &cfg.entries {
        if given(argv, k) {
            continue;
        }
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => out.push(format!("--{k}={}", resolve_paths(v, &cfg.dir))),
        }
    }
    out
}

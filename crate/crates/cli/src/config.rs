//! Flat `key = value` configuration files. Keys are long flag names.

use std::collections::BTreeSet;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// Appends config entries not already given on the command line.
///
/// `known(sub)` lists the long flags valid for a subcommand (globals
/// included); `all` lists every long flag of the program. Keys that belong
/// only to other subcommands are skipped.
pub fn merge(
    args: Vec<String>,
    subcommands: &[String],
    known: impl Fn(&str) -> BTreeSet<String>,
    all: &BTreeSet<String>,
) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = parse(&text)?;
    let Some(sub) = args.iter().skip(1).find(|a| subcommands.contains(a)).cloned() else { return Ok(args) };
    let valid = known(&sub);
    let mut out = args.clone();
    for (k, v) in entries {
        if k == "config" {
            continue;
        }
        if !all.contains(&k) {
            return Err(format!("unknown config key '{k}'"));
        }
        if valid.contains(&k) && !given(&args, &k) {
            out.push(format!("--{k}={v}"));
        }
    }
    Ok(out)
}

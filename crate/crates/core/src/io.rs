//! FBF-1 text format: a header `FBF1 xmin xmax ymin ymax h`, then one grid
//! row per line (increasing x2), values space-separated with 17 significant
//! digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{DomainSpec, ScalarField};

pub fn to_fbf_string(f: &ScalarField) -> String {
    let s = f.spec();
    let mut out = String::with_capacity(f.values().len() * 24 + 64);
    let _ = writeln!(out, "FBF1 {} {} {} {} {}", s.xmin, s.xmax, s.ymin, s.ymax, s.h);
    for j in 0..=s.ny() {
        for i in 0..=s.nx() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", f.value(i, j));
        }
        out.push('\n');
    }
    out
}

pub fn parse_fbf(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("FBF1") {
        return Err(Error::Format("missing FBF1 magic".into()));
    }
    let nums: Vec<f64> = parts
        .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad header number '{t}'"))))
        .collect::<Result<_>>()?;
    if nums.len() != 5 {
        return Err(Error::Format(format!("header has {} numbers, expected 5", nums.len())));
    }
    let spec = DomainSpec::new(nums[0], nums[1], nums[2], nums[3], nums[4])?;
    let mut values = Vec::with_capacity(spec.node_count());
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for t in line.split_whitespace() {
            values.push(t.parse::<f64>().map_err(|_| Error::Format(format!("row {k}: bad value '{t}'")))?);
        }
        if values.len() - before != spec.nx() + 1 {
            return Err(Error::Format(format!(
                "row {k} has {} values, expected {}",
                values.len() - before,
                spec.nx() + 1
            )));
        }
        rows += 1;
    }
    if rows != spec.ny() + 1 {
        return Err(Error::Format(format!("{rows} rows, expected {}", spec.ny() + 1)));
    }
    ScalarField::from_values(spec, values)
}

pub fn write_fbf(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_fbf_string(f))?;
    Ok(())
}

pub fn read_fbf(path: impl AsRef<Path>) -> Result<ScalarField> {
    parse_fbf(&std::fs::read_to_string(path)?)
}

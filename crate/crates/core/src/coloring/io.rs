//! Stored colorings: a `station,color` CSV with one row per colored
//! station, colors written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::format_real;

use super::run::Coloring;

pub const COLORING_HEADER: &str = "station,color";

pub fn write_coloring_string(coloring: &Coloring) -> String {
    let mut out = format!("{COLORING_HEADER}\n");
    for (v, c) in coloring {
        let _ = writeln!(out, "{v},{}", format_real(*c));
    }
    out
}

pub fn parse_coloring(text: &str) -> Result<Coloring> {
    let mut coloring = Coloring::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if !seen_header {
            if content != COLORING_HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{COLORING_HEADER}`"),
                });
            }
            seen_header = true;
            continue;
        }
        let parse_err = |message: String| Error::Parse { line, message };
        let (v, c) = content
            .split_once(',')
            .ok_or_else(|| parse_err("expected `station,color`".into()))?;
        let v: usize = v
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad station id `{}`", v.trim())))?;
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad color `{}`", c.trim())))?;
        if !(c.is_finite() && c >= 0.0) {
            return Err(parse_err(format!("color {c} is not a probability")));
        }
        if coloring.insert(v, c).is_some() {
            return Err(parse_err(format!("station {v} colored twice")));
        }
    }
    if !seen_header {
        return Err(Error::Parse {
            line: 1,
            message: "empty coloring file".into(),
        });
    }
    Ok(coloring)
}

pub fn write_coloring(coloring: &Coloring, path: &Path) -> Result<()> {
    std::fs::write(path, write_coloring_string(coloring))?;
    Ok(())
}

pub fn read_coloring(path: &Path) -> Result<Coloring> {
    parse_coloring(&std::fs::read_to_string(path)?)
}

//! Plain-text topology files.
//!
//! ```text
//! #space=euclidean2 epsilon=2.0000000000000001e-1
//! 0, 1.2500000000000000e0, 3.0000000000000000e-1
//! 1, ...
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::metric::{MetricPoint, MetricSpace};
use super::topology::NetworkTopology;

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_topology_string(topology: &NetworkTopology) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "#space={} epsilon={}",
        topology.space(),
        format_real(topology.epsilon())
    );
    for station in topology.stations() {
        let coords: Vec<String> = station.position.coords().iter().map(|&c| format_real(c)).collect();
        let _ = writeln!(out, "{}, {}", station.id, coords.join(", "));
    }
    out
}

pub fn parse_topology(text: &str) -> Result<NetworkTopology> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (header_line, header) = lines.by_ref().find(|(_, l)| !l.is_empty()).ok_or(Error::Parse {
        line: 1,
        message: "empty topology file".into(),
    })?;
    let (space, epsilon) = parse_header(header).map_err(|message| Error::Parse {
        line: header_line,
        message,
    })?;

    let mut positions = Vec::new();
    for (line, content) in lines {
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad station id `{}`", fields[0])))?;
        if id != positions.len() {
            return Err(parse_err(format!(
                "expected station id {}, found {id}",
                positions.len()
            )));
        }
        if fields.len() - 1 != space.embedding_dimension() {
            return Err(parse_err(format!(
                "expected {} coordinates, found {}",
                space.embedding_dimension(),
                fields.len() - 1
            )));
        }
        let coords = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(format!("bad coordinate `{f}`"))))
            .collect::<Result<Vec<f64>>>()?;
        positions.push(MetricPoint::new(coords).map_err(|e| parse_err(e.to_string()))?);
    }
    NetworkTopology::new(space, epsilon, positions)
}

fn parse_header(header: &str) -> std::result::Result<(MetricSpace, f64), String> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| "header must start with `#space=`".to_string())?;
    let mut space = None;
    let mut epsilon = None;
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("space", v)) => space = Some(v.parse::<MetricSpace>().map_err(|e| e.to_string())?),
            Some(("epsilon", v)) => epsilon = Some(v.parse::<f64>().map_err(|_| format!("bad epsilon `{v}`"))?),
            _ => return Err(format!("unexpected header token `{token}`")),
        }
    }
    Ok((
        space.ok_or("header lacks `space=`")?,
        epsilon.ok_or("header lacks `epsilon=`")?,
    ))
}

pub fn write_topology(topology: &NetworkTopology, path: &Path) -> Result<()> {
    std::fs::write(path, write_topology_string(topology))?;
    Ok(())
}

pub fn read_topology(path: &Path) -> Result<NetworkTopology> {
    parse_topology(&std::fs::read_to_string(path)?)
}

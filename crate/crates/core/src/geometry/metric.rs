use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A station position. Coordinates are in model units where the
/// communication range is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    coords: Vec<f64>,
}

impl MetricPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("a point needs at least one coordinate"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(MetricPoint { coords })
    }

    pub fn line(x: f64) -> Self {
        MetricPoint { coords: vec![x] }
    }

    pub fn plane(x: f64, y: f64) -> Self {
        MetricPoint { coords: vec![x, y] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }
}

/// The metric spaces shipped with the simulator.
///
/// Both satisfy the bounded growth property with the growth dimension
/// equal to the embedding dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricSpace {
    /// The real line with `|x - y|`.
    Line,
    /// The Euclidean plane.
    #[serde(rename = "euclidean2")]
    Euclidean2,
}

impl MetricSpace {
    pub fn embedding_dimension(self) -> usize {
        match self {
            MetricSpace::Line => 1,
            MetricSpace::Euclidean2 => 2,
        }
    }

    pub fn growth_dimension(self) -> f64 {
        self.embedding_dimension() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricSpace::Line => "line",
            MetricSpace::Euclidean2 => "euclidean2",
        }
    }

    pub fn dist(self, p: &MetricPoint, q: &MetricPoint) -> Result<f64> {
        let dim = self.embedding_dimension();
        for point in [p, q] {
            if point.dimension() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: point.dimension(),
                });
            }
        }
        Ok(self.dist_unchecked(p, q))
    }

    /// Distance without the dimension check; callers own the invariant.
    pub(crate) fn dist_unchecked(self, p: &MetricPoint, q: &MetricPoint) -> f64 {
        match self {
            MetricSpace::Line => (p.coords[0] - q.coords[0]).abs(),
            MetricSpace::Euclidean2 => (p.coords[0] - q.coords[0]).hypot(p.coords[1] - q.coords[1]),
        }
    }
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(MetricSpace::Line),
            "euclidean2" => Ok(MetricSpace::Euclidean2),
            other => Err(Error::invalid(format!("unknown metric space `{other}`"))),
        }
    }
}

/// Distance between two points of `space`.
pub fn dist(p: &MetricPoint, q: &MetricPoint, space: MetricSpace) -> Result<f64> {
    space.dist(p, q)
}

/// Upper bound on the number of radius-`small` balls needed to cover a
/// radius-`big` ball in a space of growth dimension `gamma`:
/// `ceil(3 * big / small) ^ gamma`, rounded up to an integer.
pub fn covering_bound(big: f64, small: f64, gamma: f64) -> Result<u64> {
    if !(big > 0.0 && small > 0.0 && gamma > 0.0) || !big.is_finite() || !small.is_finite() {
        return Err(Error::invalid(format!(
            "covering_bound needs positive finite radii and dimension (got {big}, {small}, {gamma})"
        )));
    }
    let per_axis = snapped_ceil(3.0 * big / small);
    Ok(snapped_ceil(per_axis.powf(gamma)) as u64)
}

/// `ceil` that ignores representation noise just above an integer
/// (e.g. `3 / (1/6)` evaluating to `18.000000000000004`).
fn snapped_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

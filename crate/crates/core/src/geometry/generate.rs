use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metric::{MetricPoint, MetricSpace};
use super::topology::NetworkTopology;

/// Resampling attempts for random families before giving up.
pub const MAX_RESAMPLES: usize = 100;

/// Topology generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TopologyFamily {
    /// `n` points uniform in a `side x side` square.
    UniformSquare { side: f64 },
    /// Row-major grid with `ceil(sqrt(n))` columns.
    Grid { spacing: f64 },
    /// Equally spaced points on a line.
    LineUniform { spacing: f64 },
    /// Points on a line with gaps `1/2, 1/4, 1/8, ...`, so the edge-length
    /// ratio grows exponentially with `n`.
    LineGeometric,
}

impl TopologyFamily {
    pub fn space(&self) -> MetricSpace {
        match self {
            TopologyFamily::UniformSquare { .. } | TopologyFamily::Grid { .. } => MetricSpace::Euclidean2,
            TopologyFamily::LineUniform { .. } | TopologyFamily::LineGeometric => MetricSpace::Line,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TopologyFamily::UniformSquare { .. } => "uniform-square",
            TopologyFamily::Grid { .. } => "grid",
            TopologyFamily::LineUniform { .. } => "line-uniform",
            TopologyFamily::LineGeometric => "line-geometric",
        }
    }

    /// Parses a family name plus its single scale parameter (ignored for
    /// `line-geometric`).
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let need =
            |what: &str| param.ok_or_else(|| Error::invalid(format!("family `{name}` needs a {what} parameter")));
        Ok(match name {
            "uniform-square" => TopologyFamily::UniformSquare { side: need("side")? },
            "grid" => TopologyFamily::Grid {
                spacing: need("spacing")?,
            },
            "line-uniform" => TopologyFamily::LineUniform {
                spacing: need("spacing")?,
            },
            "line-geometric" => TopologyFamily::LineGeometric,
            other => return Err(Error::invalid(format!("unknown topology family `{other}`"))),
        })
    }

    fn positions(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<MetricPoint>> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        Ok(match *self {
            TopologyFamily::UniformSquare { side } => {
                let side = positive(side, "side")?;
                (0..n)
                    .map(|_| MetricPoint::plane(rng.random::<f64>() * side, rng.random::<f64>() * side))
                    .collect()
            }
            TopologyFamily::Grid { spacing } => {
                let spacing = positive(spacing, "spacing")?;
                let columns = (n as f64).sqrt().ceil().max(1.0) as usize;
                (0..n)
                    .map(|i| MetricPoint::plane((i % columns) as f64 * spacing, (i / columns) as f64 * spacing))
                    .collect()
            }
            TopologyFamily::LineUniform { spacing } => {
                let spacing = positive(spacing, "spacing")?;
                (0..n).map(|i| MetricPoint::line(i as f64 * spacing)).collect()
            }
            TopologyFamily::LineGeometric => {
                let mut x = 0.0;
                let mut gap = 0.5;
                let mut points = Vec::with_capacity(n);
                for _ in 0..n {
                    points.push(MetricPoint::line(x));
                    x += gap;
                    gap /= 2.0;
                }
                points
            }
        })
    }

    fn is_random(&self) -> bool {
        matches!(self, TopologyFamily::UniformSquare { .. })
    }
}

impl fmt::Display for TopologyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyFamily::UniformSquare { side } => write!(f, "uniform-square(side={side})"),
            TopologyFamily::Grid { spacing } => write!(f, "grid(spacing={spacing})"),
            TopologyFamily::LineUniform { spacing } => write!(f, "line-uniform(spacing={spacing})"),
            TopologyFamily::LineGeometric => f.write_str("line-geometric"),
        }
    }
}

/// Generates a connected topology; deterministic in `(family, n, epsilon, seed)`.
///
/// Random families are resampled up to [`MAX_RESAMPLES`] times. Deterministic
/// families fail immediately when the graph is disconnected or positions
/// coincide.
pub fn generate_topology(family: TopologyFamily, n: usize, epsilon: f64, seed: u64) -> Result<NetworkTopology> {
    if n == 0 {
        return Err(Error::invalid("a topology needs at least one station"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = if family.is_random() { MAX_RESAMPLES } else { 1 };
    let mut last_error = None;
    for _ in 0..attempts {
        let positions = family.positions(n, &mut rng)?;
        let topology = NetworkTopology::new(family.space(), epsilon, positions)?;
        let checked = topology
            .require_distinct_positions()
            .and_then(|()| topology.require_connected());
        match checked {
            Ok(()) => return Ok(topology),
            Err(err) => last_error = Some(err),
        }
    }
    Err(last_error.expect("at least one attempt"))
}

/// Spacing for a `line-uniform` family whose diameter is `ceil((n-1)/hops)`:
/// every station reaches exactly `hops` successors.
pub fn line_spacing_for_hops(epsilon: f64, hops: usize) -> f64 {
    assert!(hops >= 1);
    // shrink slightly so `hops * spacing` stays clear of the threshold after rounding
    (1.0 - epsilon) / hops as f64 * 0.999
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_geometric_positions() {
        let t = generate_topology(TopologyFamily::LineGeometric, 3, 0.2, 0).unwrap();
        let xs: Vec<f64> = t.stations().iter().map(|s| s.position.coords()[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 0.75]);
    }

    #[test]
    fn single_grid_station() {
        let t = generate_topology(TopologyFamily::Grid { spacing: 0.5 }, 1, 0.2, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.diameter(), Some(0));
        assert!(t.neighbors(0).is_empty());
    }

    #[test]
    fn line_uniform_path() {
        let eps = 0.2;
        let t = generate_topology(
            TopologyFamily::LineUniform {
                spacing: 0.9 * (1.0 - eps),
            },
            3,
            eps,
            0,
        )
        .unwrap();
        assert_eq!(t.diameter(), Some(2));
        assert_eq!(t.neighbors(1), &[0, 2]);
    }

    #[test]
    fn wide_grid_is_disconnected() {
        let err = generate_topology(TopologyFamily::Grid { spacing: 0.9 }, 4, 0.2, 0).unwrap_err();
        assert!(matches!(err, Error::TopologyDisconnected { components: 4 }));
    }

    #[test]
    fn sparse_square_gives_up() {
        let err = generate_topology(TopologyFamily::UniformSquare { side: 100.0 }, 5, 0.2, 3).unwrap_err();
        assert!(matches!(err, Error::TopologyDisconnected { .. }));
    }

    #[test]
    fn generation_is_deterministic() {
        let fam = TopologyFamily::UniformSquare { side: 3.0 };
        let a = generate_topology(fam, 60, 0.3, 42).unwrap();
        let b = generate_topology(fam, 60, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(fam, 60, 0.3, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hop_spacing_controls_diameter() {
        let eps = 0.5;
        for hops in 1..4 {
            let s = line_spacing_for_hops(eps, hops);
            let t = generate_topology(TopologyFamily::LineUniform { spacing: s }, 13, eps, 0).unwrap();
            assert_eq!(t.diameter(), Some(12u32.div_ceil(hops as u32)));
        }
    }

    #[test]
    fn family_names_parse() {
        assert_eq!(
            TopologyFamily::from_name("grid", Some(0.5)).unwrap(),
            TopologyFamily::Grid { spacing: 0.5 }
        );
        assert!(TopologyFamily::from_name("grid", None).is_err());
        assert!(TopologyFamily::from_name("torus", Some(1.0)).is_err());
    }
}

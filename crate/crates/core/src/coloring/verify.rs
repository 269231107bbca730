use std::collections::BTreeMap;

use crate::error::Result;
use crate::geometry::{covering_bound, NetworkTopology, StationId};

use super::run::Coloring;

/// Heaviest per-color ball found by a verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMass {
    pub color: f64,
    pub center: StationId,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallMassReport {
    pub pass: bool,
    pub radius: f64,
    pub threshold: f64,
    pub worst: Option<BallMass>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityReport {
    pub pass: bool,
    pub threshold: f64,
    pub first_failure: Option<StationId>,
    /// Station with the smallest best-color mass, and that mass.
    pub weakest: Option<(StationId, f64)>,
}

fn per_color_mass(
    coloring: &Coloring,
    topology: &NetworkTopology,
    center: StationId,
    radius: f64,
) -> BTreeMap<u64, f64> {
    let mut mass: BTreeMap<u64, f64> = BTreeMap::new();
    for (&w, &color) in coloring {
        if topology.distance(center, w) <= radius {
            *mass.entry(color.to_bits()).or_insert(0.0) += color;
        }
    }
    mass
}

fn heaviest_ball(coloring: &Coloring, topology: &NetworkTopology, radius: f64) -> Option<BallMass> {
    let mut worst: Option<BallMass> = None;
    for &center in coloring.keys() {
        for (bits, sum) in per_color_mass(coloring, topology, center, radius) {
            if worst.is_none_or(|w| sum > w.sum) {
                worst = Some(BallMass {
                    color: f64::from_bits(bits),
                    center,
                    sum,
                });
            }
        }
    }
    worst
}

/// Per color, the mass in every station-centered unit ball stays below `c1`.
pub fn verify_ball_mass(coloring: &Coloring, topology: &NetworkTopology, c1: f64) -> BallMassReport {
    let worst = heaviest_ball(coloring, topology, 1.0);
    BallMassReport {
        pass: worst.is_none_or(|w| w.sum < c1),
        radius: 1.0,
        threshold: c1,
        worst,
    }
}

/// Radius-2 station-centered variant: every unit ball lies in some
/// `B(w, 2)`, so `covering_bound(2, 1) * c1` bounds all unit balls at once.
pub fn verify_ball_mass_strict(
    coloring: &Coloring,
    topology: &NetworkTopology,
    c1: f64,
    gamma: f64,
) -> Result<BallMassReport> {
    let threshold = covering_bound(2.0, 1.0, gamma)? as f64 * c1;
    let worst = heaviest_ball(coloring, topology, 2.0);
    Ok(BallMassReport {
        pass: worst.is_none_or(|w| w.sum < threshold),
        radius: 2.0,
        threshold,
        worst,
    })
}

/// Every participant sees some color whose mass in `B(v, ε/2)` reaches
/// `threshold`.
pub fn verify_proximity(
    coloring: &Coloring,
    topology: &NetworkTopology,
    epsilon: f64,
    threshold: f64,
) -> ProximityReport {
    let mut report = ProximityReport {
        pass: true,
        threshold,
        first_failure: None,
        weakest: None,
    };
    for &v in coloring.keys() {
        let best = per_color_mass(coloring, topology, v, epsilon / 2.0)
            .into_values()
            .fold(0.0, f64::max);
        if report.weakest.is_none_or(|(_, m)| best < m) {
            report.weakest = Some((v, best));
        }
        if best < threshold && report.pass {
            report.pass = false;
            report.first_failure = Some(v);
        }
    }
    report
}

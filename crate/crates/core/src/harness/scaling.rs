//! Least-squares fits of median completion rounds against the broadcast
//! round bounds.

use std::collections::BTreeSet;

use crate::coloring::log2_n;
use crate::error::{Error, Result};
use crate::protocols::RunSummary;

/// The growth term a completion time is regressed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    /// `D log2 n + log2^2 n`.
    Spontaneous,
    /// `D log2^2 n`.
    NonSpontaneous,
}

impl ScalingModel {
    pub fn term(self, diameter: u32, n: u64) -> f64 {
        let l = log2_n(n);
        let d = f64::from(diameter);
        match self {
            ScalingModel::Spontaneous => d * l + l * l,
            ScalingModel::NonSpontaneous => d * l * l,
        }
    }
}

/// Completion rounds of the runs sharing one `(D, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingGroup {
    pub diameter: u32,
    pub n: u64,
    pub completions: Vec<u64>,
    /// Runs that never completed.
    pub incomplete: usize,
}

impl ScalingGroup {
    pub fn new(diameter: u32, n: u64, completions: Vec<u64>) -> Self {
        ScalingGroup {
            diameter,
            n,
            completions,
            incomplete: 0,
        }
    }

    pub fn from_summaries(diameter: u32, n: u64, summaries: &[RunSummary]) -> Self {
        let completions: Vec<u64> = summaries.iter().filter_map(|s| s.completion_rounds).collect();
        ScalingGroup {
            diameter,
            n,
            incomplete: summaries.len() - completions.len(),
            completions,
        }
    }

    /// Median over completed runs; `None` without any.
    pub fn median(&self) -> Option<f64> {
        median(&self.completions)
    }
}

pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] as f64 + v[m] as f64) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// Slope of the affine fit `rounds = intercept + coefficient * term`.
    pub coefficient: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope of the fit through the origin.
    pub origin_coefficient: f64,
    /// Affine slopes refitted with each group left out, in group order.
    pub leave_one_out: Vec<f64>,
    /// `(term, median)` per group.
    pub points: Vec<(f64, f64)>,
}

impl ScalingReport {
    /// Largest over smallest leave-one-out slope; infinite if any is not
    /// positive.
    pub fn loo_spread(&self) -> f64 {
        let lo = self.leave_one_out.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.leave_one_out.iter().copied().fold(0.0, f64::max);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }
}

struct Fit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn affine_fit(points: &[(f64, f64)]) -> Fit {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-9 * my.abs().max(1.0) {
        1.0
    } else {
        0.0
    };
    Fit {
        slope,
        intercept,
        r_squared,
    }
}

/// Fits group medians against `model`. Needs at least three distinct
/// diameters among groups with a completed run.
pub fn fit_scaling(groups: &[ScalingGroup], model: ScalingModel) -> Result<ScalingReport> {
    let usable: Vec<&ScalingGroup> = groups.iter().filter(|g| g.median().is_some()).collect();
    let diameters: BTreeSet<u32> = usable.iter().map(|g| g.diameter).collect();
    if diameters.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 3 distinct diameters, got {}",
            diameters.len()
        )));
    }
    let points: Vec<(f64, f64)> = usable
        .iter()
        .map(|g| (model.term(g.diameter, g.n), g.median().expect("filtered")))
        .collect();
    let fit = affine_fit(&points);
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let leave_one_out = (0..points.len())
        .map(|skip| {
            let rest: Vec<(f64, f64)> = points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &p)| p)
                .collect();
            affine_fit(&rest).slope
        })
        .collect();
    Ok(ScalingReport {
        coefficient: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        origin_coefficient: sxy / sxx,
        leave_one_out,
        points,
    })
}

//! Grid search for a tuned constant profile.

use rayon::prelude::*;

use crate::coloring::{
    derive_constants, log2_n, run_coloring, schedule_length, verify_ball_mass, verify_proximity, ProfileOverrides,
};
use crate::error::{Error, Result};
use crate::geometry::{generate_topology, line_spacing_for_hops, NetworkTopology, StationId, TopologyFamily};
use crate::protocols::{run_nos_broadcast, run_s_broadcast, RunOptions};
use crate::sinr::SinrParams;

use super::engine::RoundEngine;
use super::scaling::{median, ScalingModel};

/// Topology families sized by `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationFamily {
    /// Uniform square with `n / side^2 = density`.
    Square { density: f64 },
    /// Unit-spaced line where each station reaches `hops` successors.
    Line { hops: usize },
}

impl CalibrationFamily {
    pub fn family(self, n: usize, epsilon: f64) -> TopologyFamily {
        match self {
            CalibrationFamily::Square { density } => TopologyFamily::UniformSquare {
                side: (n as f64 / density).sqrt(),
            },
            CalibrationFamily::Line { hops } => TopologyFamily::LineUniform {
                spacing: line_spacing_for_hops(epsilon, hops),
            },
        }
    }

    pub fn name(self) -> String {
        match self {
            CalibrationFamily::Square { density } => format!("square(density={density})"),
            CalibrationFamily::Line { hops } => format!("line(hops={hops})"),
        }
    }
}

/// Candidate values per constant; the grid is their cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub ball_mass_cap: Vec<f64>,
    pub proximity_mass: Vec<f64>,
    pub density_rounds: Vec<f64>,
    pub density_threshold: Vec<f64>,
    pub playoff_rounds: Vec<f64>,
    pub playoff_threshold: Vec<f64>,
    pub playoff_iterations: Vec<u64>,
    pub playoff_boost: Vec<f64>,
    pub c_bc: Vec<f64>,
    pub a_tx: Vec<f64>,
}

impl CalibrationGrid {
    /// A grid holding exactly `point`. Every coloring and broadcast-rate
    /// constant must be set.
    pub fn single(point: &ProfileOverrides) -> Result<Self> {
        fn need<T: Copy>(v: Option<T>, name: &str) -> Result<Vec<T>> {
            v.map(|x| vec![x])
                .ok_or_else(|| Error::invalid(format!("grid point lacks `{name}`")))
        }
        Ok(CalibrationGrid {
            ball_mass_cap: need(point.ball_mass_cap, "C1")?,
            proximity_mass: need(point.proximity_mass, "C2")?,
            density_rounds: need(point.density_rounds, "c0")?,
            density_threshold: need(point.density_threshold, "c1")?,
            playoff_rounds: need(point.playoff_rounds, "c2")?,
            playoff_threshold: need(point.playoff_threshold, "c3")?,
            playoff_iterations: need(point.playoff_iterations, "c_prime")?,
            playoff_boost: need(point.playoff_boost, "c_eps")?,
            c_bc: need(point.c_bc, "c_bc")?,
            a_tx: need(point.a_tx, "a_tx")?,
        })
    }

    /// The grid the shipped profile was calibrated on.
    pub fn shipped() -> Self {
        CalibrationGrid {
            ball_mass_cap: vec![0.5],
            proximity_mass: vec![0.0234375, 0.046875, 0.09375],
            density_rounds: vec![16.0],
            density_threshold: vec![2.0],
            playoff_rounds: vec![16.0],
            playoff_threshold: vec![12.0],
            playoff_iterations: vec![2],
            playoff_boost: vec![8.0, 16.0],
            c_bc: vec![0.2, 0.4],
            a_tx: vec![32.0],
        }
    }

    pub fn points(&self) -> Vec<ProfileOverrides> {
        let mut out = Vec::new();
        for &c1 in &self.ball_mass_cap {
            for &c2 in &self.proximity_mass {
                for &d0 in &self.density_rounds {
                    for &d1 in &self.density_threshold {
                        for &p2 in &self.playoff_rounds {
                            for &p3 in &self.playoff_threshold {
                                for &it in &self.playoff_iterations {
                                    for &boost in &self.playoff_boost {
                                        for &bc in &self.c_bc {
                                            for &tx in &self.a_tx {
                                                out.push(ProfileOverrides {
                                                    ball_mass_cap: Some(c1),
                                                    proximity_mass: Some(c2),
                                                    density_rounds: Some(d0),
                                                    density_threshold: Some(d1),
                                                    playoff_rounds: Some(p2),
                                                    playoff_threshold: Some(p3),
                                                    playoff_iterations: Some(it),
                                                    playoff_boost: Some(boost),
                                                    c_bc: Some(bc),
                                                    a_tx: Some(tx),
                                                    // placeholders until the budgets are measured
                                                    hop_rate: Some(1.0),
                                                    sb_budget: Some(1.0),
                                                    nos_budget: Some(1.0),
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// What a grid point is evaluated on and what it must achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub params: SinrParams,
    pub families: Vec<CalibrationFamily>,
    pub sizes: Vec<usize>,
    pub seeds: u64,
    pub master_seed: u64,
    pub min_pass_rate: f64,
    /// Doubling levels required at the largest size, so the search cannot
    /// settle on a profile where every station quits immediately.
    pub min_levels: u32,
    /// Round cap per spontaneous broadcast, times `D log2 n + log2^2 n`.
    pub cap_factor: f64,
}

impl CalibrationTarget {
    pub fn shipped() -> Self {
        CalibrationTarget {
            params: SinrParams::default(),
            families: vec![CalibrationFamily::Square { density: 12.0 }],
            sizes: vec![50, 100, 200],
            seeds: 20,
            master_seed: 2024,
            min_pass_rate: 0.95,
            min_levels: 1,
            cap_factor: 50.0,
        }
    }

    fn topology(&self, family: CalibrationFamily, n: usize, seed: u64) -> Result<NetworkTopology> {
        let eps = self.params.epsilon;
        let topo_seed = self.master_seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ seed.rotate_left(32);
        generate_topology(family.family(n, eps), n, eps, topo_seed)
    }
}

/// Measurements for one run of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    verifiers: bool,
    completion: Option<u64>,
    coloring_rounds: u64,
    diameter: u32,
}

/// Verdict for one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub index: usize,
    pub point: ProfileOverrides,
    pub verifier_rate: f64,
    pub broadcast_rate: f64,
    pub levels_at_max: u32,
    /// Sum over families and sizes of the median broadcast completion.
    pub objective: f64,
    pub feasible: bool,
}

impl PointResult {
    fn log_line(&self) -> String {
        let p = &self.point;
        format!(
            "point {}: C1={:?} C2={:?} c0={:?} c1={:?} c2={:?} c3={:?} c_prime={:?} c_eps={:?} c_bc={:?} a_tx={:?} \
             verifier_rate={:.3} broadcast_rate={:.3} levels={} objective={} feasible={}",
            self.index,
            p.ball_mass_cap.unwrap_or_default(),
            p.proximity_mass.unwrap_or_default(),
            p.density_rounds.unwrap_or_default(),
            p.density_threshold.unwrap_or_default(),
            p.playoff_rounds.unwrap_or_default(),
            p.playoff_threshold.unwrap_or_default(),
            p.playoff_iterations.unwrap_or_default(),
            p.playoff_boost.unwrap_or_default(),
            p.c_bc.unwrap_or_default(),
            p.a_tx.unwrap_or_default(),
            self.verifier_rate,
            self.broadcast_rate,
            self.levels_at_max,
            self.objective,
            self.feasible
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    /// The chosen point with measured budgets and hop rate filled in.
    pub overrides: ProfileOverrides,
    pub chosen: PointResult,
    pub log: Vec<String>,
}

fn sample(
    target: &CalibrationTarget,
    point: &ProfileOverrides,
    family: CalibrationFamily,
    n: usize,
    seed: u64,
) -> Result<Sample> {
    let params = &target.params;
    let topology = target.topology(family, n, seed)?;
    let profile = derive_constants(params, topology.space().growth_dimension(), n as u64, Some(point))?;
    let all: Vec<StationId> = (0..n).collect();
    let mut engine = RoundEngine::new(&topology, params, seed, false)?;
    let colors = run_coloring(&mut engine, &all, &profile)?;
    let verifiers = verify_ball_mass(&colors, &topology, profile.ball_mass_cap).pass
        && verify_proximity(&colors, &topology, profile.epsilon, profile.proximity_threshold()).pass;
    let diameter = topology.diameter().unwrap_or(0);
    let cap = (target.cap_factor * ScalingModel::Spontaneous.term(diameter, n as u64)).ceil() as u64;
    let mut options = RunOptions::with_budget(cap);
    options.keep_events = false;
    let (summary, _) = run_s_broadcast(&topology, params, &profile, 0, seed, &options)?;
    let coloring_rounds = summary
        .extra_value("coloring_rounds")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    Ok(Sample {
        verifiers,
        completion: summary.completion_rounds,
        coloring_rounds,
        diameter,
    })
}

type Cell = (CalibrationFamily, usize);

fn cells(target: &CalibrationTarget) -> Vec<Cell> {
    target
        .families
        .iter()
        .flat_map(|&f| target.sizes.iter().map(move |&n| (f, n)))
        .collect()
}

fn evaluate(
    target: &CalibrationTarget,
    index: usize,
    point: &ProfileOverrides,
    samples: &[(Cell, Sample)],
) -> Result<PointResult> {
    let total = samples.len() as f64;
    let verifier_rate = samples.iter().filter(|(_, s)| s.verifiers).count() as f64 / total;
    let broadcast_rate = samples.iter().filter(|(_, s)| s.completion.is_some()).count() as f64 / total;
    let largest = *target.sizes.iter().max().expect("nonempty sizes");
    let gamma = target.families[0]
        .family(largest, target.params.epsilon)
        .space()
        .growth_dimension();
    let profile = derive_constants(&target.params, gamma, largest as u64, Some(point))?;
    let levels_at_max = schedule_length(&profile, largest as u64).levels;
    let mut objective = 0.0;
    for cell in cells(target) {
        let done: Vec<u64> = samples
            .iter()
            .filter(|(c, _)| *c == cell)
            .filter_map(|(_, s)| s.completion)
            .collect();
        objective += median(&done).unwrap_or(f64::INFINITY);
    }
    let feasible = verifier_rate >= target.min_pass_rate
        && broadcast_rate >= target.min_pass_rate
        && levels_at_max >= target.min_levels;
    Ok(PointResult {
        index,
        point: point.clone(),
        verifier_rate,
        broadcast_rate,
        levels_at_max,
        objective,
        feasible,
    })
}

/// Round `x` up to a multiple of `step`.
fn ceil_to(x: f64, step: f64) -> f64 {
    (x / step).ceil() * step
}

/// Searches `grid` for the feasible point with the smallest total
/// broadcast completion, then measures its round budgets.
///
/// The result depends only on the inputs: runs are seeded from
/// `target.master_seed` and gathered in a fixed order.
pub fn calibrate_profile(grid: &CalibrationGrid, target: &CalibrationTarget) -> Result<CalibrationOutcome> {
    if target.sizes.is_empty() || target.families.is_empty() || target.seeds == 0 {
        return Err(Error::invalid("calibration needs families, sizes and seeds"));
    }
    let points = grid.points();
    let cell_list = cells(target);
    let jobs: Vec<(usize, Cell, u64)> = (0..points.len())
        .flat_map(|i| {
            cell_list
                .iter()
                .flat_map(move |&c| (0..target.seeds).map(move |s| (i, c, s)))
        })
        .collect();
    let results: Vec<Result<Sample>> = jobs
        .par_iter()
        .map(|&(i, (f, n), s)| sample(target, &points[i], f, n, s))
        .collect();
    let mut per_point: Vec<Vec<(Cell, Sample)>> = vec![Vec::new(); points.len()];
    for (&(i, cell, _), r) in jobs.iter().zip(results) {
        per_point[i].push((cell, r?));
    }
    let mut log = Vec::new();
    let mut verdicts = Vec::new();
    for (i, samples) in per_point.iter().enumerate() {
        let v = evaluate(target, i, &points[i], samples)?;
        log.push(v.log_line());
        verdicts.push(v);
    }
    let best = verdicts
        .iter()
        .filter(|v| v.feasible)
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.index.cmp(&b.index)))
        .cloned();
    let Some(chosen) = best else {
        let near = verdicts
            .iter()
            .max_by(|a, b| {
                let ka = a.verifier_rate.min(a.broadcast_rate);
                let kb = b.verifier_rate.min(b.broadcast_rate);
                ka.total_cmp(&kb).then(b.index.cmp(&a.index))
            })
            .expect("nonempty grid");
        return Err(Error::CalibrationFailed(format!(
            "no feasible grid point; best near-miss {}",
            near.log_line()
        )));
    };
    log.push(format!("chosen point {}", chosen.index));

    // budgets and hop rate from the chosen point's runs
    let samples = &per_point[chosen.index];
    let mut sb_coeff = 0.0f64;
    let mut hop_rates = Vec::new();
    for cell in &cell_list {
        let n = cell.1 as u64;
        let ratios: Vec<f64> = samples
            .iter()
            .filter(|(c, _)| c == cell)
            .filter_map(|(_, s)| {
                s.completion
                    .map(|r| r as f64 / ScalingModel::Spontaneous.term(s.diameter, n))
            })
            .collect();
        sb_coeff = sb_coeff.max(float_median(&ratios));
        for (_, s) in samples.iter().filter(|(c, _)| c == cell) {
            if let Some(r) = s.completion {
                let spread = r.saturating_sub(s.coloring_rounds + 1);
                if spread > 0 && s.diameter > 1 {
                    // hops beyond the source round, per round, times log2 n
                    hop_rates.push(f64::from(s.diameter - 1) / spread as f64 * log2_n(n));
                }
            }
        }
    }
    let nos_jobs: Vec<(Cell, u64)> = cell_list
        .iter()
        .flat_map(|&c| (0..target.seeds).map(move |s| (c, s)))
        .collect();
    let nos: Vec<Result<(Cell, Option<f64>)>> = nos_jobs
        .par_iter()
        .map(|&((f, n), s)| {
            let topology = target.topology(f, n, s)?;
            let params = &target.params;
            let profile = derive_constants(
                params,
                topology.space().growth_dimension(),
                n as u64,
                Some(&chosen.point),
            )?;
            let d = topology.diameter().unwrap_or(0);
            let cap = (target.cap_factor * 4.0 * ScalingModel::NonSpontaneous.term(d.max(1), n as u64)).ceil() as u64;
            let mut options = RunOptions::with_budget(cap);
            options.keep_events = false;
            let (summary, _) = run_nos_broadcast(&topology, params, &profile, 0, s, &options)?;
            let term = ScalingModel::NonSpontaneous.term(d.max(1), n as u64);
            Ok(((f, n), summary.completion_rounds.map(|r| r as f64 / term)))
        })
        .collect();
    let mut nos_by_cell: Vec<(Cell, f64)> = Vec::new();
    for r in nos {
        let (cell, ratio) = r?;
        if let Some(x) = ratio {
            nos_by_cell.push((cell, x));
        }
    }
    let mut nos_coeff = 0.0f64;
    for cell in &cell_list {
        let ratios: Vec<f64> = nos_by_cell.iter().filter(|(c, _)| c == cell).map(|(_, x)| *x).collect();
        nos_coeff = nos_coeff.max(float_median(&ratios));
    }
    let mut overrides = chosen.point.clone();
    overrides.sb_budget = Some(ceil_to(sb_coeff, 0.25));
    overrides.nos_budget = Some(ceil_to(nos_coeff, 0.25));
    overrides.hop_rate = Some(ceil_to(float_median(&hop_rates), 0.01).max(0.01));
    log.push(format!(
        "measured sb_budget={:?} nos_budget={:?} hop_rate={:?}",
        overrides.sb_budget.unwrap_or_default(),
        overrides.nos_budget.unwrap_or_default(),
        overrides.hop_rate.unwrap_or_default()
    ));
    Ok(CalibrationOutcome { overrides, chosen, log })
}

fn float_median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

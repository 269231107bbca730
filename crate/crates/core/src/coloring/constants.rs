//! Constants driving the coloring procedure and the broadcast protocols.
//!
//! Theory mode evaluates the closed forms below for the given SINR
//! parameters. Those values make test windows astronomically long, so the
//! crate also ships a tuned profile whose overrides are layered on top of
//! the theory values.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::covering_bound;
use crate::sinr::SinrParams;

/// Terms summed explicitly before the integral tail takes over.
const SERIES_TERMS: u64 = 1_000_000;

/// Ring parameters fixed by the receiving-probability argument.
pub const SHRINK_FACTOR: u32 = 6;
pub const INNER_RING: u32 = 2;

/// Failure exponent used when a theory window length needs a whp constant.
const WHP_EXPONENT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    Theory,
    Tuned,
}

/// Every constant used by the coloring and broadcast layers for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantProfile {
    pub mode: ProfileMode,
    /// Network size shared by all stations.
    pub n: u64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Per-color probability mass allowed in a unit ball.
    #[serde(rename = "C1")]
    pub ball_mass_cap: f64,
    /// Proximity mass guaranteed for some color.
    #[serde(rename = "C2")]
    pub proximity_mass: f64,
    /// DensityTest length per `log2 n`.
    #[serde(rename = "c0")]
    pub density_rounds: f64,
    /// DensityTest success threshold per `log2 n`.
    #[serde(rename = "c1")]
    pub density_threshold: f64,
    /// Playoff length per `log2 n`.
    #[serde(rename = "c2")]
    pub playoff_rounds: f64,
    /// Playoff success threshold per `log2 n`.
    #[serde(rename = "c3")]
    pub playoff_threshold: f64,
    /// Inner iterations per probability level.
    #[serde(rename = "c_prime")]
    pub playoff_iterations: u64,
    /// Probability boost applied during Playoff.
    #[serde(rename = "c_eps")]
    pub playoff_boost: f64,
    #[serde(rename = "c_d")]
    pub density_floor: f64,
    /// Mass a Playoff round is guaranteed to switch off.
    pub q: f64,
    pub z: u32,
    pub a: u32,
    pub b: u64,
    /// `covering_bound(1, 1/6)`.
    pub y: u64,
    pub p_start: f64,
    pub p_max: f64,
    /// Damping `c` in the broadcast transmit probability `p_v / (c ε log2 n)`.
    pub c_bc: f64,
    /// Broadcast transmit window per `log2^2 n`.
    pub a_tx: f64,
    /// Per-hop progress probability per round, times `log2 n`.
    pub hop_rate: f64,
    /// Round-budget coefficient on `D log2 n + log2^2 n` (spontaneous broadcast).
    pub sb_budget: f64,
    /// Round-budget coefficient on `D log2^2 n` (non-spontaneous broadcast).
    pub nos_budget: f64,
}

/// Values that replace theory constants in tuned mode. Dependents that
/// are not overridden (`C2`, `c_prime`, `p_start`, `p_max`) are recomputed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverrides {
    #[serde(rename = "C1", default, skip_serializing_if = "Option::is_none")]
    pub ball_mass_cap: Option<f64>,
    #[serde(rename = "C2", default, skip_serializing_if = "Option::is_none")]
    pub proximity_mass: Option<f64>,
    #[serde(rename = "c0", default, skip_serializing_if = "Option::is_none")]
    pub density_rounds: Option<f64>,
    #[serde(rename = "c1", default, skip_serializing_if = "Option::is_none")]
    pub density_threshold: Option<f64>,
    #[serde(rename = "c2", default, skip_serializing_if = "Option::is_none")]
    pub playoff_rounds: Option<f64>,
    #[serde(rename = "c3", default, skip_serializing_if = "Option::is_none")]
    pub playoff_threshold: Option<f64>,
    #[serde(rename = "c_prime", default, skip_serializing_if = "Option::is_none")]
    pub playoff_iterations: Option<u64>,
    #[serde(rename = "c_eps", default, skip_serializing_if = "Option::is_none")]
    pub playoff_boost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_tx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sb_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nos_budget: Option<f64>,
}

impl ProfileOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ProfileOverrides::default()
    }

    /// `top` layered over `self`: values set in `top` win.
    pub fn layered(&self, top: &ProfileOverrides) -> ProfileOverrides {
        ProfileOverrides {
            ball_mass_cap: top.ball_mass_cap.or(self.ball_mass_cap),
            proximity_mass: top.proximity_mass.or(self.proximity_mass),
            density_rounds: top.density_rounds.or(self.density_rounds),
            density_threshold: top.density_threshold.or(self.density_threshold),
            playoff_rounds: top.playoff_rounds.or(self.playoff_rounds),
            playoff_threshold: top.playoff_threshold.or(self.playoff_threshold),
            playoff_iterations: top.playoff_iterations.or(self.playoff_iterations),
            playoff_boost: top.playoff_boost.or(self.playoff_boost),
            c_bc: top.c_bc.or(self.c_bc),
            a_tx: top.a_tx.or(self.a_tx),
            hop_rate: top.hop_rate.or(self.hop_rate),
            sb_budget: top.sb_budget.or(self.sb_budget),
            nos_budget: top.nos_budget.or(self.nos_budget),
        }
    }

    /// Reads the `[constants]` table of a profile file.
    pub fn from_profile_text(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            #[serde(default)]
            constants: ProfileOverrides,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(file.constants)
    }

    /// Profile file text with a `[constants]` table.
    pub fn to_profile_text(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            constants: &'a ProfileOverrides,
        }
        toml::to_string(&File { constants: self }).expect("overrides serialize")
    }
}

/// The calibrated overrides committed with the crate.
pub fn default_tuned_overrides() -> ProfileOverrides {
    ProfileOverrides::from_profile_text(include_str!("../../profiles/tuned.toml"))
        .expect("shipped tuned profile parses")
}

/// `Σ_{i>=1} i^(γ-α-1)`: exact partial sum to 10^6 plus the midpoint
/// integral estimate of the tail.
pub fn interference_series(alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha > gamma) {
        return Err(Error::DivergentSeries { alpha, gamma });
    }
    let s = alpha - gamma + 1.0;
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("series cache").get(&s.to_bits()) {
        return Ok(v);
    }
    let mut partial = 0.0;
    for i in (1..=SERIES_TERMS).rev() {
        partial += (i as f64).powf(-s);
    }
    let tail = (SERIES_TERMS as f64 + 0.5).powf(1.0 - s) / (s - 1.0);
    let value = partial + tail;
    cache.lock().expect("series cache").insert(s.to_bits(), value);
    Ok(value)
}

/// `log2 n` as used by every window length; at least 1.
pub fn log2_n(n: u64) -> f64 {
    (n.max(2) as f64).log2()
}

/// Derives the full constant profile. With `overrides`, the profile is
/// marked tuned and the overrides replace the matching theory values.
pub fn derive_constants(
    params: &SinrParams,
    gamma: f64,
    n: u64,
    overrides: Option<&ProfileOverrides>,
) -> Result<ConstantProfile> {
    if n == 0 {
        return Err(Error::invalid("network size must be positive"));
    }
    let alpha = params.alpha;
    let beta = params.beta;
    let eps = params.epsilon;
    let series = interference_series(alpha, gamma)?;

    let ball_mass_cap = alpha / (6.0 * beta * 1.5_f64.powf(alpha) * series);
    let y = covering_bound(1.0, 1.0 / 6.0, gamma)?;
    let density_floor = 1.0 / (32.0 * y as f64);
    let z = SHRINK_FACTOR;
    let zg = f64::from(z).powf(gamma);
    let q = 1.0 / (zg * 2.0_f64.powf(alpha + 4.0) * beta * series);
    let a = INNER_RING;
    let mut b = 1u64;
    while (b as f64).powf(gamma) * zg * q < ball_mass_cap {
        b += 1;
    }
    let receive_ratio = q / 8.0 * 0.25_f64.powf(f64::from(a).powf(gamma) * zg * q);
    let playoff_threshold = 1.0;
    let playoff_rounds = 2.0 * playoff_threshold / receive_ratio;
    let density_threshold = 1.0;
    let density_rounds = density_threshold * 16.0 * y as f64 / ball_mass_cap;

    let mut p = ConstantProfile {
        mode: ProfileMode::Theory,
        n,
        epsilon: eps,
        gamma,
        ball_mass_cap,
        proximity_mass: 0.0,
        density_rounds,
        density_threshold,
        playoff_rounds,
        playoff_threshold,
        playoff_iterations: 0,
        playoff_boost: 0.0,
        density_floor,
        q,
        z,
        a,
        b,
        y,
        p_start: 0.0,
        p_max: 0.0,
        c_bc: 0.0,
        a_tx: 0.0,
        hop_rate: 0.0,
        sb_budget: 0.0,
        nos_budget: 0.0,
    };
    p.playoff_boost = boost_for(&p, alpha);

    let ov = overrides.cloned().unwrap_or_default();
    if overrides.is_some() {
        p.mode = ProfileMode::Tuned;
        apply(&mut p.ball_mass_cap, ov.ball_mass_cap);
        apply(&mut p.density_rounds, ov.density_rounds);
        apply(&mut p.density_threshold, ov.density_threshold);
        apply(&mut p.playoff_rounds, ov.playoff_rounds);
        apply(&mut p.playoff_threshold, ov.playoff_threshold);
        apply(&mut p.playoff_boost, ov.playoff_boost);
    }

    p.proximity_mass = ov.proximity_mass.unwrap_or_else(|| {
        (p.playoff_threshold / (8.0 * p.playoff_rounds)).min(p.ball_mass_cap * p.density_floor / 2.0) / p.playoff_boost
    });
    let big_cover = covering_bound(4.0 / 3.0, 1.0, gamma)? as f64;
    p.playoff_iterations = ov.playoff_iterations.unwrap_or_else(|| {
        let raw = (big_cover * p.ball_mass_cap * p.playoff_boost / p.q).ceil();
        if raw >= u64::MAX as f64 {
            u64::MAX
        } else {
            raw.max(1.0) as u64
        }
    });
    p.p_start = p.ball_mass_cap / (2.0 * n as f64);
    p.p_max = p.proximity_mass / p.playoff_boost;

    // broadcast constants
    let two_ball = covering_bound(2.0, 1.0, gamma)? as f64;
    p.c_bc = ov.c_bc.unwrap_or(4.0 * two_ball * p.ball_mass_cap / eps);
    p.hop_rate = ov.hop_rate.unwrap_or(p.proximity_mass / (4.0 * p.c_bc * eps));
    // T = (a ln n) / p with p = hop_rate / log2 n, expressed per log2^2 n
    p.a_tx = ov.a_tx.unwrap_or(WHP_EXPONENT * std::f64::consts::LN_2 / p.hop_rate);
    // t = (2D + 2 log n) / p
    p.sb_budget = ov.sb_budget.unwrap_or(2.0 / p.hop_rate);
    p.nos_budget = ov.nos_budget.unwrap_or_else(|| {
        let l = log2_n(n);
        let schedule = super::schedule_length(&p, n);
        (schedule.total as f64 + (p.a_tx * l * l).ceil()) / (l * l)
    });

    p.validate()?;
    Ok(p)
}

fn apply(slot: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn boost_for(p: &ConstantProfile, alpha: f64) -> f64 {
    8.0 * (4.0 * p.playoff_rounds / p.playoff_threshold).ln()
        / (p.epsilon.powf(alpha) * p.ball_mass_cap * p.density_floor)
}

impl ConstantProfile {
    /// Theory constants for `params` on a space of growth dimension `gamma`.
    pub fn theory(params: &SinrParams, gamma: f64, n: u64) -> Result<Self> {
        derive_constants(params, gamma, n, None)
    }

    /// The shipped calibrated profile.
    pub fn tuned(params: &SinrParams, gamma: f64, n: u64) -> Result<Self> {
        derive_constants(params, gamma, n, Some(&default_tuned_overrides()))
    }

    /// Threshold for the proximity-mass check, in the units of the colors
    /// themselves; an isolated station finishing at `2 p_max` clears it.
    pub fn proximity_threshold(&self) -> f64 {
        self.p_max
    }

    /// Per-round broadcast transmit probability for color `p_v`.
    pub fn broadcast_probability(&self, color: f64) -> f64 {
        (color / (self.c_bc * self.epsilon * log2_n(self.n))).min(1.0)
    }

    /// Broadcast transmit window in rounds.
    pub fn transmit_window(&self) -> u64 {
        let l = log2_n(self.n);
        (self.a_tx * l * l).ceil().max(1.0) as u64
    }

    /// Budget for a spontaneous broadcast on a graph of diameter `d`.
    pub fn sb_round_budget(&self, diameter: u32) -> u64 {
        let l = log2_n(self.n);
        (self.sb_budget * (f64::from(diameter) * l + l * l)).ceil() as u64
    }

    /// Budget for a non-spontaneous broadcast on a graph of diameter `d`.
    pub fn nos_round_budget(&self, diameter: u32) -> u64 {
        let l = log2_n(self.n);
        (self.nos_budget * f64::from(diameter.max(1)) * l * l).ceil() as u64
    }

    /// The same constants re-derived for another `n` (and, in theory mode,
    /// another epsilon); tuned values carry over unchanged.
    pub fn rederive(&self, params: &SinrParams, n: u64, overrides: Option<&ProfileOverrides>) -> Result<Self> {
        derive_constants(params, self.gamma, n, overrides)
    }

    /// The profile a coloring with a different epsilon runs on. Theory
    /// values are re-derived; tuned values do not depend on epsilon.
    pub fn with_epsilon(&self, params: &SinrParams, epsilon: f64) -> Result<Self> {
        match self.mode {
            ProfileMode::Theory => {
                let mut p = *params;
                p.epsilon = epsilon;
                derive_constants(&p, self.gamma, self.n, None)
            }
            ProfileMode::Tuned => {
                let mut c = self.clone();
                c.epsilon = epsilon;
                Ok(c)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("C1", self.ball_mass_cap),
            ("C2", self.proximity_mass),
            ("c0", self.density_rounds),
            ("c1", self.density_threshold),
            ("c2", self.playoff_rounds),
            ("c3", self.playoff_threshold),
            ("c_eps", self.playoff_boost),
            ("c_bc", self.c_bc),
            ("a_tx", self.a_tx),
            ("hop_rate", self.hop_rate),
            ("sb_budget", self.sb_budget),
            ("nos_budget", self.nos_budget),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "constant {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.playoff_iterations == 0 {
            return Err(Error::invalid("c_prime must be at least 1"));
        }
        Ok(())
    }
}

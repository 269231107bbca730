//! Experiment configuration files and single-trial execution.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coloring::{
    default_tuned_overrides, derive_constants, run_coloring, verify_ball_mass, verify_proximity, write_coloring_string,
    Coloring, ColoringRun, ConstantProfile, ProfileOverrides,
};
use crate::error::{Error, Result};
use crate::geometry::{generate_topology, read_topology, NetworkTopology, StationId, TopologyFamily};
use crate::protocols::{
    adhoc_period, colored_period, run_consensus, run_leader_election, run_nos_broadcast, run_s_broadcast,
    run_wakeup_adhoc, run_wakeup_colored, value_bits, RunOptions, RunSummary, WakeSchedule, DEFAULT_PAYLOAD,
};
use crate::sinr::SinrParams;

use super::engine::RoundEngine;
use super::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Coloring,
    NosBroadcast,
    SBroadcast,
    WakeupAdhoc,
    WakeupColored,
    Consensus,
    LeaderElection,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Coloring,
        Protocol::NosBroadcast,
        Protocol::SBroadcast,
        Protocol::WakeupAdhoc,
        Protocol::WakeupColored,
        Protocol::Consensus,
        Protocol::LeaderElection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Coloring => "coloring",
            Protocol::NosBroadcast => "nos-broadcast",
            Protocol::SBroadcast => "s-broadcast",
            Protocol::WakeupAdhoc => "wakeup-adhoc",
            Protocol::WakeupColored => "wakeup-colored",
            Protocol::Consensus => "consensus",
            Protocol::LeaderElection => "leader-election",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown protocol `{s}`")))
    }
}

/// Where the topology comes from: a generator or a file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Side or spacing of the family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl TopologySpec {
    pub fn generated(family: TopologyFamily, n: usize, seed: u64) -> Self {
        let param = match family {
            TopologyFamily::UniformSquare { side } => Some(side),
            TopologyFamily::Grid { spacing } | TopologyFamily::LineUniform { spacing } => Some(spacing),
            TopologyFamily::LineGeometric => None,
        };
        TopologySpec {
            family: Some(family.name().to_string()),
            param,
            n: Some(n),
            seed,
            file: None,
        }
    }

    pub fn build(&self, epsilon: f64) -> Result<NetworkTopology> {
        match (&self.family, &self.file) {
            (Some(name), None) => {
                let family = TopologyFamily::from_name(name, self.param)?;
                let n = self
                    .n
                    .ok_or_else(|| Error::Config("generated topology needs `n`".into()))?;
                generate_topology(family, n, epsilon, self.seed)
            }
            (None, Some(path)) => {
                let t = read_topology(path)?;
                if t.epsilon() != epsilon {
                    return Err(Error::Config(format!(
                        "topology file epsilon {} differs from the configured {epsilon}",
                        t.epsilon()
                    )));
                }
                Ok(t)
            }
            _ => Err(Error::Config("topology needs exactly one of `family` or `file`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Theory,
    #[default]
    Tuned,
    /// Overrides read from `profile.path`.
    File,
}

impl FromStr for ProfileSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(ProfileSource::Theory),
            "tuned" => Ok(ProfileSource::Tuned),
            "file" => Ok(ProfileSource::File),
            other => Err(Error::invalid(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub mode: ProfileSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_budget_mult() -> f64 {
    4.0
}

fn default_payload() -> u64 {
    DEFAULT_PAYLOAD
}

fn default_attempts() -> u32 {
    5
}

/// Protocol parameters. Unused fields are ignored by protocols that do
/// not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub source: StationId,
    /// Explicit round cap; otherwise `budget_mult` times the protocol's
    /// calibrated budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default = "default_budget_mult")]
    pub budget_mult: f64,
    #[serde(default = "default_payload")]
    pub payload: u64,
    /// Consensus value bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    /// Consensus inputs; drawn from the trial seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<u64>>,
    /// Wake schedule file; defaults to the source alone (wake-up) or
    /// everyone at round 0 (consensus).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wake_file: Option<PathBuf>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_keep")]
    pub keep_events: bool,
}

fn default_keep() -> bool {
    true
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            source: 0,
            budget: None,
            budget_mult: default_budget_mult(),
            payload: default_payload(),
            x: None,
            values: None,
            wake_file: None,
            max_attempts: default_attempts(),
            keep_events: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// A fully self-describing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub topology: TopologySpec,
    #[serde(default)]
    pub sinr: SinrParams,
    /// Growth dimension of the metric; defaults to the topology's space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub profile: ProfileSpec,
    /// Overrides layered over the chosen profile.
    #[serde(default, skip_serializing_if = "ProfileOverrides::is_empty")]
    pub constants: ProfileOverrides,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, topology: TopologySpec) -> Self {
        ExperimentConfig {
            protocol,
            seeds: default_seeds(),
            topology,
            sinr: SinrParams::default(),
            gamma: None,
            profile: ProfileSpec::default(),
            constants: ProfileOverrides::default(),
            run: RunSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => Error::Parse {
                line: text[..span.start].matches('\n').count() + 1,
                message: e.message().to_string(),
            },
            None => Error::Config(e.to_string()),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// TOML text; floats are written in round-trip form.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn gamma_for(&self, topology: &NetworkTopology) -> f64 {
        self.gamma.unwrap_or_else(|| topology.space().growth_dimension())
    }

    /// The constant profile for a topology with `n` stations.
    pub fn profile_for(&self, topology: &NetworkTopology) -> Result<ConstantProfile> {
        let gamma = self.gamma_for(topology);
        let n = topology.len() as u64;
        let base = match self.profile.mode {
            ProfileSource::Theory => {
                if !self.constants.is_empty() {
                    return Err(Error::Config("theory profile takes no [constants] overrides".into()));
                }
                return derive_constants(&self.sinr, gamma, n, None);
            }
            ProfileSource::Tuned => default_tuned_overrides(),
            ProfileSource::File => {
                let path = self
                    .profile
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("profile mode `file` needs `profile.path`".into()))?;
                ProfileOverrides::from_profile_text(&fs::read_to_string(path)?)?
            }
        };
        derive_constants(&self.sinr, gamma, n, Some(&base.layered(&self.constants)))
    }
}

/// Everything a trial produces.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub summary: RunSummary,
    pub trace: Trace,
    pub topology: NetworkTopology,
    pub profile: ConstantProfile,
    /// The final coloring of a coloring trial.
    pub coloring: Option<Coloring>,
}

/// Runtime invariants whose failure aborts a trial.
pub const RUNTIME_INVARIANTS: [&str; 3] = ["phase-synchrony", "payload-integrity", "informed-monotone"];

/// Default round cap for `protocol` on a graph of diameter `d`.
pub fn default_budget(protocol: Protocol, profile: &ConstantProfile, d: u32, x: u64, attempts: u32, mult: f64) -> u64 {
    let coloring = crate::coloring::schedule_length(profile, profile.n).total;
    let base = match protocol {
        Protocol::Coloring => coloring as f64,
        Protocol::NosBroadcast | Protocol::WakeupAdhoc => profile.nos_round_budget(d) as f64 * mult,
        Protocol::SBroadcast => profile.sb_round_budget(d) as f64 * mult,
        Protocol::WakeupColored => colored_period(profile, d) as f64 * mult,
        Protocol::Consensus | Protocol::LeaderElection => {
            let stages = f64::from(value_bits(x) + 1);
            let once = 2.0 * adhoc_period(profile, d) as f64 + stages * colored_period(profile, d) as f64;
            let tries = if protocol == Protocol::LeaderElection {
                f64::from(attempts)
            } else {
                1.0
            };
            once * mult * tries
        }
    };
    base.ceil().max(1.0) as u64
}

fn consensus_inputs(config: &ExperimentConfig, n: usize, x: u64, seed: u64) -> Result<Vec<u64>> {
    match &config.run.values {
        Some(v) => Ok(v.clone()),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e_ed0f_1a7e);
            Ok((0..n).map(|_| rng.random_range(0..=x)).collect())
        }
    }
}

fn wake_schedule(config: &ExperimentConfig, n: usize, default: WakeSchedule) -> Result<WakeSchedule> {
    match &config.run.wake_file {
        Some(path) => WakeSchedule::read(path, n),
        None => Ok(default),
    }
}

/// Runs one trial of `config` with `seed`.
///
/// Fails with the violated invariant when a runtime check does not hold.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialOutput> {
    let topology = config.topology.build(config.sinr.epsilon)?;
    config.sinr.validate(config.gamma_for(&topology))?;
    let profile = config.profile_for(&topology)?;
    let n = topology.len();
    let d = topology.diameter().unwrap_or(0);
    let x = config.run.x.unwrap_or(255);
    let budget = config.run.budget.unwrap_or_else(|| {
        default_budget(
            config.protocol,
            &profile,
            d,
            x,
            config.run.max_attempts,
            config.run.budget_mult,
        )
    });
    let options = RunOptions {
        budget,
        keep_events: config.run.keep_events,
        payload: config.run.payload,
    };
    let params = &config.sinr;
    let source = config.run.source;
    let mut coloring = None;
    let (mut summary, trace) = match config.protocol {
        Protocol::Coloring => {
            let (summary, trace, colors) = coloring_trial(&topology, params, &profile, seed, options.keep_events)?;
            coloring = Some(colors);
            (summary, trace)
        }
        Protocol::NosBroadcast => run_nos_broadcast(&topology, params, &profile, source, seed, &options)?,
        Protocol::SBroadcast => run_s_broadcast(&topology, params, &profile, source, seed, &options)?,
        Protocol::WakeupAdhoc => {
            let schedule = wake_schedule(config, n, WakeSchedule::single(n, source.min(n - 1), 0))?;
            run_wakeup_adhoc(&topology, params, &profile, &schedule, seed, &options)?
        }
        Protocol::WakeupColored => {
            let schedule = wake_schedule(config, n, WakeSchedule::single(n, source.min(n - 1), 0))?;
            let mut engine = RoundEngine::new(&topology, params, seed, false)?;
            let all: Vec<StationId> = (0..n).collect();
            let base = run_coloring(&mut engine, &all, &profile)?;
            let out = run_wakeup_colored(&topology, params, &profile, &base, &schedule, seed, &options)?;
            (out.summary, out.trace)
        }
        Protocol::Consensus => {
            let values = consensus_inputs(config, n, x, seed)?;
            let schedule = wake_schedule(config, n, WakeSchedule::simultaneous(n, 0))?;
            run_consensus(&topology, params, &profile, &values, x, &schedule, seed, &options)?
        }
        Protocol::LeaderElection => {
            run_leader_election(&topology, params, &profile, seed, config.run.max_attempts, &options)?
        }
    };
    summary.push_extra("budget", budget);
    summary.push_extra("diameter", d);
    summary.push_extra("n", n);
    if let Some(failed) = summary
        .invariants
        .iter()
        .find(|c| !c.holds && RUNTIME_INVARIANTS.contains(&c.name))
    {
        return Err(Error::InvariantViolation {
            invariant: failed.name,
            round: summary.rounds_simulated,
            detail: format!("{} run with seed {seed}", summary.protocol),
        });
    }
    Ok(TrialOutput {
        summary,
        trace,
        topology,
        profile,
        coloring,
    })
}

fn coloring_trial(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    seed: u64,
    keep_events: bool,
) -> Result<(RunSummary, Trace, Coloring)> {
    let n = topology.len();
    let mut engine = RoundEngine::new(topology, params, seed, keep_events)?;
    let all: Vec<StationId> = (0..n).collect();
    let run = ColoringRun::new(n, &all, profile);
    let total = run.schedule().total;
    let colors = run_coloring(&mut engine, &all, profile)?;
    let l1 = verify_ball_mass(&colors, topology, profile.ball_mass_cap);
    let l2 = verify_proximity(&colors, topology, profile.epsilon, profile.proximity_threshold());
    let mut summary = RunSummary::new("coloring", seed, profile.mode, n);
    summary.first_informed = (0..n).map(|v| colors.contains_key(&v).then_some(total)).collect();
    summary.completion_rounds = Some(engine.round());
    summary.rounds_simulated = engine.round();
    summary.success = l1.pass && l2.pass;
    summary.check("ball-mass", l1.pass);
    summary.check("proximity", l2.pass);
    summary.push_extra("schedule_total", total);
    summary.push_extra(
        "colors",
        colors.values().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(" "),
    );
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace, colors))
}

/// Writes `trace.csv` and `summary.txt` (summary followed by the config
/// echo) for one trial into `dir`, plus `coloring.csv` for coloring trials.
pub fn write_trial(output: &TrialOutput, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}-seed{}", config.protocol, output.summary.seed);
    let summary_path = dir.join(format!("{stem}.summary.txt"));
    let mut text = output.summary.to_text();
    for (key, value) in flatten_config(config)? {
        text.push_str(&format!("config.{key} = {value}\n"));
    }
    fs::write(&summary_path, text)?;
    let mut written = vec![summary_path];
    if output.trace.keeps_events() {
        let trace_path = dir.join(format!("{stem}.trace.csv"));
        fs::write(&trace_path, output.trace.to_csv())?;
        written.push(trace_path);
    }
    if let Some(coloring) = &output.coloring {
        let coloring_path = dir.join(format!("{stem}.coloring.csv"));
        fs::write(&coloring_path, write_coloring_string(coloring))?;
        written.push(coloring_path);
    }
    Ok(written)
}

/// Dotted key/value pairs of the config, in file order.
pub fn flatten_config(config: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    fn walk(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
        match value {
            toml::Value::Table(t) => {
                for (k, v) in t {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, v, out);
                }
            }
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let value = toml::Value::try_from(config).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    walk("", &value, &mut out);
    Ok(out)
}

//! Exact oracles for the probability facts and randomized checks of the
//! reception facts against the SINR engine.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{write_topology_string, MetricPoint, MetricSpace, NetworkTopology, StationId};
use crate::sinr::{interference_at, SinrEngine, SinrParams};

/// Floating slack allowed when comparing an exact value against a bound.
pub const FACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactVerdict {
    /// The exact probability.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

fn check_probabilities(p: &[f64], cap: f64) -> Result<f64> {
    for (i, &x) in p.iter().enumerate() {
        if !(0.0..=cap).contains(&x) {
            return Err(Error::Precondition(format!("p[{i}]={x} outside [0, {cap}]")));
        }
    }
    Ok(p.iter().sum())
}

/// Probability that exactly one station transmits, against `[s/2, s]`.
pub fn check_fact_sum(p: &[f64]) -> Result<FactVerdict> {
    let s = check_probabilities(p, 1.0)?;
    if s > 0.5 {
        return Err(Error::Precondition(format!("sum of probabilities {s} exceeds 1/2")));
    }
    let value: f64 = (0..p.len())
        .map(|i| {
            p[i] * p
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &q)| 1.0 - q)
                .product::<f64>()
        })
        .sum();
    let (lower, upper) = (s / 2.0, s);
    Ok(FactVerdict {
        value,
        lower,
        upper,
        holds: value >= lower - FACT_SLACK && value <= upper + FACT_SLACK,
    })
}

/// Probability that nobody transmits, against `4^-s`.
pub fn check_fact_notransmit(p: &[f64]) -> Result<FactVerdict> {
    let s = check_probabilities(p, 0.5)?;
    let value: f64 = p.iter().map(|&q| 1.0 - q).product();
    let lower = 0.25f64.powf(s);
    Ok(FactVerdict {
        value,
        lower,
        upper: 1.0,
        holds: value >= lower - FACT_SLACK,
    })
}

/// Outcome of a randomized fact suite.
#[derive(Debug, Clone, PartialEq)]
pub struct FactReport {
    pub fact: &'static str,
    pub trials: u64,
    /// Instances whose hypothesis held and whose conclusion was checked.
    pub checked: u64,
    pub skipped: u64,
    pub counterexamples: u64,
    /// The first failing instance, serialized for replay.
    pub first_counterexample: Option<String>,
}

impl FactReport {
    fn new(fact: &'static str) -> Self {
        FactReport {
            fact,
            trials: 0,
            checked: 0,
            skipped: 0,
            counterexamples: 0,
            first_counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }

    fn record(&mut self, outcome: Outcome, instance: impl FnOnce() -> String) {
        self.trials += 1;
        match outcome {
            Outcome::Vacuous => self.skipped += 1,
            Outcome::Holds => self.checked += 1,
            Outcome::Violated => {
                self.checked += 1;
                self.counterexamples += 1;
                if self.first_counterexample.is_none() {
                    self.first_counterexample = Some(instance());
                }
            }
        }
    }
}

impl fmt::Display for FactReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: trials={} checked={} skipped={} counterexamples={}",
            self.fact, self.trials, self.checked, self.skipped, self.counterexamples
        )
    }
}

fn sum_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(0..=12);
    let mut p: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        let target = rng.random::<f64>() * 0.5;
        for x in &mut p {
            *x *= target / total;
        }
    }
    p
}

fn vector_string(p: &[f64]) -> String {
    let items: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
    format!("p = [{}]", items.join(", "))
}

/// Random vectors with `Σp <= 1/2` through [`check_fact_sum`].
pub fn fact_sum_suite(vectors: u64, seed: u64) -> Result<FactReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FactReport::new("sum-bound");
    for _ in 0..vectors {
        let p = sum_vector(&mut rng);
        let v = check_fact_sum(&p)?;
        report.record(Outcome::from(v.holds), || vector_string(&p));
    }
    Ok(report)
}

/// Random vectors with every entry in `[0, 1/2]` through [`check_fact_notransmit`].
pub fn fact_notransmit_suite(vectors: u64, seed: u64) -> Result<FactReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FactReport::new("no-transmit");
    for _ in 0..vectors {
        let len = rng.random_range(0..=12);
        let p: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 0.5).collect();
        let v = check_fact_notransmit(&p)?;
        report.record(Outcome::from(v.holds), || vector_string(&p));
    }
    Ok(report)
}

/// Result of checking one reception-fact instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The hypothesis does not hold; nothing to check.
    Vacuous,
    Holds,
    Violated,
}

impl From<bool> for Outcome {
    fn from(holds: bool) -> Self {
        if holds {
            Outcome::Holds
        } else {
            Outcome::Violated
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceptionFact {
    /// Interference at most `N / (2 x^α)` lets `u` hear `v` from `x <= 2^(-1/α)`.
    CloseInterference,
    /// Interference at most `N α x` lets `u` hear `v` from `1 - x`.
    BernoulliSlack,
    /// A transmission heard within `1 - ε/2` reaches all neighbors of `B(v, ε/2)`.
    OnBehalf,
}

impl ReceptionFact {
    pub const ALL: [ReceptionFact; 3] = [
        ReceptionFact::CloseInterference,
        ReceptionFact::BernoulliSlack,
        ReceptionFact::OnBehalf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceptionFact::CloseInterference => "close-interference",
            ReceptionFact::BernoulliSlack => "bernoulli-slack",
            ReceptionFact::OnBehalf => "on-behalf",
        }
    }
}

/// A transmit set on a topology with a designated sender and receiver.
#[derive(Debug, Clone)]
pub struct ReceptionInstance {
    pub topology: NetworkTopology,
    pub params: SinrParams,
    pub transmitters: Vec<StationId>,
    pub sender: StationId,
    pub receiver: StationId,
}

impl ReceptionInstance {
    /// Replayable text form: parameters, roles, then the topology file.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        format!(
            "# alpha={:?} beta={:?} noise={:?} power={:?} epsilon={:?}\n# transmitters={:?} sender={} receiver={}\n{}",
            p.alpha,
            p.beta,
            p.noise,
            p.power,
            p.epsilon,
            self.transmitters,
            self.sender,
            self.receiver,
            write_topology_string(&self.topology)
        )
    }

    fn decodes(&self, engine: &mut SinrEngine, receiver: StationId) -> Result<bool> {
        let rx = engine.resolve(0, &self.transmitters)?;
        Ok(rx.iter().any(|r| r.receiver == receiver && r.sender == self.sender))
    }

    /// Whether the sender is strictly the nearest transmitter to the receiver.
    fn sender_nearest(&self) -> bool {
        let d = self.topology.distance(self.sender, self.receiver);
        self.transmitters
            .iter()
            .filter(|&&w| w != self.sender)
            .all(|&w| self.topology.distance(w, self.receiver) > d)
    }

    fn interference(&self) -> Result<f64> {
        interference_at(self.receiver, &self.transmitters, &self.params, &self.topology)
    }

    fn normalized(&self) -> bool {
        self.params.power == self.params.noise * self.params.beta && self.params.beta >= 1.0
    }
}

/// Checks the close-interference fact on one instance.
pub fn check_close_interference(instance: &ReceptionInstance) -> Result<Outcome> {
    let p = &instance.params;
    let x = instance.topology.distance(instance.sender, instance.receiver);
    if !instance.normalized() || !instance.sender_nearest() || x > 0.5f64.powf(1.0 / p.alpha) {
        return Ok(Outcome::Vacuous);
    }
    if instance.interference()? > p.noise / (2.0 * x.powf(p.alpha)) {
        return Ok(Outcome::Vacuous);
    }
    let mut engine = SinrEngine::new(&instance.topology, p)?;
    Ok(instance.decodes(&mut engine, instance.receiver)?.into())
}

/// Checks the Bernoulli-slack fact on one instance.
pub fn check_bernoulli_slack(instance: &ReceptionInstance) -> Result<Outcome> {
    let p = &instance.params;
    let x = 1.0 - instance.topology.distance(instance.sender, instance.receiver);
    if !instance.normalized() || !instance.sender_nearest() || x <= 0.0 {
        return Ok(Outcome::Vacuous);
    }
    if instance.interference()? > p.noise * p.alpha * x {
        return Ok(Outcome::Vacuous);
    }
    let mut engine = SinrEngine::new(&instance.topology, p)?;
    Ok(instance.decodes(&mut engine, instance.receiver)?.into())
}

/// Checks the on-behalf fact for the instance's sender. The hypothesis is
/// evaluated at every silent station within `1 - ε/2` of the sender; the
/// receiver field is ignored.
pub fn check_on_behalf(instance: &ReceptionInstance) -> Result<Outcome> {
    let topo = &instance.topology;
    let v = instance.sender;
    let eps = topo.epsilon();
    let mut engine = SinrEngine::new(topo, &instance.params)?;
    let heard: Vec<StationId> = engine
        .resolve(0, &instance.transmitters)?
        .iter()
        .filter(|r| r.sender == v)
        .map(|r| r.receiver)
        .collect();
    let silent = |u: StationId| !instance.transmitters.contains(&u);
    let hypothesis = (0..topo.len())
        .filter(|&u| u != v && silent(u) && topo.distance(v, u) <= 1.0 - eps / 2.0)
        .all(|u| heard.contains(&u));
    if !hypothesis {
        return Ok(Outcome::Vacuous);
    }
    let holds = topo
        .ball_around(v, eps / 2.0)?
        .into_iter()
        .flat_map(|w| topo.neighbors(w).iter().copied())
        .filter(|&u| u != v && silent(u))
        .all(|u| heard.contains(&u));
    Ok(holds.into())
}

pub fn check_reception_instance(fact: ReceptionFact, instance: &ReceptionInstance) -> Result<Outcome> {
    match fact {
        ReceptionFact::CloseInterference => check_close_interference(instance),
        ReceptionFact::BernoulliSlack => check_bernoulli_slack(instance),
        ReceptionFact::OnBehalf => check_on_behalf(instance),
    }
}

fn random_params(rng: &mut ChaCha8Rng, space: MetricSpace, epsilon: f64) -> SinrParams {
    let alpha = space.growth_dimension() + 0.5 + rng.random::<f64>() * 3.5;
    let beta = 1.0 + rng.random::<f64>() * 3.0;
    let noise = 10f64.powf(rng.random::<f64>() * 2.0 - 1.0);
    SinrParams::normalized(alpha, beta, noise, epsilon)
}

fn random_space(rng: &mut ChaCha8Rng) -> MetricSpace {
    if rng.random::<bool>() {
        MetricSpace::Line
    } else {
        MetricSpace::Euclidean2
    }
}

/// A point at distance `d` from `center` in a random direction.
fn offset(rng: &mut ChaCha8Rng, space: MetricSpace, center: &MetricPoint, d: f64) -> MetricPoint {
    let c = center.coords();
    match space {
        MetricSpace::Line => MetricPoint::line(c[0] + if rng.random::<bool>() { d } else { -d }),
        MetricSpace::Euclidean2 => {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            MetricPoint::plane(c[0] + d * theta.cos(), c[1] + d * theta.sin())
        }
    }
}

/// Receiver at the origin, sender at distance `x`, and interferers whose
/// total contribution is a random fraction (sometimes above 1) of `budget`.
fn interference_instance(
    rng: &mut ChaCha8Rng,
    x: f64,
    budget: f64,
    params: SinrParams,
    space: MetricSpace,
) -> Result<ReceptionInstance> {
    let origin = match space {
        MetricSpace::Line => MetricPoint::line(0.0),
        MetricSpace::Euclidean2 => MetricPoint::plane(0.0, 0.0),
    };
    let mut positions = vec![origin.clone(), offset(rng, space, &origin, x)];
    let k = rng.random_range(0..=6);
    let fill = rng.random::<f64>() * 1.25;
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let share = budget * fill * w / total;
        // each share stays below P / x^α, so interferers land beyond `x`
        let d = (params.power / share).powf(1.0 / params.alpha);
        positions.push(offset(rng, space, &origin, d));
    }
    let topology = NetworkTopology::new(space, params.epsilon, positions)?;
    let transmitters = (1..topology.len()).collect();
    Ok(ReceptionInstance {
        topology,
        params,
        transmitters,
        sender: 1,
        receiver: 0,
    })
}

/// Samples one instance for `fact`; hypotheses hold for most but not all.
pub fn random_reception_instance(fact: ReceptionFact, rng: &mut ChaCha8Rng) -> Result<ReceptionInstance> {
    let space = random_space(rng);
    match fact {
        ReceptionFact::CloseInterference => {
            let params = random_params(rng, space, 0.5);
            let x = (rng.random::<f64>() * 0.5f64.powf(1.0 / params.alpha)).max(1e-3);
            let budget = params.noise / (2.0 * x.powf(params.alpha));
            interference_instance(rng, x, budget, params, space)
        }
        ReceptionFact::BernoulliSlack => {
            let params = random_params(rng, space, 0.5);
            let x = rng.random::<f64>().max(1e-3);
            let budget = params.noise * params.alpha * x;
            interference_instance(rng, 1.0 - x, budget, params, space)
        }
        ReceptionFact::OnBehalf => {
            let epsilon = 0.1 + rng.random::<f64>() * 0.8;
            let params = random_params(rng, space, epsilon);
            let n = rng.random_range(2..=10);
            let side = 0.5 + rng.random::<f64>() * 2.5;
            let topology = loop {
                let positions = (0..n)
                    .map(|_| match space {
                        MetricSpace::Line => MetricPoint::line(rng.random::<f64>() * side),
                        MetricSpace::Euclidean2 => {
                            MetricPoint::plane(rng.random::<f64>() * side, rng.random::<f64>() * side)
                        }
                    })
                    .collect();
                let t = NetworkTopology::new(space, epsilon, positions)?;
                if t.require_distinct_positions().is_ok() {
                    break t;
                }
            };
            let mut transmitters = vec![0];
            for w in 1..n {
                if rng.random::<f64>() < 0.15 {
                    transmitters.push(w);
                }
            }
            Ok(ReceptionInstance {
                topology,
                params,
                transmitters,
                sender: 0,
                receiver: 0,
            })
        }
    }
}

/// Draws random instances of `fact` until `trials` of them satisfy the
/// hypothesis; vacuous draws are counted as skipped. Gives up after
/// [`MAX_DRAWS_PER_TRIAL`] draws per requested trial.
pub fn check_reception_facts(fact: ReceptionFact, trials: u64, seed: u64) -> Result<FactReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FactReport::new(fact.name());
    let max_draws = trials.saturating_mul(MAX_DRAWS_PER_TRIAL);
    while report.checked < trials {
        if report.trials >= max_draws {
            return Err(Error::invalid(format!(
                "{}: only {} of {} draws satisfied the hypothesis",
                fact.name(),
                report.checked,
                report.trials
            )));
        }
        let instance = random_reception_instance(fact, &mut rng)?;
        let outcome = check_reception_instance(fact, &instance)?;
        report.record(outcome, || instance.to_text());
    }
    Ok(report)
}

pub const MAX_DRAWS_PER_TRIAL: u64 = 100;

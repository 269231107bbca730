//! Physical-layer reception under the SINR model.
//!
//! A receiver `u` decodes transmitter `v` in a round when `u` is silent and
//! `P d(v,u)^-α / (N + Σ_{w ∈ T, w ≠ v} P d(w,u)^-α) >= β`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, StationId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrParams {
    /// Path-loss exponent.
    pub alpha: f64,
    /// Decoding threshold.
    pub beta: f64,
    /// Ambient noise power.
    pub noise: f64,
    /// Uniform transmission power.
    pub power: f64,
    /// Communication-graph slack: edges join stations at distance `<= 1 - epsilon`.
    pub epsilon: f64,
}

impl SinrParams {
    /// Parameters with `P = N β`, so the communication range is exactly 1.
    pub fn normalized(alpha: f64, beta: f64, noise: f64, epsilon: f64) -> Self {
        SinrParams {
            alpha,
            beta,
            noise,
            power: noise * beta,
            epsilon,
        }
    }

    /// Checks the model constraints against a space of growth dimension `gamma`.
    pub fn validate(&self, gamma: f64) -> Result<()> {
        if !(self.alpha > gamma) {
            return Err(Error::invalid(format!(
                "path loss alpha={} must exceed the growth dimension {gamma}",
                self.alpha
            )));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::invalid(format!("threshold beta={} must be >= 1", self.beta)));
        }
        if !(self.noise > 0.0) || !(self.power > 0.0) {
            return Err(Error::invalid("noise and power must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon={} must lie in (0,1)", self.epsilon)));
        }
        Ok(())
    }

    /// Received power at distance `d`.
    pub fn signal(&self, d: f64) -> f64 {
        self.power * d.powf(-self.alpha)
    }
}

impl Default for SinrParams {
    fn default() -> Self {
        SinrParams::normalized(3.0, 1.0, 1.0, 0.5)
    }
}

/// Range reached by a lone transmitter: `(P / (N β))^(1/α)`.
pub fn comm_range(params: &SinrParams) -> f64 {
    (params.power / (params.noise * params.beta)).powf(1.0 / params.alpha)
}

/// The SINR of `v`'s signal at `u` when `transmitters` are active.
pub fn sinr_ratio(
    v: StationId,
    u: StationId,
    transmitters: &[StationId],
    params: &SinrParams,
    topology: &NetworkTopology,
) -> Result<f64> {
    check_ids(topology, transmitters.iter().copied().chain([u, v]))?;
    if !transmitters.contains(&v) {
        return Err(Error::Precondition(format!("station {v} is not transmitting")));
    }
    if u == v {
        return Err(Error::Precondition("sender and receiver coincide".into()));
    }
    let d = topology.distance(v, u);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry { a: v, b: u });
    }
    let mut interference = 0.0;
    for &w in transmitters {
        if w == v {
            continue;
        }
        let dw = topology.distance(w, u);
        if dw == 0.0 {
            return Err(Error::DegenerateGeometry { a: w, b: u });
        }
        interference += params.signal(dw);
    }
    Ok(params.signal(d) / (params.noise + interference))
}

/// Power at `u` from every transmitter except the one nearest to `u`
/// (ties go to the smallest id).
pub fn interference_at(
    u: StationId,
    transmitters: &[StationId],
    params: &SinrParams,
    topology: &NetworkTopology,
) -> Result<f64> {
    check_ids(topology, transmitters.iter().copied().chain([u]))?;
    if transmitters.is_empty() {
        return Err(Error::Precondition(
            "interference needs a nonempty transmitter set".into(),
        ));
    }
    if transmitters.contains(&u) {
        return Err(Error::Precondition(format!("station {u} is transmitting")));
    }
    let mut sorted = transmitters.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut nearest: Option<(f64, StationId)> = None;
    for &w in &sorted {
        let d = topology.distance(w, u);
        if d == 0.0 {
            return Err(Error::DegenerateGeometry { a: w, b: u });
        }
        if nearest.is_none_or(|(best, _)| d < best) {
            nearest = Some((d, w));
        }
    }
    let (_, excluded) = nearest.expect("nonempty");
    Ok(sorted
        .iter()
        .filter(|&&w| w != excluded)
        .map(|&w| params.signal(topology.distance(w, u)))
        .sum())
}

fn check_ids(topology: &NetworkTopology, ids: impl IntoIterator<Item = StationId>) -> Result<()> {
    for id in ids {
        if id >= topology.len() {
            return Err(Error::invalid(format!("unknown station {id}")));
        }
    }
    Ok(())
}

/// A decoded transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reception {
    pub receiver: StationId,
    pub sender: StationId,
}

/// The result of one resolved round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome<M> {
    pub round: u64,
    pub transmitters: Vec<StationId>,
    /// Receiver to (sender, payload) for every successful decode.
    pub received: BTreeMap<StationId, (StationId, M)>,
    /// Total received power per silent station, when requested.
    pub interference_log: Option<BTreeMap<StationId, f64>>,
}

/// Resolves a single round from scratch.
///
/// `messages` must hold a payload for every transmitter.
pub fn resolve_round<M: Clone>(
    round: u64,
    transmitters: &[StationId],
    messages: &BTreeMap<StationId, M>,
    params: &SinrParams,
    topology: &NetworkTopology,
) -> Result<RoundOutcome<M>> {
    let mut engine = SinrEngine::new(topology, params)?;
    let receptions = engine.resolve(round, transmitters)?.to_vec();
    let mut received = BTreeMap::new();
    for Reception { receiver, sender } in receptions {
        let payload = messages
            .get(&sender)
            .ok_or_else(|| Error::invalid(format!("no message for transmitter {sender}")))?;
        received.insert(receiver, (sender, payload.clone()));
    }
    let mut sorted = transmitters.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(RoundOutcome {
        round,
        transmitters: sorted,
        received,
        interference_log: None,
    })
}

/// Precomputed pairwise gains for repeated resolution on one topology.
///
/// Each silent receiver keeps one accumulator of total received power `S_u`;
/// the candidate with the strongest signal `s` is decoded iff
/// `s / (N + S_u - s) >= β`. With `β >= 1` no other transmitter can pass, and
/// the runner-up is checked anyway so a violation surfaces as an error.
#[derive(Debug, Clone)]
pub struct SinrEngine {
    n: usize,
    noise: f64,
    beta: f64,
    gains: Vec<f64>,
    total: Vec<f64>,
    best: Vec<(f64, StationId)>,
    runner_up: Vec<f64>,
    transmitting: Vec<bool>,
    out: Vec<Reception>,
}

impl SinrEngine {
    pub fn new(topology: &NetworkTopology, params: &SinrParams) -> Result<Self> {
        let n = topology.len();
        let mut gains = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let d = topology.distance(a, b);
                if d == 0.0 {
                    return Err(Error::DegenerateGeometry { a, b });
                }
                let g = params.signal(d);
                gains[a * n + b] = g;
                gains[b * n + a] = g;
            }
        }
        Ok(SinrEngine {
            n,
            noise: params.noise,
            beta: params.beta,
            gains,
            total: vec![0.0; n],
            best: vec![(0.0, 0); n],
            runner_up: vec![0.0; n],
            transmitting: vec![false; n],
            out: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Power received at `receiver` from `sender`.
    pub fn gain(&self, sender: StationId, receiver: StationId) -> f64 {
        self.gains[sender * self.n + receiver]
    }

    /// Resolves the round; receptions come back sorted by receiver.
    pub fn resolve(&mut self, round: u64, transmitters: &[StationId]) -> Result<&[Reception]> {
        self.out.clear();
        if transmitters.is_empty() {
            return Ok(&self.out);
        }
        let n = self.n;
        self.total.fill(0.0);
        self.best.fill((0.0, usize::MAX));
        self.runner_up.fill(0.0);
        for &t in transmitters {
            if t >= n {
                return Err(Error::invalid(format!("unknown transmitter {t}")));
            }
            if self.transmitting[t] {
                continue;
            }
            self.transmitting[t] = true;
            let row = &self.gains[t * n..(t + 1) * n];
            for (u, &g) in row.iter().enumerate() {
                self.total[u] += g;
                let best = &mut self.best[u];
                if g > best.0 {
                    self.runner_up[u] = best.0;
                    *best = (g, t);
                } else if g > self.runner_up[u] {
                    self.runner_up[u] = g;
                }
            }
        }
        let mut violation = None;
        for u in 0..n {
            if self.transmitting[u] {
                continue;
            }
            let (signal, sender) = self.best[u];
            if sender == usize::MAX {
                continue;
            }
            let total = self.total[u];
            if signal / (self.noise + (total - signal)) >= self.beta {
                self.out.push(Reception { receiver: u, sender });
                let second = self.runner_up[u];
                if second > 0.0 && second / (self.noise + (total - second)) >= self.beta {
                    violation = Some(u);
                }
            }
        }
        for &t in transmitters {
            self.transmitting[t] = false;
        }
        if let Some(u) = violation {
            return Err(Error::InvariantViolation {
                invariant: "unique-decodable-sender",
                round,
                detail: format!("two transmitters reach SINR >= beta at station {u}"),
            });
        }
        Ok(&self.out)
    }

    /// Total received power at every silent station for the given set.
    pub fn received_power(&self, transmitters: &[StationId]) -> BTreeMap<StationId, f64> {
        let mut log = BTreeMap::new();
        for u in 0..self.n {
            if transmitters.contains(&u) {
                continue;
            }
            log.insert(u, transmitters.iter().map(|&t| self.gain(t, u)).sum());
        }
        log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MetricPoint, MetricSpace};

    fn line(xs: &[f64]) -> NetworkTopology {
        NetworkTopology::new(
            MetricSpace::Line,
            0.5,
            xs.iter().map(|&x| MetricPoint::line(x)).collect(),
        )
        .unwrap()
    }

    fn unit() -> SinrParams {
        SinrParams {
            alpha: 3.0,
            beta: 1.0,
            noise: 1.0,
            power: 1.0,
            epsilon: 0.5,
        }
    }

    #[test]
    fn range_examples() {
        let p = SinrParams::normalized(3.0, 2.0, 0.5, 0.2);
        assert_eq!(comm_range(&p), 1.0);
        let p = SinrParams { power: 8.0, ..unit() };
        assert!((comm_range(&p) - 2.0).abs() < 1e-15);
        let p = SinrParams {
            power: 1.0 / 8.0,
            ..unit()
        };
        assert!((comm_range(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ratio_examples() {
        // u=0, v at 0.5, w at 1.0
        let t = line(&[0.0, 0.5, 1.0]);
        assert_eq!(sinr_ratio(1, 0, &[1], &unit(), &t).unwrap(), 8.0);
        assert_eq!(sinr_ratio(1, 0, &[1, 2], &unit(), &t).unwrap(), 4.0);
        // interferer at 0.5 on the other side
        let t = line(&[0.0, 0.5, -0.5]);
        let r = sinr_ratio(1, 0, &[1, 2], &unit(), &t).unwrap();
        assert_eq!(r, 8.0 / 9.0);
        assert!(r < unit().beta);
    }

    #[test]
    fn ratio_rejects_bad_calls() {
        let t = line(&[0.0, 0.5]);
        assert!(matches!(
            sinr_ratio(1, 0, &[], &unit(), &t),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            sinr_ratio(1, 1, &[1], &unit(), &t),
            Err(Error::Precondition(_))
        ));
        let t = line(&[0.0, 0.0]);
        assert!(matches!(
            sinr_ratio(1, 0, &[1], &unit(), &t),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn interference_examples() {
        let t = line(&[0.0, 0.5, 1.0]);
        assert_eq!(interference_at(0, &[1], &unit(), &t).unwrap(), 0.0);
        assert_eq!(interference_at(0, &[1, 2], &unit(), &t).unwrap(), 1.0);
        // tie at 0.5: station 1 excluded, station 2 counted
        let t = line(&[0.0, 0.5, -0.5]);
        assert_eq!(interference_at(0, &[2, 1], &unit(), &t).unwrap(), 8.0);
        let t = line(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            interference_at(0, &[1, 2], &unit(), &t),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn resolve_examples() {
        let t = line(&[0.0, 0.5]);
        let msgs: BTreeMap<StationId, u8> = [(0, 10), (1, 11)].into();
        let out = resolve_round(0, &[], &msgs, &unit(), &t).unwrap();
        assert!(out.received.is_empty());
        let out = resolve_round(0, &[0, 1], &msgs, &unit(), &t).unwrap();
        assert!(out.received.is_empty());
        let out = resolve_round(0, &[1], &msgs, &unit(), &t).unwrap();
        assert_eq!(out.received.get(&0), Some(&(1, 11)));
        assert_eq!(out.received.len(), 1);
    }

    #[test]
    fn lone_transmitter_reaches_unit_range() {
        let p = SinrParams::normalized(3.0, 1.5, 2.0, 0.5);
        let t = line(&[0.0, 0.3, 0.999, 1.0, 1.0001]);
        let mut engine = SinrEngine::new(&t, &p).unwrap();
        let got: Vec<_> = engine.resolve(0, &[0]).unwrap().iter().map(|r| r.receiver).collect();
        assert_eq!(got, vec![1, 2, 3]);
    }

    #[test]
    fn duplicates_in_transmit_set_count_once() {
        let t = line(&[0.0, 0.5]);
        let mut engine = SinrEngine::new(&t, &unit()).unwrap();
        assert_eq!(
            engine.resolve(0, &[1, 1]).unwrap(),
            &[Reception { receiver: 0, sender: 1 }]
        );
    }

    #[test]
    fn coincident_stations_are_degenerate() {
        let t = line(&[0.0, 0.25, 0.25]);
        assert!(matches!(
            SinrEngine::new(&t, &unit()),
            Err(Error::DegenerateGeometry { a: 1, b: 2 })
        ));
    }

    #[test]
    fn validate_params() {
        assert!(SinrParams::normalized(3.0, 1.0, 1.0, 0.5).validate(2.0).is_ok());
        assert!(SinrParams::normalized(2.0, 1.0, 1.0, 0.5).validate(2.0).is_err());
        assert!(SinrParams::normalized(3.0, 0.5, 1.0, 0.5).validate(2.0).is_err());
        assert!(SinrParams::normalized(3.0, 1.0, 1.0, 1.0).validate(2.0).is_err());
    }
}

use crate::coloring::{run_coloring, Coloring, ColoringRun, ConstantProfile};
use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, StationId};
use crate::harness::{EventKind, RoundEngine, Trace};
use crate::sinr::{Reception, SinrParams};

use super::message::{MessageKind, ProtocolMessage};
use super::summary::{completion_from, RunSummary};

/// Payload every broadcast carries unless told otherwise.
pub const DEFAULT_PAYLOAD: u64 = 0xB0A7;

/// Round cap and trace retention shared by every protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Hard cap on simulated rounds; exceeding it yields an incomplete run.
    pub budget: u64,
    /// Keep every trace event in memory (needed for CSV output and replay).
    pub keep_events: bool,
    pub payload: u64,
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        RunOptions {
            budget,
            keep_events: true,
            payload: DEFAULT_PAYLOAD,
        }
    }
}

fn check_source(topology: &NetworkTopology, source: StationId) -> Result<()> {
    if source >= topology.len() {
        return Err(Error::invalid(format!("source {source} is not a station")));
    }
    topology.require_connected()
}

/// Round layout of the non-spontaneous protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseLayout {
    pub coloring_rounds: u64,
    pub transmit_rounds: u64,
}

impl PhaseLayout {
    pub fn new(profile: &ConstantProfile) -> Self {
        PhaseLayout {
            coloring_rounds: crate::coloring::schedule_length(profile, profile.n).total,
            transmit_rounds: profile.transmit_window(),
        }
    }

    pub fn phase_len(&self) -> u64 {
        self.coloring_rounds + self.transmit_rounds
    }
}

/// State shared by the non-spontaneous broadcast and ad hoc wake-up.
pub(crate) struct PhaseDriver<'p> {
    profile: &'p ConstantProfile,
    layout: PhaseLayout,
    payload: u64,
    kind: MessageKind,
    /// Elapsed time at which the station holds the message.
    pub holds: Vec<Option<u64>>,
    pub held: usize,
    /// Offset between a station's local clock and the global one.
    clock_offset: Vec<Option<i64>>,
    pub synchrony_ok: bool,
    pub integrity_ok: bool,
    pub max_bits: u32,
}

impl<'p> PhaseDriver<'p> {
    pub fn new(profile: &'p ConstantProfile, stations: usize, payload: u64, kind: MessageKind) -> Self {
        PhaseDriver {
            profile,
            layout: PhaseLayout::new(profile),
            payload,
            kind,
            holds: vec![None; stations],
            held: 0,
            clock_offset: vec![None; stations],
            synchrony_ok: true,
            integrity_ok: true,
            max_bits: 0,
        }
    }

    pub fn layout(&self) -> PhaseLayout {
        self.layout
    }

    /// Marks `v` as an initiator holding the message from time `at`.
    pub fn start(&mut self, v: StationId, at: u64) {
        if self.holds[v].is_none() {
            self.holds[v] = Some(at);
            self.held += 1;
            self.clock_offset[v] = Some(0);
        }
    }

    /// Runs one full phase starting at the engine's current round, which
    /// must be a phase boundary. Returns early once `stop(self, round)`
    /// holds or the round cap is reached.
    pub fn run_phase(
        &mut self,
        engine: &mut RoundEngine<'_>,
        stop: &mut dyn FnMut(&Self, u64) -> bool,
        cap: u64,
    ) -> Result<()> {
        let start = engine.round();
        let phase_len = self.layout.phase_len();
        let global_phase = start / phase_len;
        let active: Vec<StationId> = (0..self.holds.len())
            .filter(|&v| self.holds[v].is_some_and(|t| t <= start))
            .collect();
        for &v in &active {
            let local = start as i64 + self.clock_offset[v].unwrap_or(0);
            let local_phase = local as u64 / phase_len;
            engine.emit_at(
                start,
                v,
                EventKind::PhaseBoundary,
                local_phase as f64,
                global_phase as f64,
            )?;
            if local_phase != global_phase {
                self.synchrony_ok = false;
                return Err(Error::InvariantViolation {
                    invariant: "phase-synchrony",
                    round: start,
                    detail: format!("station {v} is in local phase {local_phase}, global phase is {global_phase}"),
                });
            }
        }
        let n = self.holds.len();
        let mut coloring = ColoringRun::new(n, &active, self.profile);
        let mut colors: Option<Coloring> = coloring.coloring();
        let mut tx = Vec::new();
        let mut rx: Vec<Reception> = Vec::new();
        for offset in 0..phase_len {
            let round = engine.round();
            if round >= cap || stop(self, round) {
                return Ok(());
            }
            tx.clear();
            let in_coloring = offset < self.layout.coloring_rounds;
            if in_coloring {
                coloring.choose(engine, &mut tx);
            } else {
                let colors = colors.as_ref().expect("coloring finished before transmit part");
                for &v in &active {
                    if engine.coin(v, self.profile.broadcast_probability(colors[&v])) {
                        tx.push(v);
                    }
                }
            }
            let kind = if in_coloring { MessageKind::Hello } else { self.kind };
            engine.resolve(&tx, kind.code(), &mut rx)?;
            if !tx.is_empty() {
                let msg = ProtocolMessage::new(kind, self.payload, round);
                self.max_bits = self.max_bits.max(msg.bit_length());
            }
            if in_coloring {
                coloring.observe(engine, &tx, &rx)?;
                if offset + 1 == self.layout.coloring_rounds {
                    colors = coloring.coloring();
                }
            }
            for r in &rx {
                let v = r.receiver;
                if self.holds[v].is_none() {
                    // every transmission carries the payload and the round counter
                    let msg = ProtocolMessage::new(kind, self.payload, round);
                    self.holds[v] = Some(round + 1);
                    self.held += 1;
                    self.clock_offset[v] = Some(msg.elapsed_rounds as i64 - round as i64);
                    if msg.payload != self.payload {
                        self.integrity_ok = false;
                    }
                    engine.emit(v, EventKind::Inform, r.sender as f64, msg.payload as f64)?;
                }
            }
        }
        Ok(())
    }
}

/// Non-spontaneous broadcast: only stations holding the message take part;
/// each phase recolors the current holders and then lets them transmit.
pub fn run_nos_broadcast(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    source: StationId,
    seed: u64,
    options: &RunOptions,
) -> Result<(RunSummary, Trace)> {
    check_source(topology, source)?;
    let n = topology.len();
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("nos-broadcast", seed, profile.mode, n);
    let mut driver = PhaseDriver::new(profile, n, options.payload, MessageKind::Source);
    driver.start(source, 0);
    let phase_len = driver.layout().phase_len().max(1);
    let mut phases = 0u64;
    let mut informed_before = 1usize;
    let mut monotone = true;
    let mut stop = |d: &PhaseDriver<'_>, _: u64| d.held == n;
    while engine.round() < options.budget && driver.held < n {
        driver.run_phase(&mut engine, &mut stop, options.budget)?;
        phases += 1;
        monotone &= driver.held >= informed_before;
        informed_before = driver.held;
    }
    summary.first_informed = driver.holds.clone();
    summary.completion_rounds = completion_from(&summary.first_informed, 0);
    summary.success = summary.completion_rounds.is_some();
    summary.rounds_simulated = engine.round();
    summary.max_message_bits = driver.max_bits;
    summary.check("phase-synchrony", driver.synchrony_ok);
    summary.check("payload-integrity", driver.integrity_ok);
    summary.check("informed-monotone", monotone);
    summary.push_extra("phases", phases);
    summary.push_extra("phase_len", phase_len);
    summary.push_extra("coloring_rounds", driver.layout().coloring_rounds);
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace))
}

/// Spontaneous broadcast: one global coloring, one deterministic source
/// round, then every holder transmits for a fixed window.
pub fn run_s_broadcast(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    source: StationId,
    seed: u64,
    options: &RunOptions,
) -> Result<(RunSummary, Trace)> {
    check_source(topology, source)?;
    let n = topology.len();
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("s-broadcast", seed, profile.mode, n);
    let coloring_profile = profile.with_epsilon(params, profile.epsilon / 3.0)?;
    let all: Vec<StationId> = (0..n).collect();
    let colors = run_coloring(&mut engine, &all, &coloring_profile)?;
    let coloring_rounds = engine.round();
    let mut spread = Spreader::new(profile, n, options.payload, MessageKind::Source);
    spread.hold(source, 0);
    // the source round
    let mut rx = Vec::new();
    let round = engine.round();
    engine.resolve(&[source], MessageKind::Source.code(), &mut rx)?;
    spread.deliver(&mut engine, round, &rx)?;
    spread.max_bits = ProtocolMessage::new(MessageKind::Source, options.payload, round).bit_length();
    let window_open = engine.round();
    spread.run(&mut engine, &colors, None, window_open, options.budget)?;
    summary.first_informed = spread.holds.clone();
    summary.completion_rounds = completion_from(&summary.first_informed, 0);
    summary.success = summary.completion_rounds.is_some();
    summary.rounds_simulated = engine.round();
    summary.max_message_bits = spread.max_bits;
    summary.check("payload-integrity", spread.integrity_ok);
    summary.check("informed-monotone", true);
    summary.push_extra("coloring_rounds", coloring_rounds);
    summary.push_extra("transmit_window", profile.transmit_window());
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace))
}

/// Windowed probabilistic relaying used after a coloring is in place:
/// a holder transmits with its broadcast probability in each of the
/// `transmit_window` rounds after it got the message.
pub(crate) struct Spreader<'p> {
    profile: &'p ConstantProfile,
    payload: u64,
    kind: MessageKind,
    pub holds: Vec<Option<u64>>,
    pub integrity_ok: bool,
    pub max_bits: u32,
}

impl<'p> Spreader<'p> {
    pub fn new(profile: &'p ConstantProfile, stations: usize, payload: u64, kind: MessageKind) -> Self {
        Spreader {
            profile,
            payload,
            kind,
            holds: vec![None; stations],
            integrity_ok: true,
            max_bits: 0,
        }
    }

    pub fn hold(&mut self, v: StationId, at: u64) {
        if self.holds[v].is_none() {
            self.holds[v] = Some(at);
        }
    }

    pub fn deliver(&mut self, engine: &mut RoundEngine<'_>, round: u64, rx: &[Reception]) -> Result<usize> {
        let mut fresh = 0;
        for r in rx {
            if self.holds[r.receiver].is_none() && self.holds[r.sender].is_some() {
                let msg = ProtocolMessage::new(self.kind, self.payload, round);
                self.holds[r.receiver] = Some(round + 1);
                if msg.payload != self.payload {
                    self.integrity_ok = false;
                }
                engine.emit(r.receiver, EventKind::Inform, r.sender as f64, msg.payload as f64)?;
                fresh += 1;
            }
        }
        Ok(fresh)
    }

    /// Relays until everyone holds the message, every window has closed,
    /// or `cap` is reached. `extra` adds a per-station color (the
    /// spontaneous recoloring of wake-up) on top of `colors`.
    pub fn run(
        &mut self,
        engine: &mut RoundEngine<'_>,
        colors: &Coloring,
        extra: Option<&Coloring>,
        window_open: u64,
        cap: u64,
    ) -> Result<()> {
        let window = self.profile.transmit_window();
        let n = self.holds.len();
        let probability: Vec<f64> = (0..n)
            .map(|v| {
                let p = colors.get(&v).copied().unwrap_or(0.0) + extra.and_then(|e| e.get(&v)).copied().unwrap_or(0.0);
                self.profile.broadcast_probability(p)
            })
            .collect();
        let mut tx = Vec::new();
        let mut rx = Vec::new();
        loop {
            let round = engine.round();
            if round >= cap || self.holds.iter().all(Option::is_some) {
                return Ok(());
            }
            tx.clear();
            let mut any_open = false;
            for v in 0..n {
                if let Some(t) = self.holds[v] {
                    let from = t.max(window_open);
                    if round >= from && round < from + window {
                        any_open = true;
                        if engine.coin(v, probability[v]) {
                            tx.push(v);
                        }
                    } else if round < from {
                        any_open = true;
                    }
                }
            }
            if !any_open {
                return Ok(());
            }
            engine.resolve(&tx, self.kind.code(), &mut rx)?;
            if !tx.is_empty() {
                self.max_bits = self
                    .max_bits
                    .max(ProtocolMessage::new(self.kind, self.payload, round).bit_length());
            }
            self.deliver(engine, round, &rx)?;
        }
    }
}

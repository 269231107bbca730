use std::path::Path;

use crate::coloring::{schedule_length, Coloring, ColoringRun, ConstantProfile};
use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, StationId};
use crate::harness::{EventKind, RoundEngine, Trace};
use crate::sinr::{Reception, SinrParams};

use super::broadcast::{PhaseDriver, RunOptions};
use super::message::{MessageKind, ProtocolMessage};
use super::summary::RunSummary;

/// Adversarial spontaneous wake-up rounds; `None` means never.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WakeSchedule {
    wake: Vec<Option<u64>>,
}

impl WakeSchedule {
    pub fn new(wake: Vec<Option<u64>>) -> Result<Self> {
        if wake.iter().all(Option::is_none) {
            return Err(Error::invalid("wake schedule has no spontaneous station"));
        }
        Ok(WakeSchedule { wake })
    }

    /// Every station wakes at `round`.
    pub fn simultaneous(stations: usize, round: u64) -> Self {
        WakeSchedule {
            wake: vec![Some(round); stations],
        }
    }

    /// Only `station` wakes, at `round`.
    pub fn single(stations: usize, station: StationId, round: u64) -> Self {
        let mut wake = vec![None; stations];
        wake[station] = Some(round);
        WakeSchedule { wake }
    }

    pub fn len(&self) -> usize {
        self.wake.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wake.is_empty()
    }

    pub fn wake_round(&self, station: StationId) -> Option<u64> {
        self.wake[station]
    }

    pub fn rounds(&self) -> &[Option<u64>] {
        &self.wake
    }

    pub fn first_wake(&self) -> u64 {
        self.wake.iter().flatten().copied().min().expect("validated non-empty")
    }

    /// Records `station_id, wake_round`, with `inf` for never. Stations
    /// without a record never wake spontaneously.
    pub fn parse(text: &str, stations: usize) -> Result<Self> {
        let mut wake = vec![None; stations];
        let mut seen = vec![false; stations];
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: idx + 1, message };
            let (id, round) = line
                .split_once(',')
                .ok_or_else(|| err("expected `station_id, wake_round`".into()))?;
            let id: StationId = id.trim().parse().map_err(|e| err(format!("station id: {e}")))?;
            if id >= stations {
                return Err(err(format!("station {id} out of range")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(err(format!("station {id} listed twice")));
            }
            let round = round.trim();
            wake[id] = if round.eq_ignore_ascii_case("inf") {
                None
            } else {
                Some(round.parse().map_err(|e| err(format!("wake round: {e}")))?)
            };
        }
        WakeSchedule::new(wake)
    }

    pub fn read(path: &Path, stations: usize) -> Result<Self> {
        WakeSchedule::parse(&std::fs::read_to_string(path)?, stations)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, w) in self.wake.iter().enumerate() {
            match w {
                Some(r) => out.push_str(&format!("{v}, {r}\n")),
                None => out.push_str(&format!("{v}, inf\n")),
            }
        }
        out
    }
}

/// First multiple of `period` at or after `wake`.
pub fn deferred_start(wake: u64, period: u64) -> u64 {
    wake.div_ceil(period) * period
}

/// Calibrated budgets are typical (median) completion times; periods that
/// must cover a whole broadcast use this multiple of them.
pub const PERIOD_MARGIN: u64 = 4;

/// Period of the ad hoc wake-up: the non-spontaneous broadcast budget
/// times [`PERIOD_MARGIN`], rounded up to whole phases.
pub fn adhoc_period(profile: &ConstantProfile, diameter: u32) -> u64 {
    let phase = (schedule_length(profile, profile.n).total + profile.transmit_window()).max(1);
    (PERIOD_MARGIN * profile.nos_round_budget(diameter).max(1)).div_ceil(phase) * phase
}

/// Period of the wake-up on top of an established coloring: one
/// recoloring plus [`PERIOD_MARGIN`] spontaneous-broadcast budgets.
pub fn colored_period(profile: &ConstantProfile, diameter: u32) -> u64 {
    schedule_length(profile, profile.n).total + PERIOD_MARGIN * profile.sb_round_budget(diameter).max(1)
}

fn check_schedule(topology: &NetworkTopology, schedule: &WakeSchedule) -> Result<()> {
    if schedule.len() != topology.len() {
        return Err(Error::invalid(format!(
            "wake schedule covers {} stations, topology has {}",
            schedule.len(),
            topology.len()
        )));
    }
    topology.require_connected()
}

pub(crate) struct AdhocOutcome {
    pub woken: Vec<Option<u64>>,
    pub first_start: u64,
    pub synchrony_ok: bool,
    pub integrity_ok: bool,
    pub max_bits: u32,
}

/// Ad hoc wake-up on an existing engine, stopping once everyone is awake
/// or at `cap`.
pub(crate) fn adhoc_core(
    engine: &mut RoundEngine<'_>,
    profile: &ConstantProfile,
    schedule: &WakeSchedule,
    period: u64,
    cap: u64,
    payload: u64,
) -> Result<AdhocOutcome> {
    let n = schedule.len();
    let wake = schedule.rounds();
    let starts: Vec<Option<u64>> = wake.iter().map(|w| w.map(|w| deferred_start(w, period))).collect();
    let first_start = starts.iter().flatten().copied().min().expect("validated non-empty");
    let mut driver = PhaseDriver::new(profile, n, payload, MessageKind::Wakeup);
    let phase_len = driver.layout().phase_len().max(1);
    let mut woke_reported = vec![false; n];
    let all_awake =
        |d: &PhaseDriver<'_>, round: u64| (0..n).all(|v| d.holds[v].is_some() || wake[v].is_some_and(|w| w <= round));
    let mut stop = all_awake;
    loop {
        let round = engine.round();
        if round >= cap || all_awake(&driver, round) {
            break;
        }
        for v in 0..n {
            if let Some(s) = starts[v] {
                if s <= round && driver.holds[v].is_none() {
                    driver.start(v, s);
                }
            }
            if !woke_reported[v] && wake[v].is_some_and(|w| w <= round) {
                woke_reported[v] = true;
                engine.emit_at(round, v, EventKind::Wake, 1.0, wake[v].unwrap_or(0) as f64)?;
            }
        }
        if driver.held == 0 {
            // nobody can transmit until the next deferred start
            let next = starts.iter().flatten().copied().filter(|&s| s > round).min();
            match next {
                Some(s) => engine.skip_to(s.min(cap)),
                None => break,
            }
            continue;
        }
        driver.run_phase(engine, &mut stop, cap)?;
        let now = engine.round();
        if !now.is_multiple_of(phase_len) {
            // stopped mid-phase: either done or out of budget
            break;
        }
    }
    let woken = (0..n)
        .map(|v| match (driver.holds[v], wake[v]) {
            (Some(h), Some(w)) => Some(h.min(w)),
            (Some(h), None) => Some(h),
            (None, Some(w)) if w <= engine.round() => Some(w),
            _ => None,
        })
        .collect();
    Ok(AdhocOutcome {
        woken,
        first_start,
        synchrony_ok: driver.synchrony_ok,
        integrity_ok: driver.integrity_ok,
        max_bits: driver.max_bits,
    })
}

/// Wake-up without any prior structure: spontaneous wakers wait for the
/// next multiple of the period and then run the non-spontaneous broadcast
/// with the wake-up signal as payload.
pub fn run_wakeup_adhoc(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    schedule: &WakeSchedule,
    seed: u64,
    options: &RunOptions,
) -> Result<(RunSummary, Trace)> {
    check_schedule(topology, schedule)?;
    let diameter = topology.diameter().unwrap_or(0);
    let period = adhoc_period(profile, diameter);
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("wakeup-adhoc", seed, profile.mode, topology.len());
    let out = adhoc_core(&mut engine, profile, schedule, period, options.budget, options.payload)?;
    let first_wake = schedule.first_wake();
    summary.completion_rounds = out
        .woken
        .iter()
        .try_fold(first_wake, |acc, w| w.map(|w| acc.max(w)))
        .map(|last| last - first_wake);
    summary.first_informed = out.woken;
    summary.success = summary.completion_rounds.is_some();
    summary.rounds_simulated = engine.round();
    summary.max_message_bits = out.max_bits;
    summary.check("phase-synchrony", out.synchrony_ok);
    summary.check("payload-integrity", out.integrity_ok);
    summary.push_extra("period", period);
    summary.push_extra("first_start", out.first_start);
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace))
}

pub(crate) struct ColoredOutcome {
    /// Elapsed time at which each station was awake.
    pub woken: Vec<Option<u64>>,
    /// Stations that ran the spontaneous recoloring.
    pub initiated: Vec<bool>,
    pub recoloring: Coloring,
    pub integrity_ok: bool,
    pub max_bits: u32,
}

/// Wake-up over the base coloring `base`, with epochs of `period` rounds
/// counted from `origin`. Runs until everyone is awake or `cap`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn colored_core(
    engine: &mut RoundEngine<'_>,
    profile: &ConstantProfile,
    base: &Coloring,
    wake: &[Option<u64>],
    origin: u64,
    period: u64,
    cap: u64,
    payload: u64,
    kind: MessageKind,
) -> Result<ColoredOutcome> {
    let n = wake.len();
    let window = profile.transmit_window();
    let mut holds: Vec<Option<u64>> = vec![None; n];
    let mut woken: Vec<Option<u64>> = vec![None; n];
    let mut initiated = vec![false; n];
    let mut recoloring = Coloring::new();
    let mut current: Option<ColoringRun> = None;
    let mut integrity_ok = true;
    let mut max_bits = 0;
    let mut awake = 0usize;
    let mut tx = Vec::new();
    let mut rx: Vec<Reception> = Vec::new();
    let mut wake_order: Vec<StationId> = (0..n).filter(|&v| wake[v].is_some()).collect();
    wake_order.sort_by_key(|&v| (wake[v], v));
    let mut next_waker = 0;
    loop {
        let round = engine.round();
        if round >= cap || awake == n {
            break;
        }
        while next_waker < wake_order.len() && wake[wake_order[next_waker]].is_some_and(|w| w <= round) {
            let v = wake_order[next_waker];
            next_waker += 1;
            if woken[v].is_none() {
                woken[v] = wake[v];
                awake += 1;
                engine.emit_at(round, v, EventKind::Wake, 1.0, wake[v].unwrap_or(0) as f64)?;
            }
        }
        if awake == n {
            break;
        }
        let epoch_start = round >= origin && (round - origin).is_multiple_of(period);
        if epoch_start && current.is_none() {
            // spontaneous stations that have not heard anything start recoloring
            let starters: Vec<StationId> = (0..n)
                .filter(|&v| !initiated[v] && holds[v].is_none() && wake[v].is_some_and(|w| w <= round))
                .collect();
            if !starters.is_empty() {
                for &v in &starters {
                    initiated[v] = true;
                }
                current = Some(ColoringRun::new(n, &starters, profile));
            }
        }
        if current.as_ref().is_some_and(ColoringRun::is_finished) {
            let run = current.take().expect("checked above");
            for (v, q) in run.coloring().expect("finished") {
                recoloring.insert(v, q);
                if holds[v].is_none() {
                    holds[v] = Some(round);
                }
            }
        }
        tx.clear();
        if let Some(run) = current.as_ref() {
            run.choose(engine, &mut tx);
        }
        let mut any_open = current.is_some();
        for v in 0..n {
            if let Some(t) = holds[v] {
                if round < t + window {
                    any_open = true;
                    let p = base.get(&v).copied().unwrap_or(0.0) + recoloring.get(&v).copied().unwrap_or(0.0);
                    if engine.coin(v, profile.broadcast_probability(p)) {
                        tx.push(v);
                    }
                }
            }
        }
        if !any_open {
            // idle until the next epoch with a pending spontaneous station
            let pending = (0..n)
                .filter(|&v| !initiated[v] && holds[v].is_none())
                .filter_map(|v| wake[v])
                .min();
            match pending {
                Some(w) => {
                    let from = w.max(origin).max(round + 1);
                    let next = origin + (from - origin).div_ceil(period) * period;
                    engine.skip_to(next.min(cap));
                }
                None => break,
            }
            continue;
        }
        let tag = if current.is_some() && tx.iter().any(|&v| holds[v].is_none()) {
            MessageKind::Hello
        } else {
            kind
        };
        engine.resolve(&tx, tag.code(), &mut rx)?;
        if !tx.is_empty() {
            max_bits = max_bits.max(ProtocolMessage::new(kind, payload, round).bit_length());
        }
        if let Some(run) = current.as_mut() {
            run.observe(engine, &tx, &rx)?;
        }
        for r in &rx {
            let v = r.receiver;
            let sender_informed = holds[r.sender].is_some() || initiated[r.sender];
            if sender_informed && holds[v].is_none() && !initiated[v] {
                let msg = ProtocolMessage::new(kind, payload, round);
                if msg.payload != payload {
                    integrity_ok = false;
                }
                holds[v] = Some(round + 1);
                if woken[v].is_none() {
                    woken[v] = Some(round + 1);
                    awake += 1;
                }
                engine.emit(v, EventKind::Inform, r.sender as f64, msg.payload as f64)?;
            }
        }
    }
    Ok(ColoredOutcome {
        woken,
        initiated,
        recoloring,
        integrity_ok,
        max_bits,
    })
}

/// Result of a wake-up over an established coloring.
#[derive(Debug, Clone)]
pub struct ColoredWakeup {
    pub summary: RunSummary,
    pub trace: Trace,
    /// Colors `q_v` of the stations that recolored; absent means 0.
    pub recoloring: Coloring,
}

/// Wake-up when a coloring `base` of all stations is already in place:
/// spontaneous stations recolor among themselves and the signal spreads
/// with probability `(p_v + q_v) / (c ε log2 n)`.
pub fn run_wakeup_colored(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    base: &Coloring,
    schedule: &WakeSchedule,
    seed: u64,
    options: &RunOptions,
) -> Result<ColoredWakeup> {
    check_schedule(topology, schedule)?;
    if let Some(v) = (0..topology.len()).find(|v| !base.contains_key(v)) {
        return Err(Error::invalid(format!("base coloring has no color for station {v}")));
    }
    let diameter = topology.diameter().unwrap_or(0);
    let period = colored_period(profile, diameter);
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("wakeup-colored", seed, profile.mode, topology.len());
    let out = colored_core(
        &mut engine,
        profile,
        base,
        schedule.rounds(),
        0,
        period,
        options.budget,
        options.payload,
        MessageKind::Wakeup,
    )?;
    let first_wake = schedule.first_wake();
    summary.completion_rounds = out
        .woken
        .iter()
        .try_fold(first_wake, |acc, w| w.map(|w| acc.max(w)))
        .map(|last| last - first_wake);
    summary.first_informed = out.woken;
    summary.success = summary.completion_rounds.is_some();
    summary.rounds_simulated = engine.round();
    summary.max_message_bits = out.max_bits;
    summary.check("payload-integrity", out.integrity_ok);
    summary.push_extra("period", period);
    summary.push_extra("initiators", out.initiated.iter().filter(|&&b| b).count());
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok(ColoredWakeup {
        summary,
        trace,
        recoloring: out.recoloring,
    })
}

use crate::error::Result;
use crate::geometry::{NetworkTopology, StationId};
use crate::rng::{Lane, StationStreams};
use crate::sinr::{Reception, SinrEngine, SinrParams};

use super::trace::{EventKind, Trace, TraceEvent};

/// Drives one trial: a global round clock, per-station coin streams, the
/// SINR resolver and the trace.
#[derive(Debug)]
pub struct RoundEngine<'t> {
    topology: &'t NetworkTopology,
    params: SinrParams,
    sinr: SinrEngine,
    coins: StationStreams,
    trace: Trace,
    round: u64,
    scratch: Vec<StationId>,
}

impl<'t> RoundEngine<'t> {
    pub fn new(topology: &'t NetworkTopology, params: &SinrParams, seed: u64, keep_events: bool) -> Result<Self> {
        Ok(RoundEngine {
            topology,
            params: *params,
            sinr: SinrEngine::new(topology, params)?,
            coins: StationStreams::new(seed, Lane::Transmit, topology.len()),
            trace: Trace::new(keep_events),
            round: 0,
            scratch: Vec::new(),
        })
    }

    pub fn topology(&self) -> &'t NetworkTopology {
        self.topology
    }

    pub fn params(&self) -> &SinrParams {
        &self.params
    }

    /// The round about to be resolved.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Moves the clock forward over rounds in which nobody transmits.
    pub fn skip_to(&mut self, round: u64) {
        self.round = self.round.max(round);
    }

    /// Transmit coin of `station` for the current round.
    pub fn coin(&mut self, station: StationId, p: f64) -> bool {
        self.coins.coin(station, self.round, p)
    }

    /// Resolves the current round, records it, and advances the clock.
    /// `out` receives the decodes sorted by receiver.
    pub fn resolve(&mut self, transmitters: &[StationId], tag: f64, out: &mut Vec<Reception>) -> Result<()> {
        out.clear();
        let round = self.round;
        self.round += 1;
        if transmitters.is_empty() {
            return Ok(());
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(transmitters);
        self.scratch.sort_unstable();
        self.scratch.dedup();
        out.extend_from_slice(self.sinr.resolve(round, &self.scratch)?);
        for &t in &self.scratch {
            self.trace.push(TraceEvent {
                round,
                station: t,
                kind: EventKind::Transmit,
                detail1: tag,
                detail2: 0.0,
            })?;
        }
        for r in out.iter() {
            self.trace.push(TraceEvent {
                round,
                station: r.receiver,
                kind: EventKind::Receive,
                detail1: r.sender as f64,
                detail2: 0.0,
            })?;
        }
        Ok(())
    }

    /// Records a protocol event against the round just resolved.
    pub fn emit(&mut self, station: StationId, kind: EventKind, detail1: f64, detail2: f64) -> Result<()> {
        self.trace.push(TraceEvent {
            round: self.round.saturating_sub(1),
            station,
            kind,
            detail1,
            detail2,
        })
    }

    /// Records a protocol event at an explicit round (not earlier than the
    /// last recorded one).
    pub fn emit_at(
        &mut self,
        round: u64,
        station: StationId,
        kind: EventKind,
        detail1: f64,
        detail2: f64,
    ) -> Result<()> {
        self.trace.push(TraceEvent {
            round,
            station,
            kind,
            detail1,
            detail2,
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

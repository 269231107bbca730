use crate::coloring::{run_coloring, ConstantProfile};
use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, StationId};
use crate::harness::{RoundEngine, Trace};
use crate::rng::{Lane, StationStreams};
use crate::sinr::SinrParams;

use super::broadcast::RunOptions;
use super::message::MessageKind;
use super::summary::RunSummary;
use super::wakeup::{adhoc_core, adhoc_period, colored_core, colored_period, WakeSchedule};

/// Bits per value for inputs in `[0, x]`.
pub fn value_bits(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// Consensus on the minimum input.
///
/// Stations first wake each other with the ad hoc wake-up, then build one
/// global coloring, then decide the bits of the minimum most significant
/// first: in every stage the stations whose value still matches the agreed
/// prefix and has a 0 next start a colored wake-up; a station that hears
/// anything (or started one) records a 0.
pub fn run_consensus(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    values: &[u64],
    x: u64,
    schedule: &WakeSchedule,
    seed: u64,
    options: &RunOptions,
) -> Result<(RunSummary, Trace)> {
    let n = topology.len();
    if x == 0 {
        return Err(Error::invalid("value range bound x must be at least 1"));
    }
    if values.len() != n {
        return Err(Error::invalid(format!("{} values for {n} stations", values.len())));
    }
    if let Some(v) = values.iter().position(|&v| v > x) {
        return Err(Error::invalid(format!("value of station {v} exceeds {x}")));
    }
    if schedule.len() != n {
        return Err(Error::invalid("wake schedule does not match the topology"));
    }
    topology.require_connected()?;
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("consensus", seed, profile.mode, n);
    let outcome = consensus_core(&mut engine, profile, values, x, schedule, options)?;
    let expected = values.iter().copied().min().unwrap_or(0);
    summary.first_informed = outcome.woken.clone();
    summary.completion_rounds = outcome.complete.then_some(engine.round());
    summary.success = outcome.complete && outcome.outputs.iter().all(|&o| o == expected);
    summary.rounds_simulated = engine.round();
    summary.max_message_bits = outcome.max_bits;
    summary.check("payload-integrity", outcome.integrity_ok);
    summary.check("agreement", outcome.outputs.windows(2).all(|w| w[0] == w[1]));
    summary.push_extra("bits", value_bits(x));
    summary.push_extra("minimum", expected);
    summary.push_extra("complete", outcome.complete);
    summary.push_extra(
        "outputs",
        outcome.outputs.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
    );
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace))
}

pub(crate) struct ConsensusOutcome {
    pub outputs: Vec<u64>,
    pub woken: Vec<Option<u64>>,
    /// Every stage that had initiators reached every station, and the
    /// initial wake-up reached everyone in time.
    pub complete: bool,
    pub integrity_ok: bool,
    pub max_bits: u32,
}

pub(crate) fn consensus_core(
    engine: &mut RoundEngine<'_>,
    profile: &ConstantProfile,
    values: &[u64],
    x: u64,
    schedule: &WakeSchedule,
    options: &RunOptions,
) -> Result<ConsensusOutcome> {
    let n = values.len();
    let diameter = engine.topology().diameter().unwrap_or(0);
    let wake_period = adhoc_period(profile, diameter);
    let stage_len = colored_period(profile, diameter);
    let bits = value_bits(x);

    // everyone awake within one period of the first execution start
    let wake = adhoc_core(engine, profile, schedule, wake_period, options.budget, options.payload)?;
    let wake_end = wake.first_start + wake_period;
    let mut complete = wake.woken.iter().all(|w| w.is_some_and(|w| w <= wake_end));
    let mut integrity_ok = wake.integrity_ok;
    let mut max_bits = wake.max_bits;
    engine.skip_to(wake_end);

    let all: Vec<StationId> = (0..n).collect();
    let base = run_coloring(engine, &all, profile)?;

    let mut outputs = vec![0u64; n];
    let mut matching = vec![true; n];
    for stage in 0..bits {
        let shift = bits - 1 - stage;
        let origin = engine.round();
        let cap = origin + stage_len;
        let initiators: Vec<Option<u64>> = (0..n)
            .map(|v| (matching[v] && (values[v] >> shift) & 1 == 0).then_some(origin))
            .collect();
        let any = initiators.iter().any(Option::is_some);
        let heard = if any {
            let out = colored_core(
                engine,
                profile,
                &base,
                &initiators,
                origin,
                stage_len,
                cap,
                u64::from(stage),
                MessageKind::ConsensusBit,
            )?;
            integrity_ok &= out.integrity_ok;
            max_bits = max_bits.max(out.max_bits);
            let heard: Vec<bool> = out.woken.iter().map(|w| w.is_some_and(|w| w <= cap)).collect();
            complete &= heard.iter().all(|&h| h);
            heard
        } else {
            vec![false; n]
        };
        engine.skip_to(cap);
        for v in 0..n {
            let bit = u64::from(!heard[v]);
            outputs[v] |= bit << shift;
            matching[v] &= (values[v] >> shift) & 1 == bit;
        }
    }
    Ok(ConsensusOutcome {
        outputs,
        woken: wake.woken,
        complete,
        integrity_ok,
        max_bits,
    })
}

/// Leader election: random identifiers from `{1, ..., n^3}`, then
/// consensus on the smallest. A repeated minimum is only visible to the
/// harness, which retries with fresh identifiers up to `max_attempts`.
pub fn run_leader_election(
    topology: &NetworkTopology,
    params: &SinrParams,
    profile: &ConstantProfile,
    seed: u64,
    max_attempts: u32,
    options: &RunOptions,
) -> Result<(RunSummary, Trace)> {
    let n = topology.len();
    if max_attempts == 0 {
        return Err(Error::invalid("at least one attempt is needed"));
    }
    topology.require_connected()?;
    let id_space = (n as u64).pow(3).max(1);
    let mut ids_rng = StationStreams::new(seed, Lane::Identity, n);
    let schedule = WakeSchedule::simultaneous(n, 0);
    let mut engine = RoundEngine::new(topology, params, seed, options.keep_events)?;
    let mut summary = RunSummary::new("leader-election", seed, profile.mode, n);
    let mut collisions = 0u32;
    let mut attempts = 0u32;
    let mut leader = None;
    let mut first_attempt_unique = false;
    let mut complete = false;
    let mut integrity_ok = true;
    for attempt in 0..max_attempts {
        attempts += 1;
        let ids: Vec<u64> = (0..n)
            .map(|v| ids_rng.integer_in(v, u64::from(attempt), 1, id_space))
            .collect();
        let start = engine.round();
        let shifted = WakeSchedule::new(schedule.rounds().iter().map(|w| w.map(|w| w + start)).collect())?;
        let out = consensus_core(&mut engine, profile, &ids, id_space, &shifted, options)?;
        integrity_ok &= out.integrity_ok;
        summary.max_message_bits = summary.max_message_bits.max(out.max_bits);
        if attempt == 0 {
            summary.first_informed = out.woken.clone();
        }
        complete = out.complete && out.outputs.windows(2).all(|w| w[0] == w[1]);
        let agreed = out.outputs[0];
        let holders: Vec<StationId> = (0..n).filter(|&v| ids[v] == agreed).collect();
        let unique = complete && holders.len() == 1;
        if attempt == 0 {
            first_attempt_unique = unique;
        }
        if holders.len() > 1 {
            collisions += 1;
        }
        if unique {
            leader = Some(holders[0]);
            break;
        }
        if !complete {
            break;
        }
    }
    summary.completion_rounds = leader.map(|_| engine.round());
    summary.success = leader.is_some();
    summary.rounds_simulated = engine.round();
    summary.check("payload-integrity", integrity_ok);
    summary.push_extra("leader", leader.map_or_else(|| "none".to_string(), |l| l.to_string()));
    summary.push_extra("attempts", attempts);
    summary.push_extra("collisions", collisions);
    summary.push_extra("first_attempt_unique", first_attempt_unique);
    summary.push_extra("complete", complete);
    let trace = engine.into_trace();
    summary.trace_hash = trace.hash();
    Ok((summary, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_counts() {
        assert_eq!(value_bits(1), 1);
        assert_eq!(value_bits(7), 3);
        assert_eq!(value_bits(8), 4);
        assert_eq!(value_bits(255), 8);
        assert_eq!(value_bits(27_000), 15);
    }
}

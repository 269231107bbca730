use std::collections::BTreeMap;

use crate::error::Result;
use crate::geometry::StationId;
use crate::harness::{EventKind, RoundEngine};
use crate::sinr::Reception;

use super::constants::ConstantProfile;
use super::schedule::{schedule_length, ColoringSchedule};
use super::station::ColoringStation;

/// Station to final color.
pub type Coloring = BTreeMap<StationId, f64>;

const ABSENT: usize = usize::MAX;

/// One lockstep StabilizeProbability execution over a set of participants.
///
/// Each round the caller asks for transmitters, resolves the round, and
/// hands the outcome back through `observe`.
#[derive(Debug, Clone)]
pub struct ColoringRun {
    profile: ConstantProfile,
    schedule: ColoringSchedule,
    participants: Vec<StationId>,
    states: Vec<ColoringStation>,
    slot: Vec<usize>,
    heard: Vec<bool>,
    sent: Vec<bool>,
    elapsed: u64,
}

impl ColoringRun {
    /// `stations` is the size of the whole network; `participants` a subset.
    pub fn new(stations: usize, participants: &[StationId], profile: &ConstantProfile) -> Self {
        let schedule = schedule_length(profile, profile.n);
        let mut participants = participants.to_vec();
        participants.sort_unstable();
        participants.dedup();
        let mut slot = vec![ABSENT; stations];
        for (i, &p) in participants.iter().enumerate() {
            slot[p] = i;
        }
        let k = participants.len();
        ColoringRun {
            profile: profile.clone(),
            schedule,
            states: vec![ColoringStation::new(profile, &schedule); k],
            participants,
            slot,
            heard: vec![false; k],
            sent: vec![false; k],
            elapsed: 0,
        }
    }

    pub fn schedule(&self) -> &ColoringSchedule {
        &self.schedule
    }

    pub fn participants(&self) -> &[StationId] {
        &self.participants
    }

    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn is_finished(&self) -> bool {
        self.elapsed >= self.schedule.total
    }

    pub fn state(&self, station: StationId) -> Option<&ColoringStation> {
        match self.slot.get(station) {
            Some(&i) if i != ABSENT => Some(&self.states[i]),
            _ => None,
        }
    }

    /// Appends this round's coloring transmitters to `out`.
    pub fn choose(&self, engine: &mut RoundEngine<'_>, out: &mut Vec<StationId>) {
        for (i, st) in self.states.iter().enumerate() {
            if st.is_running() {
                let v = self.participants[i];
                if engine.coin(v, st.transmit_probability(&self.profile)) {
                    out.push(v);
                }
            }
        }
    }

    /// Advances every running participant by the resolved round.
    pub fn observe(
        &mut self,
        engine: &mut RoundEngine<'_>,
        transmitters: &[StationId],
        receptions: &[Reception],
    ) -> Result<()> {
        self.elapsed += 1;
        self.sent.fill(false);
        self.heard.fill(false);
        for &t in transmitters {
            if let Some(&i) = self.slot.get(t) {
                if i != ABSENT {
                    self.sent[i] = true;
                }
            }
        }
        for r in receptions {
            let i = self.slot[r.receiver];
            if i != ABSENT {
                self.heard[i] = true;
            }
        }
        for i in 0..self.states.len() {
            if !self.states[i].is_running() {
                continue;
            }
            if let Some(color) = self.states[i].step(self.sent[i], self.heard[i], &self.profile, &self.schedule)? {
                let level = self.states[i].level();
                engine.emit(self.participants[i], EventKind::QuitColor, color, f64::from(level))?;
            }
        }
        Ok(())
    }

    /// Final colors; `None` until the schedule has run out.
    pub fn coloring(&self) -> Option<Coloring> {
        if !self.is_finished() && self.states.iter().any(|s| s.is_running()) {
            return None;
        }
        Some(
            self.participants
                .iter()
                .zip(&self.states)
                .map(|(&v, s)| (v, s.color().expect("finished schedule leaves no running station")))
                .collect(),
        )
    }
}

/// Runs a whole coloring on `participants` starting at the engine's
/// current round. Quitting stations idle out the schedule, so exactly
/// `schedule.total` rounds elapse.
pub fn run_coloring(
    engine: &mut RoundEngine<'_>,
    participants: &[StationId],
    profile: &ConstantProfile,
) -> Result<Coloring> {
    let mut run = ColoringRun::new(engine.topology().len(), participants, profile);
    let mut tx = Vec::new();
    let mut rx = Vec::new();
    while !run.is_finished() {
        tx.clear();
        run.choose(engine, &mut tx);
        engine.resolve(&tx, 0.0, &mut rx)?;
        run.observe(engine, &tx, &rx)?;
    }
    Ok(run.coloring().expect("schedule finished"))
}

/// The legal colors `{2^i p_start : i < levels} ∪ {2 p_max}`.
pub fn legal_colors(profile: &ConstantProfile, schedule: &ColoringSchedule) -> Vec<f64> {
    let mut colors: Vec<f64> = (0..schedule.levels)
        .map(|i| profile.p_start * 2f64.powi(i as i32))
        .collect();
    colors.push(2.0 * profile.p_max);
    colors
}

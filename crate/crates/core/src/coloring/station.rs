use crate::error::{Error, Result};

use super::constants::ConstantProfile;
use super::schedule::ColoringSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subphase {
    Density,
    Playoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColoringStatus {
    Running,
    /// Finished with `color`; `level` is the doubling count at that time.
    Quit {
        color: f64,
        level: u32,
    },
}

/// One station's StabilizeProbability automaton.
///
/// The caller feeds it one observation per round: whether the station
/// transmitted and whether it decoded a message. A success is either.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoringStation {
    level: u32,
    probability: f64,
    status: ColoringStatus,
    successes: u64,
    density_passed: bool,
    inner: u64,
    subphase: Subphase,
    offset: u64,
}

impl ColoringStation {
    pub fn new(profile: &ConstantProfile, schedule: &ColoringSchedule) -> Self {
        let status = if schedule.levels == 0 {
            ColoringStatus::Quit {
                color: 2.0 * profile.p_max,
                level: 0,
            }
        } else {
            ColoringStatus::Running
        };
        ColoringStation {
            level: 0,
            probability: profile.p_start,
            status,
            successes: 0,
            density_passed: false,
            inner: 0,
            subphase: Subphase::Density,
            offset: 0,
        }
    }

    pub fn status(&self) -> ColoringStatus {
        self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == ColoringStatus::Running
    }

    pub fn color(&self) -> Option<f64> {
        match self.status {
            ColoringStatus::Quit { color, .. } => Some(color),
            ColoringStatus::Running => None,
        }
    }

    /// Current ladder value `p_start * 2^level`.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn subphase(&self) -> Subphase {
        self.subphase
    }

    /// Transmit probability for the coming round.
    pub fn transmit_probability(&self, profile: &ConstantProfile) -> f64 {
        match (self.status, self.subphase) {
            (ColoringStatus::Quit { .. }, _) => 0.0,
            (ColoringStatus::Running, Subphase::Density) => self.probability,
            (ColoringStatus::Running, Subphase::Playoff) => (self.probability * profile.playoff_boost).min(1.0),
        }
    }

    /// Advances one round. Returns the color when the station quits.
    pub fn step(
        &mut self,
        sent: bool,
        received: bool,
        profile: &ConstantProfile,
        schedule: &ColoringSchedule,
    ) -> Result<Option<f64>> {
        if !self.is_running() {
            return Err(Error::ProtocolOrder("coloring step after the station quit".into()));
        }
        if sent || received {
            self.successes += 1;
        }
        self.offset += 1;
        match self.subphase {
            Subphase::Density => {
                if self.offset == schedule.density_len {
                    self.density_passed = self.successes >= schedule.density_pass;
                    self.enter(Subphase::Playoff);
                }
                Ok(None)
            }
            Subphase::Playoff => {
                if self.offset < schedule.playoff_len {
                    return Ok(None);
                }
                let playoff_passed = self.successes >= schedule.playoff_pass;
                self.enter(Subphase::Density);
                if self.density_passed && playoff_passed {
                    return Ok(Some(self.quit(self.probability)));
                }
                self.inner += 1;
                if self.inner == schedule.inner_iterations {
                    self.inner = 0;
                    self.level += 1;
                    self.probability *= 2.0;
                    if self.level >= schedule.levels {
                        return Ok(Some(self.quit(2.0 * profile.p_max)));
                    }
                }
                Ok(None)
            }
        }
    }

    fn enter(&mut self, subphase: Subphase) {
        self.subphase = subphase;
        self.offset = 0;
        self.successes = 0;
    }

    fn quit(&mut self, color: f64) -> f64 {
        self.status = ColoringStatus::Quit {
            color,
            level: self.level,
        };
        color
    }
}

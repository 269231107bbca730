//! Per-station random streams.
//!
//! Every draw is a pure function of `(master seed, lane, station, round)`:
//! station `s` in lane `l` reads ChaCha8 stream `(l << 32) | s` at word
//! offset `2 * round`. Draw order across stations therefore never affects
//! results, and rounds can be skipped freely.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::StationId;

/// Independent purposes that must never share random words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    /// Per-round transmit coin flips.
    Transmit = 0,
    /// One-off identifier sampling.
    Identity = 1,
}

const WORDS_PER_ROUND: u128 = 2;

/// Lazily seeked per-station generators for one lane.
#[derive(Debug, Clone)]
pub struct StationStreams {
    base: ChaCha8Rng,
    lane: Lane,
    streams: Vec<Option<(ChaCha8Rng, u64)>>,
}

impl StationStreams {
    pub fn new(master_seed: u64, lane: Lane, stations: usize) -> Self {
        StationStreams {
            base: ChaCha8Rng::seed_from_u64(master_seed),
            lane,
            streams: vec![None; stations],
        }
    }

    fn stream_for(&mut self, station: StationId, round: u64) -> &mut ChaCha8Rng {
        let slot = &mut self.streams[station];
        match slot {
            Some((_, next)) if *next == round => {}
            _ => {
                let mut rng = match slot.take() {
                    Some((rng, _)) => rng,
                    None => {
                        let mut rng = self.base.clone();
                        rng.set_stream(((self.lane as u64) << 32) | station as u64);
                        rng
                    }
                };
                rng.set_word_pos(u128::from(round) * WORDS_PER_ROUND);
                *slot = Some((rng, round));
            }
        }
        let (rng, next) = slot.as_mut().expect("stream initialised above");
        *next = round + 1;
        rng
    }

    /// The 64-bit word assigned to `(station, round)`.
    pub fn word(&mut self, station: StationId, round: u64) -> u64 {
        self.stream_for(station, round).next_u64()
    }

    /// Uniform in `[0, 1)` for `(station, round)`.
    pub fn uniform(&mut self, station: StationId, round: u64) -> f64 {
        (self.word(station, round) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli trial with success probability `p` (clamped to `[0, 1]`).
    pub fn coin(&mut self, station: StationId, round: u64, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        self.uniform(station, round) < p
    }

    /// Uniform integer in `low..=high` from the stream at `round`.
    pub fn integer_in(&mut self, station: StationId, round: u64, low: u64, high: u64) -> u64 {
        let rng = self.stream_for(station, round);
        // the range draw may consume several words; resync on the next call
        let value = rng.random_range(low..=high);
        self.streams[station] = None;
        value
    }
}

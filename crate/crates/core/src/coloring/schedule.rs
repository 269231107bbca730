use super::constants::{log2_n, ConstantProfile};

/// Global round layout of one StabilizeProbability execution. Every
/// participant follows the same layout, so subphase windows line up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColoringSchedule {
    /// Rounds per DensityTest window.
    pub density_len: u64,
    /// Rounds per Playoff window.
    pub playoff_len: u64,
    /// Inner iterations per probability level.
    pub inner_iterations: u64,
    /// Rounds per probability level.
    pub level_len: u64,
    /// Probability levels, i.e. doublings from `p_start` up to `p_max`.
    pub levels: u32,
    /// Rounds in the whole execution.
    pub total: u64,
    /// Successes needed to pass DensityTest.
    pub density_pass: u64,
    /// Successes needed to pass Playoff.
    pub playoff_pass: u64,
}

/// Doublings of `p_start` needed to reach `p_max`.
pub fn probability_levels(p_start: f64, p_max: f64) -> u32 {
    let mut p = p_start;
    let mut levels = 0;
    while p < p_max && levels < 2048 {
        p *= 2.0;
        levels += 1;
    }
    levels
}

fn rounds(coefficient: f64, log_n: f64) -> u64 {
    let r = (coefficient * log_n).ceil();
    if r >= u64::MAX as f64 {
        u64::MAX
    } else {
        r as u64
    }
}

pub fn schedule_length(profile: &ConstantProfile, n: u64) -> ColoringSchedule {
    let log_n = log2_n(n);
    let density_len = rounds(profile.density_rounds, log_n);
    let playoff_len = rounds(profile.playoff_rounds, log_n);
    let inner_iterations = profile.playoff_iterations;
    let level_len = inner_iterations.saturating_mul(density_len.saturating_add(playoff_len));
    let levels = probability_levels(profile.p_start, profile.p_max);
    ColoringSchedule {
        density_len,
        playoff_len,
        inner_iterations,
        level_len,
        levels,
        total: level_len.saturating_mul(u64::from(levels)),
        density_pass: rounds(profile.density_threshold, log_n),
        playoff_pass: rounds(profile.playoff_threshold, log_n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::constants::ProfileOverrides;
    use crate::coloring::derive_constants;
    use crate::sinr::SinrParams;

    fn profile(n: u64, ov: ProfileOverrides) -> ConstantProfile {
        derive_constants(&SinrParams::default(), 2.0, n, Some(&ov)).unwrap()
    }

    #[test]
    fn window_lengths() {
        let p = profile(
            16,
            ProfileOverrides {
                density_rounds: Some(2.0),
                playoff_rounds: Some(4.0),
                playoff_iterations: Some(3),
                ..Default::default()
            },
        );
        let s = schedule_length(&p, 16);
        assert_eq!((s.density_len, s.playoff_len, s.level_len), (8, 16, 72));
        assert_eq!(s.total, 72 * u64::from(s.levels));
    }

    #[test]
    fn level_count() {
        assert_eq!(probability_levels(1.0 / 1024.0, 1.0), 10);
        assert_eq!(probability_levels(0.001, 0.001), 0);
        assert_eq!(probability_levels(0.5, 1e-9), 0);
        assert_eq!(probability_levels(0.3, 0.61), 2);
    }

    #[test]
    fn two_stations_use_raw_constants() {
        let p = profile(
            2,
            ProfileOverrides {
                density_rounds: Some(2.5),
                playoff_rounds: Some(3.2),
                density_threshold: Some(1.1),
                playoff_iterations: Some(1),
                ..Default::default()
            },
        );
        let s = schedule_length(&p, 2);
        assert_eq!((s.density_len, s.playoff_len, s.density_pass), (3, 4, 2));
    }

    #[test]
    fn theory_schedule_collapses() {
        let p = ConstantProfile::theory(&SinrParams::default(), 2.0, 8).unwrap();
        let s = schedule_length(&p, 8);
        assert!(p.p_max < p.p_start);
        assert_eq!(s.levels, 0);
        assert_eq!(s.total, 0);
    }
}

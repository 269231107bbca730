//! Distributed probability coloring (StabilizeProbability), its constant
//! ledger and the two coloring verifiers.

mod constants;
mod io;
mod run;
mod schedule;
mod station;
mod verify;

pub use constants::{
    default_tuned_overrides, derive_constants, interference_series, log2_n, ConstantProfile, ProfileMode,
    ProfileOverrides, INNER_RING, SHRINK_FACTOR,
};
pub use io::{parse_coloring, read_coloring, write_coloring, write_coloring_string, COLORING_HEADER};
pub use run::{legal_colors, run_coloring, Coloring, ColoringRun};
pub use schedule::{probability_levels, schedule_length, ColoringSchedule};
pub use station::{ColoringStation, ColoringStatus, Subphase};
pub use verify::{
    verify_ball_mass, verify_ball_mass_strict, verify_proximity, BallMass, BallMassReport, ProximityReport,
};

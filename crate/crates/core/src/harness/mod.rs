//! Round engine, traces, analytic fact oracles, calibration and scaling fits.

mod calibrate;
mod config;
mod engine;
mod facts;
mod scaling;
mod trace;

pub use calibrate::{
    calibrate_profile, CalibrationFamily, CalibrationGrid, CalibrationOutcome, CalibrationTarget, PointResult,
};
pub use config::{
    default_budget, flatten_config, run_trial, write_trial, ExperimentConfig, OutputSpec, ProfileSource, ProfileSpec,
    Protocol, RunSpec, TopologySpec, TrialOutput, RUNTIME_INVARIANTS,
};
pub use engine::RoundEngine;
pub use facts::{
    check_bernoulli_slack, check_close_interference, check_fact_notransmit, check_fact_sum, check_on_behalf,
    check_reception_facts, check_reception_instance, fact_notransmit_suite, fact_sum_suite, random_reception_instance,
    FactReport, FactVerdict, Outcome, ReceptionFact, ReceptionInstance, FACT_SLACK, MAX_DRAWS_PER_TRIAL,
};
pub use scaling::{fit_scaling, median, ScalingGroup, ScalingModel, ScalingReport};
pub use trace::{csv_hash, parse_trace_csv, replay_trace, EventKind, ReplayReport, Trace, TraceEvent, TRACE_HEADER};

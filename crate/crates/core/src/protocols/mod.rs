//! Broadcast, wake-up, consensus and leader election built on the round
//! engine and the coloring.

mod broadcast;
mod consensus;
mod message;
mod summary;
mod wakeup;

pub use broadcast::{run_nos_broadcast, run_s_broadcast, PhaseLayout, RunOptions, DEFAULT_PAYLOAD};
pub use consensus::{run_consensus, run_leader_election, value_bits};
pub use message::{MessageKind, ProtocolMessage};
pub use summary::{parse_summary_text, InvariantCheck, RunSummary};
pub use wakeup::{
    adhoc_period, colored_period, deferred_start, run_wakeup_adhoc, run_wakeup_colored, ColoredWakeup, WakeSchedule,
    PERIOD_MARGIN,
};

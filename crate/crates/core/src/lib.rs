//! Round-synchronous simulation of ad hoc wireless networks under the SINR
//! model: topology generation, reception resolution, distributed
//! probability coloring, broadcast, wake-up, consensus and leader election.

pub mod coloring;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod protocols;
pub mod rng;
pub mod sinr;

pub use error::{Error, Result};

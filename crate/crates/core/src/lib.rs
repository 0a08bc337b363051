//! Asynchronous Boolean networks under progressive update schedules:
//! flows, ω-limit sets, the labelled transition graph, and basins of
//! attraction, with a brute-force oracle for cross-checking.

pub mod basins;
pub mod bits;
pub mod error;
pub mod graph;
pub mod io;
pub mod network;
pub mod oracle;
pub mod schedule;

pub use basins::{Attractivity, AttractivityClass, BasinResult, Claim, Inclusion, InclusionInstance, Mode};
pub use bits::{FireSet, State, StateSet};
pub use error::{Error, Result};
pub use graph::AsyncGraph;
pub use network::{Limits, Network};
pub use oracle::{Oracle, OracleBounds, VerificationReport};
pub use schedule::{Event, OrbitTrace, Rational, Schedule};

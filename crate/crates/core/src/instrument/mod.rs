//! Deciding k-synchronizability by instrumentation: a delayed copy of the
//! system explored under the k-synchronous semantics, watched by two
//! monitors.

pub mod check;
pub mod delayed;
pub mod flow;
pub mod monitors;
pub mod search;

pub use check::{check_k_synchronizability, CheckReport, Stats, Verdict};
pub use delayed::{build_delayed_system, DelayedSystem};
pub use flow::{flow_bounds, synchronizability_cap, system_flow_bounds, Bound, FlowBounds};
pub use search::{min_k_search, MinK, MinKReport};

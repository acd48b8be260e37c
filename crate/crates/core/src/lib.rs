//! Checking k-synchronizability of asynchronous message passing systems.
//!
//! A system is a set of processes exchanging messages through unbounded
//! per-process FIFO buffers. It is k-synchronizable when every trace it
//! produces asynchronously can also be produced by a sequence of
//! k-exchanges: at most k sends followed by receives of those sends. For
//! such systems reachability and deadlock questions can be answered on
//! the finite k-synchronous state space.

pub mod async_sem;
pub mod conflict;
pub mod corpus;
pub mod deadlock;
pub mod dsl;
pub mod error;
pub mod explore;
pub mod instrument;
pub mod json;
pub mod model;
pub mod scc;
pub mod sync_sem;
pub mod trace;

pub use async_sem::{async_step, explore_async, is_conflict_preserving_permutation, Execution, IndexedAction, Mid};
pub use conflict::{
    build_conflict_graph, classify, is_k_synchronous_trace, schedule_k_exchanges, CycleReport, CycleVerdict,
};
pub use deadlock::{
    find_empty_buffer_deadlock, find_orphan_message, find_unspecified_reception, DeadlockKind, DeadlockReport,
};
pub use dsl::parse_system;
pub use error::Error;
pub use explore::ExploreOptions;
pub use instrument::{check_k_synchronizability, min_k_search, CheckReport, MinK, Verdict};
pub use model::{Pid, SystemBuilder, SystemSpec};
pub use sync_sem::{explore_sync, explore_sync_traces, k_exchange_successors, ExchangeLabel, SyncConfig};
pub use trace::{check_causal_delivery, min_unmatched, trace_of, Trace};

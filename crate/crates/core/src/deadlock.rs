//! Deadlock classes of the asynchronous semantics, found on the
//! k-synchronous state space. The reductions are sound when the system is
//! k-synchronizable.
//!
//! - empty-buffer deadlock: a matched k-synchronous execution reaching a
//!   configuration where every process is receiving or final and at least
//!   one is receiving;
//! - orphan message: an execution with an unmatched send ending with every
//!   process final;
//! - unspecified reception: a process in a receiving state whose minimal
//!   unmatched messages carry a payload it cannot receive.

use serde_json::{json, Value};

use crate::async_sem::{Execution, IndexedAction};
use crate::error::Error;
use crate::explore::{bfs, ExploreOptions};
use crate::model::{PayloadId, Pid, SystemSpec};
use crate::sync_sem::{flatten, k_exchange_successors, replay_sync, ExchangeLabel, SyncConfig};
use crate::trace::{min_unmatched, trace_of};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeadlockKind {
    EmptyBufferDeadlock,
    OrphanMessage,
    UnspecifiedReception,
}

impl DeadlockKind {
    pub const ALL: [DeadlockKind; 3] = [
        DeadlockKind::EmptyBufferDeadlock,
        DeadlockKind::OrphanMessage,
        DeadlockKind::UnspecifiedReception,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeadlockKind::EmptyBufferDeadlock => "empty-buffer",
            DeadlockKind::OrphanMessage => "orphan",
            DeadlockKind::UnspecifiedReception => "unspecified-reception",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Detail {
    /// Processes stuck in a receiving state.
    Waiting(Vec<Pid>),
    Unmatched(Vec<IndexedAction>),
    /// Payloads at the head of `process`'s buffer that it cannot receive.
    Unspecified {
        process: Pid,
        payloads: Vec<PayloadId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadlockReport {
    pub kind: DeadlockKind,
    pub witness: Execution,
    pub exchanges: Vec<ExchangeLabel>,
    pub detail: Detail,
}

fn is_receiving_or_final(spec: &SystemSpec, c: &SyncConfig, p: Pid) -> bool {
    let d = spec.process(p);
    let s = c.locals[p.index()];
    d.is_final(s) || d.is_receiving(s)
}

fn waiting(spec: &SystemSpec, c: &SyncConfig) -> Vec<Pid> {
    spec.pids()
        .filter(|&p| spec.process(p).is_receiving(c.locals[p.index()]))
        .collect()
}

fn all_final(spec: &SystemSpec, c: &SyncConfig) -> bool {
    spec.pids().all(|p| spec.process(p).is_final(c.locals[p.index()]))
}

fn report(spec: &SystemSpec, kind: DeadlockKind, exchanges: Vec<ExchangeLabel>, end: &SyncConfig) -> DeadlockReport {
    let witness = flatten(&exchanges);
    let detail = match kind {
        DeadlockKind::EmptyBufferDeadlock => Detail::Waiting(waiting(spec, end)),
        DeadlockKind::OrphanMessage => Detail::Unmatched(witness.unmatched_sends()),
        DeadlockKind::UnspecifiedReception => {
            unspecified_at(spec, &witness, end).expect("goal configuration has an unspecified reception")
        }
    };
    DeadlockReport {
        kind,
        witness,
        exchanges,
        detail,
    }
}

/// First receiving process whose minimal unmatched messages, computed on
/// the trace of `e`, include a payload it cannot receive.
fn unspecified_at(spec: &SystemSpec, e: &Execution, end: &SyncConfig) -> Option<Detail> {
    let t = trace_of(e).ok()?;
    for p in waiting(spec, end) {
        let accepts = spec.process(p).receivable(end.locals[p.index()]);
        let mut payloads: Vec<PayloadId> = min_unmatched(&t, p)
            .iter()
            .map(|a| a.action.payload())
            .filter(|v| accepts >> v.index() & 1 == 0)
            .collect();
        payloads.sort();
        payloads.dedup();
        if !payloads.is_empty() {
            return Some(Detail::Unspecified { process: p, payloads });
        }
    }
    None
}

pub fn find_empty_buffer_deadlock(
    spec: &SystemSpec,
    k: usize,
    opts: &ExploreOptions,
) -> Result<Option<DeadlockReport>, Error> {
    let is_goal =
        |c: &SyncConfig| spec.pids().all(|p| is_receiving_or_final(spec, c, p)) && !waiting(spec, c).is_empty();
    let ex = bfs(
        SyncConfig::initial(spec),
        |c| {
            k_exchange_successors(spec, c, k)
                .into_iter()
                .filter(|(l, _)| l.is_matched())
                .collect()
        },
        is_goal,
        |_, _| true,
        false,
        opts,
    )?;
    Ok(ex
        .goal
        .map(|g| report(spec, DeadlockKind::EmptyBufferDeadlock, ex.path_to(g), &ex.nodes[g])))
}

pub fn find_orphan_message(
    spec: &SystemSpec,
    k: usize,
    opts: &ExploreOptions,
) -> Result<Option<DeadlockReport>, Error> {
    let ex = bfs(
        (SyncConfig::initial(spec), false),
        |(c, unmatched)| {
            k_exchange_successors(spec, c, k)
                .into_iter()
                .map(|(l, n)| {
                    let u = *unmatched || !l.is_matched();
                    (l, (n, u))
                })
                .collect()
        },
        |(c, unmatched)| *unmatched && all_final(spec, c),
        |_, _| true,
        false,
        opts,
    )?;
    Ok(ex
        .goal
        .map(|g| report(spec, DeadlockKind::OrphanMessage, ex.path_to(g), &ex.nodes[g].0)))
}

/// Search state: the configuration plus, for each destination, the
/// payloads of its minimal unmatched messages so far. An unmatched send to
/// `q` is minimal exactly when its sender is not yet causally after an
/// unmatched send to `q`, that is neither blocked for `q` before the
/// exchange nor already an unmatched sender to `q` in it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct MinState {
    config: SyncConfig,
    min_payloads: Vec<u128>,
}

fn min_successors(spec: &SystemSpec, k: usize, st: &MinState) -> Vec<(ExchangeLabel, MinState)> {
    k_exchange_successors(spec, &st.config, k)
        .into_iter()
        .map(|(l, config)| {
            let mut min_payloads = st.min_payloads.clone();
            let mut sent_unmatched: Vec<(Pid, Pid)> = Vec::new();
            for s in &l.sends {
                if l.is_received(s.mid) {
                    continue;
                }
                let (p, q) = (s.action.proc(), s.action.dest().expect("send"));
                if !st.config.is_blocked(q, p) && !sent_unmatched.contains(&(p, q)) {
                    min_payloads[q.index()] |= 1u128 << s.action.payload().index();
                }
                sent_unmatched.push((p, q));
            }
            (l, MinState { config, min_payloads })
        })
        .collect()
}

pub fn find_unspecified_reception(
    spec: &SystemSpec,
    k: usize,
    opts: &ExploreOptions,
) -> Result<Option<DeadlockReport>, Error> {
    let init = MinState {
        config: SyncConfig::initial(spec),
        min_payloads: vec![0; spec.num_processes()],
    };
    let is_goal = |st: &MinState| {
        waiting(spec, &st.config).into_iter().any(|p| {
            let accepts = spec.process(p).receivable(st.config.locals[p.index()]);
            st.min_payloads[p.index()] & !accepts != 0
        })
    };
    let ex = bfs(
        init,
        |st| min_successors(spec, k, st),
        is_goal,
        |_, _| true,
        false,
        opts,
    )?;
    Ok(ex.goal.map(|g| {
        report(
            spec,
            DeadlockKind::UnspecifiedReception,
            ex.path_to(g),
            &ex.nodes[g].config,
        )
    }))
}

pub fn find_deadlock(
    spec: &SystemSpec,
    k: usize,
    kind: DeadlockKind,
    opts: &ExploreOptions,
) -> Result<Option<DeadlockReport>, Error> {
    match kind {
        DeadlockKind::EmptyBufferDeadlock => find_empty_buffer_deadlock(spec, k, opts),
        DeadlockKind::OrphanMessage => find_orphan_message(spec, k, opts),
        DeadlockKind::UnspecifiedReception => find_unspecified_reception(spec, k, opts),
    }
}

impl DeadlockReport {
    /// Replay the witness under the k-synchronous semantics and evaluate
    /// the kind's predicate on where it ends.
    pub fn verify(&self, spec: &SystemSpec, k: usize) -> bool {
        let Ok(ends) = replay_sync(spec, k, &self.exchanges) else {
            return false;
        };
        if flatten(&self.exchanges) != self.witness {
            return false;
        }
        ends.iter().any(|c| match self.kind {
            DeadlockKind::EmptyBufferDeadlock => {
                self.witness.is_matched()
                    && spec.pids().all(|p| is_receiving_or_final(spec, c, p))
                    && !waiting(spec, c).is_empty()
            }
            DeadlockKind::OrphanMessage => !self.witness.is_matched() && all_final(spec, c),
            DeadlockKind::UnspecifiedReception => unspecified_at(spec, &self.witness, c).is_some(),
        })
    }

    pub fn to_json(&self, spec: &SystemSpec) -> Value {
        let syms = spec.symbols();
        let detail = match &self.detail {
            Detail::Waiting(ps) => json!({"waiting": ps.iter().map(|&p| spec.process_name(p)).collect::<Vec<_>>()}),
            Detail::Unmatched(sends) => {
                json!({"unmatched": sends.iter().map(|a| crate::json::step_json(&syms, a)).collect::<Vec<_>>()})
            }
            Detail::Unspecified { process, payloads } => json!({
                "process": spec.process_name(*process),
                "payloads": payloads.iter().map(|&v| spec.payload_name(v)).collect::<Vec<_>>(),
            }),
        };
        json!({
            "kind": self.kind.name(),
            "witness": crate::json::execution_to_json(&syms, &self.witness),
            "detail": detail,
        })
    }

    pub fn to_text(&self, spec: &SystemSpec) -> String {
        let detail = match &self.detail {
            Detail::Waiting(ps) => format!(
                "waiting: {}",
                ps.iter().map(|&p| spec.process_name(p)).collect::<Vec<_>>().join(", ")
            ),
            Detail::Unmatched(sends) => format!("unmatched: {}", Execution::new(sends.clone()).render(spec)),
            Detail::Unspecified { process, payloads } => format!(
                "{} cannot receive {{{}}}",
                spec.process_name(*process),
                payloads
                    .iter()
                    .map(|&v| spec.payload_name(v))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        };
        format!(
            "{}\nwitness: {}\n{}\n",
            self.kind.name(),
            self.witness.render(spec),
            detail
        )
    }
}

//! Asynchronous semantics: unbounded per-process FIFO buffers.
//!
//! Exploration here is only a bounded oracle. Both the per-buffer capacity
//! and the execution length are capped so that enumeration terminates.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use crate::error::StepError;
use crate::model::{Action, LocalAction, PayloadId, StateId, SystemSpec};
use crate::trace::{Trace, TraceKey};

/// Message identifier pairing a send with its receive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mid(pub u32);

impl fmt::Display for Mid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A send or receive tagged with its message id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedAction {
    pub action: Action,
    pub mid: Mid,
}

impl IndexedAction {
    pub fn new(action: Action, mid: u32) -> Self {
        IndexedAction { action, mid: Mid(mid) }
    }

    pub fn is_send(&self) -> bool {
        self.action.is_send()
    }

    /// `s ⊸ r`: a send and a receive carrying the same id.
    pub fn matches(&self, other: &IndexedAction) -> bool {
        self.mid == other.mid && self.is_send() != other.is_send()
    }
}

/// A sequence of indexed actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Execution {
    pub steps: Vec<IndexedAction>,
}

impl Execution {
    pub fn new(steps: Vec<IndexedAction>) -> Self {
        Execution { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Renumber message ids 1, 2, ... in order of first occurrence.
    pub fn canonical(&self) -> Execution {
        let mut map = std::collections::HashMap::new();
        let steps = self
            .steps
            .iter()
            .map(|a| {
                let n = map.len() as u32 + 1;
                let m = *map.entry(a.mid).or_insert(n);
                IndexedAction::new(a.action, m)
            })
            .collect();
        Execution { steps }
    }

    /// Sends without a matching receive.
    pub fn unmatched_sends(&self) -> Vec<IndexedAction> {
        let received: HashSet<Mid> = self.steps.iter().filter(|a| !a.is_send()).map(|a| a.mid).collect();
        self.steps
            .iter()
            .filter(|a| a.is_send() && !received.contains(&a.mid))
            .copied()
            .collect()
    }

    pub fn is_matched(&self) -> bool {
        self.unmatched_sends().is_empty()
    }

    pub fn render(&self, spec: &SystemSpec) -> String {
        self.steps
            .iter()
            .map(|a| format!("{}#{}", spec.show_action(&a.action), a.mid))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Local states plus one FIFO buffer per process.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AsyncConfig {
    pub locals: Vec<StateId>,
    pub buffers: Vec<VecDeque<(Mid, PayloadId)>>,
    /// Ids already used by a send; fresh ids must avoid these.
    pub used: BTreeSet<Mid>,
}

impl AsyncConfig {
    pub fn initial(spec: &SystemSpec) -> Self {
        AsyncConfig {
            locals: spec.initial_locals(),
            buffers: vec![VecDeque::new(); spec.num_processes()],
            used: BTreeSet::new(),
        }
    }

    pub fn buffers_empty(&self) -> bool {
        self.buffers.iter().all(VecDeque::is_empty)
    }

    fn key(&self) -> (Vec<StateId>, Vec<Vec<PayloadId>>) {
        (
            self.locals.clone(),
            self.buffers
                .iter()
                .map(|b| b.iter().map(|&(_, v)| v).collect())
                .collect(),
        )
    }
}

/// Fire one indexed action. Processes may be nondeterministic, so every
/// configuration reachable by some matching transition is returned.
pub fn async_step(spec: &SystemSpec, c: &AsyncConfig, a: &IndexedAction) -> Result<Vec<AsyncConfig>, StepError> {
    let p = a.action.proc();
    if p.index() >= spec.num_processes() {
        return Err(StepError::NoTransition(format!("unknown process {}", p)));
    }
    let def = spec.process(p);
    let here = c.locals[p.index()];
    match a.action {
        Action::Send { to, payload, .. } => {
            if c.used.contains(&a.mid) {
                return Err(StepError::StaleMid(a.mid.0));
            }
            let targets: Vec<StateId> = def
                .outgoing(here)
                .filter(|t| t.action == LocalAction::Send { to, payload })
                .map(|t| t.to)
                .collect();
            if targets.is_empty() {
                return Err(StepError::NoTransition(format!(
                    "{} has no {} in state {}",
                    def.name,
                    spec.show_action(&a.action),
                    def.state_name(here)
                )));
            }
            let mut base = c.clone();
            base.buffers[to.index()].push_back((a.mid, payload));
            base.used.insert(a.mid);
            Ok(targets
                .into_iter()
                .map(|l| {
                    let mut n = base.clone();
                    n.locals[p.index()] = l;
                    n
                })
                .collect())
        }
        Action::Recv { payload, .. } => {
            match c.buffers[p.index()].front() {
                Some(&(m, v)) if m == a.mid && v == payload => {}
                Some(&(m, _)) => {
                    return Err(StepError::WrongBufferHead(format!(
                        "head of {} is message {}, not {}",
                        def.name, m, a.mid
                    )))
                }
                None => return Err(StepError::WrongBufferHead(format!("buffer of {} is empty", def.name))),
            }
            let targets: Vec<StateId> = def
                .outgoing(here)
                .filter(|t| t.action == LocalAction::Recv { payload })
                .map(|t| t.to)
                .collect();
            if targets.is_empty() {
                return Err(StepError::NoTransition(format!(
                    "{} cannot receive {} in state {}",
                    def.name,
                    spec.payload_name(payload),
                    def.state_name(here)
                )));
            }
            let mut base = c.clone();
            base.buffers[p.index()].pop_front();
            Ok(targets
                .into_iter()
                .map(|l| {
                    let mut n = base.clone();
                    n.locals[p.index()] = l;
                    n
                })
                .collect())
        }
    }
}

/// Replay from the initial configuration. Returns the distinct final
/// configurations (a singleton for deterministic processes).
pub fn replay(spec: &SystemSpec, e: &Execution) -> Result<Vec<AsyncConfig>, StepError> {
    replay_from(spec, AsyncConfig::initial(spec), &e.steps)
}

pub(crate) fn replay_from(
    spec: &SystemSpec,
    start: AsyncConfig,
    steps: &[IndexedAction],
) -> Result<Vec<AsyncConfig>, StepError> {
    let mut current = vec![start];
    for a in steps {
        let mut next = Vec::new();
        let mut last_err = None;
        for c in &current {
            match async_step(spec, c, a) {
                Ok(cs) => {
                    for n in cs {
                        if !next.contains(&n) {
                            next.push(n);
                        }
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        if next.is_empty() {
            return Err(last_err.expect("no configurations and no error"));
        }
        current = next;
    }
    Ok(current)
}

/// Actions enabled in `c`, each with its successor. Fresh sends use the
/// next sequential id.
fn successors(
    spec: &SystemSpec,
    c: &AsyncConfig,
    buffer_bound: usize,
    next_mid: u32,
) -> Vec<(IndexedAction, AsyncConfig)> {
    let mut out = Vec::new();
    for p in spec.pids() {
        let def = spec.process(p);
        let here = c.locals[p.index()];
        for t in def.outgoing(here) {
            match t.action {
                LocalAction::Send { to, payload } => {
                    if c.buffers[to.index()].len() >= buffer_bound {
                        continue;
                    }
                    let a = IndexedAction::new(t.action.with_actor(p), next_mid);
                    let mut n = c.clone();
                    n.buffers[to.index()].push_back((a.mid, payload));
                    n.used.insert(a.mid);
                    n.locals[p.index()] = t.to;
                    out.push((a, n));
                }
                LocalAction::Recv { payload } => {
                    if let Some(&(m, v)) = c.buffers[p.index()].front() {
                        if v == payload {
                            let a = IndexedAction::new(t.action.with_actor(p), m.0);
                            let mut n = c.clone();
                            n.buffers[p.index()].pop_front();
                            n.locals[p.index()] = t.to;
                            out.push((a, n));
                        }
                    }
                }
            }
        }
    }
    out
}

/// All executions of length at most `depth_bound` in which no buffer ever
/// holds more than `buffer_bound` messages, in BFS order. Message ids are
/// assigned 1, 2, ... in send order, which is the canonical renaming.
pub fn explore_async(spec: &SystemSpec, buffer_bound: usize, depth_bound: usize) -> Vec<Execution> {
    let mut out = vec![Execution::default()];
    let mut emitted: HashSet<Execution> = HashSet::new();
    emitted.insert(Execution::default());
    let mut frontier = vec![(Execution::default(), AsyncConfig::initial(spec), 1u32)];
    for _ in 0..depth_bound {
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for (e, c, mid) in &frontier {
            for (a, n) in successors(spec, c, buffer_bound, *mid) {
                let mut steps = e.steps.clone();
                steps.push(a);
                let ne = Execution::new(steps);
                if !seen.insert((ne.clone(), n.key())) {
                    continue;
                }
                if emitted.insert(ne.clone()) {
                    out.push(ne.clone());
                }
                let m = if a.is_send() { mid + 1 } else { *mid };
                next.push((ne, n, m));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

/// Like [`explore_async`], but keeps one representative execution per
/// distinct trace (up to message-id renaming). Search states are traces
/// paired with local states and buffer contents.
pub fn explore_async_traces(spec: &SystemSpec, buffer_bound: usize, depth_bound: usize) -> Vec<Execution> {
    let root = Execution::default();
    let mut out = vec![root.clone()];
    let mut frontier = vec![(root, AsyncConfig::initial(spec), 1u32)];
    let mut seen_all: HashSet<TraceKey> = HashSet::new();
    seen_all.insert(TraceKey::of_steps(&[]));
    for _ in 0..depth_bound {
        let mut next = Vec::new();
        let mut seen_level: HashSet<(TraceKey, Vec<StateId>, BufferOrigins)> = HashSet::new();
        for (e, c, mid) in &frontier {
            for (a, n) in successors(spec, c, buffer_bound, *mid) {
                let mut steps = e.steps.clone();
                steps.push(a);
                let key = TraceKey::of_steps(&steps);
                if !seen_level.insert((key.clone(), n.locals.clone(), buffer_origins(&steps, &n))) {
                    continue;
                }
                let ne = Execution::new(steps);
                if seen_all.insert(key) {
                    out.push(ne.clone());
                }
                let m = if a.is_send() { mid + 1 } else { *mid };
                next.push((ne, n, m));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

type BufferOrigins = Vec<Vec<(u16, u32)>>;

/// Buffered messages identified by their sender and the send's index in
/// the sender's program order, which is invariant under renaming.
fn buffer_origins(steps: &[IndexedAction], c: &AsyncConfig) -> BufferOrigins {
    let mut count = vec![0u32; c.locals.len()];
    let mut origin = std::collections::HashMap::new();
    for a in steps {
        let p = a.action.proc().index();
        if a.is_send() {
            origin.insert(a.mid, (p as u16, count[p]));
        }
        count[p] += 1;
    }
    c.buffers
        .iter()
        .map(|b| b.iter().map(|(m, _)| origin[m]).collect())
        .collect()
}

/// True iff `e2` is a conflict-preserving permutation of `e`, i.e. both
/// have the same trace.
pub fn is_conflict_preserving_permutation(e: &Execution, e2: &Execution) -> bool {
    if e.steps.len() != e2.steps.len() {
        return false;
    }
    let mut a = e.steps.clone();
    let mut b = e2.steps.clone();
    a.sort();
    b.sort();
    if a != b {
        return false;
    }
    match (Trace::from_execution(e), Trace::from_execution(e2)) {
        (Ok(t1), Ok(t2)) => t1 == t2,
        _ => false,
    }
}

/// Find an execution of `spec` (asynchronous semantics) whose trace is `t`,
/// by depth-first search over interleavings of the per-process sequences.
pub fn linearize(spec: &SystemSpec, t: &Trace) -> Option<Execution> {
    let procs: Vec<Vec<IndexedAction>> = spec.pids().map(|p| t.process_actions(p).to_vec()).collect();
    if t.processes().any(|p| p.index() >= spec.num_processes()) {
        return None;
    }
    let total: usize = procs.iter().map(Vec::len).sum();
    let mut dead: HashSet<(Vec<usize>, AsyncConfig)> = HashSet::new();
    let mut pos = vec![0usize; procs.len()];
    let mut path = Vec::with_capacity(total);
    let start = AsyncConfig::initial(spec);
    if dfs_linearize(spec, &procs, &mut pos, &start, &mut path, total, &mut dead) {
        Some(Execution::new(path))
    } else {
        None
    }
}

fn dfs_linearize(
    spec: &SystemSpec,
    procs: &[Vec<IndexedAction>],
    pos: &mut Vec<usize>,
    c: &AsyncConfig,
    path: &mut Vec<IndexedAction>,
    total: usize,
    dead: &mut HashSet<(Vec<usize>, AsyncConfig)>,
) -> bool {
    if path.len() == total {
        return true;
    }
    let key = (pos.clone(), c.clone());
    if dead.contains(&key) {
        return false;
    }
    // receives first: they never disable anything
    let mut order: Vec<usize> = (0..procs.len()).filter(|&i| pos[i] < procs[i].len()).collect();
    order.sort_by_key(|&i| (procs[i][pos[i]].is_send(), procs[i][pos[i]].mid));
    for i in order {
        let a = procs[i][pos[i]];
        let Ok(nexts) = async_step(spec, c, &a) else { continue };
        for n in nexts {
            pos[i] += 1;
            path.push(a);
            if dfs_linearize(spec, procs, pos, &n, path, total, dead) {
                return true;
            }
            path.pop();
            pos[i] -= 1;
        }
    }
    dead.insert(key);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pid, SystemBuilder};

    fn pc() -> SystemSpec {
        SystemBuilder::new("pc")
            .payload("m")
            .process("prod", "s")
            .send("s", "m", "cons", "s")
            .process("cons", "r")
            .recv("r", "m", "r")
            .build()
            .unwrap()
    }

    fn send(from: u16, to: u16, v: u16, mid: u32) -> IndexedAction {
        IndexedAction::new(
            Action::Send {
                from: Pid(from),
                to: Pid(to),
                payload: PayloadId(v),
            },
            mid,
        )
    }

    fn recv(by: u16, v: u16, mid: u32) -> IndexedAction {
        IndexedAction::new(
            Action::Recv {
                by: Pid(by),
                payload: PayloadId(v),
            },
            mid,
        )
    }

    #[test]
    fn receive_on_empty_buffer() {
        let spec = pc();
        let c = AsyncConfig::initial(&spec);
        let e = async_step(&spec, &c, &recv(1, 0, 1)).unwrap_err();
        assert!(matches!(e, StepError::WrongBufferHead(_)));
    }

    #[test]
    fn matched_pair_round_trip() {
        let spec = pc();
        let cs = replay(&spec, &Execution::new(vec![send(0, 1, 0, 1), recv(1, 0, 1)])).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].buffers_empty());
    }

    #[test]
    fn stale_mid_rejected() {
        let spec = pc();
        let e = Execution::new(vec![send(0, 1, 0, 1), send(0, 1, 0, 1)]);
        assert_eq!(replay(&spec, &e).unwrap_err(), StepError::StaleMid(1));
    }

    #[test]
    fn tiny_enumeration() {
        let spec = pc();
        let got = explore_async(&spec, 1, 2);
        let want = vec![
            Execution::default(),
            Execution::new(vec![send(0, 1, 0, 1)]),
            Execution::new(vec![send(0, 1, 0, 1), recv(1, 0, 1)]),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn buffer_two_depth_three() {
        // hand enumeration: e, s1, s1 s2, s1 r1, s1 s2 s3 (blocked by bound),
        // s1 s2 r1, s1 r1 s2
        let spec = pc();
        let got = explore_async(&spec, 2, 3);
        let want = Execution::new(vec![send(0, 1, 0, 1), send(0, 1, 0, 2), recv(1, 0, 1)]);
        assert!(got.contains(&want));
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn permutations() {
        // p1 = 0, p2 = 1, q = 2
        let e = Execution::new(vec![send(0, 2, 0, 1), send(1, 2, 0, 2), recv(2, 0, 1), recv(2, 0, 2)]);
        let e2 = Execution::new(vec![send(0, 2, 0, 1), recv(2, 0, 1), send(1, 2, 0, 2), recv(2, 0, 2)]);
        assert!(is_conflict_preserving_permutation(&e, &e2));
        assert!(is_conflict_preserving_permutation(&e, &e));
        let a = Execution::new(vec![send(0, 1, 0, 1), send(0, 1, 1, 2)]);
        let b = Execution::new(vec![send(0, 1, 1, 2), send(0, 1, 0, 1)]);
        assert!(!is_conflict_preserving_permutation(&a, &b));
    }
}

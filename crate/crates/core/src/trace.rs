//! Traces: program order plus send/receive matching, and the causal order
//! they generate.

use std::collections::{BTreeMap, HashMap};

use crate::async_sem::{Execution, IndexedAction, Mid};
use crate::error::TraceError;
use crate::model::{Action, Pid};

/// A trace, stored as one action sequence per process. Program order is
/// the order within each sequence; `src` pairs the send and receive that
/// share a message id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    seqs: BTreeMap<Pid, Vec<IndexedAction>>,
}

/// Position of an action: process and index in its program order.
pub type Pos = (Pid, usize);

impl Trace {
    pub fn from_execution(e: &Execution) -> Result<Trace, TraceError> {
        let mut seqs: BTreeMap<Pid, Vec<IndexedAction>> = BTreeMap::new();
        for a in &e.steps {
            seqs.entry(a.action.proc()).or_default().push(*a);
        }
        Trace::from_sequences(seqs)
    }

    /// Build from per-process sequences, checking that message ids pair at
    /// most one send with at most one receive of the same payload at the
    /// send's destination, and that `po ∪ src` is acyclic.
    pub fn from_sequences(seqs: BTreeMap<Pid, Vec<IndexedAction>>) -> Result<Trace, TraceError> {
        let mut sends: HashMap<Mid, Action> = HashMap::new();
        let mut recvs: HashMap<Mid, Action> = HashMap::new();
        for (p, seq) in &seqs {
            for a in seq {
                if a.action.proc() != *p {
                    return Err(TraceError::Malformed(format!(
                        "action of {} listed under {}",
                        a.action.proc(),
                        p
                    )));
                }
                let table = if a.is_send() { &mut sends } else { &mut recvs };
                if table.insert(a.mid, a.action).is_some() {
                    return Err(TraceError::Malformed(format!(
                        "message {} {} more than once",
                        a.mid,
                        if a.is_send() { "sent" } else { "received" }
                    )));
                }
            }
        }
        for (m, r) in &recvs {
            let Some(s) = sends.get(m) else {
                return Err(TraceError::Malformed(format!("receive of message {} has no send", m)));
            };
            if s.dest() != Some(r.proc()) || s.payload() != r.payload() {
                return Err(TraceError::Malformed(format!(
                    "send and receive of message {} disagree",
                    m
                )));
            }
        }
        let t = Trace { seqs };
        if Causality::new(&t).is_none() {
            return Err(TraceError::Malformed("po ∪ src has a cycle".into()));
        }
        Ok(t)
    }

    pub fn processes(&self) -> impl Iterator<Item = Pid> + '_ {
        self.seqs.keys().copied()
    }

    pub fn sequences(&self) -> &BTreeMap<Pid, Vec<IndexedAction>> {
        &self.seqs
    }

    /// Actions of `p` in program order.
    pub fn process_actions(&self, p: Pid) -> &[IndexedAction] {
        self.seqs.get(&p).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.seqs.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All actions with their positions, process by process.
    pub fn positions(&self) -> impl Iterator<Item = (Pos, IndexedAction)> + '_ {
        self.seqs
            .iter()
            .flat_map(|(&p, seq)| seq.iter().enumerate().map(move |(i, a)| ((p, i), *a)))
    }

    pub fn at(&self, (p, i): Pos) -> IndexedAction {
        self.seqs[&p][i]
    }

    pub fn send_pos(&self, m: Mid) -> Option<Pos> {
        self.positions()
            .find(|(_, a)| a.mid == m && a.is_send())
            .map(|(pos, _)| pos)
    }

    pub fn recv_pos(&self, m: Mid) -> Option<Pos> {
        self.positions()
            .find(|(_, a)| a.mid == m && !a.is_send())
            .map(|(pos, _)| pos)
    }

    /// Sends without a matching receive, ordered by message id.
    pub fn unmatched_sends(&self) -> Vec<IndexedAction> {
        let received: std::collections::HashSet<Mid> = self
            .positions()
            .filter(|(_, a)| !a.is_send())
            .map(|(_, a)| a.mid)
            .collect();
        let mut out: Vec<_> = self
            .positions()
            .map(|(_, a)| a)
            .filter(|a| a.is_send() && !received.contains(&a.mid))
            .collect();
        out.sort_by_key(|a| a.mid);
        out
    }

    /// `po(a, b)`: same process and `a` strictly earlier.
    pub fn po(&self, a: &IndexedAction, b: &IndexedAction) -> bool {
        if a.action.proc() != b.action.proc() {
            return false;
        }
        let seq = self.process_actions(a.action.proc());
        let ia = seq.iter().position(|x| x == a);
        let ib = seq.iter().position(|x| x == b);
        matches!((ia, ib), (Some(i), Some(j)) if i < j)
    }

    /// Some interleaving of the per-process sequences consistent with
    /// `po ∪ src` (receives after their sends).
    pub fn linear_extension(&self) -> Execution {
        let c = Causality::new(self).expect("checked at construction");
        Execution::new(c.topo.iter().map(|&i| c.actions[i]).collect())
    }

    pub fn key(&self) -> TraceKey {
        TraceKey::of_trace(self)
    }
}

/// `tr(e)`.
pub fn trace_of(e: &Execution) -> Result<Trace, TraceError> {
    Trace::from_execution(e)
}

/// Dense index over a trace's actions with the strict causal order `⤳`,
/// the transitive closure of `po ∪ src`, precomputed as bit sets.
pub struct Causality {
    pub actions: Vec<IndexedAction>,
    pub pos: Vec<Pos>,
    index: HashMap<Pos, usize>,
    /// `reach[i]` has bit `j` iff `i ⤳ j`.
    reach: Vec<Vec<u64>>,
    topo: Vec<usize>,
}

impl Causality {
    /// `None` if `po ∪ src` is cyclic.
    pub fn new(t: &Trace) -> Option<Causality> {
        let mut actions = Vec::new();
        let mut pos = Vec::new();
        let mut index = HashMap::new();
        for (p, a) in t.positions() {
            index.insert(p, actions.len());
            actions.push(a);
            pos.push(p);
        }
        let n = actions.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut send_of: HashMap<Mid, usize> = HashMap::new();
        for (i, a) in actions.iter().enumerate() {
            if a.is_send() {
                send_of.insert(a.mid, i);
            }
        }
        for i in 0..n {
            let (p, k) = pos[i];
            if let Some(&j) = index.get(&(p, k + 1)) {
                succ[i].push(j);
            }
            if !actions[i].is_send() {
                if let Some(&s) = send_of.get(&actions[i].mid) {
                    succ[s].push(i);
                }
            }
        }
        let mut indeg = vec![0usize; n];
        for s in &succ {
            for &j in s {
                indeg[j] += 1;
            }
        }
        let mut ready: std::collections::BTreeSet<(Mid, bool, usize)> = (0..n)
            .filter(|&i| indeg[i] == 0)
            .map(|i| (actions[i].mid, !actions[i].is_send(), i))
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(x) = ready.pop_first() {
            let i = x.2;
            topo.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert((actions[j].mid, !actions[j].is_send(), j));
                }
            }
        }
        if topo.len() != n {
            return None;
        }
        let words = n.div_ceil(64).max(1);
        let mut reach = vec![vec![0u64; words]; n];
        for &i in topo.iter().rev() {
            let mut row = vec![0u64; words];
            for &j in &succ[i] {
                row[j / 64] |= 1 << (j % 64);
                for (w, r) in row.iter_mut().zip(&reach[j]) {
                    *w |= r;
                }
            }
            reach[i] = row;
        }
        Some(Causality {
            actions,
            pos,
            index,
            reach,
            topo,
        })
    }

    pub fn index_of(&self, p: Pos) -> Option<usize> {
        self.index.get(&p).copied()
    }

    /// `i ⤳ j` (strict).
    pub fn before(&self, i: usize, j: usize) -> bool {
        self.reach[i][j / 64] >> (j % 64) & 1 == 1
    }
}

/// Outcome of the causal-delivery check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CausalDelivery {
    Holds,
    /// `s1 ⤳ s2` share a destination but are not received in that order.
    /// `r1`/`r2` are their receives, when present.
    Violated {
        s1: IndexedAction,
        s2: IndexedAction,
        r1: Option<IndexedAction>,
        r2: Option<IndexedAction>,
    },
}

impl CausalDelivery {
    pub fn holds(&self) -> bool {
        matches!(self, CausalDelivery::Holds)
    }
}

pub fn check_causal_delivery(t: &Trace) -> CausalDelivery {
    let c = Causality::new(t).expect("checked at construction");
    let n = c.actions.len();
    let mut recv_of: HashMap<Mid, usize> = HashMap::new();
    for (i, a) in c.actions.iter().enumerate() {
        if !a.is_send() {
            recv_of.insert(a.mid, i);
        }
    }
    let sends: Vec<usize> = (0..n).filter(|&i| c.actions[i].is_send()).collect();
    for &i in &sends {
        for &j in &sends {
            if i == j || !c.before(i, j) {
                continue;
            }
            let (s1, s2) = (c.actions[i], c.actions[j]);
            if s1.action.dest() != s2.action.dest() {
                continue;
            }
            let r1 = recv_of.get(&s1.mid).copied();
            let r2 = recv_of.get(&s2.mid).copied();
            let bad = match (r1, r2) {
                (_, None) => false,
                (None, Some(_)) => true,
                (Some(a), Some(b)) => c.pos[b].1 < c.pos[a].1,
            };
            if bad {
                return CausalDelivery::Violated {
                    s1,
                    s2,
                    r1: r1.map(|x| c.actions[x]),
                    r2: r2.map(|x| c.actions[x]),
                };
            }
        }
    }
    CausalDelivery::Holds
}

/// Unmatched sends to `p` that are `⤳`-minimal among the unmatched sends
/// to `p`.
pub fn min_unmatched(t: &Trace, p: Pid) -> Vec<IndexedAction> {
    let c = Causality::new(t).expect("checked at construction");
    let unmatched: Vec<Mid> = t.unmatched_sends().iter().map(|a| a.mid).collect();
    let cands: Vec<usize> = (0..c.actions.len())
        .filter(|&i| {
            let a = c.actions[i];
            a.action.dest() == Some(p) && unmatched.contains(&a.mid)
        })
        .collect();
    let mut out: Vec<IndexedAction> = cands
        .iter()
        .filter(|&&j| !cands.iter().any(|&i| i != j && c.before(i, j)))
        .map(|&j| c.actions[j])
        .collect();
    out.sort_by_key(|a| a.mid);
    out
}

/// A trace up to message-id renaming. Receives refer to their send by the
/// sender's process and program-order index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceKey(Vec<(u16, Vec<Tok>)>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Tok {
    Send { to: u16, v: u16, matched: bool },
    Recv { v: u16, from: u16, at: u32 },
}

impl TraceKey {
    pub fn of_trace(t: &Trace) -> TraceKey {
        let steps: Vec<IndexedAction> = t.positions().map(|(_, a)| a).collect();
        TraceKey::of_steps(&steps)
    }

    /// Key of the trace of `steps`; only the per-process order matters.
    pub fn of_steps(steps: &[IndexedAction]) -> TraceKey {
        let mut count: BTreeMap<u16, u32> = BTreeMap::new();
        let mut sent: HashMap<Mid, (u16, u32)> = HashMap::new();
        let mut received = std::collections::HashSet::new();
        for a in steps {
            let p = a.action.proc().0;
            let c = count.entry(p).or_default();
            if a.is_send() {
                sent.insert(a.mid, (p, *c));
            } else {
                received.insert(a.mid);
            }
            *c += 1;
        }
        let mut seqs: BTreeMap<u16, Vec<Tok>> = BTreeMap::new();
        for a in steps {
            let tok = match a.action {
                Action::Send { to, payload, .. } => Tok::Send {
                    to: to.0,
                    v: payload.0,
                    matched: received.contains(&a.mid),
                },
                Action::Recv { payload, .. } => {
                    let (from, at) = sent.get(&a.mid).copied().unwrap_or((u16::MAX, 0));
                    Tok::Recv { v: payload.0, from, at }
                }
            };
            seqs.entry(a.action.proc().0).or_default().push(tok);
        }
        TraceKey(seqs.into_iter().collect())
    }
}

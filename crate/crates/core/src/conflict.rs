//! Conflict graphs of traces and the characterization of k-synchronous
//! traces by their cycles.
//!
//! A trace satisfying causal delivery is k-synchronous iff no RS edge lies
//! inside a strongly connected component and every component has at most
//! k nodes. Any closed walk through a component counts as a cycle here,
//! which is why component size, not elementary-cycle length, is compared
//! with k.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use crate::async_sem::{IndexedAction, Mid};
use crate::error::AnalysisError;
use crate::model::Symbols;
use crate::scc::tarjan;
use crate::sync_sem::ExchangeLabel;
use crate::trace::{check_causal_delivery, Trace};

pub const SS: u8 = 1;
pub const SR: u8 = 2;
pub const RS: u8 = 4;
pub const RR: u8 = 8;

/// A matched send/receive pair, or an unmatched send.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CgNode {
    pub send: IndexedAction,
    pub recv: Option<IndexedAction>,
}

impl CgNode {
    pub fn mid(&self) -> Mid {
        self.send.mid
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    /// Ordered by message id.
    pub nodes: Vec<CgNode>,
    /// Label set of each edge, as a mask over `SS | SR | RS | RR`.
    pub edges: BTreeMap<(usize, usize), u8>,
}

pub fn label_names(mask: u8) -> Vec<&'static str> {
    // alphabetical
    [(RR, "RR"), (RS, "RS"), (SR, "SR"), (SS, "SS")]
        .iter()
        .filter(|(b, _)| mask & b != 0)
        .map(|&(_, n)| n)
        .collect()
}

pub fn build_conflict_graph(t: &Trace) -> ConflictGraph {
    let mut sends: BTreeMap<Mid, IndexedAction> = BTreeMap::new();
    let mut recvs: HashMap<Mid, IndexedAction> = HashMap::new();
    for (_, a) in t.positions() {
        if a.is_send() {
            sends.insert(a.mid, a);
        } else {
            recvs.insert(a.mid, a);
        }
    }
    let nodes: Vec<CgNode> = sends
        .values()
        .map(|&s| CgNode {
            send: s,
            recv: recvs.get(&s.mid).copied(),
        })
        .collect();
    let node_of: HashMap<Mid, usize> = nodes.iter().enumerate().map(|(i, n)| (n.mid(), i)).collect();
    let mut edges = BTreeMap::new();
    for seq in t.sequences().values() {
        for (i, a) in seq.iter().enumerate() {
            for b in &seq[i + 1..] {
                let (u, v) = (node_of[&a.mid], node_of[&b.mid]);
                if u == v {
                    continue;
                }
                let l = match (a.is_send(), b.is_send()) {
                    (true, true) => SS,
                    (true, false) => SR,
                    (false, true) => RS,
                    (false, false) => RR,
                };
                *edges.entry((u, v)).or_insert(0) |= l;
            }
        }
    }
    ConflictGraph { nodes, edges }
}

impl ConflictGraph {
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in self.edges.keys() {
            succ[u].push(v);
        }
        succ
    }

    pub fn to_dot(&self, syms: &Symbols) -> String {
        let mut s = String::from("digraph conflict {\n");
        for n in &self.nodes {
            s.push_str(&format!(
                "  n{} [label=\"{}:{}{}\"];\n",
                n.mid(),
                n.mid(),
                dot_escape(syms.payload(n.send.action.payload())),
                if n.recv.is_none() { "!" } else { "" }
            ));
        }
        for (&(u, v), &l) in &self.edges {
            s.push_str(&format!(
                "  n{} -> n{} [label=\"{}\"{}];\n",
                self.nodes[u].mid(),
                self.nodes[v].mid(),
                label_names(l).join(","),
                if l & RS != 0 { ", style=bold" } else { "" }
            ));
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleVerdict {
    AcyclicOrGoodWithin(usize),
    /// A cycle through an RS edge, as node message ids; the last node
    /// has an edge back to the first.
    BadCycle(Vec<Mid>),
    /// A closed walk through every node of a component larger than k.
    OversizeCycle(Vec<Mid>, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub verdict: CycleVerdict,
    /// Sizes of all components, ascending.
    pub scc_sizes: Vec<usize>,
}

impl CycleReport {
    pub fn is_ok(&self) -> bool {
        matches!(self.verdict, CycleVerdict::AcyclicOrGoodWithin(_))
    }

    pub fn cycle(&self) -> Option<&[Mid]> {
        match &self.verdict {
            CycleVerdict::AcyclicOrGoodWithin(_) => None,
            CycleVerdict::BadCycle(c) | CycleVerdict::OversizeCycle(c, _) => Some(c),
        }
    }
}

impl fmt::Display for CycleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let walk = |c: &[Mid]| c.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" -> ");
        match self {
            CycleVerdict::AcyclicOrGoodWithin(k) => write!(f, "every cycle good and of size at most {}", k),
            CycleVerdict::BadCycle(c) => write!(f, "bad cycle {} -> {}", walk(c), c[0]),
            CycleVerdict::OversizeCycle(c, n) => {
                write!(f, "cycle over {} nodes: {} -> {}", n, walk(c), c[0])
            }
        }
    }
}

/// Shortest path from `from` to `to` using only vertices with `comp == c`.
fn bfs_path(succ: &[Vec<usize>], comp: &[usize], c: usize, from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; succ.len()];
    let mut q = VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = q.pop_front() {
        if u == to {
            break;
        }
        for &v in &succ[u] {
            if comp[v] == c && prev[v] == usize::MAX {
                prev[v] = u;
                q.push_back(v);
            }
        }
    }
    let mut path = vec![to];
    let mut u = to;
    while u != from {
        u = prev[u];
        path.push(u);
    }
    path.reverse();
    path
}

pub fn classify(cg: &ConflictGraph, k: usize) -> CycleReport {
    let succ = cg.successors();
    let (comps, comp) = tarjan(&succ);
    let mut scc_sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
    scc_sizes.sort_unstable();
    let mids = |path: &[usize]| path.iter().map(|&i| cg.nodes[i].mid()).collect::<Vec<_>>();

    let mut best: Option<Vec<usize>> = None;
    for (&(u, v), &l) in &cg.edges {
        if l & RS == 0 || comp[u] != comp[v] {
            continue;
        }
        let mut cyc = vec![u];
        cyc.extend(bfs_path(&succ, &comp, comp[u], v, u));
        cyc.pop();
        if best.as_ref().is_none_or(|b| cyc.len() < b.len()) {
            best = Some(cyc);
        }
    }
    if let Some(c) = best {
        return CycleReport {
            verdict: CycleVerdict::BadCycle(mids(&c)),
            scc_sizes,
        };
    }
    let big = comps
        .iter()
        .filter(|c| c.len() > k)
        .min_by_key(|c| (Reverse(c.len()), c[0]));
    if let Some(c) = big {
        let id = comp[c[0]];
        let mut walk = vec![c[0]];
        for w in c[1..].iter().chain(std::iter::once(&c[0])) {
            let last = *walk.last().unwrap();
            if last == *w {
                continue;
            }
            walk.extend(&bfs_path(&succ, &comp, id, last, *w)[1..]);
        }
        walk.pop();
        return CycleReport {
            verdict: CycleVerdict::OversizeCycle(mids(&walk), c.len()),
            scc_sizes,
        };
    }
    CycleReport {
        verdict: CycleVerdict::AcyclicOrGoodWithin(k),
        scc_sizes,
    }
}

pub fn is_k_synchronous_trace(t: &Trace, k: usize) -> Result<bool, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::ZeroK);
    }
    if !check_causal_delivery(t).holds() {
        return Err(AnalysisError::CausalDeliveryViolated);
    }
    Ok(classify(&build_conflict_graph(t), k).is_ok())
}

/// A k-synchronous execution with trace `t`, one exchange per component
/// of the conflict graph. Components go in topological order; inside one,
/// sends follow program order and the receivers' buffer order, and
/// receives follow program order.
pub fn schedule_k_exchanges(t: &Trace, k: usize) -> Result<Vec<ExchangeLabel>, AnalysisError> {
    if !is_k_synchronous_trace(t, k)? {
        return Err(AnalysisError::NotKSynchronous(k));
    }
    let cg = build_conflict_graph(t);
    let succ = cg.successors();
    let (comps, comp) = tarjan(&succ);

    // topological order of components, smallest message id first
    let nc = comps.len();
    let mut indeg = vec![0usize; nc];
    let mut csucc = vec![Vec::new(); nc];
    for &(u, v) in cg.edges.keys() {
        if comp[u] != comp[v] {
            csucc[comp[u]].push(comp[v]);
            indeg[comp[v]] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<(Mid, usize)>> = (0..nc)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((cg.nodes[comps[c][0]].mid(), c)))
        .collect();
    let mut blocks = Vec::with_capacity(nc);
    while let Some(Reverse((_, c))) = heap.pop() {
        blocks.push(schedule_component(t, &cg, &comps[c]).ok_or(AnalysisError::NotKSynchronous(k))?);
        for &d in &csucc[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                heap.push(Reverse((cg.nodes[comps[d][0]].mid(), d)));
            }
        }
    }
    Ok(blocks)
}

fn schedule_component(t: &Trace, cg: &ConflictGraph, members: &[usize]) -> Option<ExchangeLabel> {
    let nodes: Vec<CgNode> = members.iter().map(|&i| cg.nodes[i]).collect();
    let n = nodes.len();
    let po_index = |a: &IndexedAction| {
        t.process_actions(a.action.proc())
            .iter()
            .position(|x| x == a)
            .expect("action in trace")
    };
    // constraint graph over sends
    let mut before = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (nodes[i], nodes[j]);
            let same_proc = a.send.action.proc() == b.send.action.proc() && po_index(&a.send) < po_index(&b.send);
            let same_dest = a.send.action.dest() == b.send.action.dest()
                && match (a.recv, b.recv) {
                    (Some(ra), Some(rb)) => po_index(&ra) < po_index(&rb),
                    (Some(_), None) => true,
                    _ => false,
                };
            if same_proc || same_dest {
                before[i].push(j);
                indeg[j] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(Mid, usize)>> = (0..n)
        .filter(|&i| indeg[i] == 0)
        .map(|i| Reverse((nodes[i].mid(), i)))
        .collect();
    let mut sends = Vec::with_capacity(n);
    while let Some(Reverse((_, i))) = ready.pop() {
        sends.push(nodes[i].send);
        for &j in &before[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push(Reverse((nodes[j].mid(), j)));
            }
        }
    }
    if sends.len() != n {
        return None;
    }
    // receives: merge the per-process program orders, smallest id first
    let mut per_proc: BTreeMap<_, Vec<IndexedAction>> = BTreeMap::new();
    for r in nodes.iter().filter_map(|x| x.recv) {
        per_proc.entry(r.action.proc()).or_default().push(r);
    }
    let mut queues: Vec<VecDeque<IndexedAction>> = per_proc
        .into_values()
        .map(|mut v| {
            v.sort_by_key(po_index);
            v.into()
        })
        .collect();
    let mut receives = Vec::new();
    loop {
        let pick = queues
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.front().map(|a| (a.mid, i)))
            .min();
        let Some((_, i)) = pick else { break };
        receives.push(queues[i].pop_front().unwrap());
    }
    Some(ExchangeLabel { sends, receives })
}

//! Flow bounds: how many receives a process can perform in a row, and how
//! many sends it can perform in a row before a receive.

use std::fmt;

use crate::model::{LocalAction, ProcessDef, StateId, SystemSpec};
use crate::scc::tarjan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Finite(usize),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<usize> {
        match self {
            Bound::Finite(n) => Some(n),
            Bound::Unbounded => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(n) => write!(f, "{}", n),
            Bound::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowBounds {
    pub receive_bound: Bound,
    pub send_bound: Bound,
}

impl FlowBounds {
    pub fn is_bounded(&self) -> bool {
        self.receive_bound != Bound::Unbounded && self.send_bound != Bound::Unbounded
    }
}

fn reachable(p: &ProcessDef) -> Vec<bool> {
    let mut seen = vec![false; p.states.len()];
    let mut stack = vec![p.initial];
    seen[p.initial.index()] = true;
    while let Some(s) = stack.pop() {
        for t in p.outgoing(s) {
            if !seen[t.to.index()] {
                seen[t.to.index()] = true;
                stack.push(t.to);
            }
        }
    }
    seen
}

/// Longest path (in edges) in the subgraph `succ` restricted to `keep`,
/// ending at a vertex satisfying `end`; `Unbounded` if a cycle among kept
/// vertices exists.
fn longest(succ: &[Vec<usize>], keep: &[bool], end: &[bool]) -> Bound {
    let n = succ.len();
    let sub: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            if keep[u] {
                succ[u].iter().copied().filter(|&v| keep[v]).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let (comps, _) = tarjan(&sub);
    if comps.iter().any(|c| c.len() > 1) || (0..n).any(|u| sub[u].contains(&u)) {
        return Bound::Unbounded;
    }
    // components come out sinks first: a valid order for "longest path
    // from u to an end vertex"
    let mut best: Vec<Option<usize>> = vec![None; n];
    for c in &comps {
        let u = c[0];
        if !keep[u] {
            continue;
        }
        let mut b = if end[u] { Some(0) } else { None };
        for &v in &sub[u] {
            if let Some(x) = best[v] {
                b = Some(b.map_or(x + 1, |y: usize| y.max(x + 1)));
            }
        }
        best[u] = b;
    }
    Bound::Finite(best.iter().flatten().copied().max().unwrap_or(0))
}

pub fn flow_bounds(p: &ProcessDef) -> FlowBounds {
    let n = p.states.len();
    let reach = reachable(p);
    let edges = |want_recv: bool| -> Vec<Vec<usize>> {
        (0..n)
            .map(|s| {
                p.outgoing(StateId(s as u16))
                    .filter(|t| t.action.is_recv() == want_recv)
                    .map(|t| t.to.index())
                    .collect()
            })
            .collect()
    };
    let recv_edges = edges(true);
    let send_edges = edges(false);
    let receive_bound = longest(&recv_edges, &reach, &vec![true; n]);
    // states with a receive enabled, and those that reach one by sends
    let can_recv: Vec<bool> = (0..n)
        .map(|s| {
            p.outgoing(StateId(s as u16))
                .any(|t| matches!(t.action, LocalAction::Recv { .. }))
        })
        .collect();
    let mut to_recv = can_recv.clone();
    loop {
        let mut changed = false;
        for u in 0..n {
            if !to_recv[u] && send_edges[u].iter().any(|&v| to_recv[v]) {
                to_recv[u] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let keep: Vec<bool> = (0..n).map(|u| reach[u] && to_recv[u]).collect();
    let send_bound = longest(&send_edges, &keep, &can_recv);
    FlowBounds {
        receive_bound,
        send_bound,
    }
}

/// Bounds of every process, in process order.
pub fn system_flow_bounds(spec: &SystemSpec) -> Vec<FlowBounds> {
    spec.processes.iter().map(flow_bounds).collect()
}

/// `(k_s + k_r) * |P|`, when every process is flow-bounded.
pub fn synchronizability_cap(spec: &SystemSpec) -> Option<usize> {
    let bounds = system_flow_bounds(spec);
    let ks = bounds
        .iter()
        .map(|b| b.send_bound.finite())
        .try_fold(0, |a, b| b.map(|b| a.max(b)))?;
    let kr = bounds
        .iter()
        .map(|b| b.receive_bound.finite())
        .try_fold(0, |a, b| b.map(|b| a.max(b)))?;
    Some(((ks + kr) * spec.num_processes()).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemBuilder;

    #[test]
    fn pure_producer_has_zero_bounds() {
        let spec = SystemBuilder::new("p")
            .payload("m")
            .process("prod", "s")
            .send("s", "m", "prod", "s")
            .build()
            .unwrap();
        let b = flow_bounds(&spec.processes[0]);
        assert_eq!(b.send_bound, Bound::Finite(0));
        assert_eq!(b.receive_bound, Bound::Finite(0));
    }

    #[test]
    fn chains_and_loops() {
        let spec = SystemBuilder::new("t")
            .payload("m")
            .process("a", "0")
            .send("0", "m", "a", "1")
            .send("1", "m", "a", "2")
            .recv("2", "m", "3")
            .recv("3", "m", "0")
            .process("b", "0")
            .recv("0", "m", "0")
            .send("0", "m", "a", "1")
            .process("c", "0")
            .send("0", "m", "a", "0")
            .recv("0", "m", "1")
            .build()
            .unwrap();
        let b = system_flow_bounds(&spec);
        assert_eq!(
            b[0],
            FlowBounds {
                receive_bound: Bound::Finite(2),
                send_bound: Bound::Finite(2)
            }
        );
        assert_eq!(b[1].receive_bound, Bound::Unbounded);
        assert_eq!(b[1].send_bound, Bound::Finite(0));
        assert_eq!(b[2].send_bound, Bound::Unbounded);
        assert_eq!(synchronizability_cap(&spec), None);
    }
}

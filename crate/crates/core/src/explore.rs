//! Level-synchronous breadth-first exploration with a node cap.
//!
//! Successors of a frontier are computed in parallel when more than one
//! job is allowed, then merged in frontier order, so node numbering and
//! parent pointers do not depend on the thread count.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::NodeCapExceeded;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub node_cap: usize,
    /// Worker threads for successor computation; 0 uses rayon's default
    /// pool and 1 stays on the calling thread.
    pub jobs: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            node_cap: DEFAULT_NODE_CAP,
            jobs: 1,
        }
    }
}

/// Explored part of a transition system.
#[derive(Debug)]
pub struct Explored<S, L> {
    pub nodes: Vec<S>,
    /// BFS tree: the node and label through which each node was first found.
    pub parent: Vec<Option<(usize, L)>>,
    /// Every transition, when requested.
    pub edges: Vec<(usize, L, usize)>,
    /// The goal node that stopped the search, if any.
    pub goal: Option<usize>,
}

impl<S, L: Clone> Explored<S, L> {
    /// Labels along the BFS tree from the initial node to `n`.
    pub fn path_to(&self, mut n: usize) -> Vec<L> {
        let mut out = Vec::new();
        while let Some((p, l)) = &self.parent[n] {
            out.push(l.clone());
            n = *p;
        }
        out.reverse();
        out
    }
}

/// Explore from `init`. Nodes satisfying `is_goal` are not expanded; each
/// is passed to `on_goal`, which returns `true` to stop the search.
pub fn bfs<S, L, F, G, H>(
    init: S,
    succ: F,
    is_goal: G,
    mut on_goal: H,
    keep_edges: bool,
    opts: &ExploreOptions,
) -> Result<Explored<S, L>, NodeCapExceeded>
where
    S: Clone + Eq + Hash + Send + Sync,
    L: Clone + Send,
    F: Fn(&S) -> Vec<(L, S)> + Sync,
    G: Fn(&S) -> bool,
    H: FnMut(&Explored<S, L>, usize) -> bool,
{
    let pool = match opts.jobs {
        1 => None,
        n => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool"),
        ),
    };
    let mut ex = Explored {
        nodes: vec![init.clone()],
        parent: vec![None],
        edges: Vec::new(),
        goal: None,
    };
    let mut index: HashMap<S, usize> = HashMap::new();
    index.insert(init, 0);
    if is_goal(&ex.nodes[0]) && on_goal(&ex, 0) {
        ex.goal = Some(0);
        return Ok(ex);
    }
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let results: Vec<Vec<(L, S)>> = {
            let nodes = &ex.nodes;
            let f = |&i: &usize| succ(&nodes[i]);
            match &pool {
                None => frontier.iter().map(f).collect(),
                Some(pool) => pool.install(|| frontier.par_iter().map(f).collect()),
            }
        };
        let mut next = Vec::new();
        for (&from, succs) in frontier.iter().zip(results) {
            for (label, s) in succs {
                if let Some(&to) = index.get(&s) {
                    if keep_edges {
                        ex.edges.push((from, label, to));
                    }
                    continue;
                }
                let to = ex.nodes.len();
                if to >= opts.node_cap {
                    return Err(NodeCapExceeded { cap: opts.node_cap });
                }
                index.insert(s.clone(), to);
                let goal = is_goal(&s);
                ex.nodes.push(s);
                if keep_edges {
                    ex.edges.push((from, label.clone(), to));
                }
                ex.parent.push(Some((from, label)));
                if goal {
                    if on_goal(&ex, to) {
                        ex.goal = Some(to);
                        return Ok(ex);
                    }
                } else {
                    next.push(to);
                }
            }
        }
        frontier = next;
    }
    Ok(ex)
}

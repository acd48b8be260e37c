//! The k-synchronous semantics: executions made of k-exchanges.
//!
//! An exchange is at most k sends followed by receives of some of those
//! sends. Buffers start empty in every exchange, so a message that is not
//! received in its exchange is never received. The blocked map records,
//! for each destination `q`, the processes that are causally after an
//! unmatched send to `q`; their messages to `q` may no longer be received.
//!
//! Blocked-map update, for each send `s` of the exchange in label order:
//! an unmatched `s` puts `proc(s)` into `B(dest(s))`; a matched `s` puts
//! `dest(s)` into `B(q)` when `proc(s)` was already in `B(q)` before the
//! exchange or `proc(s)` made an earlier unmatched send to `q` in it.

use std::collections::HashSet;

use crate::async_sem::{replay_from, AsyncConfig, Execution, IndexedAction, Mid};
use crate::error::{Error, ModelError, NodeCapExceeded};
use crate::explore::{bfs, ExploreOptions};
use crate::model::{Action, LocalAction, Pid, StateId, SystemSpec};
use crate::trace::TraceKey;

/// Local states plus the blocked-sender map, one bit mask per process.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SyncConfig {
    pub locals: Vec<StateId>,
    pub blocked: Vec<u64>,
}

impl SyncConfig {
    pub fn initial(spec: &SystemSpec) -> Self {
        SyncConfig {
            locals: spec.initial_locals(),
            blocked: vec![0; spec.num_processes()],
        }
    }

    pub fn is_blocked(&self, q: Pid, p: Pid) -> bool {
        self.blocked[q.index()] & p.bit() != 0
    }

    pub fn render(&self, spec: &SystemSpec) -> String {
        let locals: Vec<String> = spec
            .pids()
            .map(|p| {
                format!(
                    "{}={}",
                    spec.process_name(p),
                    spec.process(p).state_name(self.locals[p.index()])
                )
            })
            .collect();
        let blocked: Vec<String> = spec
            .pids()
            .filter(|q| self.blocked[q.index()] != 0)
            .map(|q| {
                let ps: Vec<&str> = spec
                    .pids()
                    .filter(|&p| self.is_blocked(q, p))
                    .map(|p| spec.process_name(p))
                    .collect();
                format!("B({})={{{}}}", spec.process_name(q), ps.join(","))
            })
            .collect();
        if blocked.is_empty() {
            locals.join(" ")
        } else {
            format!("{} {}", locals.join(" "), blocked.join(" "))
        }
    }
}

/// One exchange: sends followed by receives of some of them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ExchangeLabel {
    pub sends: Vec<IndexedAction>,
    pub receives: Vec<IndexedAction>,
}

impl ExchangeLabel {
    pub fn steps(&self) -> Vec<IndexedAction> {
        self.sends.iter().chain(&self.receives).copied().collect()
    }

    pub fn is_matched(&self) -> bool {
        self.sends.len() == self.receives.len()
    }

    pub fn is_received(&self, m: Mid) -> bool {
        self.receives.iter().any(|r| r.mid == m)
    }

    pub fn involves(&self, p: Pid) -> bool {
        self.sends
            .iter()
            .any(|s| s.action.proc() == p || s.action.dest() == Some(p))
    }

    pub fn render(&self, spec: &SystemSpec) -> String {
        Execution::new(self.steps()).render(spec)
    }
}

/// Blocked map after an exchange with the given sends, `matched[i]` telling
/// whether send `i` is received.
pub(crate) fn update_blocked(blocked: &[u64], sends: &[IndexedAction], matched: &[bool]) -> Vec<u64> {
    let mut out = blocked.to_vec();
    // unmatched_to[p]: destinations p sent an unmatched message to so far
    let mut unmatched_to = vec![0u64; blocked.len()];
    for (s, &m) in sends.iter().zip(matched) {
        let p = s.action.proc();
        let d = s.action.dest().expect("send");
        if !m {
            out[d.index()] |= p.bit();
            unmatched_to[p.index()] |= d.bit();
            continue;
        }
        for q in 0..blocked.len() {
            if blocked[q] & p.bit() != 0 || unmatched_to[p.index()] >> q & 1 == 1 {
                out[q] |= d.bit();
            }
        }
    }
    out
}

/// All k-exchanges enabled in `c`, with their targets.
pub fn k_exchange_successors(spec: &SystemSpec, c: &SyncConfig, k: usize) -> Vec<(ExchangeLabel, SyncConfig)> {
    exchange_successors(spec, c, k, None)
}

/// As [`k_exchange_successors`]. With `isolate = Some(x)`, a send from or
/// to `x` must be the only send of its exchange and must be received.
pub fn exchange_successors(
    spec: &SystemSpec,
    c: &SyncConfig,
    k: usize,
    isolate: Option<Pid>,
) -> Vec<(ExchangeLabel, SyncConfig)> {
    let mut en = Enumerator {
        spec,
        c,
        k,
        isolate,
        locals: c.locals.clone(),
        sends: Vec::new(),
        out: Vec::new(),
        seen: HashSet::new(),
    };
    en.sends_from();
    en.out
}

struct Enumerator<'a> {
    spec: &'a SystemSpec,
    c: &'a SyncConfig,
    k: usize,
    isolate: Option<Pid>,
    locals: Vec<StateId>,
    sends: Vec<Action>,
    out: Vec<(ExchangeLabel, SyncConfig)>,
    seen: HashSet<(TraceKey, SyncConfig)>,
}

impl Enumerator<'_> {
    fn touches_isolated(&self, a: &Action) -> bool {
        match self.isolate {
            Some(x) => a.proc() == x || a.dest() == Some(x),
            None => false,
        }
    }

    fn sends_from(&mut self) {
        if !self.sends.is_empty() {
            self.receives();
        }
        if self.sends.len() >= self.k {
            return;
        }
        if let Some(first) = self.sends.first() {
            if self.touches_isolated(first) {
                return;
            }
        }
        let spec = self.spec;
        for p in spec.pids() {
            let here = self.locals[p.index()];
            for t in spec.process(p).outgoing(here) {
                let LocalAction::Send { to, .. } = t.action else {
                    continue;
                };
                let a = t.action.with_actor(p);
                if let Some(last) = self.sends.last() {
                    // adjacent independent sends only in process order
                    if last.proc() != p && last.dest() != Some(to) && p < last.proc() {
                        continue;
                    }
                }
                if !self.sends.is_empty() && self.touches_isolated(&a) {
                    continue;
                }
                self.sends.push(a);
                self.locals[p.index()] = t.to;
                self.sends_from();
                self.locals[p.index()] = here;
                self.sends.pop();
            }
        }
    }

    /// Every way each destination can consume a prefix of its messages.
    fn receives(&mut self) {
        let spec = self.spec;
        let n = spec.num_processes();
        let mut per_dest: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.sends.iter().enumerate() {
            per_dest[s.dest().expect("send").index()].push(i);
        }
        // for each destination: (messages received, resulting local state)
        let mut options: Vec<(Pid, Vec<(usize, StateId)>)> = Vec::new();
        for q in spec.pids() {
            let buf = &per_dest[q.index()];
            if buf.is_empty() {
                continue;
            }
            let def = spec.process(q);
            let mut opts = vec![(0usize, self.locals[q.index()])];
            let mut i = 0;
            while i < opts.len() {
                let (len, st) = opts[i];
                i += 1;
                if len == buf.len() {
                    continue;
                }
                let s = self.sends[buf[len]];
                if self.c.is_blocked(q, s.proc()) {
                    continue;
                }
                for t in def.outgoing(st) {
                    if t.action == (LocalAction::Recv { payload: s.payload() }) && !opts.contains(&(len + 1, t.to)) {
                        opts.push((len + 1, t.to));
                    }
                }
            }
            options.push((q, opts));
        }
        let mut choice = vec![0usize; options.len()];
        loop {
            self.emit(&per_dest, &options, &choice);
            let mut j = 0;
            loop {
                if j == choice.len() {
                    return;
                }
                choice[j] += 1;
                if choice[j] < options[j].1.len() {
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
        }
    }

    fn emit(&mut self, per_dest: &[Vec<usize>], options: &[(Pid, Vec<(usize, StateId)>)], choice: &[usize]) {
        let sends: Vec<IndexedAction> = self
            .sends
            .iter()
            .enumerate()
            .map(|(i, a)| IndexedAction::new(*a, i as u32 + 1))
            .collect();
        let mut matched = vec![false; sends.len()];
        let mut locals = self.locals.clone();
        let mut receives = Vec::new();
        for (&(q, ref opts), &ch) in options.iter().zip(choice) {
            let (len, st) = opts[ch];
            locals[q.index()] = st;
            for &i in &per_dest[q.index()][..len] {
                matched[i] = true;
                receives.push(IndexedAction::new(
                    Action::Recv {
                        by: q,
                        payload: sends[i].action.payload(),
                    },
                    i as u32 + 1,
                ));
            }
        }
        if self.isolate.is_some() && sends.len() == 1 && !matched[0] && self.touches_isolated(&sends[0].action) {
            return;
        }
        let target = SyncConfig {
            locals,
            blocked: update_blocked(&self.c.blocked, &sends, &matched),
        };
        let label = ExchangeLabel { sends, receives };
        let key = TraceKey::of_steps(&label.steps());
        if self.seen.insert((key, target.clone())) {
            self.out.push((label, target));
        }
    }
}

/// Fire a given exchange from `c`: replay it asynchronously from empty
/// buffers, check the blocked map, and update it. Returns every possible
/// target (several when processes are nondeterministic).
pub fn apply_exchange(
    spec: &SystemSpec,
    c: &SyncConfig,
    label: &ExchangeLabel,
    k: usize,
) -> Result<Vec<SyncConfig>, String> {
    if label.sends.len() > k {
        return Err(format!("{} sends exceed k = {}", label.sends.len(), k));
    }
    if !label.sends.iter().all(|a| a.is_send()) || label.receives.iter().any(|a| a.is_send()) {
        return Err("exchange must be sends followed by receives".into());
    }
    let start = AsyncConfig {
        locals: c.locals.clone(),
        buffers: vec![Default::default(); spec.num_processes()],
        used: Default::default(),
    };
    let ends = replay_from(spec, start, &label.steps()).map_err(|e| e.to_string())?;
    let mut matched = vec![false; label.sends.len()];
    for r in &label.receives {
        let i = label
            .sends
            .iter()
            .position(|s| s.mid == r.mid)
            .ok_or_else(|| format!("receive of message {} without a send", r.mid))?;
        let s = label.sends[i].action;
        if c.is_blocked(r.action.proc(), s.proc()) {
            return Err(format!(
                "{} is blocked for {}",
                spec.process_name(s.proc()),
                spec.process_name(r.action.proc())
            ));
        }
        matched[i] = true;
    }
    let blocked = update_blocked(&c.blocked, &label.sends, &matched);
    let mut out: Vec<SyncConfig> = Vec::new();
    for e in ends {
        let n = SyncConfig {
            locals: e.locals,
            blocked: blocked.clone(),
        };
        if !out.contains(&n) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Replay a sequence of exchanges from the initial configuration.
pub fn replay_sync(spec: &SystemSpec, k: usize, labels: &[ExchangeLabel]) -> Result<Vec<SyncConfig>, String> {
    let mut current = vec![SyncConfig::initial(spec)];
    for (i, l) in labels.iter().enumerate() {
        let mut next = Vec::new();
        let mut err = None;
        for c in &current {
            match apply_exchange(spec, c, l, k) {
                Ok(ns) => {
                    for n in ns {
                        if !next.contains(&n) {
                            next.push(n);
                        }
                    }
                }
                Err(e) => err = Some(e),
            }
        }
        if next.is_empty() {
            return Err(format!("exchange {}: {}", i + 1, err.unwrap_or_default()));
        }
        current = next;
    }
    Ok(current)
}

/// Concatenate exchanges into one execution with globally fresh message
/// ids, numbered in send order.
pub fn flatten(labels: &[ExchangeLabel]) -> Execution {
    let mut steps = Vec::new();
    let mut next = 1u32;
    for l in labels {
        let mut map = std::collections::HashMap::new();
        for s in &l.sends {
            map.insert(s.mid, next);
            steps.push(IndexedAction::new(s.action, next));
            next += 1;
        }
        for r in &l.receives {
            let m = map.get(&r.mid).copied().unwrap_or(u32::MAX);
            steps.push(IndexedAction::new(r.action, m));
        }
    }
    Execution::new(steps)
}

/// Reachable configurations under the k-synchronous semantics, with every
/// exchange between them.
#[derive(Clone, Debug)]
pub struct ReachGraph {
    pub k: usize,
    pub configs: Vec<SyncConfig>,
    pub edges: Vec<(usize, ExchangeLabel, usize)>,
    pub(crate) parent: Vec<Option<(usize, ExchangeLabel)>>,
}

impl ReachGraph {
    /// Exchanges leading from the initial configuration to `n` (shortest).
    pub fn path_to(&self, mut n: usize) -> Vec<ExchangeLabel> {
        let mut out = Vec::new();
        while let Some((p, l)) = &self.parent[n] {
            out.push(l.clone());
            n = *p;
        }
        out.reverse();
        out
    }

    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.configs.len()];
        for (i, (from, _, _)) in self.edges.iter().enumerate() {
            out[*from].push(i);
        }
        out
    }

    pub fn to_json(&self, spec: &SystemSpec) -> serde_json::Value {
        use serde_json::json;
        let syms = spec.symbols();
        let configs: Vec<_> = self
            .configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let locals: serde_json::Map<String, serde_json::Value> = spec
                    .pids()
                    .map(|p| {
                        (
                            spec.process_name(p).to_string(),
                            json!(spec.process(p).state_name(c.locals[p.index()])),
                        )
                    })
                    .collect();
                let blocked: serde_json::Map<String, serde_json::Value> = spec
                    .pids()
                    .filter(|q| c.blocked[q.index()] != 0)
                    .map(|q| {
                        let ps: Vec<&str> = spec
                            .pids()
                            .filter(|&p| c.is_blocked(q, p))
                            .map(|p| spec.process_name(p))
                            .collect();
                        (spec.process_name(q).to_string(), json!(ps))
                    })
                    .collect();
                json!({"id": i, "locals": locals, "blocked": blocked})
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|(f, l, t)| {
                json!({
                    "from": f,
                    "to": t,
                    "sends": l.sends.iter().map(|a| crate::json::step_json(&syms, a)).collect::<Vec<_>>(),
                    "receives": l.receives.iter().map(|a| crate::json::step_json(&syms, a)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({"k": self.k, "configs": configs, "edges": edges})
    }

    pub fn to_dot(&self, spec: &SystemSpec) -> String {
        let mut s = String::from("digraph reach {\n  node [shape=box];\n");
        for (i, c) in self.configs.iter().enumerate() {
            s.push_str(&format!(
                "  c{} [label=\"{}\"];\n",
                i,
                crate::conflict::dot_escape(&c.render(spec))
            ));
        }
        for (f, l, t) in &self.edges {
            s.push_str(&format!(
                "  c{} -> c{} [label=\"{}\"];\n",
                f,
                t,
                crate::conflict::dot_escape(&l.render(spec))
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// The full reachability graph under the k-synchronous semantics.
pub fn explore_sync(spec: &SystemSpec, k: usize, opts: &ExploreOptions) -> Result<ReachGraph, NodeCapExceeded> {
    let ex = bfs(
        SyncConfig::initial(spec),
        |c| k_exchange_successors(spec, c, k),
        |_| false,
        |_, _| false,
        true,
        opts,
    )?;
    Ok(ReachGraph {
        k,
        configs: ex.nodes,
        edges: ex.edges,
        parent: ex.parent,
    })
}

/// One execution per distinct k-synchronous trace with at most
/// `max_actions` actions. Search states are traces paired with
/// configurations, since the future of a run depends only on the latter.
pub fn explore_sync_traces(spec: &SystemSpec, k: usize, max_actions: usize) -> Vec<Execution> {
    let mut out = vec![Execution::default()];
    let mut seen_keys: HashSet<TraceKey> = HashSet::new();
    seen_keys.insert(TraceKey::of_steps(&[]));
    let mut seen: HashSet<(TraceKey, SyncConfig)> = HashSet::new();
    let mut stack = vec![(Vec::<ExchangeLabel>::new(), 0usize, SyncConfig::initial(spec))];
    while let Some((labels, len, c)) = stack.pop() {
        for (l, n) in k_exchange_successors(spec, &c, k) {
            let nlen = len + l.sends.len() + l.receives.len();
            if nlen > max_actions {
                continue;
            }
            let mut nl = labels.clone();
            nl.push(l);
            let e = flatten(&nl);
            let key = TraceKey::of_steps(&e.steps);
            if !seen.insert((key.clone(), n.clone())) {
                continue;
            }
            if seen_keys.insert(key) {
                out.push(e);
            }
            stack.push((nl, nlen, n));
        }
    }
    out
}

/// Is local state `l` of process `p` reachable under the k-synchronous
/// semantics? Returns a shortest witness.
pub fn sync_reach_local(
    spec: &SystemSpec,
    k: usize,
    p: &str,
    l: &str,
    opts: &ExploreOptions,
) -> Result<Option<Vec<ExchangeLabel>>, Error> {
    let pid = spec.pid(p).ok_or_else(|| ModelError::UnknownProcess(p.to_string()))?;
    let sid = spec.process(pid).state_id(l).ok_or_else(|| ModelError::UnknownState {
        process: p.to_string(),
        state: l.to_string(),
    })?;
    let ex = bfs(
        SyncConfig::initial(spec),
        |c| k_exchange_successors(spec, c, k),
        |c| c.locals[pid.index()] == sid,
        |_, _| true,
        false,
        opts,
    )?;
    Ok(ex.goal.map(|g| ex.path_to(g)))
}

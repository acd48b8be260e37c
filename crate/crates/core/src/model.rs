//! Static description of a message passing system.
//!
//! A system is a family of finite labeled transition systems, one per
//! process, whose labels are send and receive actions. Processes, local
//! states and payloads are interned: the rest of the crate works with the
//! small index newtypes below and only goes back to names for reporting.

use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;

/// Name reserved for the relay process of the delayed system.
pub const RESERVED_PROCESS: &str = "pi";

/// Upper bound on processes; blocked-sender sets are stored as `u64` masks.
pub const MAX_PROCESSES: usize = 64;

/// Index of a process in its [`SystemSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pid(pub u16);

/// Index of a payload in the declared payload alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PayloadId(pub u16);

/// Index of a local state within one process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u16);

impl Pid {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn bit(self) -> u64 {
        1u64 << self.0
    }
}

impl PayloadId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A send or receive action. `proc` is the executing process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Send { from: Pid, to: Pid, payload: PayloadId },
    Recv { by: Pid, payload: PayloadId },
}

impl Action {
    pub fn proc(&self) -> Pid {
        match *self {
            Action::Send { from, .. } => from,
            Action::Recv { by, .. } => by,
        }
    }

    /// Destination of a send; `None` for receives.
    pub fn dest(&self) -> Option<Pid> {
        match *self {
            Action::Send { to, .. } => Some(to),
            Action::Recv { .. } => None,
        }
    }

    pub fn payload(&self) -> PayloadId {
        match *self {
            Action::Send { payload, .. } | Action::Recv { payload, .. } => payload,
        }
    }

    pub fn is_send(&self) -> bool {
        matches!(self, Action::Send { .. })
    }
}

/// Transition label from the point of view of its owning process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalAction {
    Send { to: Pid, payload: PayloadId },
    Recv { payload: PayloadId },
}

impl LocalAction {
    pub fn with_actor(self, actor: Pid) -> Action {
        match self {
            LocalAction::Send { to, payload } => Action::Send {
                from: actor,
                to,
                payload,
            },
            LocalAction::Recv { payload } => Action::Recv { by: actor, payload },
        }
    }

    pub fn is_recv(&self) -> bool {
        matches!(self, LocalAction::Recv { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub action: LocalAction,
    pub to: StateId,
}

/// One process: its local states, initial state and transition relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDef {
    pub name: String,
    pub states: Vec<String>,
    pub initial: StateId,
    pub transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

impl ProcessDef {
    pub(crate) fn new(name: String, states: Vec<String>, initial: StateId, transitions: Vec<Transition>) -> Self {
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from.index()].push(i);
        }
        ProcessDef {
            name,
            states,
            initial,
            transitions,
            outgoing,
        }
    }

    /// Transitions leaving `state`, in declaration order.
    pub fn outgoing(&self, state: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[state.index()].iter().map(move |&i| &self.transitions[i])
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(|i| StateId(i as u16))
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.index()]
    }

    /// No outgoing transitions.
    pub fn is_final(&self, state: StateId) -> bool {
        self.outgoing[state.index()].is_empty()
    }

    /// At least one outgoing transition and all of them are receives.
    pub fn is_receiving(&self, state: StateId) -> bool {
        !self.is_final(state) && self.outgoing(state).all(|t| t.action.is_recv())
    }

    /// Payloads receivable in `state`, as a bit set over payload indices.
    pub fn receivable(&self, state: StateId) -> u128 {
        self.outgoing(state)
            .filter_map(|t| match t.action {
                LocalAction::Recv { payload } => Some(1u128 << payload.0),
                _ => None,
            })
            .fold(0, |a, b| a | b)
    }
}

/// A complete, validated system description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSpec {
    pub name: String,
    pub payloads: Vec<String>,
    pub processes: Vec<ProcessDef>,
}

impl SystemSpec {
    pub fn process(&self, p: Pid) -> &ProcessDef {
        &self.processes[p.index()]
    }

    pub fn pids(&self) -> impl Iterator<Item = Pid> + '_ {
        (0..self.processes.len()).map(|i| Pid(i as u16))
    }

    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn pid(&self, name: &str) -> Option<Pid> {
        self.processes
            .iter()
            .position(|p| p.name == name)
            .map(|i| Pid(i as u16))
    }

    pub fn payload_id(&self, name: &str) -> Option<PayloadId> {
        self.payloads
            .iter()
            .position(|p| p == name)
            .map(|i| PayloadId(i as u16))
    }

    pub fn process_name(&self, p: Pid) -> &str {
        &self.processes[p.index()].name
    }

    pub fn payload_name(&self, v: PayloadId) -> &str {
        &self.payloads[v.index()]
    }

    pub fn initial_locals(&self) -> Vec<StateId> {
        self.processes.iter().map(|p| p.initial).collect()
    }

    /// Symbol table used when (de)serializing executions of this system.
    pub fn symbols(&self) -> Symbols {
        Symbols {
            processes: self.processes.iter().map(|p| p.name.clone()).collect(),
            payloads: self.payloads.clone(),
        }
    }

    /// Transitions of `p` leaving local state `l`, as global actions.
    pub fn enabled_actions(&self, p: &str, l: &str) -> Result<Vec<(Action, String)>, ModelError> {
        let pid = self.pid(p).ok_or_else(|| ModelError::UnknownProcess(p.to_string()))?;
        let def = self.process(pid);
        let sid = def.state_id(l).ok_or_else(|| ModelError::UnknownState {
            process: p.to_string(),
            state: l.to_string(),
        })?;
        Ok(def
            .outgoing(sid)
            .map(|t| (t.action.with_actor(pid), def.state_name(t.to).to_string()))
            .collect())
    }

    /// Processes that have a send transition to themselves.
    pub fn self_senders(&self) -> Vec<Pid> {
        self.pids()
            .filter(|&p| {
                self.process(p)
                    .transitions
                    .iter()
                    .any(|t| matches!(t.action, LocalAction::Send { to, .. } if to == p))
            })
            .collect()
    }

    /// Human-readable rendering of an action.
    pub fn show_action(&self, a: &Action) -> String {
        match *a {
            Action::Send { from, to, payload } => format!(
                "send({},{},{})",
                self.process_name(from),
                self.process_name(to),
                self.payload_name(payload)
            ),
            Action::Recv { by, payload } => format!("rec({},{})", self.process_name(by), self.payload_name(payload)),
        }
    }
}

/// Process and payload names, indexed by [`Pid`] and [`PayloadId`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub processes: Vec<String>,
    pub payloads: Vec<String>,
}

impl Symbols {
    pub fn intern_process(&mut self, name: &str) -> Pid {
        intern(&mut self.processes, name, |i| Pid(i as u16))
    }

    pub fn intern_payload(&mut self, name: &str) -> PayloadId {
        intern(&mut self.payloads, name, |i| PayloadId(i as u16))
    }

    pub fn process(&self, p: Pid) -> &str {
        self.processes.get(p.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn payload(&self, v: PayloadId) -> &str {
        self.payloads.get(v.index()).map(String::as_str).unwrap_or("?")
    }
}

fn intern<T>(table: &mut Vec<String>, name: &str, mk: impl Fn(usize) -> T) -> T {
    match table.iter().position(|n| n == name) {
        Some(i) => mk(i),
        None => {
            table.push(name.to_string());
            mk(table.len() - 1)
        }
    }
}

/// Programmatic construction of a [`SystemSpec`] by name, with the same
/// validation the DSL parser applies.
#[derive(Debug, Default)]
pub struct SystemBuilder {
    name: String,
    payloads: Vec<String>,
    processes: Vec<ProcBuild>,
}

#[derive(Debug)]
struct ProcBuild {
    name: String,
    initial: String,
    states: Vec<String>,
    transitions: Vec<(String, RawAction, String)>,
}

#[derive(Debug, Clone)]
enum RawAction {
    Send { to: String, payload: String },
    Recv { payload: String },
}

impl SystemBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        SystemBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn payload(mut self, v: impl Into<String>) -> Self {
        self.payloads.push(v.into());
        self
    }

    pub fn payloads<I, S>(mut self, vs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.payloads.extend(vs.into_iter().map(Into::into));
        self
    }

    /// Start a new process; subsequent `state`/`send`/`recv` calls apply to it.
    pub fn process(mut self, name: impl Into<String>, initial: impl Into<String>) -> Self {
        let initial = initial.into();
        self.processes.push(ProcBuild {
            name: name.into(),
            states: vec![initial.clone()],
            initial,
            transitions: Vec::new(),
        });
        self
    }

    pub fn state(mut self, s: impl Into<String>) -> Self {
        let s = s.into();
        let p = self.processes.last_mut().expect("state() before process()");
        if !p.states.contains(&s) {
            p.states.push(s);
        }
        self
    }

    pub fn send(
        self,
        from_state: impl Into<String>,
        payload: impl Into<String>,
        to: impl Into<String>,
        goto: impl Into<String>,
    ) -> Self {
        self.transition(
            from_state.into(),
            RawAction::Send {
                to: to.into(),
                payload: payload.into(),
            },
            goto.into(),
        )
    }

    pub fn recv(self, from_state: impl Into<String>, payload: impl Into<String>, goto: impl Into<String>) -> Self {
        self.transition(
            from_state.into(),
            RawAction::Recv {
                payload: payload.into(),
            },
            goto.into(),
        )
    }

    fn transition(mut self, from: String, a: RawAction, to: String) -> Self {
        let p = self.processes.last_mut().expect("transition before process()");
        for s in [&from, &to] {
            if !p.states.contains(s) {
                p.states.push(s.clone());
            }
        }
        p.transitions.push((from, a, to));
        self
    }

    pub fn build(self) -> Result<SystemSpec, ModelError> {
        let mut seen = HashMap::new();
        for (i, p) in self.processes.iter().enumerate() {
            if p.name == RESERVED_PROCESS {
                return Err(ModelError::ReservedName(p.name.clone()));
            }
            if seen.insert(p.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateProcess(p.name.clone()));
            }
        }
        if self.processes.len() > MAX_PROCESSES {
            return Err(ModelError::TooManyProcesses(self.processes.len()));
        }
        let mut payload_ix = HashMap::new();
        for (i, v) in self.payloads.iter().enumerate() {
            if payload_ix.insert(v.clone(), i).is_some() {
                return Err(ModelError::DuplicatePayload(v.clone()));
            }
        }
        if self.payloads.len() > 128 {
            return Err(ModelError::TooManyPayloads(self.payloads.len()));
        }
        let payload = |v: &str| {
            payload_ix
                .get(v)
                .map(|&i| PayloadId(i as u16))
                .ok_or_else(|| ModelError::UndeclaredPayload(v.to_string()))
        };
        let mut processes = Vec::with_capacity(self.processes.len());
        for p in &self.processes {
            let state = |s: &str| {
                p.states
                    .iter()
                    .position(|x| x == s)
                    .map(|i| StateId(i as u16))
                    .ok_or_else(|| ModelError::UnknownState {
                        process: p.name.clone(),
                        state: s.to_string(),
                    })
            };
            let mut ts = Vec::with_capacity(p.transitions.len());
            for (from, a, to) in &p.transitions {
                let action = match a {
                    RawAction::Send { to: dest, payload: v } => LocalAction::Send {
                        to: seen
                            .get(dest)
                            .map(|&i| Pid(i as u16))
                            .ok_or_else(|| ModelError::UnknownProcess(dest.clone()))?,
                        payload: payload(v)?,
                    },
                    RawAction::Recv { payload: v } => LocalAction::Recv { payload: payload(v)? },
                };
                ts.push(Transition {
                    from: state(from)?,
                    action,
                    to: state(to)?,
                });
            }
            processes.push(ProcessDef::new(
                p.name.clone(),
                p.states.clone(),
                state(&p.initial)?,
                ts,
            ));
        }
        Ok(SystemSpec {
            name: self.name,
            payloads: self.payloads,
            processes,
        })
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn producer_consumer() -> SystemSpec {
        SystemBuilder::new("pc")
            .payload("m")
            .process("prod", "s")
            .send("s", "m", "cons", "s")
            .process("cons", "r")
            .recv("r", "m", "r")
            .build()
            .unwrap()
    }

    #[test]
    fn enabled_actions_of_producer() {
        let spec = producer_consumer();
        let acts = spec.enabled_actions("prod", "s").unwrap();
        assert_eq!(acts.len(), 1);
        assert!(acts[0].0.is_send());
        assert_eq!(acts[0].1, "s");
    }

    #[test]
    fn final_state_has_no_actions() {
        let spec = SystemBuilder::new("t")
            .payload("m")
            .process("a", "x")
            .send("x", "m", "a", "done")
            .build()
            .unwrap();
        assert!(spec.enabled_actions("a", "done").unwrap().is_empty());
        let a = spec.process(Pid(0));
        assert!(a.is_final(a.state_id("done").unwrap()));
        assert!(!a.is_receiving(a.state_id("done").unwrap()));
    }

    #[test]
    fn unknown_process_or_state() {
        let spec = producer_consumer();
        assert!(matches!(
            spec.enabled_actions("nobody", "s"),
            Err(ModelError::UnknownProcess(_))
        ));
        assert!(matches!(
            spec.enabled_actions("prod", "zz"),
            Err(ModelError::UnknownState { .. })
        ));
    }

    #[test]
    fn builder_rejects_reserved_and_duplicates() {
        let r = SystemBuilder::new("t").process("pi", "a").build();
        assert!(matches!(r, Err(ModelError::ReservedName(_))));
        let r = SystemBuilder::new("t").process("a", "x").process("a", "y").build();
        assert!(matches!(r, Err(ModelError::DuplicateProcess(_))));
        let r = SystemBuilder::new("t")
            .process("a", "x")
            .send("x", "nope", "a", "x")
            .build();
        assert!(matches!(r, Err(ModelError::UndeclaredPayload(_))));
    }
}

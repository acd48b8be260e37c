//! The delayed system: one message of the original system may be routed
//! through an extra relay process, which delivers it later.

use crate::error::ModelError;
use crate::model::{LocalAction, PayloadId, Pid, ProcessDef, StateId, SystemSpec, Transition, RESERVED_PROCESS};

#[derive(Clone, Debug)]
pub struct DelayedSystem {
    pub base: SystemSpec,
    /// `base` plus the relay process, which is last.
    pub spec: SystemSpec,
    pub pi: Pid,
    /// Destination and payload wrapped by each extra payload, indexed from
    /// `base.payloads.len()`.
    pub pairs: Vec<(Pid, PayloadId)>,
}

impl DelayedSystem {
    /// The (destination, payload) a wrapped payload stands for.
    pub fn unwrap_payload(&self, v: PayloadId) -> Option<(Pid, PayloadId)> {
        v.index()
            .checked_sub(self.base.payloads.len())
            .and_then(|i| self.pairs.get(i).copied())
    }

    fn wrap(&self, q: Pid, v: PayloadId) -> PayloadId {
        let i = self.pairs.iter().position(|&x| x == (q, v)).expect("pair");
        PayloadId((self.base.payloads.len() + i) as u16)
    }
}

/// Every send `(p, q, v)` gets a sibling send `(p, pi, (q,v))` with the
/// same endpoints. The relay receives one wrapped message, forwards its
/// payload to the original destination, and stops.
pub fn build_delayed_system(base: &SystemSpec) -> Result<DelayedSystem, ModelError> {
    if base.pid(RESERVED_PROCESS).is_some() {
        return Err(ModelError::ReservedName(RESERVED_PROCESS.into()));
    }
    if base.num_processes() >= crate::model::MAX_PROCESSES {
        return Err(ModelError::TooManyProcesses(base.num_processes() + 1));
    }
    let pi = Pid(base.num_processes() as u16);
    let mut pairs: Vec<(Pid, PayloadId)> = Vec::new();
    for def in &base.processes {
        for t in &def.transitions {
            if let LocalAction::Send { to, payload } = t.action {
                if !pairs.contains(&(to, payload)) {
                    pairs.push((to, payload));
                }
            }
        }
    }
    pairs.sort();
    let mut ds = DelayedSystem {
        base: base.clone(),
        spec: base.clone(),
        pi,
        pairs,
    };
    let wrapped_names: Vec<String> = ds
        .pairs
        .iter()
        .map(|&(q, v)| format!("({},{})", base.process_name(q), base.payload_name(v)))
        .collect();
    let mut processes = Vec::with_capacity(base.num_processes() + 1);
    for def in &base.processes {
        let mut ts = def.transitions.clone();
        for t in &def.transitions {
            if let LocalAction::Send { to, payload } = t.action {
                ts.push(Transition {
                    from: t.from,
                    action: LocalAction::Send {
                        to: pi,
                        payload: ds.wrap(to, payload),
                    },
                    to: t.to,
                });
            }
        }
        processes.push(ProcessDef::new(def.name.clone(), def.states.clone(), def.initial, ts));
    }
    let mut states = vec!["l0".to_string(), "lf".to_string()];
    let mut ts = Vec::new();
    for (i, &(q, v)) in ds.pairs.iter().enumerate() {
        let mid = StateId(states.len() as u16);
        states.push(wrapped_names[i].clone());
        ts.push(Transition {
            from: StateId(0),
            action: LocalAction::Recv { payload: ds.wrap(q, v) },
            to: mid,
        });
        ts.push(Transition {
            from: mid,
            action: LocalAction::Send { to: q, payload: v },
            to: StateId(1),
        });
    }
    processes.push(ProcessDef::new(RESERVED_PROCESS.into(), states, StateId(0), ts));
    let mut payloads = base.payloads.clone();
    payloads.extend(wrapped_names);
    ds.spec = SystemSpec {
        name: format!("{}_delayed", base.name),
        payloads,
        processes,
    };
    Ok(ds)
}

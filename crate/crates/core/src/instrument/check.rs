//! Deciding k-synchronizability by exploring the delayed system under
//! the k-synchronous semantics together with both monitors.

use std::time::Instant;

use serde_json::{json, Value};

use crate::async_sem::{linearize, Execution, IndexedAction, Mid};
use crate::conflict::{build_conflict_graph, classify, CycleReport};
use crate::error::{AnalysisError, Error};
use crate::explore::{bfs, ExploreOptions, Explored};
use crate::model::{Action, SystemSpec};
use crate::sync_sem::{exchange_successors, flatten, ExchangeLabel, SyncConfig};
use crate::trace::{check_causal_delivery, trace_of};

use super::delayed::{build_delayed_system, DelayedSystem};
use super::monitors::{
    causal_monitor_step, exchange_kind, viol_monitor_step, CausalMonitor, CausalStep, Exchange, ViolOutcome, ViolState,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Synchronizable(usize),
    Violation {
        k: usize,
        counterexample: Execution,
        cycle: CycleReport,
    },
    Inconclusive(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub configs: usize,
    pub time_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub k: usize,
    pub verdict: Verdict,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Phase {
    /// No message redirected yet.
    Idle,
    Armed {
        causal: CausalMonitor,
        viol: Vec<ViolState>,
    },
    Accepted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Product {
    config: SyncConfig,
    phase: Phase,
}

fn product_successors(ds: &DelayedSystem, k: usize, st: &Product) -> Vec<(ExchangeLabel, Product)> {
    let mut out = Vec::new();
    for (label, config) in exchange_successors(&ds.spec, &st.config, k, Some(ds.pi)) {
        let phase = match (&st.phase, exchange_kind(ds, &label)) {
            (Phase::Accepted, _) => continue,
            (Phase::Idle, Exchange::Ordinary) => Phase::Idle,
            (Phase::Idle, Exchange::Redirect { .. }) => {
                let CausalStep::Ok(causal) = causal_monitor_step(ds, &CausalMonitor::default(), &label) else {
                    continue;
                };
                let viol = viol_monitor_step(ds, None, &label, k)
                    .into_iter()
                    .filter_map(|o| match o {
                        ViolOutcome::Ok(s) => Some(s),
                        ViolOutcome::Accept => None,
                    })
                    .collect();
                Phase::Armed { causal, viol }
            }
            (Phase::Idle, Exchange::Relay { .. }) => continue,
            (Phase::Armed { viol, .. }, Exchange::Relay { .. }) => {
                let accepted = viol
                    .iter()
                    .any(|s| viol_monitor_step(ds, Some(s), &label, k).contains(&ViolOutcome::Accept));
                if !accepted {
                    continue;
                }
                Phase::Accepted
            }
            (Phase::Armed { .. }, Exchange::Redirect { .. }) => continue,
            (Phase::Armed { causal, viol }, Exchange::Ordinary) => {
                let CausalStep::Ok(causal) = causal_monitor_step(ds, causal, &label) else {
                    continue;
                };
                let mut next: Vec<ViolState> = viol
                    .iter()
                    .flat_map(|s| viol_monitor_step(ds, Some(s), &label, k))
                    .filter_map(|o| match o {
                        ViolOutcome::Ok(s) => Some(s),
                        ViolOutcome::Accept => None,
                    })
                    .collect();
                next.sort();
                next.dedup();
                Phase::Armed { causal, viol: next }
            }
        };
        out.push((label, Product { config, phase }));
    }
    out
}

/// Map a run of the delayed system back to the original system: the
/// redirect becomes the original send and the relay's delivery becomes
/// its receive. The result is an execution only up to reordering.
fn unredirect(ds: &DelayedSystem, labels: &[ExchangeLabel]) -> Vec<IndexedAction> {
    let flat = flatten(labels);
    let mut delayed: Option<Mid> = None;
    let mut relay_mid: Option<Mid> = None;
    let mut out = Vec::with_capacity(flat.len());
    for a in flat.steps {
        match a.action {
            Action::Send { from, to, payload } if to == ds.pi => {
                let (q, v) = ds.unwrap_payload(payload).expect("wrapped payload");
                delayed = Some(a.mid);
                out.push(IndexedAction {
                    action: Action::Send {
                        from,
                        to: q,
                        payload: v,
                    },
                    mid: a.mid,
                });
            }
            Action::Recv { by, .. } if by == ds.pi => {}
            Action::Send { from, .. } if from == ds.pi => relay_mid = Some(a.mid),
            Action::Recv { by, payload } if Some(a.mid) == relay_mid => out.push(IndexedAction {
                action: Action::Recv { by, payload },
                mid: delayed.expect("relay after redirect"),
            }),
            _ => out.push(a),
        }
    }
    out
}

/// Turn an accepting run into a validated counterexample: an execution of
/// the original system whose trace satisfies causal delivery and is not
/// k-synchronous, cut to its shortest failing prefix.
fn counterexample(ds: &DelayedSystem, labels: &[ExchangeLabel], k: usize) -> Option<(Execution, CycleReport)> {
    let steps = unredirect(ds, labels);
    let t = trace_of(&Execution::new(steps)).ok()?;
    if !check_causal_delivery(&t).holds() {
        return None;
    }
    let e = linearize(&ds.base, &t)?;
    if classify(&build_conflict_graph(&t), k).is_ok() {
        return None;
    }
    Some(minimize(&e, k))
}

/// Shortest prefix of `e` whose trace is not k-synchronous.
pub fn minimize(e: &Execution, k: usize) -> (Execution, CycleReport) {
    for n in 1..=e.len() {
        let prefix = Execution::new(e.steps[..n].to_vec()).canonical();
        let t = trace_of(&prefix).expect("prefix of an execution");
        let rep = classify(&build_conflict_graph(&t), k);
        if !rep.is_ok() {
            return (prefix, rep);
        }
    }
    unreachable!("the full execution fails classification")
}

pub fn check_k_synchronizability(spec: &SystemSpec, k: usize, opts: &ExploreOptions) -> Result<CheckReport, Error> {
    if k == 0 {
        return Err(AnalysisError::ZeroK.into());
    }
    let start = Instant::now();
    let ds = build_delayed_system(spec)?;
    let init = Product {
        config: SyncConfig::initial(&ds.spec),
        phase: Phase::Idle,
    };
    let mut found: Option<(Execution, CycleReport)> = None;
    let result = bfs(
        init,
        |st| product_successors(&ds, k, st),
        |st| st.phase == Phase::Accepted,
        |ex: &Explored<Product, ExchangeLabel>, n| {
            found = counterexample(&ds, &ex.path_to(n), k);
            found.is_some()
        },
        false,
        opts,
    );
    let time_ms = start.elapsed().as_millis();
    let (verdict, configs) = match result {
        Err(cap) => (Verdict::Inconclusive(cap.to_string()), cap.cap),
        Ok(ex) => {
            let v = match found {
                Some((counterexample, cycle)) => Verdict::Violation {
                    k,
                    counterexample,
                    cycle,
                },
                None => Verdict::Synchronizable(k),
            };
            (v, ex.nodes.len())
        }
    };
    Ok(CheckReport {
        k,
        verdict,
        stats: Stats { configs, time_ms },
    })
}

impl CheckReport {
    /// Verdict document; `stable` zeroes the timing so that identical runs
    /// give identical bytes.
    pub fn to_json(&self, spec: &SystemSpec, stable: bool) -> Value {
        let stats = json!({
            "configs": self.stats.configs,
            "time_ms": if stable { 0 } else { self.stats.time_ms },
        });
        match &self.verdict {
            Verdict::Synchronizable(k) => json!({"result": "synchronizable", "k": k, "stats": stats}),
            Verdict::Violation {
                k,
                counterexample,
                cycle,
            } => json!({
                "result": "violation",
                "k": k,
                "counterexample": crate::json::execution_to_json(&spec.symbols(), counterexample),
                "cycle": cycle.cycle().unwrap_or(&[]).iter().map(|m| m.0).collect::<Vec<_>>(),
                "cycle_kind": match cycle.verdict {
                    crate::conflict::CycleVerdict::BadCycle(_) => "bad",
                    _ => "oversize",
                },
                "stats": stats,
            }),
            Verdict::Inconclusive(reason) => json!({
                "result": "inconclusive",
                "k": self.k,
                "reason": reason,
                "stats": stats,
            }),
        }
    }

    pub fn to_text(&self, spec: &SystemSpec) -> String {
        match &self.verdict {
            Verdict::Synchronizable(k) => format!("Synchronizable({})\nconfigs: {}\n", k, self.stats.configs),
            Verdict::Violation {
                k,
                counterexample,
                cycle,
            } => format!(
                "Violation({})\ncounterexample: {}\n{}\nconfigs: {}\n",
                k,
                counterexample.render(spec),
                cycle.verdict,
                self.stats.configs
            ),
            Verdict::Inconclusive(reason) => format!("Inconclusive: {}\n", reason),
        }
    }
}

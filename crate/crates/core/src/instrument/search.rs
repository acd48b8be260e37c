//! Searching for the least k for which a system is k-synchronizable.

use crate::conflict::CycleVerdict;
use crate::error::Error;
use crate::explore::ExploreOptions;
use crate::model::SystemSpec;

use super::check::{check_k_synchronizability, CheckReport, Verdict};
use super::flow::{synchronizability_cap, system_flow_bounds, FlowBounds};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinK {
    Synchronizable(usize),
    /// Not k-synchronizable for any k.
    NeverSynchronizable(String),
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct MinKReport {
    pub bounds: Vec<FlowBounds>,
    pub cap: usize,
    /// The cap comes from the flow bounds rather than the caller.
    pub auto_cap: bool,
    pub result: MinK,
    /// One report per k tried.
    pub trail: Vec<CheckReport>,
}

/// Try k = 1, 2, ... up to the cap. Without an explicit cap the system
/// must be flow-bounded, and the cap is `(k_s + k_r) * |P|`; exhausting it
/// then proves the system is not synchronizable for any k. A bad cycle
/// proves the same at any k. Exhausting an explicit cap is inconclusive.
pub fn min_k_search(spec: &SystemSpec, cap: Option<usize>, opts: &ExploreOptions) -> Result<MinKReport, Error> {
    let bounds = system_flow_bounds(spec);
    let flow_cap = synchronizability_cap(spec);
    let (cap, auto_cap) = match (cap, flow_cap) {
        (Some(c), _) => (c, false),
        (None, Some(c)) => (c, true),
        (None, None) => {
            return Err(Error::Usage(
                "system is not flow-bounded; an explicit cap on k is required".into(),
            ))
        }
    };
    let mut trail = Vec::new();
    let mut result = None;
    for k in 1..=cap {
        let rep = check_k_synchronizability(spec, k, opts)?;
        let verdict = rep.verdict.clone();
        trail.push(rep);
        match verdict {
            Verdict::Synchronizable(k) => {
                result = Some(MinK::Synchronizable(k));
                break;
            }
            Verdict::Violation { cycle, .. } => {
                if let CycleVerdict::BadCycle(_) = cycle.verdict {
                    result = Some(MinK::NeverSynchronizable(format!(
                        "bad cycle at k = {}; it persists for every k",
                        k
                    )));
                    break;
                }
            }
            Verdict::Inconclusive(reason) => {
                result = Some(MinK::Inconclusive(format!("k = {}: {}", k, reason)));
                break;
            }
        }
    }
    let result = result.unwrap_or_else(|| match flow_cap {
        Some(fc) if cap >= fc => MinK::NeverSynchronizable(format!("violations up to the flow-bound cap {}", fc)),
        _ => MinK::Inconclusive(format!("violations for every k up to the cap {}", cap)),
    });
    Ok(MinKReport {
        bounds,
        cap,
        auto_cap,
        result,
        trail,
    })
}

impl MinKReport {
    pub fn to_text(&self, spec: &SystemSpec) -> String {
        let mut s = String::new();
        for (p, b) in spec.processes.iter().zip(&self.bounds) {
            s.push_str(&format!(
                "{}: receive_bound={} send_bound={}\n",
                p.name, b.receive_bound, b.send_bound
            ));
        }
        s.push_str(&format!(
            "cap: {}{}\n",
            self.cap,
            if self.auto_cap { " (from flow bounds)" } else { "" }
        ));
        for r in &self.trail {
            let v = match &r.verdict {
                Verdict::Synchronizable(_) => "synchronizable".to_string(),
                Verdict::Violation { cycle, .. } => format!("violation: {}", cycle.verdict),
                Verdict::Inconclusive(why) => format!("inconclusive: {}", why),
            };
            s.push_str(&format!("k={}: {} ({} configs)\n", r.k, v, r.stats.configs));
        }
        s.push_str(&match &self.result {
            MinK::Synchronizable(k) => format!("Synchronizable({})\n", k),
            MinK::NeverSynchronizable(why) => format!("NotSynchronizable: {}\n", why),
            MinK::Inconclusive(why) => format!("Inconclusive: {}\n", why),
        });
        s
    }

    pub fn to_json(&self, spec: &SystemSpec, stable: bool) -> serde_json::Value {
        use serde_json::json;
        let bounds: Vec<_> = spec
            .processes
            .iter()
            .zip(&self.bounds)
            .map(|(p, b)| {
                json!({
                    "process": p.name,
                    "receive_bound": b.receive_bound.finite(),
                    "send_bound": b.send_bound.finite(),
                })
            })
            .collect();
        let (result, k, reason) = match &self.result {
            MinK::Synchronizable(k) => ("synchronizable", Some(*k), None),
            MinK::NeverSynchronizable(r) => ("never-synchronizable", None, Some(r.clone())),
            MinK::Inconclusive(r) => ("inconclusive", None, Some(r.clone())),
        };
        json!({
            "result": result,
            "k": k,
            "reason": reason,
            "cap": self.cap,
            "auto_cap": self.auto_cap,
            "flow_bounds": bounds,
            "trail": self.trail.iter().map(|r| r.to_json(spec, stable)).collect::<Vec<_>>(),
        })
    }
}

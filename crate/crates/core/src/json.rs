//! JSON encoding of executions and traces.
//!
//! ```json
//! {"steps": [{"kind": "send", "actor": "p", "dest": "q", "payload": "v", "mid": 1},
//!            {"kind": "recv", "actor": "q", "payload": "v", "mid": 1}],
//!  "po": [[["p", 0], ["p", 1]]],
//!  "src": [[1, 1]]}
//! ```
//!
//! `po` and `src` are optional. When present they are checked against the
//! relations induced by the steps: `po` pairs must be ordered positions of
//! one process, `src` pairs must name a send and its receive.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::async_sem::{Execution, IndexedAction};
use crate::error::{Error, TraceError};
use crate::model::{Action, Symbols};
use crate::trace::Trace;

#[derive(Debug, Serialize, Deserialize)]
struct StepJson {
    kind: String,
    actor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dest: Option<String>,
    payload: String,
    mid: u32,
}

/// A process name and an index into its actions.
type Position = (String, usize);

#[derive(Debug, Serialize, Deserialize)]
struct ExecJson {
    steps: Vec<StepJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    po: Option<Vec<(Position, Position)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    src: Option<Vec<(u32, u32)>>,
}

pub fn step_json(syms: &Symbols, a: &IndexedAction) -> Value {
    match a.action {
        Action::Send { from, to, payload } => json!({
            "kind": "send",
            "actor": syms.process(from),
            "dest": syms.process(to),
            "payload": syms.payload(payload),
            "mid": a.mid.0,
        }),
        Action::Recv { by, payload } => json!({
            "kind": "recv",
            "actor": syms.process(by),
            "payload": syms.payload(payload),
            "mid": a.mid.0,
        }),
    }
}

pub fn execution_to_json(syms: &Symbols, e: &Execution) -> Value {
    json!({"steps": e.steps.iter().map(|a| step_json(syms, a)).collect::<Vec<_>>()})
}

/// Steps in a linear extension, with the covering pairs of `po` and all of
/// `src`.
pub fn trace_to_json(syms: &Symbols, t: &Trace) -> Value {
    let e = t.linear_extension();
    let mut po = Vec::new();
    for (p, seq) in t.sequences() {
        for i in 1..seq.len() {
            po.push(json!([[syms.process(*p), i - 1], [syms.process(*p), i]]));
        }
    }
    let mut src: Vec<_> = e.steps.iter().filter(|a| !a.is_send()).map(|a| a.mid.0).collect();
    src.sort_unstable();
    json!({
        "steps": e.steps.iter().map(|a| step_json(syms, a)).collect::<Vec<_>>(),
        "po": po,
        "src": src.into_iter().map(|m| json!([m, m])).collect::<Vec<_>>(),
    })
}

/// How names in a document are resolved to indices.
pub enum Names<'a> {
    /// Names must already exist in the table.
    Fixed(&'a Symbols),
    /// Unknown names are added.
    Open(&'a mut Symbols),
}

impl Names<'_> {
    fn process(&mut self, n: &str) -> Result<crate::model::Pid, Error> {
        match self {
            Names::Fixed(s) => s
                .processes
                .iter()
                .position(|x| x == n)
                .map(|i| crate::model::Pid(i as u16))
                .ok_or_else(|| TraceError::Malformed(format!("unknown process `{}`", n)).into()),
            Names::Open(s) => Ok(s.intern_process(n)),
        }
    }

    fn payload(&mut self, n: &str) -> Result<crate::model::PayloadId, Error> {
        match self {
            Names::Fixed(s) => s
                .payloads
                .iter()
                .position(|x| x == n)
                .map(|i| crate::model::PayloadId(i as u16))
                .ok_or_else(|| TraceError::Malformed(format!("unknown payload `{}`", n)).into()),
            Names::Open(s) => Ok(s.intern_payload(n)),
        }
    }
}

fn decode(doc: &ExecJson, names: &mut Names) -> Result<Execution, Error> {
    let mut steps = Vec::with_capacity(doc.steps.len());
    for st in &doc.steps {
        let actor = names.process(&st.actor)?;
        let payload = names.payload(&st.payload)?;
        let action = match (st.kind.as_str(), &st.dest) {
            ("send", Some(d)) => Action::Send {
                from: actor,
                to: names.process(d)?,
                payload,
            },
            ("recv", None) => Action::Recv { by: actor, payload },
            ("send", None) => return Err(TraceError::Malformed("send without dest".into()).into()),
            ("recv", Some(_)) => return Err(TraceError::Malformed("recv with dest".into()).into()),
            (k, _) => return Err(TraceError::Malformed(format!("unknown step kind `{}`", k)).into()),
        };
        steps.push(IndexedAction::new(action, st.mid));
    }
    Ok(Execution::new(steps))
}

pub fn parse_execution(text: &str, mut names: Names) -> Result<Execution, Error> {
    let doc: ExecJson = serde_json::from_str(text)?;
    decode(&doc, &mut names)
}

/// Parse a trace document. The per-process order of `steps` is the
/// program order.
pub fn parse_trace(text: &str, mut names: Names) -> Result<Trace, Error> {
    let doc: ExecJson = serde_json::from_str(text)?;
    let e = decode(&doc, &mut names)?;
    let t = Trace::from_execution(&e)?;
    if let Some(po) = &doc.po {
        for ((p, i), (q, j)) in po {
            let (pp, pq) = (names.process(p)?, names.process(q)?);
            let n = t.process_actions(pp).len();
            if pp != pq || i >= j || *j >= n {
                return Err(TraceError::Malformed(format!(
                    "po pair ({},{}) < ({},{}) does not match the steps",
                    p, i, q, j
                ))
                .into());
            }
        }
    }
    if let Some(src) = &doc.src {
        for &(a, b) in src {
            let m = crate::async_sem::Mid(a);
            if a != b || t.send_pos(m).is_none() || t.recv_pos(m).is_none() {
                return Err(TraceError::Malformed(format!("src pair ({}, {}) does not match the steps", a, b)).into());
            }
        }
    }
    Ok(t)
}

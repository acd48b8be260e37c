//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. The process exits non-zero
//! when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rayon::prelude::*;

use synchro::async_sem::{explore_async_traces, replay};
use synchro::conflict::{build_conflict_graph, classify, is_k_synchronous_trace, schedule_k_exchanges, CycleVerdict};
use synchro::deadlock::{find_deadlock, DeadlockKind, DeadlockReport};
use synchro::dsl::parse_system;
use synchro::explore::ExploreOptions;
use synchro::instrument::{check_k_synchronizability, min_k_search, system_flow_bounds, Bound, MinK, Verdict};
use synchro::json::{parse_trace, Names};
use synchro::model::{Symbols, SystemSpec};
use synchro::sync_sem::{explore_sync_traces, flatten, replay_sync};
use synchro::trace::{check_causal_delivery, trace_of, Trace};

const SEED: u64 = 0x5eed_2024;
const CORPUS_SIZE: usize = 200;
const KS: [usize; 3] = [1, 2, 3];
const BUFFER_BOUND: usize = 3;
const DEPTH_BOUND: usize = 12;
const SYNC_ACTIONS: usize = 12;
const MIN_K_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_BUDGET: Duration = Duration::from_secs(30 * 60);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn model(file: &str) -> SystemSpec {
    parse_system(&common::read_model(file)).expect("bundled model parses")
}

fn trace_file(file: &str) -> Trace {
    parse_trace(&common::read_model(file), Names::Open(&mut Symbols::default())).expect("bundled trace parses")
}

fn criterion_1() -> Outcome {
    let cases: [(&str, Option<usize>, usize); 3] = [
        ("commit.mps", None, 1),
        ("elevator_dashed.mps", Some(5), 2),
        ("replication.mps", None, 4),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (file, cap, want) in cases {
        let spec = model(file);
        let start = Instant::now();
        let got = min_k_search(&spec, cap, &ExploreOptions::default()).map(|r| r.result);
        let took = start.elapsed();
        let ok = got.as_ref().ok() == Some(&MinK::Synchronizable(want)) && took <= MIN_K_BUDGET;
        pass &= ok;
        let shown = match &got {
            Ok(MinK::Synchronizable(k)) => format!("k={}", k),
            Ok(other) => format!("{:?}", other),
            Err(e) => format!("error {}", e),
        };
        parts.push(format!(
            "{} {} (want {}, {:.2}s)",
            spec.name,
            shown,
            want,
            took.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

#[derive(Default)]
struct OracleTally {
    sync_traces: usize,
    async_traces: usize,
    scheduled: usize,
    char_discrepancies: Vec<String>,
    violations: usize,
    synchronizable: usize,
    inconclusive: usize,
    monitor_discrepancies: Vec<String>,
    causal_failures: Vec<String>,
}

impl OracleTally {
    fn merge(mut self, o: OracleTally) -> OracleTally {
        self.sync_traces += o.sync_traces;
        self.async_traces += o.async_traces;
        self.scheduled += o.scheduled;
        self.char_discrepancies.extend(o.char_discrepancies);
        self.violations += o.violations;
        self.synchronizable += o.synchronizable;
        self.inconclusive += o.inconclusive;
        self.monitor_discrepancies.extend(o.monitor_discrepancies);
        self.causal_failures.extend(o.causal_failures);
        self
    }
}

/// Criteria 2, 3 and 4 on one random system.
fn oracle(i: usize, spec: &SystemSpec) -> OracleTally {
    let mut t = OracleTally::default();
    let async_traces: Vec<Trace> = explore_async_traces(spec, BUFFER_BOUND, DEPTH_BOUND)
        .iter()
        .map(|e| trace_of(e).expect("async execution has a trace"))
        .collect();
    t.async_traces = async_traces.len();
    for tr in &async_traces {
        if !check_causal_delivery(tr).holds() {
            t.causal_failures
                .push(format!("system {}: {:?}", i, tr.linear_extension().steps));
        }
    }
    for k in KS {
        for e in explore_sync_traces(spec, k, SYNC_ACTIONS) {
            t.sync_traces += 1;
            let tr = trace_of(&e).expect("sync execution has a trace");
            if is_k_synchronous_trace(&tr, k) != Ok(true) {
                t.char_discrepancies
                    .push(format!("system {} k={}: sync trace rejected: {}", i, k, e.render(spec)));
            }
        }
        let mut failing = None;
        for tr in &async_traces {
            if !check_causal_delivery(tr).holds() {
                continue;
            }
            if is_k_synchronous_trace(tr, k) != Ok(true) {
                failing.get_or_insert(tr);
                continue;
            }
            t.scheduled += 1;
            let replayed = schedule_k_exchanges(tr, k)
                .map_err(|e| e.to_string())
                .and_then(|blocks| {
                    replay_sync(spec, k, &blocks)?;
                    Ok(flatten(&blocks))
                });
            match replayed {
                Ok(e) if trace_of(&e).map(|x| x.key()) == Ok(tr.key()) => {}
                Ok(e) => t.char_discrepancies.push(format!(
                    "system {} k={}: schedule changes the trace: {}",
                    i,
                    k,
                    e.render(spec)
                )),
                Err(why) => t
                    .char_discrepancies
                    .push(format!("system {} k={}: schedule does not replay: {}", i, k, why)),
            }
        }
        match check_k_synchronizability(spec, k, &ExploreOptions::default()).map(|r| r.verdict) {
            Ok(Verdict::Synchronizable(_)) => {
                t.synchronizable += 1;
                if let Some(tr) = failing {
                    t.monitor_discrepancies.push(format!(
                        "system {} k={}: Synchronizable but bounded trace fails: {}",
                        i,
                        k,
                        tr.linear_extension().render(spec)
                    ));
                }
            }
            Ok(Verdict::Violation { counterexample, .. }) => {
                t.violations += 1;
                let ok = replay(spec, &counterexample).is_ok()
                    && trace_of(&counterexample).is_ok_and(|tr| {
                        check_causal_delivery(&tr).holds() && !classify(&build_conflict_graph(&tr), k).is_ok()
                    });
                if !ok {
                    t.monitor_discrepancies.push(format!(
                        "system {} k={}: invalid counterexample {}",
                        i,
                        k,
                        counterexample.render(spec)
                    ));
                }
            }
            Ok(Verdict::Inconclusive(_)) => t.inconclusive += 1,
            Err(e) => t
                .monitor_discrepancies
                .push(format!("system {} k={}: error {}", i, k, e)),
        }
    }
    t
}

fn first_few(v: &[String]) -> String {
    v.iter().take(3).cloned().collect::<Vec<_>>().join(" | ")
}

fn criteria_2_to_4() -> [Outcome; 3] {
    let systems = common::corpus(SEED, CORPUS_SIZE);
    let start = Instant::now();
    let t = systems
        .par_iter()
        .enumerate()
        .map(|(i, s)| oracle(i, s))
        .reduce(OracleTally::default, OracleTally::merge);
    let took = start.elapsed();
    let in_time = took <= ORACLE_BUDGET;
    let c2 = outcome(
        t.char_discrepancies.is_empty() && in_time,
        format!(
            "{} systems, k in {:?}: {} sync traces checked, {} async traces scheduled and replayed, {} discrepancies, {:.1}s{}",
            systems.len(),
            KS,
            t.sync_traces,
            t.scheduled,
            t.char_discrepancies.len(),
            took.as_secs_f64(),
            if t.char_discrepancies.is_empty() { String::new() } else { format!(": {}", first_few(&t.char_discrepancies)) }
        ),
    );
    let c3 = outcome(
        t.monitor_discrepancies.is_empty(),
        format!(
            "{} synchronizable, {} violations, {} inconclusive, {} discrepancies{}",
            t.synchronizable,
            t.violations,
            t.inconclusive,
            t.monitor_discrepancies.len(),
            if t.monitor_discrepancies.is_empty() {
                String::new()
            } else {
                format!(": {}", first_few(&t.monitor_discrepancies))
            }
        ),
    );
    let c4 = outcome(
        t.causal_failures.is_empty(),
        format!(
            "{}/{} async traces satisfy causal delivery",
            t.async_traces - t.causal_failures.len(),
            t.async_traces
        ),
    );
    [c2, c3, c4]
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let commit = trace_file("commit_exec.trace");
    let cg = build_conflict_graph(&commit);
    let rep = classify(&cg, 1);
    let ok = cg.nodes.len() == 6 && rep.scc_sizes.iter().all(|&n| n == 1) && rep.is_ok();
    pass &= ok;
    parts.push(format!("commit-exec {} nodes acyclic={}", cg.nodes.len(), ok));

    let elev = trace_file("elevator_exec2.trace");
    let cg = build_conflict_graph(&elev);
    let at1 = classify(&cg, 1).verdict;
    let ok = matches!(at1, CycleVerdict::OversizeCycle(_, 2)) && classify(&cg, 2).is_ok();
    pass &= ok;
    parts.push(format!("elevator-exec2 cycle of size 2, 2-sync not 1-sync={}", ok));

    let rs = trace_file("rs_cycle.trace");
    let cg = build_conflict_graph(&rs);
    let ok = (1..=10).all(|k| matches!(classify(&cg, k).verdict, CycleVerdict::BadCycle(_)));
    pass &= ok;
    parts.push(format!("rs-cycle bad for k=1..10={}", ok));
    outcome(pass, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let opts = ExploreOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    let cases = [
        ("mutual_wait.mps", DeadlockKind::EmptyBufferDeadlock),
        ("orphan.mps", DeadlockKind::OrphanMessage),
        ("unspecified_reception.mps", DeadlockKind::UnspecifiedReception),
    ];
    for (file, kind) in cases {
        let spec = model(file);
        let found: Option<DeadlockReport> = find_deadlock(&spec, 1, kind, &opts).expect("search completes");
        let ok = found.as_ref().is_some_and(|r| r.kind == kind && r.verify(&spec, 1));
        pass &= ok;
        parts.push(format!("{} {} detected and replayed={}", spec.name, kind.name(), ok));
    }
    let commit = model("commit.mps");
    let none = DeadlockKind::ALL.iter().all(|&kind| {
        find_deadlock(&commit, 1, kind, &opts)
            .expect("search completes")
            .is_none()
    });
    pass &= none;
    parts.push(format!("commit none at k=1={}", none));
    outcome(pass, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let commit = system_flow_bounds(&model("commit.mps"));
    let commit_ok = commit.iter().all(|b| {
        matches!(b.receive_bound, Bound::Finite(n) if n <= 2) && matches!(b.send_bound, Bound::Finite(n) if n <= 2)
    });
    let elevator = system_flow_bounds(&model("elevator.mps"));
    let elevator_ok = elevator.iter().any(|b| b.receive_bound == Bound::Unbounded);
    let decid = system_flow_bounds(&model("decid_ex.mps"));
    let decid_ok = !decid.iter().all(|b| b.is_bounded());
    outcome(
        commit_ok && elevator_ok && decid_ok,
        format!(
            "commit bounds <= 2: {}; elevator receive unbounded: {}; decid_ex not flow-bounded: {}",
            commit_ok, elevator_ok, decid_ok
        ),
    )
}

fn main() {
    let [c2, c3, c4] = criteria_2_to_4();
    let results = [
        (1, criterion_1()),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
    ];
    let mut failed = 0;
    for (n, o) in &results {
        println!(
            "criterion {}: {} ({})",
            n,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{} criteria failed", failed);
        std::process::exit(1);
    }
}

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use synchro::async_sem::{explore_async, Execution, IndexedAction};
use synchro::conflict::{build_conflict_graph, classify, is_k_synchronous_trace};
use synchro::deadlock::{find_deadlock, DeadlockKind};
use synchro::dsl::{parse_system, print_system};
use synchro::explore::ExploreOptions;
use synchro::model::SystemSpec;
use synchro::sync_sem::{explore_sync, explore_sync_traces, replay_sync};
use synchro::trace::{check_causal_delivery, trace_of};

fn system() -> impl Strategy<Value = SystemSpec> {
    any::<u64>().prop_map(|seed| common::random_system(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Rename message ids by a bijection derived from `salt`.
fn rename(e: &Execution, salt: u32) -> Execution {
    let steps = e
        .steps
        .iter()
        .map(|a| IndexedAction::new(a.action, a.mid.0.wrapping_mul(7).wrapping_add(salt % 1000) + 1))
        .collect();
    Execution::new(steps)
}

fn opts() -> ExploreOptions {
    ExploreOptions {
        node_cap: 50_000,
        jobs: 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_then_parse_is_identity(spec in system()) {
        let text = print_system(&spec);
        prop_assert_eq!(parse_system(&text).unwrap(), spec);
    }

    #[test]
    fn classify_ignores_message_renaming(spec in system(), salt in any::<u32>(), k in 1usize..4) {
        for e in explore_async(&spec, 2, 8).into_iter().take(40) {
            let a = classify(&build_conflict_graph(&trace_of(&e).unwrap()), k);
            let b = classify(&build_conflict_graph(&trace_of(&rename(&e, salt)).unwrap()), k);
            prop_assert_eq!(a.is_ok(), b.is_ok());
            prop_assert_eq!(a.scc_sizes, b.scc_sizes);
        }
    }

    #[test]
    fn k_synchrony_is_monotone(spec in system(), k in 1usize..4) {
        for e in explore_async(&spec, 2, 8) {
            let t = trace_of(&e).unwrap();
            if is_k_synchronous_trace(&t, k) == Ok(true) {
                prop_assert_eq!(is_k_synchronous_trace(&t, k + 1), Ok(true));
            }
        }
    }

    #[test]
    fn async_traces_have_causal_delivery(spec in system()) {
        for e in explore_async(&spec, 2, 8) {
            prop_assert!(check_causal_delivery(&trace_of(&e).unwrap()).holds());
        }
    }

    #[test]
    fn sync_traces_are_k_synchronous(spec in system(), k in 1usize..4) {
        for e in explore_sync_traces(&spec, k, 8) {
            prop_assert_eq!(is_k_synchronous_trace(&trace_of(&e).unwrap(), k), Ok(true));
        }
    }

    #[test]
    fn reach_graph_paths_replay(spec in system(), k in 1usize..3) {
        if let Ok(g) = explore_sync(&spec, k, &opts()) {
            for n in 0..g.configs.len() {
                let ends = replay_sync(&spec, k, &g.path_to(n)).unwrap();
                prop_assert!(ends.contains(&g.configs[n]));
            }
        }
    }

    #[test]
    fn deadlock_witnesses_replay(spec in system(), k in 1usize..3) {
        for kind in DeadlockKind::ALL {
            if let Ok(Some(r)) = find_deadlock(&spec, k, kind, &opts()) {
                prop_assert!(r.verify(&spec, k), "{:?}", r);
            }
        }
    }

    #[test]
    fn corrupting_one_token_is_rejected(spec in system(), pick in any::<usize>(), tok in 0usize..4) {
        let text = print_system(&spec);
        let mut words: Vec<(usize, &str)> = Vec::new();
        let mut begin = None;
        for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
            match (c.is_whitespace(), begin) {
                (true, Some(b)) => {
                    words.push((b, &text[b..i]));
                    begin = None;
                }
                (false, None) => begin = Some(i),
                _ => {}
            }
        }
        let keywords: Vec<&(usize, &str)> = words
            .iter()
            .filter(|(_, w)| matches!(*w, "system" | "payloads" | "process" | "initial" | "state" | "send" | "recv" | "to" | "goto" | "end"))
            .collect();
        prop_assume!(!keywords.is_empty());
        let (at, w) = *keywords[pick % keywords.len()];
        let junk = ["%", "goto goto", "}", "sendx"][tok];
        let broken = format!("{}{}{}", &text[..at], junk, &text[at + w.len()..]);
        prop_assert!(parse_system(&broken).is_err(), "accepted:\n{}", broken);
    }
}

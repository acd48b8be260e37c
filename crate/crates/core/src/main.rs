use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use synchro::conflict::{build_conflict_graph, classify, CycleVerdict};
use synchro::deadlock::{find_deadlock, DeadlockKind};
use synchro::dsl::{diagnostics, parse_system};
use synchro::explore::{ExploreOptions, DEFAULT_NODE_CAP};
use synchro::instrument::{check_k_synchronizability, min_k_search, MinK, Verdict};
use synchro::json::{parse_trace, Names};
use synchro::model::{Symbols, SystemSpec};
use synchro::sync_sem::{explore_sync, flatten, sync_reach_local};
use synchro::trace::{check_causal_delivery, CausalDelivery};
use synchro::Error;

const EXIT_USAGE: u8 = 3;

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got `{}`", s)),
    }
}

#[derive(Parser)]
#[command(
    name = "synchro",
    version,
    about = "k-synchronizability checking for message passing systems"
)]
struct Cli {
    /// Stop exploring after this many configurations.
    #[arg(long, global = true, env = "SYNCHRO_NODE_CAP", default_value_t = DEFAULT_NODE_CAP,
          value_parser = positive)]
    node_cap: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Zero timings so that identical runs print identical bytes.
    #[arg(long, global = true)]
    stable: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    EmptyBuffer,
    Orphan,
    UnspecifiedReception,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the system is k-synchronizable.
    Check {
        file: PathBuf,
        #[arg(short, value_parser = positive)]
        k: usize,
        /// `dot` prints the conflict graph of the counterexample.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Find the least k for which the system is k-synchronizable.
    MinK {
        file: PathBuf,
        /// Largest k to try; required when the system is not flow-bounded.
        #[arg(long, value_parser = positive)]
        cap: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Look for deadlocks under the k-synchronous semantics.
    Deadlock {
        file: PathBuf,
        #[arg(short, value_parser = positive)]
        k: usize,
        #[arg(long, value_enum, default_value = "all")]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Is a local state reachable under the k-synchronous semantics?
    Reach {
        file: PathBuf,
        #[arg(short, value_parser = positive)]
        k: usize,
        #[arg(short)]
        p: String,
        #[arg(short)]
        s: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Classify a trace file and print its conflict graph.
    Trace {
        file: PathBuf,
        #[arg(short, value_parser = positive)]
        k: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Export the k-synchronous reachability graph.
    Graph {
        file: PathBuf,
        #[arg(short, value_parser = positive)]
        k: usize,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
    },
}

fn load(path: &Path) -> Result<SystemSpec, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {}", path.display(), e)))?;
    let spec = parse_system(&text)?;
    for w in diagnostics(&spec) {
        eprintln!("{}", w);
    }
    Ok(spec)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<u8, Error> {
    let opts = ExploreOptions {
        node_cap: cli.node_cap,
        jobs: cli.jobs,
    };
    match cli.command {
        Command::Check { file, k, format } => {
            let spec = load(&file)?;
            let rep = check_k_synchronizability(&spec, k, &opts)?;
            match format {
                Format::Json => print_json(&rep.to_json(&spec, cli.stable)),
                Format::Text => print!("{}", rep.to_text(&spec)),
                Format::Dot => match &rep.verdict {
                    Verdict::Violation { counterexample, .. } => {
                        let t = synchro::trace_of(counterexample)?;
                        print!("{}", build_conflict_graph(&t).to_dot(&spec.symbols()));
                    }
                    _ => print!("{}", rep.to_text(&spec)),
                },
            }
            Ok(match rep.verdict {
                Verdict::Synchronizable(_) => 0,
                Verdict::Violation { .. } => 1,
                Verdict::Inconclusive(_) => 2,
            })
        }
        Command::MinK { file, cap, format } => {
            let spec = load(&file)?;
            let rep = min_k_search(&spec, cap, &opts)?;
            match format {
                Format::Json => print_json(&rep.to_json(&spec, cli.stable)),
                _ => print!("{}", rep.to_text(&spec)),
            }
            Ok(match rep.result {
                MinK::Synchronizable(_) => 0,
                MinK::NeverSynchronizable(_) => 1,
                MinK::Inconclusive(_) => 2,
            })
        }
        Command::Deadlock { file, k, kind, format } => {
            let spec = load(&file)?;
            let kinds: Vec<DeadlockKind> = match kind {
                KindArg::EmptyBuffer => vec![DeadlockKind::EmptyBufferDeadlock],
                KindArg::Orphan => vec![DeadlockKind::OrphanMessage],
                KindArg::UnspecifiedReception => vec![DeadlockKind::UnspecifiedReception],
                KindArg::All => DeadlockKind::ALL.to_vec(),
            };
            match check_k_synchronizability(&spec, k, &opts)?.verdict {
                Verdict::Synchronizable(_) => {}
                _ => eprintln!(
                    "warning: not shown {}-synchronizable; deadlock results may not hold asynchronously",
                    k
                ),
            }
            let mut found = Vec::new();
            for kind in kinds {
                if let Some(r) = find_deadlock(&spec, k, kind, &opts)? {
                    found.push(r);
                }
            }
            match format {
                Format::Json => print_json(&json!({
                    "k": k,
                    "reports": found.iter().map(|r| r.to_json(&spec)).collect::<Vec<_>>(),
                })),
                _ if found.is_empty() => println!("no deadlock"),
                _ => {
                    for r in &found {
                        print!("{}", r.to_text(&spec));
                    }
                }
            }
            Ok(if found.is_empty() { 0 } else { 1 })
        }
        Command::Reach { file, k, p, s, format } => {
            let spec = load(&file)?;
            let found = sync_reach_local(&spec, k, &p, &s, &opts)?;
            let witness = found.as_ref().map(|labels| flatten(labels));
            match format {
                Format::Json => print_json(&json!({
                    "reachable": witness.is_some(),
                    "witness": witness.as_ref().map(|w| synchro::json::execution_to_json(&spec.symbols(), w)),
                })),
                _ => match &witness {
                    Some(w) => println!("reachable\nwitness: {}", w.render(&spec)),
                    None => println!("unreachable"),
                },
            }
            Ok(if witness.is_some() { 0 } else { 1 })
        }
        Command::Trace { file, k, format } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Error::Usage(format!("cannot read {}: {}", file.display(), e)))?;
            let mut syms = Symbols::default();
            let t = parse_trace(&text, Names::Open(&mut syms))?;
            if let CausalDelivery::Violated { s1, s2, .. } = check_causal_delivery(&t) {
                eprintln!(
                    "trace violates causal delivery (messages {} and {}); characterization does not apply",
                    s1.mid, s2.mid
                );
                return Ok(2);
            }
            let cg = build_conflict_graph(&t);
            let rep = classify(&cg, k);
            let dot = cg.to_dot(&syms);
            let verdict = match &rep.verdict {
                CycleVerdict::AcyclicOrGoodWithin(_) => format!("{}-synchronous", k),
                CycleVerdict::BadCycle(_) => format!("not {}-synchronous: bad cycle", k),
                CycleVerdict::OversizeCycle(_, n) => {
                    format!("not {}-synchronous: cycle of size {}", k, n)
                }
            };
            match format {
                Format::Json => print_json(&json!({
                    "k": k,
                    "synchronous": rep.is_ok(),
                    "verdict": verdict,
                    "cycle": rep.cycle().unwrap_or(&[]).iter().map(|m| m.0).collect::<Vec<_>>(),
                    "dot": dot,
                })),
                Format::Text => print!("{}\n{}", verdict, dot),
                Format::Dot => print!("{}", dot),
            }
            Ok(if rep.is_ok() { 0 } else { 1 })
        }
        Command::Graph { file, k, format } => {
            let spec = load(&file)?;
            let g = explore_sync(&spec, k, &opts)?;
            match format {
                Format::Json => print_json(&g.to_json(&spec)),
                _ => print!("{}", g.to_dot(&spec)),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::NodeCap(e)) => {
            eprintln!("inconclusive: {}", e);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(EXIT_USAGE)
        }
    }
}

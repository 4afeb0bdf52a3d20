//! Command-line front end: cover, witness, explore, replay, gen, reduce.
//!
//! Every analysis command prints a single JSON document on stdout (pretty
//! with `--pretty`); `gen` and `reduce` print protocol DSL text. Exit codes:
//! 0 success, 1 negative answer, 2 usage or parse error, 3 budget exceeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bcast::dsl;
use bcast::explorer::{self, Budget, ExploreError};
use bcast::instances::{self, SetCoverInstance};
use bcast::protocol::{Protocol, StateId, TargetSet};
use bcast::saturation::{saturate, Justification};
use bcast::semantics::{replay, Execution, ReplayError, SemanticsKind};
use bcast::trace;
use bcast::witness::{synthesize_lossy_witness, synthesize_reconfig_witness, WitnessError};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bcast",
    version,
    about = "Broadcast network coverability toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the saturation algorithm and report the coverable states.
    Cover {
        /// Protocol DSL file.
        protocol: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize a replay-verified covering execution.
    Witness {
        /// Protocol DSL file.
        protocol: PathBuf,
        /// Witness semantics.
        #[arg(long, value_enum)]
        semantics: WitnessSemantics,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact brute-force exploration at fixed node counts.
    Explore {
        /// Protocol DSL file.
        protocol: PathBuf,
        #[arg(long, value_enum)]
        semantics: Semantics,
        /// What to compute.
        #[arg(long, value_enum)]
        report: Report,
        /// Exact node count (for length and reach reports).
        #[arg(long)]
        k: Option<usize>,
        /// Largest node count to try (for the cutoff report).
        #[arg(long = "k-max")]
        k_max: Option<usize>,
        /// Cap on stored states (default 10^7; env BCAST_BUDGET_STATES).
        #[arg(long = "budget-states")]
        budget_states: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the legality of a trace and compute its metrics.
    Replay {
        /// Execution trace JSON file (or a witness payload holding one).
        trace: PathBuf,
        /// Protocol DSL file.
        protocol: PathBuf,
        #[arg(long)]
        pretty: bool,
    },
    /// Emit a protocol family instance as DSL text.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        /// Family size; for --family examples, 1 picks example1 and 2
        /// picks example2.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Reduce a SetCover instance to MinCover and emit the protocol.
    Reduce {
        /// SetCover JSON file: {"universe": [...], "sets": [[...], ...], "k": N}.
        #[arg(long)]
        setcover: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Target states, comma separated (defaults to the file's target line).
    #[arg(long)]
    target: Option<String>,
    /// Pretty-print the JSON payload.
    #[arg(long)]
    pretty: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    Static,
    #[value(alias = "reconfigurable")]
    Reconfig,
    Lossy,
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessSemantics {
    #[value(alias = "reconfigurable")]
    Reconfig,
    Lossy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Cutoff,
    Length,
    Reach,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lowerbound,
    Succinct,
    Tradeoff,
    Examples,
}

impl From<Semantics> for SemanticsKind {
    fn from(s: Semantics) -> Self {
        match s {
            Semantics::Static => SemanticsKind::Static,
            Semantics::Reconfig => SemanticsKind::Reconfigurable,
            Semantics::Lossy => SemanticsKind::Lossy,
        }
    }
}

impl From<WitnessSemantics> for SemanticsKind {
    fn from(s: WitnessSemantics) -> Self {
        match s {
            WitnessSemantics::Reconfig => SemanticsKind::Reconfigurable,
            WitnessSemantics::Lossy => SemanticsKind::Lossy,
        }
    }
}

/// A finished command: payload for stdout plus the exit code.
struct Outcome {
    payload: Payload,
    code: u8,
}

enum Payload {
    Json(Value),
    Text(String),
}

impl Outcome {
    fn json(value: Value, code: u8) -> Self {
        Outcome {
            payload: Payload::Json(value),
            code,
        }
    }

    fn text(text: String) -> Self {
        Outcome {
            payload: Payload::Text(text),
            code: EXIT_OK,
        }
    }
}

/// A failure reported on stderr.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pretty = pretty_flag(&cli.command);
    match run(cli.command) {
        Ok(outcome) => {
            match outcome.payload {
                Payload::Json(value) => {
                    let text = if pretty {
                        serde_json::to_string_pretty(&value).expect("payloads serialize")
                    } else {
                        serde_json::to_string(&value).expect("payloads serialize")
                    };
                    println!("{text}");
                }
                Payload::Text(text) => print!("{text}"),
            }
            ExitCode::from(outcome.code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn pretty_flag(cmd: &Command) -> bool {
    match cmd {
        Command::Cover { common, .. }
        | Command::Witness { common, .. }
        | Command::Explore { common, .. } => common.pretty,
        Command::Replay { pretty, .. } => *pretty,
        _ => false,
    }
}

fn run(cmd: Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Cover { protocol, common } => {
            let (p, file_target) = load_protocol(&protocol)?;
            let targets = resolve_targets(&p, common.target.as_deref(), file_target)?;
            Ok(cmd_cover(&p, targets.as_ref()))
        }
        Command::Witness {
            protocol,
            semantics,
            common,
        } => {
            let (p, file_target) = load_protocol(&protocol)?;
            let targets =
                resolve_targets(&p, common.target.as_deref(), file_target)?.ok_or_else(|| {
                    Failure::usage("witness needs target states (--target or a target: line)")
                })?;
            cmd_witness(&p, &targets, semantics.into())
        }
        Command::Explore {
            protocol,
            semantics,
            report,
            k,
            k_max,
            budget_states,
            common,
        } => {
            let (p, file_target) = load_protocol(&protocol)?;
            let targets = resolve_targets(&p, common.target.as_deref(), file_target)?;
            cmd_explore(
                &p,
                targets,
                semantics.into(),
                report,
                k,
                k_max,
                budget(budget_states),
            )
        }
        Command::Replay {
            trace, protocol, ..
        } => {
            let (p, _) = load_protocol(&protocol)?;
            let e = load_trace(&trace)?;
            Ok(cmd_replay(&e, &p))
        }
        Command::Gen { family, n } => cmd_gen(family, n),
        Command::Reduce { setcover } => cmd_reduce(&setcover),
    }
}

fn load_protocol(path: &Path) -> Result<(Protocol, Option<TargetSet>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let file = dsl::parse_protocol_file(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let diagnostics = file.protocol.validate();
    if let Some(d) = diagnostics
        .iter()
        .find(|d| d.severity == bcast::protocol::Severity::Error)
    {
        return Err(Failure::usage(format!("{}: {d}", path.display())));
    }
    Ok((file.protocol.complete_receptions(), file.target))
}

fn load_trace(path: &Path) -> Result<Execution, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    // accept both a bare trace and a witness payload wrapping one
    if let Some(inner) = value.get_mut("execution") {
        value = inner.take();
    }
    trace::parse_value(value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn resolve_targets(
    p: &Protocol,
    flag: Option<&str>,
    file_target: Option<TargetSet>,
) -> Result<Option<TargetSet>, Failure> {
    let Some(specified) = flag else {
        return Ok(file_target);
    };
    let mut states = Vec::new();
    for name in specified
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let q = StateId::from(name);
        if !p.has_state(&q) {
            return Err(Failure::usage(format!(
                "target '{name}' is not a protocol state"
            )));
        }
        if !states.contains(&q) {
            states.push(q);
        }
    }
    if states.is_empty() {
        return Err(Failure::usage("--target lists no states"));
    }
    Ok(Some(TargetSet::new(states)))
}

fn budget(flag: Option<u64>) -> Budget {
    let from_env = std::env::var("BCAST_BUDGET_STATES")
        .ok()
        .and_then(|v| v.parse().ok());
    match flag.or(from_env) {
        Some(max_states) => Budget::states(max_states),
        None => Budget::default(),
    }
}

fn transition_triple(t: &bcast::Transition) -> Value {
    json!([t.source.0, t.message().0, t.target.0])
}

fn cmd_cover(p: &Protocol, targets: Option<&TargetSet>) -> Outcome {
    let t = saturate(p);
    let justifications: Vec<Value> = t
        .justifications
        .iter()
        .map(|j| match j {
            Justification::Broadcast { broadcast } => {
                json!({"rule": "broadcast", "broadcast": transition_triple(broadcast)})
            }
            Justification::Reception {
                broadcast,
                reception,
            } => json!({
                "rule": "reception",
                "broadcast": transition_triple(broadcast),
                "reception": transition_triple(reception),
            }),
        })
        .collect();
    let coverable_targets: Vec<&str> = targets
        .map(|f| {
            t.covered()
                .iter()
                .filter(|q| f.contains(q))
                .map(|q| q.0.as_str())
                .collect()
        })
        .unwrap_or_default();
    let coverable = targets.map(|_| !coverable_targets.is_empty());
    let payload = json!({
        "protocol": p.name,
        "sets": t.sets,
        "counters": t.counters,
        "inserted": t.inserted,
        "justifications": justifications,
        "coverable_targets": coverable_targets,
        "coverable": coverable,
    });
    let code = if coverable == Some(false) {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    };
    Outcome::json(payload, code)
}

fn cmd_witness(p: &Protocol, f: &TargetSet, sem: SemanticsKind) -> Result<Outcome, Failure> {
    let result = match sem {
        SemanticsKind::Reconfigurable => synthesize_reconfig_witness(p, f),
        SemanticsKind::Lossy => synthesize_lossy_witness(p, f),
        SemanticsKind::Static => unreachable!("clap only admits reconfig and lossy"),
    };
    let execution = match result {
        Ok(e) => e,
        Err(WitnessError::NotCoverable) => {
            let payload = json!({
                "error": "not-coverable",
                "targets": f.states,
            });
            return Ok(Outcome::json(payload, EXIT_NEGATIVE));
        }
        Err(e) => {
            return Err(Failure {
                message: e.to_string(),
                code: EXIT_USAGE,
            })
        }
    };
    let replayed = replay(&execution, p).expect("witnesses are replay-verified");
    let covered: Vec<String> = replayed
        .final_config
        .label_set()
        .iter()
        .map(|q| q.0.clone())
        .collect();
    let payload = json!({
        "protocol": p.name,
        "semantics": execution.semantics,
        "execution": trace::emit_value(&execution),
        "summary": {
            "size": replayed.metrics.size,
            "length": replayed.metrics.length,
            "max_alen": replayed.metrics.max_active_length(),
            "covered_states": covered,
        },
    });
    Ok(Outcome::json(payload, EXIT_OK))
}

fn cmd_explore(
    p: &Protocol,
    targets: Option<TargetSet>,
    sem: SemanticsKind,
    report: Report,
    k: Option<usize>,
    k_max: Option<usize>,
    budget: Budget,
) -> Result<Outcome, Failure> {
    let need_targets = || {
        targets.clone().ok_or_else(|| {
            Failure::usage("this report needs target states (--target or a target: line)")
        })
    };
    let started = Instant::now();
    let (k_field, outcome) = match report {
        Report::Cutoff => {
            let k_max = k_max.ok_or_else(|| Failure::usage("--report cutoff needs --k-max"))?;
            let f = need_targets()?;
            let r = explorer::exact_cutoff(p, &f, sem, k_max, &budget);
            (k_max, r.map(|e| (e.value.map(Value::from), e.stats)))
        }
        Report::Length => {
            let k = k.ok_or_else(|| Failure::usage("--report length needs --k"))?;
            let f = need_targets()?;
            let r = explorer::min_cover_length(p, &f, sem, k, &budget);
            (k, r.map(|e| (e.value.map(Value::from), e.stats)))
        }
        Report::Reach => {
            let k = k.ok_or_else(|| Failure::usage("--report reach needs --k"))?;
            let r = explorer::coverable_states(p, sem, k, &budget);
            (
                k,
                r.map(|e| {
                    (
                        Some(Value::from(
                            e.value.iter().map(|q| q.0.clone()).collect::<Vec<_>>(),
                        )),
                        e.stats,
                    )
                }),
            )
        }
    };
    let elapsed_ms = started.elapsed().as_millis() as u64;
    match outcome {
        Ok((result, stats)) => {
            let negative = result.is_none();
            let payload = json!({
                "semantics": sem,
                "k": k_field,
                "result": result,
                "states_visited": stats.states_visited,
                "elapsed_ms": elapsed_ms,
            });
            Ok(Outcome::json(
                payload,
                if negative { EXIT_NEGATIVE } else { EXIT_OK },
            ))
        }
        Err(
            e @ (ExploreError::BudgetExceeded { .. }
            | ExploreError::WallTimeExceeded { .. }
            | ExploreError::TopologyTooLarge { .. }
            | ExploreError::NodeCountTooLarge { .. }),
        ) => {
            let states_visited = match e {
                ExploreError::BudgetExceeded { states_visited }
                | ExploreError::WallTimeExceeded { states_visited } => states_visited,
                _ => 0,
            };
            let payload = json!({
                "semantics": sem,
                "k": k_field,
                "error": e.to_string(),
                "states_visited": states_visited,
                "elapsed_ms": elapsed_ms,
            });
            Ok(Outcome::json(payload, EXIT_BUDGET))
        }
        Err(e) => Err(Failure::usage(e.to_string())),
    }
}

fn cmd_replay(e: &Execution, p: &Protocol) -> Outcome {
    match replay(e, p) {
        Ok(replayed) => {
            let final_labels: BTreeMap<&str, &str> = replayed
                .final_config
                .labels()
                .iter()
                .map(|(n, q)| (n.0.as_str(), q.0.as_str()))
                .collect();
            let payload = json!({
                "legal": true,
                "metrics": replayed.metrics,
                "final_labels": final_labels,
            });
            Outcome::json(payload, EXIT_OK)
        }
        Err(err) => {
            let failed_step = match &err {
                ReplayError::IllegalStep { index, .. } => Some(*index),
                ReplayError::NonInitial { .. } => None,
            };
            let payload = json!({
                "legal": false,
                "failed_step": failed_step,
                "error": err.to_string(),
            });
            Outcome::json(payload, EXIT_NEGATIVE)
        }
    }
}

fn cmd_gen(family: Family, n: usize) -> Result<Outcome, Failure> {
    if n > 100_000 {
        return Err(Failure::usage(format!("family size {n} is too large")));
    }
    let picked = match family {
        Family::Lowerbound => instances::gen_lower_bound(n),
        Family::Succinct => instances::gen_succinctness(n),
        Family::Tradeoff => instances::gen_tradeoff(n),
        Family::Examples => {
            let mut all = instances::gen_examples();
            match n {
                1 | 2 => {
                    let (_, p, f) = all.swap_remove(n - 1);
                    Ok((p, f))
                }
                _ => {
                    return Err(Failure::usage(
                        "--family examples admits --n 1 (example1) or --n 2 (example2)",
                    ))
                }
            }
        }
    };
    let (p, f) = picked.map_err(|e| Failure::usage(e.to_string()))?;
    Ok(Outcome::text(dsl::render_with_target(&p, Some(&f))))
}

#[derive(serde::Deserialize)]
struct SetCoverDoc {
    universe: Vec<Value>,
    sets: Vec<Vec<Value>>,
    k: usize,
}

fn element(v: &Value) -> Result<String, Failure> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Failure::usage(format!(
            "set cover elements must be strings or numbers, got {other}"
        ))),
    }
}

fn cmd_reduce(path: &Path) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: SetCoverDoc = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let universe = doc
        .universe
        .iter()
        .map(element)
        .collect::<Result<Vec<_>, _>>()?;
    let collection = doc
        .sets
        .iter()
        .map(|s| s.iter().map(element).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let inst = SetCoverInstance {
        universe,
        collection,
        k: doc.k,
    };
    let (p, f, k_prime) =
        instances::setcover_reduce(&inst).map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = format!("# k_prime = {k_prime}\n");
    out.push_str(&dsl::render_with_target(&p, Some(&f)));
    Ok(Outcome::text(out))
}

//! Command-line front end. Exit status: 0 when the checked property holds,
//! 1 when it is violated (a witness is printed), 2 on usage or input errors.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use taskdecomp::automaton::Automaton;
use taskdecomp::compose::compose_all;
use taskdecomp::decomposability::{
    check_dc3, decomposability_report, CheckMode, Condition, ConditionReport,
};
use taskdecomp::dot::{dot_export, DotOptions};
use taskdecomp::exec::Execution;
use taskdecomp::failure::{check_ef, remains_decomposable, PassivityReason};
use taskdecomp::fixtures::fixture_matrix;
use taskdecomp::projection::project_automaton;
use taskdecomp::relations::{bisimilar, RelationVerdict};
use taskdecomp::scenario::{emit_automaton, emit_scenario, parse_scenario, Scenario};
use taskdecomp::testkit::{
    conditions_trial, differential_suite, failure_trial, gen_scenario, non_passive_trial,
    two_agent_trial, Check, GenParams,
};
use taskdecomp::topdown::{verify_team, verify_team_under_failure, ClosedLoop, CHAIN_CLAIMS};

#[derive(Parser)]
#[command(
    name = "taskdecomp",
    version,
    about = "Decomposability and failure tolerance of task automata"
)]
struct Cli {
    /// Print a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Run every analysis in the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Re-derive the bundled fixture verdicts and compare with the golden table.
    #[arg(long)]
    fixture_matrix: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Project an automaton onto the local event set of one agent.
    Project {
        scenario: PathBuf,
        /// Agent name as declared in the `agents` section.
        #[arg(long)]
        agent: String,
        /// Automaton to project; defaults to the task.
        #[arg(long)]
        automaton: Option<String>,
    },
    /// Parallel composition of automata given as `file#name`.
    Compose {
        #[arg(required = true, num_args = 1..)]
        refs: Vec<String>,
        /// Name of the composed automaton in the output.
        #[arg(long, default_value = "composed")]
        name: String,
    },
    /// Bisimilarity of two automata given as `file#name`.
    Bisim { left: String, right: String },
    /// Decomposability conditions DC1 to DC4 and the bisimulation oracle.
    CheckDecomp {
        scenario: PathBuf,
        #[command(flatten)]
        depth: Depth,
    },
    /// Passivity, EF1 to EF4, the oracle and two-agent extras.
    CheckFailure {
        scenario: PathBuf,
        #[command(flatten)]
        depth: Depth,
    },
    /// Closed-loop team verification, under the failures when any are given.
    Verify { scenario: PathBuf },
    /// Generate a random scenario.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Differential testing of the conditions against the oracles.
    Fuzz {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Directory that receives every disagreeing scenario.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Graphviz rendering of an automaton given as `file#name`.
    ExportDot {
        reference: String,
        /// Lay the graph out top to bottom.
        #[arg(long)]
        vertical: bool,
    },
}

#[derive(Args)]
struct Depth {
    /// Check DC3 and EF3 by bounded enumeration up to this length.
    #[arg(long)]
    depth: Option<usize>,
}

impl Depth {
    fn mode(&self) -> Option<CheckMode> {
        self.depth.map(|depth| CheckMode::Bounded { depth })
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    agents: usize,
    #[arg(long, default_value_t = 6)]
    states: usize,
    #[arg(long, default_value_t = 4)]
    events: usize,
}

impl GenArgs {
    fn params(&self) -> GenParams {
        GenParams {
            agent_count: self.agents,
            max_states: self.states,
            max_events: self.events,
            ..GenParams::default()
        }
        .with_seed(self.seed)
    }
}

type Outcome = Result<bool, String>;

fn err(e: impl Display) -> String {
    e.to_string()
}

fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Resolves `file#name`; without a fragment the task automaton is used.
fn resolve(reference: &str) -> Result<(String, Automaton), String> {
    let (path, name) = match reference.rsplit_once('#') {
        Some((p, n)) => (p, Some(n)),
        None => (reference, None),
    };
    let s = load(Path::new(path))?;
    let name = name.map_or_else(|| s.task.clone(), str::to_string);
    let a = s
        .automaton(&name)
        .map_err(|e| format!("{reference}: {e}"))?;
    Ok((name, a.clone()))
}

fn emit_json(value: &impl Serialize) -> Result<(), String> {
    println!("{}", serde_json::to_string_pretty(value).map_err(err)?);
    Ok(())
}

fn verdict_word(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "violated"
    }
}

fn print_condition(c: &ConditionReport) {
    let mode = match c.mode {
        CheckMode::Exact => String::new(),
        CheckMode::Bounded { depth } => format!(" (bounded, depth {depth})"),
    };
    println!("{} {}{mode}", c.condition, verdict_word(c.holds));
    for w in &c.witnesses {
        println!("  witness: {w}");
    }
    if let Some(note) = &c.note {
        println!("  note: {note}");
    }
}

fn print_relation(label: &str, v: &RelationVerdict) {
    println!("{label}: {}", verdict_word(v.holds));
    if let Some(w) = &v.witness {
        println!("  witness: {w}");
    }
}

/// Replaces the exact report of `which` with a bounded one.
fn substitute(conditions: &mut [ConditionReport], which: Condition, bounded: ConditionReport) {
    if let Some(slot) = conditions.iter_mut().find(|c| c.condition == which) {
        *slot = bounded;
    }
}

fn project(path: &Path, agent: &str, automaton: Option<&str>) -> Outcome {
    let s = load(path)?;
    let i = s.alphabet.agent_id(agent).map_err(err)?;
    let name = automaton.unwrap_or(&s.task);
    let a = s.automaton(name).map_err(err)?;
    let p = project_automaton(a, s.alphabet.local_set(i));
    print!("{}", emit_automaton(&format!("{name}_{agent}"), &p));
    Ok(true)
}

fn compose(refs: &[String], name: &str) -> Outcome {
    let parts = refs
        .iter()
        .map(|r| resolve(r).map(|(_, a)| a))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&Automaton> = parts.iter().collect();
    let team = compose_all(&refs).map_err(err)?;
    print!("{}", emit_automaton(name, &team));
    Ok(true)
}

fn bisim(left: &str, right: &str, json: bool) -> Outcome {
    let (_, a) = resolve(left)?;
    let (_, b) = resolve(right)?;
    let v = bisimilar(&a, &b);
    if json {
        emit_json(&v)?;
    } else {
        print_relation(&format!("{left} ~ {right}"), &v);
    }
    Ok(v.holds)
}

fn check_decomp(path: &Path, mode: Option<CheckMode>, exec: Execution, json: bool) -> Outcome {
    let s = load(path)?;
    let mut report = decomposability_report(s.task(), s.sets(), exec).map_err(err)?;
    if let Some(mode) = mode {
        let bounded = check_dc3(s.task(), s.sets(), mode).map_err(err)?;
        substitute(&mut report.conditions, Condition::DC3, bounded);
    }
    let holds = report.oracle.holds && report.conditions.iter().all(|c| c.holds);
    if json {
        emit_json(&report)?;
        return Ok(holds);
    }
    for c in &report.conditions {
        print_condition(c);
    }
    print_relation("oracle (team of projections ~ task)", &report.oracle);
    println!(
        "{}",
        if report.oracle.holds {
            "decomposable"
        } else {
            "not decomposable"
        }
    );
    if !report.consistent {
        println!("note: the condition conjunction disagrees with the oracle");
    }
    Ok(holds)
}

fn check_failure(path: &Path, mode: Option<CheckMode>, exec: Execution, json: bool) -> Outcome {
    let s = load(path)?;
    let mut report = remains_decomposable(s.task(), &s.alphabet, &s.failures, exec).map_err(err)?;
    if let (Some(mode), true) = (mode, report.passivity.all_passive) {
        let bounded =
            check_ef(s.task(), &s.alphabet, &s.failures, Condition::EF3, mode).map_err(err)?;
        substitute(&mut report.conditions, Condition::EF3, bounded);
    }
    let holds = report.remains_decomposable && report.conditions_hold();
    if json {
        emit_json(&report)?;
        return Ok(holds);
    }
    for p in &report.passivity.events {
        let why = match &p.reason {
            PassivityReason::Passive => "passive".to_string(),
            PassivityReason::NotReceived => {
                "not passive: the agent is a source of the event".to_string()
            }
            PassivityReason::RelayWithoutBackup { receiver } => {
                format!("not passive: sole relay to agent {receiver}")
            }
        };
        println!("failure {} in agent {}: {why}", p.event, p.agent);
    }
    print_relation("decomposable before the failures", &report.pre_failure);
    for c in &report.conditions {
        print_condition(c);
    }
    for d in &report.duals {
        println!(
            "literal {}: {} ({})",
            d.condition,
            verdict_word(d.literal_holds),
            if d.agree { "agrees" } else { "disagrees" }
        );
    }
    print_relation("oracle (post-failure team ~ task)", &report.oracle);
    if let Some(t) = &report.two_agent {
        println!(
            "two agents: switch and order {}",
            verdict_word(t.switch_order_holds)
        );
        for q in &t.quadrants {
            println!("  {} {}", q.quadrant, verdict_word(q.holds));
        }
        if let Some(w) = &t.whole_agent {
            println!(
                "  whole failure of agent {}: {}",
                w.agent,
                if w.passive { "passive" } else { "not passive" }
            );
        }
    }
    println!(
        "{}",
        if report.remains_decomposable {
            "remains decomposable"
        } else {
            "does not remain decomposable"
        }
    );
    if !report.consistent {
        println!("note: the condition conjunction disagrees with the oracle");
    }
    Ok(holds)
}

fn verify(path: &Path, exec: Execution, json: bool) -> Outcome {
    let s = load(path)?;
    let cl = if s.plants.is_empty() && s.controllers.is_empty() {
        ClosedLoop::with_projection_controllers(s.task().clone(), s.alphabet.clone())
            .and_then(|cl| cl.with_failures(s.failures.clone()))
    } else {
        ClosedLoop::from_scenario(&s)
    }
    .map_err(err)?;
    if s.failures.is_empty() {
        let v = verify_team(&cl, exec).map_err(err)?;
        if json {
            emit_json(&v)?;
        } else {
            for (i, l) in v.locals.iter().enumerate() {
                print_relation(&format!("local loop {}", s.alphabet.agent_name(i)), l);
            }
            print_relation("team ~ task", &v.team);
            if let Some(w) = &v.warning {
                println!("warning: {w}");
            }
        }
        return Ok(v.holds());
    }
    let v = verify_team_under_failure(&cl, exec).map_err(err)?;
    if json {
        emit_json(&v)?;
    } else {
        for (i, l) in v.locals.iter().enumerate() {
            print_relation(&format!("local loop {}", s.alphabet.agent_name(i)), l);
        }
        for (claim, link) in CHAIN_CLAIMS.iter().zip(&v.chain) {
            print_relation(claim, &link.verdict);
        }
        if let Some(w) = &v.warning {
            println!("warning: {w}");
        }
    }
    Ok(v.holds())
}

fn gen(args: &GenArgs) -> Outcome {
    let s = gen_scenario(&args.params()).map_err(err)?;
    print!("{}", emit_scenario(&s));
    Ok(true)
}

/// Regenerates the scenario a disagreement was found on.
fn disagreeing_scenario(p: &GenParams, check: Check) -> Result<Option<Scenario>, String> {
    let found = match check {
        Check::Conditions => Some(conditions_trial(p).map_err(err)?.0),
        Check::NonPassiveBlocks => non_passive_trial(p).map_err(err)?.map(|t| t.0),
        Check::TwoAgentIdentities | Check::WholeAgent => {
            two_agent_trial(p, 50).map_err(err)?.map(|t| t.0)
        }
        _ => failure_trial(p, 50).map_err(err)?.map(|t| t.0),
    };
    Ok(found)
}

fn fuzz(
    args: &GenArgs,
    trials: usize,
    corpus: Option<&Path>,
    exec: Execution,
    json: bool,
) -> Outcome {
    let params = args.params();
    let summary = differential_suite(&params, trials, exec).map_err(err)?;
    if let Some(dir) = corpus {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for d in &summary.disagreements {
            if let Some(s) = disagreeing_scenario(&params.with_seed(d.seed), d.check)? {
                let path = dir.join(format!("{:?}-seed{}.scn", d.check, d.seed).to_lowercase());
                let text = format!(
                    "# {:?} disagreement, seed {}\n{}",
                    d.check,
                    d.seed,
                    emit_scenario(&s)
                );
                std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            }
        }
    }
    if json {
        emit_json(&summary)?;
        return Ok(summary.clean());
    }
    println!(
        "trials: {} ({} without a passive failure)",
        summary.trials, summary.skipped
    );
    let tallies = [
        ("DC conjunction vs oracle", &summary.conditions),
        ("EF conjunction vs oracle", &summary.failure_conditions),
        ("literal EF1", &summary.literal_ef1),
        ("literal EF2", &summary.literal_ef2),
        ("literal EF4", &summary.literal_ef4),
        ("two-agent quadrants", &summary.quadrants),
        ("non-passive blocking", &summary.non_passive),
    ];
    for (label, t) in tallies {
        println!("{label}: {}/{}", t.agree, t.runs);
    }
    for d in &summary.disagreements {
        println!("disagreement: {:?} at seed {}", d.check, d.seed);
    }
    Ok(summary.clean())
}

fn export_dot(reference: &str, vertical: bool) -> Outcome {
    let (name, a) = resolve(reference)?;
    let options = DotOptions {
        name,
        horizontal: !vertical,
    };
    print!("{}", dot_export(&a, &options));
    Ok(true)
}

fn matrix(exec: Execution, json: bool) -> Outcome {
    let rows = fixture_matrix(exec).map_err(err)?;
    let pass = rows.iter().all(|r| r.pass);
    if json {
        emit_json(&rows)?;
        return Ok(pass);
    }
    for r in &rows {
        let mark = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "{mark} {} {}: expected {}, got {}",
            r.fixture, r.fact, r.expected, r.actual
        );
    }
    println!(
        "{}/{} rows pass",
        rows.iter().filter(|r| r.pass).count(),
        rows.len()
    );
    Ok(pass)
}

fn run(cli: Cli) -> Outcome {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let json = cli.json;
    match (&cli.command, cli.fixture_matrix) {
        (None, true) => matrix(exec, json),
        (None, false) => Err("no subcommand given; see --help".into()),
        (Some(_), true) => Err("--fixture-matrix takes no subcommand".into()),
        (Some(command), false) => match command {
            Command::Project {
                scenario,
                agent,
                automaton,
            } => project(scenario, agent, automaton.as_deref()),
            Command::Compose { refs, name } => compose(refs, name),
            Command::Bisim { left, right } => bisim(left, right, json),
            Command::CheckDecomp { scenario, depth } => {
                check_decomp(scenario, depth.mode(), exec, json)
            }
            Command::CheckFailure { scenario, depth } => {
                check_failure(scenario, depth.mode(), exec, json)
            }
            Command::Verify { scenario } => verify(scenario, exec, json),
            Command::Gen { gen: args } => gen(args),
            Command::Fuzz {
                gen,
                trials,
                corpus,
            } => fuzz(gen, *trials, corpus.as_deref(), exec, json),
            Command::ExportDot {
                reference,
                vertical,
            } => export_dot(reference, *vertical),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

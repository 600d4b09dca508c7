//! Acceptance suite: one PASS or FAIL line per criterion.
//!
//! A criterion that fails only through disagreements of a documented shape
//! (see `KNOWN`) is reported as FAIL without failing the build. Any other
//! failure exits nonzero. Every generated counterexample is written to the
//! corpus directory printed at the end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use taskdecomp::automaton::Automaton;
use taskdecomp::compose::compose_all;
use taskdecomp::decomposability::{decomposability_report, local_automata, Condition};
use taskdecomp::dot::{dot_export, DotOptions};
use taskdecomp::exec::Execution;
use taskdecomp::failure::{failed_locals, remains_decomposable, FailureReport};
use taskdecomp::fixtures::{fixture_matrix, load_fixture, FIXTURES};
use taskdecomp::projection::project_automaton;
use taskdecomp::scenario::{emit_scenario, parse_scenario, Scenario};
use taskdecomp::testkit::{
    bounded_language, conditions_trial, failure_trial, gen_automaton, gen_scenario,
    non_passive_trial, two_agent_trial, Check, GenParams,
};
use taskdecomp::topdown::{verify_local, verify_team, verify_team_under_failure, ClosedLoop};

/// Seeds per agent count for the randomized criteria.
const SEEDS: u64 = 500;
const AGENT_COUNTS: [usize; 2] = [2, 3];
const REJECTION_BUDGET: usize = 50;

/// Disagreement shapes that follow from the conditions themselves rather
/// than from a defect in the checks, with the bundled fixture showing each.
const KNOWN: [(&str, &str); 4] = [
    (
        "dc4-not-necessary",
        "DC1 to DC3 hold, DC4 fails, the task is decomposable (counterexamples/dc4_not_necessary)",
    ),
    (
        "ef4-not-necessary",
        "EF1 to EF3 hold, EF4 fails, the task stays decomposable (counterexamples/ef4_not_necessary)",
    ),
    (
        "literal-ef4-too-strong",
        "literal EF4 fails, refined holds: it separates states that hiding the failed events merges (counterexamples/literal_ef4_too_strong)",
    ),
    (
        "literal-ef4-too-weak",
        "literal EF4 holds, refined fails: hiding merges states that no failed prefix connects (counterexamples/literal_ef4_too_weak)",
    ),
];

struct Outcome {
    pass: bool,
    /// Every failure matches a shape in `KNOWN`.
    explained: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: String) -> Self {
        Outcome {
            pass,
            explained: pass,
            summary,
            details: Vec::new(),
        }
    }
}

struct Corpus {
    dir: PathBuf,
    written: usize,
}

impl Corpus {
    fn new() -> Self {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-corpus");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).expect("corpus directory");
        Corpus { dir, written: 0 }
    }

    fn persist(&mut self, tag: &str, seed: u64, agents: usize, s: &Scenario) {
        let path = self.dir.join(format!("{tag}-a{agents}-s{seed}.scn"));
        let text = format!(
            "# {tag}: seed {seed}, {agents} agents\n{}",
            emit_scenario(s)
        );
        std::fs::write(path, text).expect("write counterexample");
        self.written += 1;
    }
}

fn params(agents: usize, seed: u64) -> GenParams {
    GenParams {
        agent_count: agents,
        max_states: 6,
        max_events: 4,
        ..GenParams::default()
    }
    .with_seed(seed)
}

fn shape_counts(shapes: &BTreeMap<&'static str, usize>) -> String {
    let parts: Vec<String> = shapes.iter().map(|(k, v)| format!("{k} x{v}")).collect();
    parts.join(", ")
}

fn criterion1() -> Outcome {
    let rows = fixture_matrix(Execution::Parallel).expect("fixture matrix");
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    let mut o = Outcome::new(
        failed.is_empty(),
        format!(
            "{}/{} golden verdicts reproduced",
            rows.len() - failed.len(),
            rows.len()
        ),
    );
    for r in failed {
        o.details.push(format!(
            "{} {}: expected {}, got {}",
            r.fixture, r.fact, r.expected, r.actual
        ));
    }
    o
}

fn criterion2(corpus: &mut Corpus) -> Outcome {
    let mut runs = 0;
    let mut shapes: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut details = Vec::new();
    for agents in AGENT_COUNTS {
        for seed in 0..SEEDS {
            let (s, ok) = conditions_trial(&params(agents, seed)).expect("trial");
            runs += 1;
            if ok {
                continue;
            }
            corpus.persist("conditions", seed, agents, &s);
            if dc4_shape(&s) {
                *shapes.entry("dc4-not-necessary").or_default() += 1;
            } else {
                *shapes.entry("unexplained").or_default() += 1;
                details.push(format!(
                    "unexplained disagreement: seed {seed}, {agents} agents"
                ));
            }
        }
    }
    let bad: usize = shapes.values().sum();
    let mut o = Outcome::new(
        bad == 0,
        format!(
            "DC conjunction agrees with the oracle on {}/{runs} trials",
            runs - bad
        ),
    );
    let reproduced = fixture_shows("counterexamples/dc4_not_necessary", dc4_shape);
    o.explained = !shapes.contains_key("unexplained") && reproduced;
    if bad > 0 {
        o.details.push(shape_counts(&shapes));
    }
    if !reproduced {
        o.details
            .push("bundled dc4 counterexample no longer reproduces".into());
    }
    o.details.extend(details);
    o
}

fn failure_report(s: &Scenario) -> FailureReport {
    remains_decomposable(s.task(), &s.alphabet, &s.failures, Execution::Sequential)
        .expect("failure report")
}

fn criterion3(corpus: &mut Corpus) -> Outcome {
    let mut runs = 0;
    let mut skipped = 0;
    let mut shapes: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut details = Vec::new();
    for agents in AGENT_COUNTS {
        for seed in 0..SEEDS {
            let Some((s, outcome)) =
                failure_trial(&params(agents, seed), REJECTION_BUDGET).expect("trial")
            else {
                skipped += 1;
                continue;
            };
            runs += 1;
            if outcome.contains(&(Check::FailureConditions, true)) {
                continue;
            }
            corpus.persist("failure-conditions", seed, agents, &s);
            if ef4_shape(&s) {
                *shapes.entry("ef4-not-necessary").or_default() += 1;
            } else {
                *shapes.entry("unexplained").or_default() += 1;
                details.push(format!(
                    "unexplained disagreement: seed {seed}, {agents} agents"
                ));
            }
        }
    }
    let bad: usize = shapes.values().sum();
    let mut o = Outcome::new(
        bad == 0 && runs >= 200,
        format!(
            "EF conjunction agrees with the oracle on {}/{runs} trials ({skipped} draws without a decomposable task or passive failure)",
            runs - bad
        ),
    );
    let reproduced = fixture_shows("counterexamples/ef4_not_necessary", ef4_shape);
    o.explained = !shapes.contains_key("unexplained") && runs >= 200 && reproduced;
    if !reproduced {
        o.details
            .push("bundled ef4 counterexample no longer reproduces".into());
    }
    if bad > 0 {
        o.details.push(shape_counts(&shapes));
    }
    o.details.extend(details);
    o
}

/// Loads a bundled counterexample and checks that it shows its shape.
fn fixture_shows(name: &str, shape: impl Fn(&Scenario) -> bool) -> bool {
    let s = load_fixture(name).expect("bundled counterexample");
    shape(&s)
}

fn dc4_shape(s: &Scenario) -> bool {
    let r = decomposability_report(s.task(), s.sets(), Execution::Sequential).expect("report");
    let holds = |c| r.get(c).is_some_and(|c| c.holds);
    r.oracle.holds
        && holds(Condition::DC1)
        && holds(Condition::DC2)
        && holds(Condition::DC3)
        && !holds(Condition::DC4)
}

fn ef4_shape(s: &Scenario) -> bool {
    let r = failure_report(s);
    let holds = |c| r.get(c).is_some_and(|c| c.holds);
    r.oracle.holds
        && holds(Condition::EF1)
        && holds(Condition::EF2)
        && holds(Condition::EF3)
        && !holds(Condition::EF4)
}

fn literal_ef4(s: &Scenario) -> (bool, bool) {
    let r = failure_report(s);
    let d = r
        .duals
        .iter()
        .find(|d| d.condition == Condition::EF4)
        .expect("EF4 dual");
    (d.literal_holds, d.refined_holds)
}

fn criterion4(corpus: &mut Corpus) -> Outcome {
    let mut tallies: BTreeMap<Condition, (usize, usize)> = BTreeMap::new();
    let mut shapes: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut details = Vec::new();
    for agents in AGENT_COUNTS {
        for seed in 0..SEEDS {
            let Some((s, _)) =
                failure_trial(&params(agents, seed), REJECTION_BUDGET).expect("trial")
            else {
                continue;
            };
            let r = failure_report(&s);
            let mut persisted = false;
            for d in &r.duals {
                let t = tallies.entry(d.condition).or_default();
                t.0 += 1;
                if d.agree {
                    t.1 += 1;
                    continue;
                }
                if !persisted {
                    corpus.persist("duals", seed, agents, &s);
                    persisted = true;
                }
                let shape = match d.condition {
                    Condition::EF4 if d.literal_holds => Some("literal-ef4-too-weak"),
                    Condition::EF4 => Some("literal-ef4-too-strong"),
                    _ => None,
                };
                match shape {
                    Some(k) => *shapes.entry(k).or_default() += 1,
                    None => {
                        *shapes.entry("unexplained").or_default() += 1;
                        details.push(format!(
                            "unexplained {} disagreement: seed {seed}, {agents} agents",
                            d.condition
                        ));
                    }
                }
            }
        }
    }
    let pass = tallies.values().all(|(runs, agree)| runs == agree) && !tallies.is_empty();
    let parts: Vec<String> = tallies
        .iter()
        .map(|(c, (runs, agree))| format!("{c} {agree}/{runs}"))
        .collect();
    let mut o = Outcome::new(
        pass,
        format!(
            "literal forms agree with the refined forms: {}",
            parts.join(", ")
        ),
    );
    let strong = fixture_shows("counterexamples/literal_ef4_too_strong", |s| {
        literal_ef4(s) == (false, true)
    });
    let weak = fixture_shows("counterexamples/literal_ef4_too_weak", |s| {
        literal_ef4(s) == (true, false)
    });
    o.explained = !shapes.contains_key("unexplained") && !tallies.is_empty() && strong && weak;
    if !(strong && weak) {
        o.details
            .push("bundled literal EF4 counterexamples no longer reproduce".into());
    }
    if !shapes.is_empty() {
        o.details.push(shape_counts(&shapes));
    }
    o.details.extend(details);
    o
}

fn criterion5(corpus: &mut Corpus) -> Outcome {
    let mut runs = 0;
    let mut details = Vec::new();
    for agents in AGENT_COUNTS {
        for seed in 0..SEEDS {
            let Some((s, ok)) = non_passive_trial(&params(agents, seed)).expect("trial") else {
                continue;
            };
            runs += 1;
            if !ok {
                corpus.persist("non-passive", seed, agents, &s);
                details.push(format!(
                    "team still bisimilar: seed {seed}, {agents} agents"
                ));
            }
        }
    }
    let mut o = Outcome::new(
        details.is_empty() && runs > 0,
        format!(
            "non-passive failures of occurring events block the team on {}/{runs} trials",
            runs - details.len()
        ),
    );
    o.details = details;
    o
}

fn criterion6(corpus: &mut Corpus) -> Outcome {
    let mut tallies: BTreeMap<Check, (usize, usize)> = BTreeMap::new();
    let mut details = Vec::new();
    for seed in 0..SEEDS * 2 {
        let Some((s, outcome)) =
            two_agent_trial(&params(2, seed), REJECTION_BUDGET).expect("trial")
        else {
            continue;
        };
        for (check, ok) in outcome {
            let t = tallies.entry(check).or_default();
            t.0 += 1;
            if ok {
                t.1 += 1;
            } else {
                corpus.persist("two-agent", seed, 2, &s);
                details.push(format!("{check:?} fails: seed {seed}"));
            }
        }
    }
    let complete = [Check::TwoAgentIdentities, Check::WholeAgent]
        .iter()
        .all(|c| tallies.get(c).is_some_and(|t| t.0 > 0));
    let parts: Vec<String> = tallies
        .iter()
        .map(|(c, (runs, agree))| format!("{c:?} {agree}/{runs}"))
        .collect();
    let mut o = Outcome::new(details.is_empty() && complete, parts.join(", "));
    o.details = details;
    o
}

fn replay_failure_witnesses(s: &Scenario, r: &FailureReport) -> bool {
    let post = failed_locals(s.task(), &s.alphabet, &s.failures, Execution::Sequential)
        .expect("post-failure locals");
    let pre = local_automata(s.task(), s.sets(), Execution::Sequential);
    let conditions = r
        .conditions
        .iter()
        .flat_map(|c| c.witnesses.iter())
        .all(|v| v.replay(s.task(), &r.refined, &post));
    let duals = r.duals.iter().all(|d| {
        let locals = if d.condition == Condition::EF4 {
            &pre
        } else {
            &post
        };
        d.literal
            .witnesses
            .iter()
            .all(|v| v.replay(s.task(), &r.refined, locals))
    });
    let oracle = r.oracle.witness.as_ref().is_none_or(|w| {
        let refs: Vec<&Automaton> = post.iter().collect();
        w.replay(&compose_all(&refs).expect("team"), s.task())
    });
    conditions && duals && oracle
}

fn criterion7() -> Outcome {
    let mut problems = Vec::new();
    let mut scenarios: Vec<(String, Scenario)> = FIXTURES
        .iter()
        .map(|(name, _)| (name.to_string(), load_fixture(name).expect("fixture")))
        .collect();
    for agents in AGENT_COUNTS {
        for seed in 0..50 {
            let p = params(agents, seed);
            scenarios.push((
                format!("generated a{agents} s{seed}"),
                gen_scenario(&p).expect("scenario"),
            ));
            if let Some((s, _)) = failure_trial(&p, REJECTION_BUDGET).expect("trial") {
                scenarios.push((format!("generated failure a{agents} s{seed}"), s));
            }
        }
    }

    let mut round_trips = 0;
    let mut dot_checks = 0;
    let mut replays = 0;
    for (name, s) in &scenarios {
        let text = emit_scenario(s);
        match parse_scenario(&text) {
            Ok(back) if back == *s && emit_scenario(&back) == text => round_trips += 1,
            _ => problems.push(format!("{name}: round trip differs")),
        }
        for (aut_name, a) in &s.automata {
            let options = DotOptions {
                name: aut_name.clone(),
                ..DotOptions::default()
            };
            let once = dot_export(a, &options);
            let reparsed = parse_scenario(&text).ok();
            let again = reparsed
                .as_ref()
                .and_then(|b| b.automaton(aut_name).ok())
                .map(|b| dot_export(b, &options));
            if again.as_deref() == Some(once.as_str()) && dot_export(a, &options) == once {
                dot_checks += 1;
            } else {
                problems.push(format!("{name}#{aut_name}: DOT output unstable"));
            }
        }
        let pre = local_automata(s.task(), s.sets(), Execution::Sequential);
        let report =
            decomposability_report(s.task(), s.sets(), Execution::Sequential).expect("report");
        let violated = !report.oracle.holds || report.conditions.iter().any(|c| !c.holds);
        if violated {
            replays += 1;
            if !report.witnesses_replay(s.task(), s.sets(), &pre) {
                problems.push(format!("{name}: decomposability witness does not replay"));
            }
        }
        if !s.failures.is_empty() {
            let r = failure_report(s);
            let violated = !r.oracle.holds
                || r.conditions.iter().any(|c| !c.holds)
                || r.duals.iter().any(|d| !d.literal_holds);
            if violated {
                replays += 1;
                if !replay_failure_witnesses(s, &r) {
                    problems.push(format!("{name}: failure witness does not replay"));
                }
            }
        }
        if let Ok(cl) = ClosedLoop::from_scenario(s) {
            let mut loops = Vec::new();
            for i in 0..s.alphabet.agent_count() {
                let closed = cl.local_loop(i).expect("local loop");
                let v = verify_local(&cl, i).expect("local verdict");
                if let Some(w) = &v.witness {
                    replays += 1;
                    let target = project_automaton(cl.spec(), s.alphabet.local_set(i));
                    if !w.replay(&closed, &target) {
                        problems.push(format!("{name}: local loop witness does not replay"));
                    }
                }
                loops.push(closed);
            }
            let refs: Vec<&Automaton> = loops.iter().collect();
            let team = compose_all(&refs).expect("team");
            let v = verify_team(&cl, Execution::Sequential).expect("team verdict");
            if let Some(w) = &v.team.witness {
                replays += 1;
                if !w.replay(&team, cl.spec()) {
                    problems.push(format!("{name}: team witness does not replay"));
                }
            }
            if !s.failures.is_empty() {
                let r = verify_team_under_failure(&cl, Execution::Sequential).expect("closed loop");
                if !r.chain_consistent {
                    problems.push(format!("{name}: failure chain inconsistent"));
                }
            }
        }
    }

    let mut determinized = 0;
    for seed in 0..100 {
        let a = gen_automaton(seed, 5, 3).expect("automaton");
        let d = a.determinize();
        let same = d.is_deterministic()
            && !d.has_hidden()
            && bounded_language(&a, 6).expect("language")
                == bounded_language(&d, 6).expect("language");
        if same {
            determinized += 1;
        } else {
            problems.push(format!(
                "determinize changes the bounded language: seed {seed}"
            ));
        }
    }

    let mut summary = String::new();
    let _ = write!(
        summary,
        "{round_trips}/{n} round trips, {dot_checks} stable DOT exports, {replays} violated verdicts replayed, {determinized}/100 determinizations",
        n = scenarios.len()
    );
    let mut o = Outcome::new(problems.is_empty(), summary);
    o.details = problems;
    o
}

type Criterion = Box<dyn FnOnce(&mut Corpus) -> Outcome>;

fn main() -> ExitCode {
    let mut corpus = Corpus::new();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("fixture matrix", Box::new(|_| criterion1())),
        ("decomposability conditions vs oracle", Box::new(criterion2)),
        ("failure conditions vs oracle", Box::new(criterion3)),
        ("literal and refined condition forms", Box::new(criterion4)),
        ("non-passive failures block the team", Box::new(criterion5)),
        (
            "two-agent identities and whole-agent failure",
            Box::new(criterion6),
        ),
        ("engineering invariants", Box::new(|_| criterion7())),
    ];
    let mut unexplained = 0;
    for (n, (title, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = run(&mut corpus);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {verdict} {title}: {} [{:.2}s]",
            n + 1,
            o.summary,
            start.elapsed().as_secs_f64()
        );
        for d in &o.details {
            println!("    {d}");
        }
        if !o.pass && !o.explained {
            unexplained += 1;
        }
    }
    println!("known disagreement shapes:");
    for (k, v) in KNOWN {
        println!("    {k}: {v}");
    }
    println!(
        "counterexamples written: {} under {}",
        corpus.written,
        corpus.dir.display()
    );
    if unexplained > 0 {
        println!("{unexplained} criteria failed outside the known shapes");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

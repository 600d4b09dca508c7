//! Decomposability conditions DC1 to DC4, the direct bisimulation oracle,
//! and a combined report that cross-checks the two.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::alphabet::DistributedAlphabet;
use crate::automaton::{format_word, Automaton, Event, StateId};
use crate::compose::compose_all;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::projection::{enumerate_sync_product, project_automaton, project_string};
use crate::relations::{bisimilar, distinguishing_word, RelationVerdict, Witness};
use crate::testkit::{bounded_language, bounded_language_from};

/// Most witnesses kept per condition.
pub const WITNESS_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Condition {
    DC1,
    DC2,
    DC3,
    DC4,
    EF1,
    EF2,
    EF3,
    EF4,
}

impl Condition {
    pub const DC: [Condition; 4] = [
        Condition::DC1,
        Condition::DC2,
        Condition::DC3,
        Condition::DC4,
    ];
    pub const EF: [Condition; 4] = [
        Condition::EF1,
        Condition::EF2,
        Condition::EF3,
        Condition::EF4,
    ];

    /// The failure counterpart of a DC condition, and vice versa.
    pub fn dual(self) -> Condition {
        use Condition::*;
        match self {
            DC1 => EF1,
            DC2 => EF2,
            DC3 => EF3,
            DC4 => EF4,
            EF1 => DC1,
            EF2 => DC2,
            EF3 => DC3,
            EF4 => DC4,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckMode {
    #[default]
    Exact,
    Bounded {
        depth: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Both events are enabled at `state`, no agent observes both, and one of
    /// the two orders is not executable.
    Selection { state: String, events: [Event; 2] },
    /// `events[0] events[1]` is executable at `state` and the reverse order is not.
    OrderMissing { state: String, events: [Event; 2] },
    /// Both orders are executable at `state` and disagree on `continuation`.
    OrderDiverges {
        state: String,
        events: [Event; 2],
        continuation: Vec<Event>,
    },
    /// The team can execute `word` and the task cannot.
    IllegalString { word: Vec<Event> },
    /// In local automaton `agent`, two `event` successors of `state` disagree
    /// on `continuation`.
    Nondeterminism {
        agent: usize,
        state: String,
        event: Event,
        successors: [String; 2],
        continuation: Vec<Event>,
    },
    /// In local automaton `agent`, `prefix event` (prefix over failed events)
    /// and `event` lead from `state` to successors that disagree on `continuation`.
    PrefixedNondeterminism {
        agent: usize,
        state: String,
        prefix: Vec<Event>,
        event: Event,
        successors: [String; 2],
        continuation: Vec<Event>,
    },
}

impl Violation {
    /// Re-evaluates the violated condition at the witness. `locals` are the
    /// local automata the condition was checked on, one per set.
    pub fn replay(&self, task: &Automaton, sets: &[BTreeSet<Event>], locals: &[Automaton]) -> bool {
        let at = |state: &str, word: &[Event]| {
            task.state_id(state)
                .map(|q| task.defined_from(q, word))
                .ok()
        };
        let pair = |a: &Event, b: &Event| [a.clone(), b.clone()];
        match self {
            Violation::Selection {
                state,
                events: [e1, e2],
            } => {
                !DistributedAlphabet::co_located(sets, e1, e2)
                    && at(state, std::slice::from_ref(e1)) == Some(true)
                    && at(state, std::slice::from_ref(e2)) == Some(true)
                    && !(at(state, &pair(e1, e2)) == Some(true)
                        && at(state, &pair(e2, e1)) == Some(true))
            }
            Violation::OrderMissing {
                state,
                events: [e1, e2],
            } => {
                !DistributedAlphabet::co_located(sets, e1, e2)
                    && at(state, &pair(e1, e2)) == Some(true)
                    && at(state, &pair(e2, e1)) == Some(false)
            }
            Violation::OrderDiverges {
                state,
                events: [e1, e2],
                continuation,
            } => {
                let mut w1 = pair(e1, e2).to_vec();
                w1.extend(continuation.iter().cloned());
                let mut w2 = pair(e2, e1).to_vec();
                w2.extend(continuation.iter().cloned());
                !DistributedAlphabet::co_located(sets, e1, e2)
                    && at(state, &pair(e1, e2)) == Some(true)
                    && at(state, &pair(e2, e1)) == Some(true)
                    && at(state, &w1) != at(state, &w2)
            }
            Violation::IllegalString { word } => {
                locals.len() == sets.len()
                    && !task.defined(word)
                    && locals
                        .iter()
                        .zip(sets)
                        .all(|(local, set)| local.defined(&project_string(word, set)))
            }
            Violation::Nondeterminism {
                agent,
                state,
                event,
                successors: [x1, x2],
                continuation,
            } => {
                let Some(local) = locals.get(*agent) else {
                    return false;
                };
                let (Ok(x), Ok(y1), Ok(y2)) = (
                    local.state_id(state),
                    local.state_id(x1),
                    local.state_id(x2),
                ) else {
                    return false;
                };
                let succ: Vec<StateId> = local.successors(x, event).collect();
                y1 != y2
                    && succ.contains(&y1)
                    && succ.contains(&y2)
                    && local.defined_from(y1, continuation) != local.defined_from(y2, continuation)
            }
            Violation::PrefixedNondeterminism {
                agent,
                state,
                prefix,
                event,
                successors: [x1, x2],
                continuation,
            } => {
                let Some(local) = locals.get(*agent) else {
                    return false;
                };
                let (Ok(x), Ok(y1), Ok(y2)) = (
                    local.state_id(state),
                    local.state_id(x1),
                    local.state_id(x2),
                ) else {
                    return false;
                };
                let mut long = prefix.clone();
                long.push(event.clone());
                y1 != y2
                    && local.run_from(&BTreeSet::from([x]), &long).contains(&y1)
                    && local.successors(x, event).any(|s| s == y2)
                    && local.defined_from(y1, continuation) != local.defined_from(y2, continuation)
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Selection { state, events: [a, b] } => {
                write!(f, "state {state}: choice between {a} and {b} has no deciding agent")
            }
            Violation::OrderMissing { state, events: [a, b] } => {
                write!(f, "state {state}: \"{a} {b}\" is defined but \"{b} {a}\" is not")
            }
            Violation::OrderDiverges {
                state,
                events: [a, b],
                continuation,
            } => write!(
                f,
                "state {state}: orders \"{a} {b}\" and \"{b} {a}\" disagree on \"{}\"",
                format_word(continuation)
            ),
            Violation::IllegalString { word } => write!(f, "team executes illegal string \"{}\"", format_word(word)),
            Violation::Nondeterminism {
                agent,
                state,
                event,
                successors: [x1, x2],
                continuation,
            } => write!(
                f,
                "agent #{}: {event}-successors {x1} and {x2} of {state} disagree on t = \"{}\"",
                agent + 1,
                format_word(continuation)
            ),
            Violation::PrefixedNondeterminism {
                agent,
                state,
                prefix,
                event,
                successors: [x1, x2],
                continuation,
            } => write!(
                f,
                "agent #{}: from {state}, \"{} {event}\" reaches {x1} and \"{event}\" reaches {x2}; they disagree on t = \"{}\"",
                agent + 1,
                format_word(prefix),
                format_word(continuation)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub holds: bool,
    pub mode: CheckMode,
    pub witnesses: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionReport {
    fn new(condition: Condition, mode: CheckMode, witnesses: Vec<Violation>) -> Self {
        ConditionReport {
            condition,
            holds: witnesses.is_empty(),
            mode,
            witnesses,
            note: None,
        }
    }

    /// Same findings under another condition tag.
    pub fn retag(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }
}

fn require_deterministic(task: &Automaton) -> Result<()> {
    if task.is_deterministic() {
        Ok(())
    } else {
        Err(Error::NotDeterministic("task automaton"))
    }
}

fn push(list: &mut Vec<Violation>, v: Violation) {
    if list.len() < WITNESS_LIMIT {
        list.push(v);
    }
}

/// Shortest access word of every state, in breadth-first order.
pub(crate) fn access_words(a: &Automaton) -> Vec<Vec<Event>> {
    let mut words: Vec<Option<Vec<Event>>> = vec![None; a.num_states()];
    let mut queue = VecDeque::new();
    for &q in a.initials() {
        words[q] = Some(Vec::new());
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        let base = words[q].clone().unwrap_or_default();
        for (label, t) in a.edges(q) {
            if words[*t].is_none() {
                let mut w = base.clone();
                if let Some(e) = label.as_event() {
                    w.push(e.to_string());
                }
                words[*t] = Some(w);
                queue.push_back(*t);
            }
        }
    }
    words.into_iter().map(Option::unwrap_or_default).collect()
}

/// Projects the task onto each set.
pub fn local_automata(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    exec: Execution,
) -> Vec<Automaton> {
    exec.map(sets, |set| project_automaton(task, set))
}

fn unordered_pairs(events: &BTreeSet<Event>) -> Vec<(&Event, &Event)> {
    let list: Vec<&Event> = events.iter().collect();
    let mut out = Vec::new();
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            out.push((list[i], list[j]));
        }
    }
    out
}

/// Decision on selection: two events enabled at the same state are either
/// observed together by some agent or executable in both orders.
pub fn check_dc1(task: &Automaton, sets: &[BTreeSet<Event>]) -> Result<ConditionReport> {
    require_deterministic(task)?;
    let mut found = Vec::new();
    for q in 0..task.num_states() {
        let enabled: BTreeSet<Event> = task.enabled(q).into_iter().map(str::to_string).collect();
        for (e1, e2) in unordered_pairs(&enabled) {
            if DistributedAlphabet::co_located(sets, e1, e2) {
                continue;
            }
            let both = task.defined_from(q, &[e1.clone(), e2.clone()])
                && task.defined_from(q, &[e2.clone(), e1.clone()]);
            if !both {
                push(
                    &mut found,
                    Violation::Selection {
                        state: task.name(q).to_string(),
                        events: [e1.clone(), e2.clone()],
                    },
                );
            }
        }
    }
    Ok(ConditionReport::new(
        Condition::DC1,
        CheckMode::Exact,
        found,
    ))
}

/// Decision on order: for events no agent observes together, the two orders
/// are both undefined, or both defined and followed by the same language.
pub fn check_dc2(task: &Automaton, sets: &[BTreeSet<Event>]) -> Result<ConditionReport> {
    require_deterministic(task)?;
    let mut found = Vec::new();
    let step2 = |q: StateId, a: &Event, b: &Event| {
        let s = task.step(&BTreeSet::from([q]), a);
        task.step(&s, b)
    };
    for q in 0..task.num_states() {
        for (e1, e2) in unordered_pairs(task.alphabet()) {
            if DistributedAlphabet::co_located(sets, e1, e2) {
                continue;
            }
            let r12 = step2(q, e1, e2);
            let r21 = step2(q, e2, e1);
            let state = task.name(q).to_string();
            match (r12.is_empty(), r21.is_empty()) {
                (true, true) => {}
                (false, true) => push(
                    &mut found,
                    Violation::OrderMissing {
                        state,
                        events: [e1.clone(), e2.clone()],
                    },
                ),
                (true, false) => push(
                    &mut found,
                    Violation::OrderMissing {
                        state,
                        events: [e2.clone(), e1.clone()],
                    },
                ),
                (false, false) => {
                    if let Some((_, t)) = distinguishing_word(task, &r12, task, &r21) {
                        push(
                            &mut found,
                            Violation::OrderDiverges {
                                state,
                                events: [e1.clone(), e2.clone()],
                                continuation: t,
                            },
                        );
                    }
                }
            }
        }
    }
    Ok(ConditionReport::new(
        Condition::DC2,
        CheckMode::Exact,
        found,
    ))
}

/// No illegal interleavings. Exact mode compares the language of the
/// composed local automata against the task; bounded mode enumerates
/// interleavings of bounded local strings.
pub fn check_dc3(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    mode: CheckMode,
) -> Result<ConditionReport> {
    require_deterministic(task)?;
    let locals = local_automata(task, sets, Execution::Sequential);
    check_dc3_on(task, sets, &locals, mode)
}

/// DC3 against explicitly given local automata over `sets`.
pub fn check_dc3_on(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    locals: &[Automaton],
    mode: CheckMode,
) -> Result<ConditionReport> {
    require_deterministic(task)?;
    match mode {
        CheckMode::Exact => {
            let refs: Vec<&Automaton> = locals.iter().collect();
            let team = compose_all(&refs)?;
            let found = illegal_words(&team, task)
                .into_iter()
                .map(|word| Violation::IllegalString { word })
                .collect();
            Ok(ConditionReport::new(Condition::DC3, mode, found))
        }
        CheckMode::Bounded { depth } => {
            let mut report = if sets.len() == 2 {
                dc3_two_agents(task, sets, depth)?
            } else {
                dc3_literal(task, sets, depth)?
            };
            report.mode = mode;
            Ok(report)
        }
    }
}

/// Minimal words of `team` outside `L(task)`, at most one per reached pair
/// of states, shortest first.
fn illegal_words(team: &Automaton, task: &Automaton) -> Vec<Vec<Event>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let start = (team.initial_set(), task.initial_set());
    seen.insert(start.clone());
    let mut queue = VecDeque::from([(start, Vec::<Event>::new())]);
    while let Some(((ts, ss), word)) = queue.pop_front() {
        for e in team.alphabet() {
            let tt = team.step(&ts, e);
            if tt.is_empty() {
                continue;
            }
            let st = task.step(&ss, e);
            let mut w = word.clone();
            w.push(e.clone());
            if st.is_empty() {
                if out.len() < WITNESS_LIMIT {
                    out.push(w);
                }
                continue;
            }
            if seen.insert((tt.clone(), st.clone())) {
                queue.push_back(((tt, st), w));
            }
        }
    }
    out
}

fn first_common(s: &[Event], common: &BTreeSet<Event>) -> Option<Event> {
    s.iter().find(|e| common.contains(*e)).cloned()
}

const LITERAL_NOTE: &str =
    "tuples are tested when at least one pair of distinct strings shares its first common event";

/// Literal n-agent reading: tuples of task strings of length at most `depth`
/// in which some pair of distinct strings starts their shared projection
/// with the same event; every interleaving of the projected strings must be
/// executable from the initial state.
fn dc3_literal(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    depth: usize,
) -> Result<ConditionReport> {
    let strings: Vec<Vec<Event>> = bounded_language(task, depth)?.into_iter().collect();
    let n = sets.len();
    let common = |i: usize, j: usize| -> BTreeSet<Event> {
        sets[i].intersection(&sets[j]).cloned().collect()
    };
    let commons: Vec<Vec<BTreeSet<Event>>> = (0..n)
        .map(|i| (0..n).map(|j| common(i, j)).collect())
        .collect();
    let mut found: Vec<Violation> = Vec::new();
    let mut reported = BTreeSet::new();
    let mut tested: HashSet<Vec<Vec<Event>>> = HashSet::new();
    let mut idx = vec![0usize; n];
    if strings.is_empty() || n == 0 {
        return Ok(ConditionReport::new(
            Condition::DC3,
            CheckMode::Bounded { depth },
            found,
        ));
    }
    'outer: loop {
        let tuple: Vec<&Vec<Event>> = idx.iter().map(|&k| &strings[k]).collect();
        let matched = (0..n).any(|i| {
            (i + 1..n).any(|j| {
                tuple[i] != tuple[j] && {
                    let a = first_common(tuple[i], &commons[i][j]);
                    a.is_some() && a == first_common(tuple[j], &commons[i][j])
                }
            })
        });
        if matched {
            let projected: Vec<Vec<Event>> =
                (0..n).map(|i| project_string(tuple[i], &sets[i])).collect();
            if tested.insert(projected.clone()) {
                let bound = projected.iter().map(Vec::len).sum();
                for word in enumerate_sync_product(&projected, sets, bound) {
                    if !task.defined(&word) && reported.insert(word.clone()) {
                        push(&mut found, Violation::IllegalString { word });
                    }
                }
            }
        }
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < strings.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    let mut report = ConditionReport::new(Condition::DC3, CheckMode::Bounded { depth }, found);
    report.note = Some(LITERAL_NOTE.to_string());
    Ok(report)
}

/// Two-agent reading: from every state, distinct strings sharing the first
/// common event must admit both cross interleavings.
fn dc3_two_agents(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    depth: usize,
) -> Result<ConditionReport> {
    let common: BTreeSet<Event> = sets[0].intersection(&sets[1]).cloned().collect();
    let access = access_words(task);
    let mut found = Vec::new();
    let mut reported = BTreeSet::new();
    for (q, prefix) in access.iter().enumerate() {
        let strings: Vec<Vec<Event>> = bounded_language_from(task, &BTreeSet::from([q]), depth)?
            .into_iter()
            .filter(|s| first_common(s, &common).is_some())
            .collect();
        for s in &strings {
            for t in &strings {
                if s == t || first_common(s, &common) != first_common(t, &common) {
                    continue;
                }
                let locals = [project_string(s, &sets[0]), project_string(t, &sets[1])];
                let bound = locals[0].len() + locals[1].len();
                for w in enumerate_sync_product(&locals, sets, bound) {
                    if !task.defined_from(q, &w) {
                        let mut word = prefix.clone();
                        word.extend(w);
                        if reported.insert(word.clone()) {
                            push(&mut found, Violation::IllegalString { word });
                        }
                    }
                }
            }
        }
    }
    Ok(ConditionReport::new(
        Condition::DC3,
        CheckMode::Bounded { depth },
        found,
    ))
}

/// Determinism of the bisimulation quotient of the local automata.
pub fn check_dc4(task: &Automaton, sets: &[BTreeSet<Event>]) -> Result<ConditionReport> {
    require_deterministic(task)?;
    let locals = local_automata(task, sets, Execution::Sequential);
    Ok(check_dc4_on(&locals))
}

/// DC4 on explicitly given local automata: nondeterministic successors
/// must accept the same continuations.
pub fn check_dc4_on(locals: &[Automaton]) -> ConditionReport {
    let mut found = Vec::new();
    for (agent, local) in locals.iter().enumerate() {
        for x in 0..local.num_states() {
            for e in local.alphabet() {
                let succ: Vec<StateId> = local.successors(x, e).collect();
                for (k, &x1) in succ.iter().enumerate() {
                    for &x2 in &succ[k + 1..] {
                        let start1 = local.closure([x1]);
                        let start2 = local.closure([x2]);
                        if let Some((_, t)) = distinguishing_word(local, &start1, local, &start2) {
                            push(
                                &mut found,
                                Violation::Nondeterminism {
                                    agent,
                                    state: local.name(x).to_string(),
                                    event: e.clone(),
                                    successors: [
                                        local.name(x1).to_string(),
                                        local.name(x2).to_string(),
                                    ],
                                    continuation: t,
                                },
                            );
                        }
                    }
                }
            }
        }
    }
    ConditionReport::new(Condition::DC4, CheckMode::Exact, found)
}

/// Direct oracle: the composed local automata bisimulate the task.
pub fn is_decomposable(task: &Automaton, sets: &[BTreeSet<Event>]) -> Result<RelationVerdict> {
    require_deterministic(task)?;
    let locals = local_automata(task, sets, Execution::Sequential);
    let refs: Vec<&Automaton> = locals.iter().collect();
    Ok(bisimilar(&compose_all(&refs)?, task))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionReport {
    pub conditions: Vec<ConditionReport>,
    pub oracle: RelationVerdict,
    /// Whether the conjunction of the conditions agrees with the oracle.
    pub consistent: bool,
}

impl DecompositionReport {
    pub fn conditions_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn decomposable(&self) -> bool {
        self.oracle.holds
    }

    pub fn get(&self, condition: Condition) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == condition)
    }

    /// Replays every witness of the conditions and of the oracle.
    pub fn witnesses_replay(
        &self,
        task: &Automaton,
        sets: &[BTreeSet<Event>],
        locals: &[Automaton],
    ) -> bool {
        let team = || {
            let refs: Vec<&Automaton> = locals.iter().collect();
            compose_all(&refs)
        };
        let oracle_ok = match &self.oracle.witness {
            None => true,
            Some(w) => team().map(|t| replay_oracle(w, &t, task)).unwrap_or(false),
        };
        oracle_ok
            && self
                .conditions
                .iter()
                .flat_map(|c| c.witnesses.iter())
                .all(|v| v.replay(task, sets, locals))
    }
}

fn replay_oracle(w: &Witness, team: &Automaton, task: &Automaton) -> bool {
    w.replay(team, task)
}

/// DC1 to DC4 in exact mode together with the oracle. `consistent` is false
/// when the two disagree; callers must surface that, never drop it.
pub fn decomposability_report(
    task: &Automaton,
    sets: &[BTreeSet<Event>],
    exec: Execution,
) -> Result<DecompositionReport> {
    require_deterministic(task)?;
    let locals = local_automata(task, sets, exec);
    let jobs = [0usize, 1, 2, 3, 4];
    let mut results = exec.map(&jobs, |&job| -> Result<Job> {
        Ok(match job {
            0 => Job::Condition(check_dc1(task, sets)?),
            1 => Job::Condition(check_dc2(task, sets)?),
            2 => Job::Condition(check_dc3_on(task, sets, &locals, CheckMode::Exact)?),
            3 => Job::Condition(check_dc4_on(&locals)),
            _ => {
                let refs: Vec<&Automaton> = locals.iter().collect();
                Job::Oracle(bisimilar(&compose_all(&refs)?, task))
            }
        })
    });
    let oracle = match results.pop() {
        Some(Ok(Job::Oracle(v))) => v,
        Some(Err(e)) => return Err(e),
        _ => unreachable!("oracle job is last"),
    };
    let mut conditions = Vec::new();
    for r in results {
        match r? {
            Job::Condition(c) => conditions.push(c),
            Job::Oracle(_) => unreachable!("single oracle job"),
        }
    }
    let holds = conditions.iter().all(|c| c.holds);
    Ok(DecompositionReport {
        consistent: holds == oracle.holds,
        conditions,
        oracle,
    })
}

enum Job {
    Condition(ConditionReport),
    Oracle(RelationVerdict),
}

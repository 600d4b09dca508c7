//! Event failures: passivity over the communication channels, the
//! post-failure local automata, conditions EF1 to EF4 and the two-agent
//! analysis.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::alphabet::{AgentId, DistributedAlphabet};
use crate::automaton::{Automaton, Event, Label, StateId};
use crate::compose::compose_all;
use crate::decomposability::{
    check_dc1, check_dc2, check_dc3_on, check_dc4_on, is_decomposable, local_automata, CheckMode,
    Condition, ConditionReport, Violation, WITNESS_LIMIT,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::projection::{project_automaton, state_classes};
use crate::relations::{bisimilar, distinguishing_word, RelationVerdict};

/// Failed events per agent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FailureSpec {
    failed: Vec<BTreeSet<Event>>,
}

impl FailureSpec {
    pub fn none(agents: usize) -> Self {
        FailureSpec {
            failed: vec![BTreeSet::new(); agents],
        }
    }

    /// Failures by agent name; every failed event must belong to the agent.
    pub fn new<I, E>(alphabet: &DistributedAlphabet, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, E)>,
        E: IntoIterator<Item = Event>,
    {
        let mut spec = Self::none(alphabet.agent_count());
        for (agent, events) in entries {
            let i = alphabet.agent_id(&agent)?;
            for e in events {
                if !alphabet.local_set(i).contains(&e) {
                    return Err(Error::FailureOutsideAlphabet { agent, event: e });
                }
                spec.failed[i].insert(e);
            }
        }
        Ok(spec)
    }

    /// Failures by agent index.
    pub fn from_sets(alphabet: &DistributedAlphabet, sets: Vec<BTreeSet<Event>>) -> Result<Self> {
        if sets.len() != alphabet.agent_count() {
            return Err(Error::AgentCount {
                expected: alphabet.agent_count(),
                found: sets.len(),
            });
        }
        let entries = sets
            .into_iter()
            .enumerate()
            .map(|(i, s)| (alphabet.agent_name(i).to_string(), s));
        Self::new(alphabet, entries)
    }

    pub fn agent_count(&self) -> usize {
        self.failed.len()
    }

    pub fn failed(&self, agent: AgentId) -> &BTreeSet<Event> {
        &self.failed[agent]
    }

    pub fn sets(&self) -> &[BTreeSet<Event>] {
        &self.failed
    }

    pub fn is_empty(&self) -> bool {
        self.failed.iter().all(BTreeSet::is_empty)
    }

    /// All `(agent, event)` failures in agent then event order.
    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, &Event)> + '_ {
        self.failed
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |e| (i, e)))
    }
}

/// Who sends each event to whom, and the reverse.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommMaps {
    snd: BTreeMap<(Event, AgentId), BTreeSet<AgentId>>,
    rcv: BTreeMap<(Event, AgentId), BTreeSet<AgentId>>,
}

impl CommMaps {
    /// Agents that `agent` sends `event` to.
    pub fn snd(&self, event: &str, agent: AgentId) -> BTreeSet<AgentId> {
        self.snd
            .get(&(event.to_string(), agent))
            .cloned()
            .unwrap_or_default()
    }

    /// Agents that `agent` receives `event` from.
    pub fn rcv(&self, event: &str, agent: AgentId) -> BTreeSet<AgentId> {
        self.rcv
            .get(&(event.to_string(), agent))
            .cloned()
            .unwrap_or_default()
    }
}

pub fn comm_maps(alphabet: &DistributedAlphabet) -> CommMaps {
    let mut maps = CommMaps::default();
    for c in alphabet.channels() {
        maps.snd
            .entry((c.event.clone(), c.sender))
            .or_default()
            .insert(c.receiver);
        maps.rcv
            .entry((c.event.clone(), c.receiver))
            .or_default()
            .insert(c.sender);
    }
    maps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PassivityReason {
    Passive,
    /// The agent receives the event from nobody: it is a source.
    NotReceived,
    /// The agent relays the event to `receiver`, which has no other sender.
    RelayWithoutBackup {
        receiver: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventPassivity {
    pub agent: String,
    #[serde(skip)]
    pub agent_id: AgentId,
    pub event: Event,
    pub passive: bool,
    pub reason: PassivityReason,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PassivityVerdict {
    pub events: Vec<EventPassivity>,
    pub all_passive: bool,
}

impl PassivityVerdict {
    pub fn passive_events(&self, agent: AgentId) -> BTreeSet<Event> {
        self.events
            .iter()
            .filter(|p| p.agent_id == agent && p.passive)
            .map(|p| p.event.clone())
            .collect()
    }

    pub fn non_passive(&self) -> impl Iterator<Item = &EventPassivity> {
        self.events.iter().filter(|p| !p.passive)
    }
}

/// Classification of a single failure of `event` in `agent`.
pub fn event_passivity(
    maps: &CommMaps,
    alphabet: &DistributedAlphabet,
    agent: AgentId,
    event: &str,
) -> PassivityReason {
    if maps.rcv(event, agent).is_empty() {
        return PassivityReason::NotReceived;
    }
    for k in maps.snd(event, agent) {
        let backed = (0..alphabet.agent_count())
            .any(|j| j != agent && j != k && maps.snd(event, j).contains(&k));
        if !backed {
            return PassivityReason::RelayWithoutBackup {
                receiver: alphabet.agent_name(k).to_string(),
            };
        }
    }
    PassivityReason::Passive
}

pub fn passivity(alphabet: &DistributedAlphabet, failures: &FailureSpec) -> PassivityVerdict {
    let maps = comm_maps(alphabet);
    let events: Vec<EventPassivity> = failures
        .pairs()
        .map(|(i, e)| {
            let reason = event_passivity(&maps, alphabet, i, e);
            EventPassivity {
                agent: alphabet.agent_name(i).to_string(),
                agent_id: i,
                event: e.clone(),
                passive: reason == PassivityReason::Passive,
                reason,
            }
        })
        .collect();
    PassivityVerdict {
        all_passive: events.iter().all(|p| p.passive),
        events,
    }
}

/// Post-failure automaton: transitions on non-passive failed events are
/// stopped (the events stay in the alphabet), then passive failed events are
/// projected away.
pub fn apply_failure(
    a: &Automaton,
    failed: &BTreeSet<Event>,
    passive: &BTreeSet<Event>,
) -> Result<Automaton> {
    if let Some(e) = failed.iter().find(|e| !a.alphabet().contains(*e)) {
        return Err(Error::UnknownEvent(e.clone()));
    }
    if !passive.is_subset(failed) {
        return Err(Error::Precondition(
            "passive events must be failed events".into(),
        ));
    }
    let stopped: BTreeSet<&Event> = failed.difference(passive).collect();
    let kept = if stopped.is_empty() {
        a.clone()
    } else {
        let edges = a
            .transitions()
            .filter(|(_, l, _)| !matches!(l, Label::Event(e) if stopped.contains(e)))
            .map(|(q, l, t)| (q, l.clone(), t))
            .collect();
        Automaton::assemble(
            a.state_names().to_vec(),
            a.initials().to_vec(),
            a.alphabet().clone(),
            edges,
        )
    };
    if passive.is_empty() {
        return Ok(kept);
    }
    let sigma: BTreeSet<Event> = kept.alphabet().difference(passive).cloned().collect();
    Ok(project_automaton(&kept, &sigma))
}

/// Refined sets: each local set without its passive failed events.
pub fn refined_alphabets(
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Vec<BTreeSet<Event>> {
    let verdict = passivity(alphabet, failures);
    (0..alphabet.agent_count())
        .map(|i| {
            alphabet
                .local_set(i)
                .difference(&verdict.passive_events(i))
                .cloned()
                .collect()
        })
        .collect()
}

/// `F(P_i(A_S))` for every agent.
pub fn failed_locals(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
    exec: Execution,
) -> Result<Vec<Automaton>> {
    let verdict = passivity(alphabet, failures);
    let locals = local_automata(task, alphabet.local_sets(), exec);
    let agents: Vec<AgentId> = (0..alphabet.agent_count()).collect();
    exec.map(&agents, |&i| {
        apply_failure(&locals[i], failures.failed(i), &verdict.passive_events(i))
    })
    .into_iter()
    .collect()
}

fn passivity_gate(
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Result<PassivityVerdict> {
    let verdict = passivity(alphabet, failures);
    if let Some(p) = verdict.non_passive().next() {
        return Err(Error::NonPassiveFailure {
            agent: p.agent.clone(),
            event: p.event.clone(),
        });
    }
    Ok(verdict)
}

/// EF1 to EF4: the decomposability conditions on the refined sets, with
/// EF4 evaluated on the post-failure local automata.
pub fn check_ef(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
    which: Condition,
    mode: CheckMode,
) -> Result<ConditionReport> {
    passivity_gate(alphabet, failures)?;
    let sigma = refined_alphabets(alphabet, failures);
    let report = match which {
        Condition::EF1 | Condition::DC1 => check_dc1(task, &sigma)?,
        Condition::EF2 | Condition::DC2 => check_dc2(task, &sigma)?,
        Condition::EF3 | Condition::DC3 => {
            let locals = failed_locals(task, alphabet, failures, Execution::Sequential)?;
            check_dc3_on(task, &sigma, &locals, mode)?
        }
        Condition::EF4 | Condition::DC4 => {
            let locals = failed_locals(task, alphabet, failures, Execution::Sequential)?;
            check_dc4_on(&locals)
        }
    };
    let tag = if Condition::DC.contains(&which) {
        which.dual()
    } else {
        which
    };
    Ok(report.retag(tag))
}

/// Literal EF1: co-location is read off the original sets minus the failed
/// events, without building the refined sets.
pub fn literal_ef1(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Result<ConditionReport> {
    if !task.is_deterministic() {
        return Err(Error::NotDeterministic("task automaton"));
    }
    let decides = |e1: &str, e2: &str| {
        (0..alphabet.agent_count()).any(|i| {
            let f = failures.failed(i);
            let own = alphabet.local_set(i);
            own.contains(e1) && own.contains(e2) && !f.contains(e1) && !f.contains(e2)
        })
    };
    let mut found = Vec::new();
    for q in 0..task.num_states() {
        let enabled: Vec<&str> = task.enabled(q).into_iter().collect();
        for (k, e1) in enabled.iter().enumerate() {
            for e2 in &enabled[k + 1..] {
                if decides(e1, e2) {
                    continue;
                }
                let w = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
                if !(task.defined_from(q, &w(e1, e2)) && task.defined_from(q, &w(e2, e1)))
                    && found.len() < WITNESS_LIMIT
                {
                    found.push(Violation::Selection {
                        state: task.name(q).to_string(),
                        events: [e1.to_string(), e2.to_string()],
                    });
                }
            }
        }
    }
    Ok(report(Condition::EF1, found))
}

fn report(condition: Condition, witnesses: Vec<Violation>) -> ConditionReport {
    ConditionReport {
        condition,
        holds: witnesses.is_empty(),
        mode: CheckMode::Exact,
        witnesses,
        note: None,
    }
}

/// Pairs of states of a deterministic automaton that accept the same
/// continuations, as a greatest fixpoint on enabled-event agreement.
fn agreement(task: &Automaton) -> Vec<Vec<bool>> {
    let n = task.num_states();
    let next = |q: StateId, e: &str| task.successors(q, e).next();
    let mut agree = vec![vec![true; n]; n];
    for (x, row) in agree.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            *cell = task.enabled(x) == task.enabled(y);
        }
    }
    loop {
        let mut changed = false;
        for x in 0..n {
            for y in 0..n {
                if agree[x][y] {
                    let broken =
                        task.enabled(x)
                            .into_iter()
                            .any(|e| match (next(x, e), next(y, e)) {
                                (Some(x2), Some(y2)) => !agree[x2][y2],
                                _ => true,
                            });
                    if broken {
                        agree[x][y] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return agree;
        }
    }
}

fn order_violation(
    task: &Automaton,
    agree: &[Vec<bool>],
    q: StateId,
    e1: &str,
    e2: &str,
) -> Option<Violation> {
    let two = |a: &str, b: &str| {
        task.successors(q, a)
            .next()
            .and_then(|r| task.successors(r, b).next())
    };
    let state = task.name(q).to_string();
    let events = |a: &str, b: &str| [a.to_string(), b.to_string()];
    match (two(e1, e2), two(e2, e1)) {
        (None, None) => None,
        (Some(_), None) => Some(Violation::OrderMissing {
            state,
            events: events(e1, e2),
        }),
        (None, Some(_)) => Some(Violation::OrderMissing {
            state,
            events: events(e2, e1),
        }),
        (Some(x), Some(y)) if agree[x][y] => None,
        (Some(x), Some(y)) => {
            let (_, t) =
                distinguishing_word(task, &BTreeSet::from([x]), task, &BTreeSet::from([y]))?;
            Some(Violation::OrderDiverges {
                state,
                events: events(e1, e2),
                continuation: t,
            })
        }
    }
}

/// Literal EF2: the quantification over continuations is discharged by a
/// state-agreement fixpoint rather than by language comparison.
pub fn literal_ef2(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Result<ConditionReport> {
    if !task.is_deterministic() {
        return Err(Error::NotDeterministic("task automaton"));
    }
    let agree = agreement(task);
    let events: Vec<&Event> = task.alphabet().iter().collect();
    let decides = |e1: &str, e2: &str| {
        (0..alphabet.agent_count()).any(|i| {
            let f = failures.failed(i);
            let own = alphabet.local_set(i);
            own.contains(e1) && own.contains(e2) && !f.contains(e1) && !f.contains(e2)
        })
    };
    let mut found = Vec::new();
    for q in 0..task.num_states() {
        for (k, e1) in events.iter().enumerate() {
            for e2 in &events[k + 1..] {
                if decides(e1, e2) {
                    continue;
                }
                if let Some(v) = order_violation(task, &agree, q, e1, e2) {
                    if found.len() < WITNESS_LIMIT {
                        found.push(v);
                    }
                }
            }
        }
    }
    Ok(report(Condition::EF2, found))
}

/// Literal EF4 on the pre-failure local automata: for `x1` reached by
/// `t1 e` with `t1` over failed events and `x2` reached by `e` directly,
/// both must accept the same continuations over the local set.
pub fn literal_ef4(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Result<ConditionReport> {
    if !task.is_deterministic() {
        return Err(Error::NotDeterministic("task automaton"));
    }
    let mut found = Vec::new();
    for (i, local) in local_automata(task, alphabet.local_sets(), Execution::Sequential)
        .iter()
        .enumerate()
    {
        let failed = failures.failed(i);
        for x in 0..local.num_states() {
            let reach = failed_reach(local, x, failed);
            for e in local.alphabet().difference(failed) {
                let direct: BTreeSet<StateId> = local.successors(x, e).collect();
                for (&y, prefix) in &reach {
                    for x1 in local.successors(y, e) {
                        for &x2 in &direct {
                            if x1 == x2 {
                                continue;
                            }
                            let one = |s| BTreeSet::from([s]);
                            if let Some((_, t)) =
                                distinguishing_word(local, &one(x1), local, &one(x2))
                            {
                                if found.len() < WITNESS_LIMIT {
                                    found.push(Violation::PrefixedNondeterminism {
                                        agent: i,
                                        state: local.name(x).to_string(),
                                        prefix: prefix.clone(),
                                        event: e.clone(),
                                        successors: [
                                            local.name(x1).to_string(),
                                            local.name(x2).to_string(),
                                        ],
                                        continuation: t,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report(Condition::EF4, found))
}

/// States reachable from `x` by failed events only, each with a shortest
/// failed-event word reaching it.
fn failed_reach(
    a: &Automaton,
    x: StateId,
    failed: &BTreeSet<Event>,
) -> BTreeMap<StateId, Vec<Event>> {
    let mut seen = BTreeMap::from([(x, Vec::new())]);
    let mut queue = std::collections::VecDeque::from([x]);
    while let Some(q) = queue.pop_front() {
        let base = seen[&q].clone();
        for (l, t) in a.edges(q) {
            if let Label::Event(e) = l {
                if failed.contains(e) && !seen.contains_key(t) {
                    let mut w = base.clone();
                    w.push(e.clone());
                    seen.insert(*t, w);
                    queue.push_back(*t);
                }
            }
        }
    }
    seen
}

/// A condition checked by two independent implementations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualCheck {
    pub condition: Condition,
    pub literal_holds: bool,
    pub refined_holds: bool,
    pub agree: bool,
    pub literal: ConditionReport,
}

impl DualCheck {
    fn new(literal: ConditionReport, refined_holds: bool) -> Self {
        DualCheck {
            condition: literal.condition,
            literal_holds: literal.holds,
            refined_holds,
            agree: literal.holds == refined_holds,
            literal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailureReport {
    pub passivity: PassivityVerdict,
    pub refined: Vec<BTreeSet<Event>>,
    /// Decomposability before the failures.
    pub pre_failure: RelationVerdict,
    /// EF1 to EF4; empty when a failure is not passive.
    pub conditions: Vec<ConditionReport>,
    pub duals: Vec<DualCheck>,
    /// Bisimilarity of the composed post-failure local automata with the task.
    pub oracle: RelationVerdict,
    /// Passivity holds and the oracle holds.
    pub remains_decomposable: bool,
    /// EF conjunction agrees with the oracle (vacuous when the passivity gate fails).
    pub consistent: bool,
    pub two_agent: Option<TwoAgentReport>,
}

impl FailureReport {
    pub fn get(&self, condition: Condition) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == condition)
    }

    pub fn conditions_hold(&self) -> bool {
        !self.conditions.is_empty() && self.conditions.iter().all(|c| c.holds)
    }
}

/// Passivity gate, EF1 to EF4 with their literal duals, and the oracle. The
/// oracle is always evaluated so the report can be read even when a gate fails.
pub fn remains_decomposable(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
    exec: Execution,
) -> Result<FailureReport> {
    if !task.is_deterministic() {
        return Err(Error::NotDeterministic("task automaton"));
    }
    if failures.agent_count() != alphabet.agent_count() {
        return Err(Error::AgentCount {
            expected: alphabet.agent_count(),
            found: failures.agent_count(),
        });
    }
    let verdict = passivity(alphabet, failures);
    let refined = refined_alphabets(alphabet, failures);
    let post = failed_locals(task, alphabet, failures, exec)?;
    let refs: Vec<&Automaton> = post.iter().collect();
    let team = compose_all(&refs)?;
    let ((pre_failure, oracle), gated) = exec.join(
        || {
            (
                is_decomposable(task, alphabet.local_sets()),
                bisimilar(&team, task),
            )
        },
        || -> Result<Option<(Vec<ConditionReport>, Vec<DualCheck>)>> {
            if !verdict.all_passive {
                return Ok(None);
            }
            let conditions = exec
                .map(&Condition::EF, |&c| {
                    check_ef(task, alphabet, failures, c, CheckMode::Exact)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let holds = |c: Condition| conditions.iter().any(|r| r.condition == c && r.holds);
            let duals = vec![
                DualCheck::new(
                    literal_ef1(task, alphabet, failures)?,
                    holds(Condition::EF1),
                ),
                DualCheck::new(
                    literal_ef2(task, alphabet, failures)?,
                    holds(Condition::EF2),
                ),
                DualCheck::new(
                    literal_ef4(task, alphabet, failures)?,
                    holds(Condition::EF4),
                ),
            ];
            Ok(Some((conditions, duals)))
        },
    );
    let (pre_failure, oracle) = (pre_failure?, oracle);
    let (conditions, duals) = gated?.unwrap_or_default();
    let consistent = conditions.is_empty() || conditions.iter().all(|c| c.holds) == oracle.holds;
    let two_agent = if alphabet.agent_count() == 2 {
        Some(two_agent_analysis(task, alphabet, failures)?)
    } else {
        None
    };
    Ok(FailureReport {
        passivity: verdict.clone(),
        refined,
        pre_failure,
        remains_decomposable: verdict.all_passive && oracle.holds,
        consistent,
        conditions,
        duals,
        oracle,
        two_agent,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadrantCheck {
    pub quadrant: &'static str,
    pub holds: bool,
    pub witnesses: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WholeAgentFailure {
    pub agent: String,
    pub passive: bool,
    pub oracle: bool,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoAgentReport {
    /// The two failed sets are disjoint.
    pub disjoint_failures: bool,
    /// Every failed event is shared by both agents.
    pub failures_shared: bool,
    /// `Σ1 ∖ Σ2 = (E1 ∖ E2) ∪ F2` and symmetrically.
    pub sigma_difference: bool,
    /// Switch and order over the pre-failure quadrant and the three failure quadrants.
    pub quadrants: Vec<QuadrantCheck>,
    /// Switch and order on the three failure quadrants.
    pub switch_order_holds: bool,
    /// DC1 and DC2 on the refined sets.
    pub refined_dc12_holds: bool,
    /// `switch_order_holds == refined_dc12_holds`; only meaningful when the
    /// task is decomposable before the failures.
    pub agree: bool,
    pub whole_agent: Option<WholeAgentFailure>,
}

/// Identities and quadrant checks specific to two agents.
pub fn two_agent_analysis(
    task: &Automaton,
    alphabet: &DistributedAlphabet,
    failures: &FailureSpec,
) -> Result<TwoAgentReport> {
    if alphabet.agent_count() != 2 {
        return Err(Error::AgentCount {
            expected: 2,
            found: alphabet.agent_count(),
        });
    }
    if !task.is_deterministic() {
        return Err(Error::NotDeterministic("task automaton"));
    }
    let (e1, e2) = (alphabet.local_set(0), alphabet.local_set(1));
    let (f1, f2) = (failures.failed(0), failures.failed(1));
    let sigma = refined_alphabets(alphabet, failures);
    let shared: BTreeSet<Event> = e1.intersection(e2).cloned().collect();
    let only1: BTreeSet<Event> = e1.difference(e2).cloned().collect();
    let only2: BTreeSet<Event> = e2.difference(e1).cloned().collect();
    let union = |a: &BTreeSet<Event>, b: &BTreeSet<Event>| -> BTreeSet<Event> {
        a.union(b).cloned().collect()
    };
    let diff = |a: &BTreeSet<Event>, b: &BTreeSet<Event>| -> BTreeSet<Event> {
        a.difference(b).cloned().collect()
    };
    let sigma_difference = diff(&sigma[0], &sigma[1]) == union(&only1, f2)
        && diff(&sigma[1], &sigma[0]) == union(&only2, f1);

    let agree = agreement(task);
    let quadrant = |name: &'static str, xs: &BTreeSet<Event>, ys: &BTreeSet<Event>| {
        let mut witnesses = Vec::new();
        for q in 0..task.num_states() {
            for x in xs {
                for y in ys {
                    if x == y {
                        continue;
                    }
                    let one = |e: &str| task.defined_from(q, &[e.to_string()]);
                    let both =
                        |a: &str, b: &str| task.defined_from(q, &[a.to_string(), b.to_string()]);
                    if one(x) && one(y) && !(both(x, y) && both(y, x)) {
                        witnesses.push(Violation::Selection {
                            state: task.name(q).to_string(),
                            events: [x.clone(), y.clone()],
                        });
                    } else if let Some(v) = order_violation(task, &agree, q, x, y) {
                        witnesses.push(v);
                    }
                }
            }
        }
        witnesses.truncate(WITNESS_LIMIT);
        QuadrantCheck {
            quadrant: name,
            holds: witnesses.is_empty(),
            witnesses,
        }
    };
    let quadrants = vec![
        quadrant("E1-E2 x E2-E1", &only1, &only2),
        quadrant("E1-E2 x F1", &only1, f1),
        quadrant("F2 x E2-E1", f2, &only2),
        quadrant("F1 x F2", f1, f2),
    ];
    let switch_order_holds = quadrants[1..].iter().all(|q| q.holds);
    let refined_dc12_holds = check_dc1(task, &sigma)?.holds && check_dc2(task, &sigma)?.holds;

    let whole_agent = (0..2).find(|&i| {
        !alphabet.local_set(i).is_empty() && failures.failed(i) == alphabet.local_set(i)
    });
    let whole_agent = match whole_agent {
        None => None,
        Some(i) => {
            let single = FailureSpec::from_sets(
                alphabet,
                (0..2)
                    .map(|j| {
                        if j == i {
                            alphabet.local_set(i).clone()
                        } else {
                            BTreeSet::new()
                        }
                    })
                    .collect(),
            )?;
            let passive = passivity(alphabet, &single).all_passive;
            let post = failed_locals(task, alphabet, &single, Execution::Sequential)?;
            let refs: Vec<&Automaton> = post.iter().collect();
            let oracle = bisimilar(&compose_all(&refs)?, task).holds;
            Some(WholeAgentFailure {
                agent: alphabet.agent_name(i).to_string(),
                passive,
                oracle,
                agree: passive == oracle,
            })
        }
    };

    Ok(TwoAgentReport {
        disjoint_failures: f1.is_disjoint(f2),
        failures_shared: f1.is_subset(&shared) && f2.is_subset(&shared),
        sigma_difference,
        agree: switch_order_holds == refined_dc12_holds,
        quadrants,
        switch_order_holds,
        refined_dc12_holds,
        whole_agent,
    })
}

/// Whether some state of `a` has a transition on `event`.
pub fn occurs(a: &Automaton, event: &str) -> bool {
    a.transitions().any(|(_, l, _)| l.as_event() == Some(event))
}

/// Per-agent state classes of the refined projection, for diagnostics.
pub fn refined_classes(task: &Automaton, sigma: &[BTreeSet<Event>]) -> Vec<usize> {
    sigma.iter().map(|s| state_classes(task, s).len()).collect()
}

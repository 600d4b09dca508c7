//! Simulation, bisimulation and language comparisons, each with a
//! replayable witness when the relation fails.
//!
//! Relations are computed as greatest fixpoints over state pairs, starting
//! from the full product and deleting pairs whose moves cannot be matched.
//! Witnesses are searched breadth-first with events in lexicographic order,
//! so the reported word is the shortlex-least one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::automaton::{format_word, Automaton, Event, StateId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A continuation on which `state` disagrees with the witness state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Refutation {
    pub state: String,
    pub continuation: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `word` is executable on `side` and not on the other automaton.
    Trace { side: Side, word: Vec<Event> },
    /// After `prefix`, `side` can be in `state`; every state the other
    /// automaton can be in after `prefix` is listed with a continuation on
    /// which it disagrees with `state`.
    Branching {
        side: Side,
        prefix: Vec<Event>,
        state: String,
        refutations: Vec<Refutation>,
    },
    /// The fixpoint left an initial state of `side` unmatched and no
    /// language-level experiment separates it.
    Unmatched { side: Side, state: String },
}

impl Witness {
    /// Re-executes the witness against the initial states of both automata.
    pub fn replay(&self, left: &Automaton, right: &Automaton) -> bool {
        self.replay_from(left, &left.initial_set(), right, &right.initial_set())
    }

    /// Re-executes the witness from explicit (closed) start sets.
    pub fn replay_from(
        &self,
        left: &Automaton,
        left_start: &BTreeSet<StateId>,
        right: &Automaton,
        right_start: &BTreeSet<StateId>,
    ) -> bool {
        let pick = |side: Side| match side {
            Side::Left => ((left, left_start), (right, right_start)),
            Side::Right => ((right, right_start), (left, left_start)),
        };
        match self {
            Witness::Trace { side, word } => {
                let ((a, sa), (b, sb)) = pick(*side);
                !a.run_from(sa, word).is_empty() && b.run_from(sb, word).is_empty()
            }
            Witness::Branching {
                side,
                prefix,
                state,
                refutations,
            } => {
                let ((a, sa), (b, sb)) = pick(*side);
                let Ok(x) = a.state_id(state) else {
                    return false;
                };
                if !a.run_from(sa, prefix).contains(&x) {
                    return false;
                }
                let others: BTreeSet<StateId> = b.run_from(sb, prefix);
                let listed: Result<BTreeSet<StateId>> =
                    refutations.iter().map(|r| b.state_id(&r.state)).collect();
                if listed.as_ref().ok() != Some(&others) {
                    return false;
                }
                refutations.iter().all(|r| {
                    let y = b.state_id(&r.state).unwrap();
                    a.defined_from(x, &r.continuation) != b.defined_from(y, &r.continuation)
                })
            }
            Witness::Unmatched { side, state } => {
                let ((a, sa), _) = pick(*side);
                a.state_id(state).map(|q| sa.contains(&q)).unwrap_or(false)
            }
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Trace { side, word } => write!(
                f,
                "{side:?} side alone can execute \"{}\"",
                format_word(word)
            ),
            Witness::Branching {
                side,
                prefix,
                state,
                refutations,
            } => {
                write!(
                    f,
                    "after \"{}\" the {side:?} side may be in {state}; ",
                    format_word(prefix)
                )?;
                let parts: Vec<String> = refutations
                    .iter()
                    .map(|r| {
                        format!(
                            "{} differs on \"{}\"",
                            r.state,
                            format_word(&r.continuation)
                        )
                    })
                    .collect();
                write!(f, "{}", parts.join(", "))
            }
            Witness::Unmatched { side, state } => {
                write!(f, "{side:?} initial state {state} is unmatched")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationVerdict {
    pub holds: bool,
    /// State pairs of the greatest relation, when it holds.
    pub relation: Vec<(String, String)>,
    pub witness: Option<Witness>,
}

impl RelationVerdict {
    fn holds(relation: Vec<(String, String)>) -> Self {
        RelationVerdict {
            holds: true,
            relation,
            witness: None,
        }
    }

    fn violated(witness: Witness) -> Self {
        RelationVerdict {
            holds: false,
            relation: Vec::new(),
            witness: Some(witness),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Compare {
    /// Find a word accepted by exactly one side.
    Equal,
    /// Find a word accepted by the left side only.
    Included,
}

/// Shortlex-least word separating the languages from two start sets.
fn separate(
    a: &Automaton,
    a_start: &BTreeSet<StateId>,
    b: &Automaton,
    b_start: &BTreeSet<StateId>,
    mode: Compare,
) -> Option<(Side, Vec<Event>)> {
    match (a_start.is_empty(), b_start.is_empty()) {
        (false, true) => return Some((Side::Left, Vec::new())),
        (true, false) if mode == Compare::Equal => return Some((Side::Right, Vec::new())),
        (true, _) => return None,
        _ => {}
    }
    let events: BTreeSet<&Event> = a.alphabet().iter().chain(b.alphabet().iter()).collect();
    type Node = (BTreeSet<StateId>, BTreeSet<StateId>);
    let mut visited: BTreeSet<Node> = BTreeSet::new();
    let mut parents: Vec<(usize, Option<&Event>)> = vec![(usize::MAX, None)];
    let mut queue: VecDeque<(Node, usize)> = VecDeque::new();
    let start = (a_start.clone(), b_start.clone());
    visited.insert(start.clone());
    queue.push_back((start, 0));
    let word_of = |parents: &Vec<(usize, Option<&Event>)>, mut node: usize| {
        let mut word = Vec::new();
        while let (p, Some(e)) = parents[node] {
            word.push(e.clone());
            node = p;
        }
        word.reverse();
        word
    };
    while let Some(((sa, sb), node)) = queue.pop_front() {
        for &e in &events {
            let ta = a.step(&sa, e);
            let tb = b.step(&sb, e);
            let hit = match (ta.is_empty(), tb.is_empty()) {
                (false, true) => Some(Side::Left),
                (true, false) if mode == Compare::Equal => Some(Side::Right),
                _ => None,
            };
            if let Some(side) = hit {
                let mut word = word_of(&parents, node);
                word.push(e.clone());
                return Some((side, word));
            }
            if ta.is_empty() || tb.is_empty() {
                continue;
            }
            let next = (ta, tb);
            if visited.insert(next.clone()) {
                parents.push((node, Some(e)));
                queue.push_back((next, parents.len() - 1));
            }
        }
    }
    None
}

/// Shortlex-least word accepted from exactly one of the two start sets.
pub fn distinguishing_word(
    a: &Automaton,
    a_start: &BTreeSet<StateId>,
    b: &Automaton,
    b_start: &BTreeSet<StateId>,
) -> Option<(Side, Vec<Event>)> {
    separate(a, a_start, b, b_start, Compare::Equal)
}

pub fn language_equal(a: &Automaton, b: &Automaton) -> bool {
    distinguishing_word(a, &a.initial_set(), b, &b.initial_set()).is_none()
}

/// Pairs relation over `a × b`; `both` requests bisimulation, otherwise
/// simulation of `a` by `b`.
fn greatest_relation(a: &Automaton, b: &Automaton, both: bool) -> Vec<Vec<bool>> {
    let mut rel = vec![vec![true; b.num_states()]; a.num_states()];
    let matched =
        |rel: &Vec<Vec<bool>>, x: &Automaton, p: StateId, y: &Automaton, q: StateId, flip: bool| {
            x.edges(p).iter().all(|(l, p2)| {
                let Some(e) = l.as_event() else { return true };
                y.successors(q, e)
                    .any(|q2| if flip { rel[q2][*p2] } else { rel[*p2][q2] })
            })
        };
    loop {
        let mut changed = false;
        for p in 0..a.num_states() {
            for q in 0..b.num_states() {
                if !rel[p][q] {
                    continue;
                }
                let ok =
                    matched(&rel, a, p, b, q, false) && (!both || matched(&rel, b, q, a, p, true));
                if !ok {
                    rel[p][q] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

fn relation_pairs(a: &Automaton, b: &Automaton, rel: &[Vec<bool>]) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for (p, row) in rel.iter().enumerate() {
        for (q, &r) in row.iter().enumerate() {
            if r {
                pairs.push((a.name(p).to_string(), b.name(q).to_string()));
            }
        }
    }
    pairs
}

/// Searches prefixes for a state on one side that every co-reachable state of
/// the other side disagrees with, in the sense of `mode`.
fn branching_witness(a: &Automaton, b: &Automaton, simulation_only: bool) -> Option<Witness> {
    const BUDGET: usize = 20_000;
    let events: BTreeSet<&Event> = a.alphabet().iter().chain(b.alphabet().iter()).collect();
    let start = (a.initial_set(), b.initial_set());
    let mut visited = BTreeSet::new();
    visited.insert(start.clone());
    let mut queue = VecDeque::from([(start, Vec::<Event>::new())]);
    let refute =
        |x_aut: &Automaton, x: StateId, y_aut: &Automaton, ys: &BTreeSet<StateId>, mode| {
            let mut refutations = Vec::new();
            for &y in ys {
                let (_, word) =
                    separate(x_aut, &x_aut.closure([x]), y_aut, &y_aut.closure([y]), mode)?;
                refutations.push(Refutation {
                    state: y_aut.name(y).to_string(),
                    continuation: word,
                });
            }
            Some(refutations)
        };
    while let Some(((sa, sb), prefix)) = queue.pop_front() {
        let mode = if simulation_only {
            Compare::Included
        } else {
            Compare::Equal
        };
        for &x in &sa {
            if let Some(refutations) = refute(a, x, b, &sb, mode) {
                return Some(Witness::Branching {
                    side: Side::Left,
                    prefix,
                    state: a.name(x).to_string(),
                    refutations,
                });
            }
        }
        if !simulation_only {
            for &y in &sb {
                if let Some(refutations) = refute(b, y, a, &sa, Compare::Equal) {
                    return Some(Witness::Branching {
                        side: Side::Right,
                        prefix,
                        state: b.name(y).to_string(),
                        refutations,
                    });
                }
            }
        }
        if visited.len() > BUDGET {
            break;
        }
        for &e in &events {
            let ta = a.step(&sa, e);
            let tb = b.step(&sb, e);
            if ta.is_empty() || tb.is_empty() {
                continue;
            }
            let next = (ta, tb);
            if visited.insert(next.clone()) {
                let mut p = prefix.clone();
                p.push(e.clone());
                queue.push_back((next, p));
            }
        }
    }
    None
}

/// Whether `right` simulates `left` (every move of `left` is matched by `right`).
pub fn simulates(left: &Automaton, right: &Automaton) -> RelationVerdict {
    let a = left.without_hidden();
    let b = right.without_hidden();
    let rel = greatest_relation(&a, &b, false);
    let covered = a
        .initials()
        .iter()
        .all(|&p| b.initials().iter().any(|&q| rel[p][q]));
    if covered {
        return RelationVerdict::holds(relation_pairs(&a, &b, &rel));
    }
    if let Some((_, word)) = separate(
        &a,
        &a.initial_set(),
        &b,
        &b.initial_set(),
        Compare::Included,
    ) {
        return RelationVerdict::violated(Witness::Trace {
            side: Side::Left,
            word,
        });
    }
    let witness =
        branching_witness(&a, &b, true).unwrap_or_else(|| unmatched(&a, &b, &rel, Side::Left));
    RelationVerdict::violated(witness)
}

/// Greatest bisimulation between the two automata.
pub fn bisimilar(left: &Automaton, right: &Automaton) -> RelationVerdict {
    let a = left.without_hidden();
    let b = right.without_hidden();
    let rel = greatest_relation(&a, &b, true);
    let forward = a
        .initials()
        .iter()
        .all(|&p| b.initials().iter().any(|&q| rel[p][q]));
    let backward = b
        .initials()
        .iter()
        .all(|&q| a.initials().iter().any(|&p| rel[p][q]));
    if forward && backward {
        return RelationVerdict::holds(relation_pairs(&a, &b, &rel));
    }
    if let Some((side, word)) = distinguishing_word(&a, &a.initial_set(), &b, &b.initial_set()) {
        return RelationVerdict::violated(Witness::Trace { side, word });
    }
    let side = if forward { Side::Right } else { Side::Left };
    let witness = branching_witness(&a, &b, false).unwrap_or_else(|| unmatched(&a, &b, &rel, side));
    RelationVerdict::violated(witness)
}

fn unmatched(a: &Automaton, b: &Automaton, rel: &[Vec<bool>], side: Side) -> Witness {
    let state = match side {
        Side::Left => a
            .initials()
            .iter()
            .find(|&&p| !b.initials().iter().any(|&q| rel[p][q]))
            .map(|&p| a.name(p)),
        Side::Right => b
            .initials()
            .iter()
            .find(|&&q| !a.initials().iter().any(|&p| rel[p][q]))
            .map(|&q| b.name(q)),
    };
    Witness::Unmatched {
        side,
        state: state.unwrap_or_default().to_string(),
    }
}

/// Whether `L(left) ⊆ L(reference)`; the counterexample is the shortlex-least
/// word of `left` that `reference` rejects.
pub fn language_included(left: &Automaton, reference: &Automaton) -> Result<RelationVerdict> {
    if !reference.is_deterministic() {
        return Err(Error::NotDeterministic("reference automaton"));
    }
    Ok(
        match separate(
            left,
            &left.initial_set(),
            reference,
            &reference.initial_set(),
            Compare::Included,
        ) {
            None => RelationVerdict::holds(Vec::new()),
            Some((_, word)) => RelationVerdict::violated(Witness::Trace {
                side: Side::Left,
                word,
            }),
        },
    )
}

/// Whether two states of the same automaton accept the same words. For a
/// nondeterministic automaton each state stands for its closure, which is the
/// corresponding subset-construction state.
pub fn state_language_equal(a: &Automaton, q1: &str, q2: &str) -> Result<RelationVerdict> {
    let x = a.state_id(q1)?;
    let y = a.state_id(q2)?;
    Ok(state_language_equal_ids(a, x, y))
}

pub(crate) fn state_language_equal_ids(a: &Automaton, x: StateId, y: StateId) -> RelationVerdict {
    match distinguishing_word(a, &a.closure([x]), a, &a.closure([y])) {
        None => RelationVerdict::holds(vec![(a.name(x).to_string(), a.name(y).to_string())]),
        Some((side, word)) => RelationVerdict::violated(Witness::Trace { side, word }),
    }
}

/// Partition of states into language-equivalence classes, by class index.
pub fn language_classes(a: &Automaton) -> BTreeMap<StateId, usize> {
    let mut classes: Vec<StateId> = Vec::new();
    let mut out = BTreeMap::new();
    for q in 0..a.num_states() {
        let found = classes
            .iter()
            .position(|&r| distinguishing_word(a, &a.closure([q]), a, &a.closure([r])).is_none());
        let idx = found.unwrap_or_else(|| {
            classes.push(q);
            classes.len() - 1
        });
        out.insert(q, idx);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_word;

    fn aut(edges: &[(&str, &str, &str)]) -> Automaton {
        Automaton::from_edges(edges[0].0, edges).unwrap()
    }

    #[test]
    fn reflexive_relations_hold() {
        let a = aut(&[("q0", "a", "q1"), ("q1", "b", "q0")]);
        let s = simulates(&a, &a);
        assert!(s.holds);
        assert!(s.relation.contains(&("q0".into(), "q0".into())));
        assert!(bisimilar(&a, &a).holds);
        assert!(language_included(&a, &a).unwrap().holds);
    }

    #[test]
    fn language_equal_but_not_bisimilar() {
        // a.(b + c) versus a.b + a.c
        let x = aut(&[("p", "a", "p1"), ("p1", "b", "p2"), ("p1", "c", "p3")]);
        let y = aut(&[
            ("q", "a", "q1"),
            ("q", "a", "q2"),
            ("q1", "b", "q3"),
            ("q2", "c", "q4"),
        ]);
        assert!(language_equal(&x, &y));
        let v = bisimilar(&x, &y);
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert!(w.replay(&x, &y), "{w:?}");
        assert!(simulates(&y, &x).holds);
        let s = simulates(&x, &y);
        assert!(!s.holds);
        assert!(s.witness.unwrap().replay(&x, &y));
    }

    #[test]
    fn inclusion_counterexample_is_shortlex_least() {
        let a = aut(&[("p", "a", "p1"), ("p", "b", "p2"), ("p1", "c", "p3")]);
        let d = aut(&[("q", "a", "q1")]);
        let v = language_included(&a, &d).unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::Trace {
                side: Side::Left,
                word: parse_word("b")
            })
        );
    }

    #[test]
    fn inclusion_requires_deterministic_reference() {
        let n = aut(&[("q", "a", "q1"), ("q", "a", "q2")]);
        assert!(language_included(&n, &n).is_err());
    }

    #[test]
    fn state_language_equality() {
        let a = aut(&[("x", "c", "y"), ("x", "c", "z"), ("z", "a", "u")]);
        let v = state_language_equal(&a, "y", "z").unwrap();
        assert!(!v.holds);
        assert_eq!(
            v.witness,
            Some(Witness::Trace {
                side: Side::Right,
                word: parse_word("a")
            })
        );
        assert!(state_language_equal(&a, "y", "y").unwrap().holds);
        assert!(state_language_equal(&a, "y", "nope").is_err());
    }
}

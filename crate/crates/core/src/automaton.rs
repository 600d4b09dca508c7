//! Finite automata with optional nondeterminism and hidden moves.
//!
//! An [`Automaton`] is immutable once built. Every constructor normalizes to
//! the accessible part, so all states are reachable from the initial set.
//! States carry opaque string names; operations that synthesize new states
//! (subset construction, products, quotients) derive canonical names from
//! their constituents, which keeps printed output stable between runs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

pub type Event = String;
pub type StateId = usize;

/// Token used for hidden moves in textual formats.
pub const HIDDEN_TOKEN: &str = "eps";

/// Transition label: an observable event or a hidden move.
///
/// `Hidden` orders before every event so hidden moves come first in
/// adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Hidden,
    Event(Event),
}

impl Label {
    pub fn event(name: impl Into<Event>) -> Self {
        Label::Event(name.into())
    }

    /// Reads a label token; `eps` and `ε` denote a hidden move.
    pub fn parse(token: &str) -> Self {
        match token {
            HIDDEN_TOKEN | "ε" => Label::Hidden,
            other => Label::Event(other.to_string()),
        }
    }

    pub fn as_event(&self) -> Option<&str> {
        match self {
            Label::Hidden => None,
            Label::Event(e) => Some(e),
        }
    }

    pub fn is_hidden(&self) -> bool {
        matches!(self, Label::Hidden)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Hidden => f.write_str(HIDDEN_TOKEN),
            Label::Event(e) => f.write_str(e),
        }
    }
}

/// Unvalidated automaton description.
///
/// Every state must be declared in `states` and every observable label in
/// `alphabet`; [`Automaton::build`] rejects anything else.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawAutomaton {
    pub states: Vec<String>,
    pub initials: Vec<String>,
    pub alphabet: Vec<Event>,
    pub transitions: Vec<(String, Label, String)>,
}

impl RawAutomaton {
    /// Describes an automaton from its edge list, declaring states in order
    /// of first appearance (initials first) and the alphabet from the labels.
    pub fn from_edges(initials: &[&str], edges: &[(&str, &str, &str)]) -> Self {
        let mut states: Vec<String> = Vec::new();
        let declare = |s: &str, states: &mut Vec<String>| {
            if !states.iter().any(|x| x == s) {
                states.push(s.to_string());
            }
        };
        for s in initials {
            declare(s, &mut states);
        }
        let mut alphabet = BTreeSet::new();
        let mut transitions = Vec::new();
        for (from, label, to) in edges {
            declare(from, &mut states);
            declare(to, &mut states);
            let label = Label::parse(label);
            if let Label::Event(e) = &label {
                alphabet.insert(e.clone());
            }
            transitions.push((from.to_string(), label, to.to_string()));
        }
        RawAutomaton {
            states,
            initials: initials.iter().map(|s| s.to_string()).collect(),
            alphabet: alphabet.into_iter().collect(),
            transitions,
        }
    }

    pub fn with_alphabet<I, S>(mut self, events: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Event>,
    {
        for e in events {
            let e = e.into();
            if !self.alphabet.contains(&e) {
                self.alphabet.push(e);
            }
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    names: Vec<String>,
    lookup: BTreeMap<String, StateId>,
    initials: Vec<StateId>,
    alphabet: BTreeSet<Event>,
    out: Vec<Vec<(Label, StateId)>>,
    deterministic: bool,
}

impl Automaton {
    /// Validates a raw description and returns its accessible part.
    pub fn build(raw: &RawAutomaton) -> Result<Self> {
        let mut lookup = BTreeMap::new();
        for (i, name) in raw.states.iter().enumerate() {
            if lookup.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateState(name.clone()));
            }
        }
        let mut alphabet = BTreeSet::new();
        for e in &raw.alphabet {
            if e == HIDDEN_TOKEN || e == "ε" {
                return Err(Error::ReservedEvent);
            }
            alphabet.insert(e.clone());
        }
        let resolve = |s: &String| {
            lookup
                .get(s)
                .copied()
                .ok_or_else(|| Error::DanglingState(s.clone()))
        };
        if raw.initials.is_empty() {
            return Err(Error::EmptyInitials);
        }
        let initials = raw
            .initials
            .iter()
            .map(resolve)
            .collect::<Result<Vec<_>>>()?;
        let mut edges = Vec::with_capacity(raw.transitions.len());
        for (from, label, to) in &raw.transitions {
            let from = resolve(from)?;
            let to = resolve(to)?;
            if let Label::Event(e) = label {
                if !alphabet.contains(e) {
                    return Err(Error::LabelOutsideAlphabet(e.clone()));
                }
            }
            edges.push((from, label.clone(), to));
        }
        Ok(Self::assemble(
            raw.states.clone(),
            initials,
            alphabet,
            edges,
        ))
    }

    /// Shorthand for [`RawAutomaton::from_edges`] followed by [`Automaton::build`].
    pub fn from_edges(initial: &str, edges: &[(&str, &str, &str)]) -> Result<Self> {
        Self::build(&RawAutomaton::from_edges(&[initial], edges))
    }

    /// One-state automaton with no transitions over `alphabet`.
    pub fn trivial<I, S>(alphabet: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Event>,
    {
        let alphabet = alphabet.into_iter().map(Into::into).collect();
        Self::assemble(vec!["()".to_string()], vec![0], alphabet, Vec::new())
    }

    /// One-state automaton with a self-loop on every event of `alphabet`.
    pub fn universal<I, S>(alphabet: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Event>,
    {
        let alphabet: BTreeSet<Event> = alphabet.into_iter().map(Into::into).collect();
        let edges = alphabet
            .iter()
            .map(|e| (0, Label::Event(e.clone()), 0))
            .collect();
        Self::assemble(vec!["u".to_string()], vec![0], alphabet, edges)
    }

    /// Trusted constructor for derived automata. Names must be unique and
    /// edges must reference valid indices.
    pub(crate) fn assemble(
        names: Vec<String>,
        initials: Vec<StateId>,
        alphabet: BTreeSet<Event>,
        edges: Vec<(StateId, Label, StateId)>,
    ) -> Self {
        let mut out = vec![Vec::new(); names.len()];
        for (from, label, to) in edges {
            out[from].push((label, to));
        }
        for row in &mut out {
            row.sort();
            row.dedup();
        }
        let mut initials = initials;
        initials.sort_unstable();
        initials.dedup();
        let lookup = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let full = Automaton {
            names,
            lookup,
            initials,
            alphabet,
            out,
            deterministic: false,
        };
        full.trim()
    }

    fn trim(self) -> Self {
        let mut seen = vec![false; self.names.len()];
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for &q in &self.initials {
            if !seen[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            for &(_, t) in &self.out[q] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        let mut remap = vec![usize::MAX; self.names.len()];
        let mut names = Vec::new();
        for (q, keep) in seen.iter().enumerate() {
            if *keep {
                remap[q] = names.len();
                names.push(self.names[q].clone());
            }
        }
        let out: Vec<Vec<(Label, StateId)>> = self
            .out
            .into_iter()
            .enumerate()
            .filter(|(q, _)| seen[*q])
            .map(|(_, row)| row.into_iter().map(|(l, t)| (l, remap[t])).collect())
            .collect();
        let initials: Vec<StateId> = self.initials.iter().map(|&q| remap[q]).collect();
        let lookup = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let deterministic = initials.len() == 1
            && out.iter().all(|row| {
                row.iter().all(|(l, _)| !l.is_hidden()) && row.windows(2).all(|w| w[0].0 != w[1].0)
            });
        Automaton {
            names,
            lookup,
            initials,
            alphabet: self.alphabet,
            out,
            deterministic,
        }
    }

    /// The accessible part. Automata are normalized on construction, so this
    /// is a copy; it exists for callers that want the operation by name.
    pub fn accessible(&self) -> Automaton {
        self.clone().trim()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, q: StateId) -> &str {
        &self.names[q]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn initials(&self) -> &[StateId] {
        &self.initials
    }

    pub fn alphabet(&self) -> &BTreeSet<Event> {
        &self.alphabet
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn has_hidden(&self) -> bool {
        self.out.iter().flatten().any(|(l, _)| l.is_hidden())
    }

    /// Outgoing edges of `q`, sorted by label then target.
    pub fn edges(&self, q: StateId) -> &[(Label, StateId)] {
        &self.out[q]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &Label, StateId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(q, row)| row.iter().map(move |(l, t)| (q, l, *t)))
    }

    pub fn transition_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Direct `event`-successors of `q`, without hidden closure.
    pub fn successors<'a>(
        &'a self,
        q: StateId,
        event: &'a str,
    ) -> impl Iterator<Item = StateId> + 'a {
        self.out[q]
            .iter()
            .filter(move |(l, _)| l.as_event() == Some(event))
            .map(|(_, t)| *t)
    }

    /// Events with at least one outgoing transition from `q`.
    pub fn enabled(&self, q: StateId) -> BTreeSet<&str> {
        self.out[q]
            .iter()
            .filter_map(|(l, _)| l.as_event())
            .collect()
    }

    /// Smallest superset of `from` closed under hidden moves.
    pub fn closure<I: IntoIterator<Item = StateId>>(&self, from: I) -> BTreeSet<StateId> {
        let mut set: BTreeSet<StateId> = BTreeSet::new();
        let mut stack: Vec<StateId> = Vec::new();
        for q in from {
            if set.insert(q) {
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            for (l, t) in &self.out[q] {
                if !l.is_hidden() {
                    break;
                }
                if set.insert(*t) {
                    stack.push(*t);
                }
            }
        }
        set
    }

    pub fn epsilon_closure(&self, state: &str) -> Result<BTreeSet<String>> {
        let q = self.state_id(state)?;
        Ok(self
            .closure([q])
            .into_iter()
            .map(|s| self.names[s].clone())
            .collect())
    }

    /// `event`-successors of a closed set, closed again under hidden moves.
    pub fn step(&self, from: &BTreeSet<StateId>, event: &str) -> BTreeSet<StateId> {
        self.closure(from.iter().flat_map(|&q| self.successors(q, event)))
    }

    /// States reachable from the closed set `from` on `word`.
    pub fn run_from(&self, from: &BTreeSet<StateId>, word: &[Event]) -> BTreeSet<StateId> {
        let mut current = from.clone();
        for e in word {
            if current.is_empty() {
                break;
            }
            current = self.step(&current, e);
        }
        current
    }

    pub fn initial_set(&self) -> BTreeSet<StateId> {
        self.closure(self.initials.iter().copied())
    }

    /// States reached from the initial states on `word`; empty when undefined.
    pub fn run(&self, word: &[Event]) -> BTreeSet<StateId> {
        self.run_from(&self.initial_set(), word)
    }

    pub fn run_names(&self, word: &[Event]) -> BTreeSet<String> {
        self.run(word)
            .into_iter()
            .map(|q| self.names[q].clone())
            .collect()
    }

    pub fn defined(&self, word: &[Event]) -> bool {
        !self.run(word).is_empty()
    }

    pub fn defined_from(&self, q: StateId, word: &[Event]) -> bool {
        !self.run_from(&self.closure([q]), word).is_empty()
    }

    /// Subset construction. Result states are named `{a,b,...}` after the
    /// source states they contain, listed in source order.
    pub fn determinize(&self) -> Automaton {
        let start = self.initial_set();
        let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
        let mut sets: Vec<BTreeSet<StateId>> = Vec::new();
        let mut edges = Vec::new();
        index.insert(start.clone(), 0);
        sets.push(start);
        let mut next = 0;
        while next < sets.len() {
            let current = sets[next].clone();
            for e in &self.alphabet {
                let target = self.step(&current, e);
                if target.is_empty() {
                    continue;
                }
                let id = match index.get(&target) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len();
                        index.insert(target.clone(), id);
                        sets.push(target);
                        id
                    }
                };
                edges.push((next, Label::Event(e.clone()), id));
            }
            next += 1;
        }
        let names = sets.iter().map(|s| self.set_name(s)).collect();
        Automaton::assemble(names, vec![0], self.alphabet.clone(), edges)
    }

    /// Removes hidden moves while keeping the same language and branching
    /// structure on observable events: `q -e-> r` for every observable path
    /// `q =eps*=> . -e-> . =eps*=> r`.
    pub fn without_hidden(&self) -> Automaton {
        if !self.has_hidden() {
            return self.clone();
        }
        let mut edges = Vec::new();
        for q in 0..self.names.len() {
            for p in self.closure([q]) {
                for (l, t) in &self.out[p] {
                    if let Label::Event(_) = l {
                        for r in self.closure([*t]) {
                            edges.push((q, l.clone(), r));
                        }
                    }
                }
            }
        }
        let initials = self.initial_set().into_iter().collect();
        Automaton::assemble(self.names.clone(), initials, self.alphabet.clone(), edges)
    }

    pub(crate) fn set_name(&self, set: &BTreeSet<StateId>) -> String {
        let parts: Vec<&str> = set.iter().map(|&q| self.names[q].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// Renders a word with single spaces, or `ε` when empty.
pub fn format_word(word: &[Event]) -> String {
    if word.is_empty() {
        "ε".to_string()
    } else {
        word.join(" ")
    }
}

/// Splits a whitespace-separated word; `ε` and the empty string give the empty word.
pub fn parse_word(text: &str) -> Vec<Event> {
    text.split_whitespace()
        .filter(|t| *t != "ε")
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str) -> Vec<Event> {
        parse_word(text)
    }

    #[test]
    fn minimal_chain_is_deterministic() {
        let a = Automaton::from_edges("q0", &[("q0", "a", "q1")]).unwrap();
        assert!(a.is_deterministic());
        assert_eq!(a.num_states(), 2);
    }

    #[test]
    fn dangling_state_is_rejected() {
        let mut raw = RawAutomaton::from_edges(&["q0"], &[("q0", "a", "q1")]);
        raw.transitions
            .push(("q1".into(), Label::event("a"), "q9".into()));
        assert_eq!(
            Automaton::build(&raw),
            Err(Error::DanglingState("q9".into()))
        );
    }

    #[test]
    fn label_outside_alphabet_is_rejected() {
        let mut raw = RawAutomaton::from_edges(&["q0"], &[("q0", "a", "q1")]);
        raw.transitions
            .push(("q1".into(), Label::event("z"), "q0".into()));
        assert_eq!(
            Automaton::build(&raw),
            Err(Error::LabelOutsideAlphabet("z".into()))
        );
    }

    #[test]
    fn empty_initials_rejected() {
        let mut raw = RawAutomaton::from_edges(&["q0"], &[("q0", "a", "q1")]);
        raw.initials.clear();
        assert_eq!(Automaton::build(&raw), Err(Error::EmptyInitials));
    }

    #[test]
    fn unreachable_states_are_dropped() {
        let mut raw = RawAutomaton::from_edges(&["q0"], &[("q0", "a", "q1")]);
        raw.states.push("q2".into());
        let a = Automaton::build(&raw).unwrap();
        assert_eq!(a.state_names(), ["q0", "q1"]);
        assert_eq!(a.accessible(), a);
    }

    #[test]
    fn closure_without_hidden_moves_is_singleton() {
        let a = Automaton::from_edges("q0", &[("q0", "a", "q1")]).unwrap();
        assert_eq!(
            a.epsilon_closure("q1").unwrap(),
            BTreeSet::from(["q1".to_string()])
        );
    }

    #[test]
    fn closure_follows_hidden_chain() {
        let a = Automaton::from_edges(
            "q0",
            &[("q0", "eps", "q1"), ("q1", "eps", "q2"), ("q2", "a", "q3")],
        )
        .unwrap();
        let c = a.epsilon_closure("q0").unwrap();
        assert_eq!(
            c,
            ["q0", "q1", "q2"].iter().map(|s| s.to_string()).collect()
        );
        assert!(!a.is_deterministic());
        assert!(matches!(
            a.epsilon_closure("nope"),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn run_of_empty_word_is_initial_closure() {
        let a = Automaton::from_edges("q0", &[("q0", "eps", "q1"), ("q1", "a", "q2")]).unwrap();
        assert_eq!(a.run(&[]), a.closure([0]));
        assert!(a.defined(&w("a")));
        assert!(!a.defined(&w("b")));
    }

    #[test]
    fn determinize_merges_branches() {
        let a = Automaton::from_edges("x", &[("x", "a", "y"), ("x", "a", "z"), ("y", "b", "u")])
            .unwrap();
        assert!(!a.is_deterministic());
        let d = a.determinize();
        assert!(d.is_deterministic());
        assert_eq!(d.state_names(), ["{x}", "{y,z}", "{u}"]);
    }

    #[test]
    fn determinize_of_deterministic_is_isomorphic() {
        let a = Automaton::from_edges("q0", &[("q0", "a", "q1"), ("q1", "b", "q0")]).unwrap();
        let d = a.determinize();
        assert_eq!(d.num_states(), 2);
        assert_eq!(d.transition_count(), 2);
    }

    #[test]
    fn hidden_removal_keeps_language() {
        let a = Automaton::from_edges(
            "q0",
            &[
                ("q0", "eps", "q1"),
                ("q1", "a", "q2"),
                ("q2", "eps", "q3"),
                ("q3", "b", "q4"),
            ],
        )
        .unwrap();
        let b = a.without_hidden();
        assert!(!b.has_hidden());
        for word in ["a", "a b", "b", ""] {
            assert_eq!(a.defined(&w(word)), b.defined(&w(word)), "{word}");
        }
    }
}

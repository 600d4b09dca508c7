//! Synchronous product: components synchronize on shared events and
//! interleave on private ones.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{Automaton, Event, Label, StateId};
use crate::error::{Error, Result};

/// Product of two hidden-move-free automata.
pub fn parallel_compose(left: &Automaton, right: &Automaton) -> Result<Automaton> {
    compose_all(&[left, right])
}

/// N-ary product, equal up to isomorphism to any bracketing of binary
/// products. Product states are named `(s1,...,sn)`; the empty product is the
/// one-state automaton over the empty alphabet.
pub fn compose_all(parts: &[&Automaton]) -> Result<Automaton> {
    if parts.iter().any(|a| a.has_hidden()) {
        return Err(Error::HiddenTransition);
    }
    if parts.is_empty() {
        return Ok(Automaton::trivial(Vec::<Event>::new()));
    }
    let alphabet: BTreeSet<Event> = parts
        .iter()
        .flat_map(|a| a.alphabet().iter().cloned())
        .collect();
    let owners: Vec<(Event, Vec<usize>)> = alphabet
        .iter()
        .map(|e| {
            let who = (0..parts.len())
                .filter(|&i| parts[i].alphabet().contains(e))
                .collect();
            (e.clone(), who)
        })
        .collect();

    let mut index: BTreeMap<Vec<StateId>, StateId> = BTreeMap::new();
    let mut tuples: Vec<Vec<StateId>> = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |t: Vec<StateId>, tuples: &mut Vec<Vec<StateId>>| -> StateId {
        if let Some(&id) = index.get(&t) {
            return id;
        }
        let id = tuples.len();
        index.insert(t.clone(), id);
        tuples.push(t);
        id
    };

    let mut initials = Vec::new();
    for t in cartesian(
        &parts
            .iter()
            .map(|a| a.initials().to_vec())
            .collect::<Vec<_>>(),
    ) {
        initials.push(intern(t, &mut tuples));
    }

    let mut next = 0;
    while next < tuples.len() {
        let current = tuples[next].clone();
        for (event, who) in &owners {
            let choices: Vec<Vec<StateId>> = who
                .iter()
                .map(|&i| parts[i].successors(current[i], event).collect())
                .collect();
            if choices.iter().any(Vec::is_empty) {
                continue;
            }
            for pick in cartesian(&choices) {
                let mut target = current.clone();
                for (k, &i) in who.iter().enumerate() {
                    target[i] = pick[k];
                }
                let id = intern(target, &mut tuples);
                edges.push((next, Label::Event(event.clone()), id));
            }
        }
        next += 1;
    }

    let names = tuples
        .iter()
        .map(|t| {
            let parts: Vec<&str> = t
                .iter()
                .enumerate()
                .map(|(i, &q)| parts[i].name(q))
                .collect();
            format!("({})", parts.join(","))
        })
        .collect();
    Ok(Automaton::assemble(names, initials, alphabet, edges))
}

fn cartesian(choices: &[Vec<StateId>]) -> Vec<Vec<StateId>> {
    let mut acc: Vec<Vec<StateId>> = vec![Vec::new()];
    for options in choices {
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for &o in options {
                let mut p = prefix.clone();
                p.push(o);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

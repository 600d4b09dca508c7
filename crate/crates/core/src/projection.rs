//! Natural projection of strings and automata, and the synchronized product
//! of local strings.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{Automaton, Event, Label, StateId};

/// Erases the events of `s` outside `events`.
pub fn project_string(s: &[Event], events: &BTreeSet<Event>) -> Vec<Event> {
    s.iter().filter(|e| events.contains(*e)).cloned().collect()
}

/// Whether `s` belongs to the inverse projection of `t`.
pub fn inverse_projection_contains(t: &[Event], s: &[Event], events: &BTreeSet<Event>) -> bool {
    project_string(s, events) == t
}

/// Whether `s` lies in the synchronized product of the local strings, that
/// is, `s` is over the union of `sets` and projects onto every `locals[i]`.
pub fn sync_product_contains(locals: &[Vec<Event>], sets: &[BTreeSet<Event>], s: &[Event]) -> bool {
    locals.len() == sets.len()
        && s.iter().all(|e| sets.iter().any(|set| set.contains(e)))
        && locals
            .iter()
            .zip(sets)
            .all(|(t, set)| inverse_projection_contains(t, s, set))
}

/// All members of the synchronized product of length at most `depth`.
pub fn enumerate_sync_product(
    locals: &[Vec<Event>],
    sets: &[BTreeSet<Event>],
    depth: usize,
) -> BTreeSet<Vec<Event>> {
    let mut out = BTreeSet::new();
    if locals.len() != sets.len() {
        return out;
    }
    let mut pos = vec![0; locals.len()];
    let mut word = Vec::new();
    shuffle(locals, sets, depth, &mut pos, &mut word, &mut out);
    out
}

fn shuffle(
    locals: &[Vec<Event>],
    sets: &[BTreeSet<Event>],
    depth: usize,
    pos: &mut Vec<usize>,
    word: &mut Vec<Event>,
    out: &mut BTreeSet<Vec<Event>>,
) {
    if (0..locals.len()).all(|i| pos[i] == locals[i].len()) {
        out.insert(word.clone());
        return;
    }
    if word.len() == depth {
        return;
    }
    let candidates: BTreeSet<&Event> = (0..locals.len())
        .filter_map(|i| locals[i].get(pos[i]))
        .collect();
    for e in candidates {
        let owners: Vec<usize> = (0..sets.len()).filter(|&j| sets[j].contains(e)).collect();
        if !owners.iter().all(|&j| locals[j].get(pos[j]) == Some(e)) {
            continue;
        }
        for &j in &owners {
            pos[j] += 1;
        }
        word.push(e.clone());
        shuffle(locals, sets, depth, pos, word, out);
        word.pop();
        for &j in &owners {
            pos[j] -= 1;
        }
    }
}

/// Partition of the states of `a` by the closure of transitions labelled
/// outside `events` (hidden moves included). Classes are listed by their
/// first member, members in declaration order.
pub fn state_classes(a: &Automaton, events: &BTreeSet<Event>) -> Vec<Vec<StateId>> {
    let n = a.num_states();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for (q, label, t) in a.transitions() {
        let outside = match label {
            Label::Hidden => true,
            Label::Event(e) => !events.contains(e),
        };
        if outside {
            let (x, y) = (find(&mut parent, q), find(&mut parent, t));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<StateId>> = BTreeMap::new();
    for q in 0..n {
        let r = find(&mut parent, q);
        groups.entry(r).or_default().push(q);
    }
    groups.into_values().collect()
}

/// The projected automaton over `events`: one state per class, a transition
/// between classes for every original transition labelled in `events`.
/// Classes unreachable from the initial class are dropped.
pub fn project_automaton(a: &Automaton, events: &BTreeSet<Event>) -> Automaton {
    let classes = state_classes(a, events);
    let mut class_of = vec![0; a.num_states()];
    for (c, members) in classes.iter().enumerate() {
        for &q in members {
            class_of[q] = c;
        }
    }
    let names = classes
        .iter()
        .map(|members| {
            let parts: Vec<&str> = members.iter().map(|&q| a.name(q)).collect();
            format!("[{}]", parts.join(","))
        })
        .collect();
    let initials = a.initials().iter().map(|&q| class_of[q]).collect();
    let edges = a
        .transitions()
        .filter_map(|(q, label, t)| match label {
            Label::Event(e) if events.contains(e) => {
                Some((class_of[q], label.clone(), class_of[t]))
            }
            _ => None,
        })
        .collect();
    Automaton::assemble(names, initials, events.clone(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_word;

    fn set(events: &[&str]) -> BTreeSet<Event> {
        events.iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn string_projection() {
        assert_eq!(
            project_string(&parse_word("e1 e2 a"), &set(&["e1", "a"])),
            parse_word("e1 a")
        );
        assert!(inverse_projection_contains(
            &[],
            &parse_word("x y"),
            &set(&["a"])
        ));
        assert!(!inverse_projection_contains(
            &parse_word("a e1"),
            &parse_word("e1 e2 a"),
            &set(&["e1", "a"])
        ));
    }

    #[test]
    fn disjoint_locals_shuffle_freely() {
        let got = enumerate_sync_product(
            &[parse_word("a"), parse_word("b")],
            &[set(&["a"]), set(&["b"])],
            4,
        );
        assert_eq!(got, BTreeSet::from([parse_word("a b"), parse_word("b a")]));
    }

    #[test]
    fn shared_locals_synchronize() {
        let sets = [set(&["a", "b"]), set(&["a", "b"])];
        let w = parse_word("a b");
        let got = enumerate_sync_product(&[w.clone(), w.clone()], &sets, 4);
        assert_eq!(got, BTreeSet::from([w]));
        let got = enumerate_sync_product(&[parse_word("a b"), parse_word("b a")], &sets, 4);
        assert!(got.is_empty());
    }

    #[test]
    fn sync_membership_checks_every_agent() {
        let sets = [set(&["e1", "a", "b"]), set(&["a", "b"])];
        let locals = [parse_word("e1 a b"), parse_word("a")];
        assert!(!sync_product_contains(
            &locals,
            &sets,
            &parse_word("e1 a b")
        ));
        assert!(sync_product_contains(&[vec![], vec![]], &sets, &[]));
    }

    #[test]
    fn full_and_empty_projections() {
        let a = Automaton::from_edges(
            "q0",
            &[("q0", "a", "q1"), ("q1", "b", "q2"), ("q3", "c", "q3")],
        )
        .unwrap();
        assert_eq!(state_classes(&a, &set(&["a", "b"])).len(), 3);
        let p = project_automaton(&a, &set(&["a", "b"]));
        assert_eq!(p.num_states(), 3);
        assert_eq!(state_classes(&a, &set(&[])), vec![vec![0, 1, 2]]);
        let p = project_automaton(&a, &set(&["b"]));
        assert_eq!(p.state_names(), ["[q0,q1]", "[q2]"]);
    }

    #[test]
    fn class_self_loops_are_kept() {
        let a = Automaton::from_edges("q0", &[("q0", "x", "q1"), ("q1", "a", "q0")]).unwrap();
        let p = project_automaton(&a, &set(&["a"]));
        assert_eq!(p.num_states(), 1);
        assert!(p.defined(&parse_word("a a a")));
    }
}

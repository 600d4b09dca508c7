//! Graphviz export. Nodes follow declaration order and edges follow the
//! transition order, so the output is stable for a given automaton.

use std::fmt::Write as _;

use crate::automaton::{Automaton, Label, HIDDEN_TOKEN};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DotOptions {
    /// Graph name.
    pub name: String,
    /// Lay the graph out left to right.
    pub horizontal: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            name: "automaton".into(),
            horizontal: true,
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Initial states get an arrow from an invisible point; hidden moves are
/// dashed.
pub fn dot_export(a: &Automaton, options: &DotOptions) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&options.name)).unwrap();
    if options.horizontal {
        writeln!(out, "  rankdir=LR;").unwrap();
    }
    writeln!(out, "  node [shape=circle];").unwrap();
    for (q, name) in a.state_names().iter().enumerate() {
        writeln!(out, "  n{q} [label={}];", quote(name)).unwrap();
    }
    for &q in a.initials() {
        writeln!(out, "  init{q} [shape=point];").unwrap();
        writeln!(out, "  init{q} -> n{q};").unwrap();
    }
    for (q, label, t) in a.transitions() {
        match label {
            Label::Event(e) => writeln!(out, "  n{q} -> n{t} [label={}];", quote(e)).unwrap(),
            Label::Hidden => writeln!(
                out,
                "  n{q} -> n{t} [label={}, style=dashed];",
                quote(HIDDEN_TOKEN)
            )
            .unwrap(),
        }
    }
    out.push_str("}\n");
    out
}

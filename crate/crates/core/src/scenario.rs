//! Scenario files: named automata, the task, agents with their local event
//! sets, channels, failures, and optional plants and controllers.
//!
//! The format is line based; `#` starts a comment. See `docs/scenario-format.md`
//! for the grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::alphabet::{AgentId, DistributedAlphabet};
use crate::automaton::{Automaton, Event, Label, RawAutomaton, HIDDEN_TOKEN};
use crate::error::{Error, Result};
use crate::failure::FailureSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    /// Named automata in declaration order.
    pub automata: Vec<(String, Automaton)>,
    /// Name of the task automaton.
    pub task: String,
    pub alphabet: DistributedAlphabet,
    pub failures: FailureSpec,
    /// Agent to plant automaton name.
    pub plants: BTreeMap<AgentId, String>,
    /// Agent to controller automaton name.
    pub controllers: BTreeMap<AgentId, String>,
}

impl Scenario {
    /// A scenario holding only a task and an alphabet.
    pub fn new(task: Automaton, alphabet: DistributedAlphabet) -> Result<Self> {
        let failures = FailureSpec::none(alphabet.agent_count());
        let s = Scenario {
            automata: vec![("task".to_string(), task)],
            task: "task".to_string(),
            alphabet,
            failures,
            plants: BTreeMap::new(),
            controllers: BTreeMap::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn task(&self) -> &Automaton {
        self.automaton(&self.task)
            .expect("validated scenario has its task")
    }

    pub fn automaton(&self, name: &str) -> Result<&Automaton> {
        self.automata
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
            .ok_or_else(|| Error::Precondition(format!("no automaton named `{name}`")))
    }

    pub fn sets(&self) -> &[BTreeSet<Event>] {
        self.alphabet.local_sets()
    }

    pub fn plant(&self, agent: AgentId) -> Option<&Automaton> {
        self.plants.get(&agent).and_then(|n| self.automaton(n).ok())
    }

    pub fn controller(&self, agent: AgentId) -> Option<&Automaton> {
        self.controllers
            .get(&agent)
            .and_then(|n| self.automaton(n).ok())
    }

    /// Replaces or appends a named automaton.
    pub fn insert_automaton(&mut self, name: &str, a: Automaton) {
        match self.automata.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = a,
            None => self.automata.push((name.to_string(), a)),
        }
    }

    fn validate(&self) -> Result<()> {
        let task = self.automaton(&self.task)?;
        let global = self.alphabet.global();
        if let Some(e) = task.alphabet().iter().find(|e| !global.contains(*e)) {
            return Err(Error::EventWithoutLocation { event: e.clone() });
        }
        for name in self.plants.values().chain(self.controllers.values()) {
            self.automaton(name)?;
        }
        Ok(())
    }
}

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
}

impl Line<'_> {
    fn err(&self, index: usize, message: impl Into<String>) -> Error {
        let column = self.tokens.get(index).map(|t| t.0).unwrap_or(1);
        Error::Parse {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn words(&self, from: usize) -> impl Iterator<Item = &str> {
        self.tokens[from..].iter().map(|t| t.1)
    }
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in content.char_indices() {
            let split = ch.is_whitespace() || ch == ':';
            match (start, split) {
                (None, false) => start = Some(pos),
                (Some(s), true) => {
                    tokens.push((s, &content[s..pos]));
                    start = None;
                }
                _ => {}
            }
            if ch == ':' {
                tokens.push((pos, ":"));
            }
        }
        if let Some(s) = start {
            tokens.push((s, &content[s..]));
        }
        if !tokens.is_empty() {
            let tokens = tokens
                .into_iter()
                .map(|(s, t)| (content[..s].chars().count() + 1, t))
                .collect();
            out.push(Line {
                number: i + 1,
                tokens,
            });
        }
    }
    out
}

#[derive(Default)]
struct Draft<'a> {
    automata: Vec<(String, Automaton)>,
    task: Option<(&'a Line<'a>, String)>,
    agents: Vec<(String, Vec<Event>)>,
    agents_line: Option<&'a Line<'a>>,
    channels: Vec<(&'a Line<'a>, Event, String, String)>,
    failures: Vec<(&'a Line<'a>, String, Vec<Event>)>,
    plants: Vec<(&'a Line<'a>, String, String)>,
    controllers: Vec<(&'a Line<'a>, String, String)>,
}

/// Parses and validates a scenario; the first error carries its position.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let lines = tokenize(text);
    let mut draft = Draft::default();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let head = line.tokens[0].1;
        match head {
            "automaton" => {
                let (name, a, next) = parse_automaton(&lines, i)?;
                if draft.automata.iter().any(|(n, _)| *n == name) {
                    return Err(line.err(1, format!("duplicate automaton `{name}`")));
                }
                draft.automata.push((name, a));
                i = next;
                continue;
            }
            "task" => {
                expect_colon(line)?;
                if line.tokens.len() != 3 {
                    return Err(line.err(2, "expected `task: NAME`"));
                }
                draft.task = Some((line, line.tokens[2].1.to_string()));
            }
            "agents" | "channels" | "failures" | "plants" | "controllers" => {
                open_block(line)?;
                let end = block_end(&lines, i)?;
                for entry in &lines[i + 1..end] {
                    section_entry(head, entry, &mut draft)?;
                }
                if head == "agents" {
                    draft.agents_line = Some(line);
                }
                i = end + 1;
                continue;
            }
            other => return Err(line.err(0, format!("unknown key `{other}`"))),
        }
        i += 1;
    }
    finish(draft, lines.last())
}

fn expect_colon(line: &Line) -> Result<()> {
    if line.tokens.get(1).map(|t| t.1) != Some(":") {
        return Err(line.err(1, "expected `:`"));
    }
    Ok(())
}

fn open_block(line: &Line) -> Result<()> {
    if line.tokens.len() != 2 || line.tokens[1].1 != "{" {
        return Err(line.err(1, format!("expected `{} {{`", line.tokens[0].1)));
    }
    Ok(())
}

fn block_end(lines: &[Line], start: usize) -> Result<usize> {
    for (k, line) in lines.iter().enumerate().skip(start + 1) {
        if line.tokens.len() == 1 && line.tokens[0].1 == "}" {
            return Ok(k);
        }
    }
    Err(lines[start].err(0, "unterminated block"))
}

fn section_entry<'a>(section: &str, line: &'a Line<'a>, draft: &mut Draft<'a>) -> Result<()> {
    expect_colon(line)?;
    let key = line.tokens[0].1.to_string();
    let rest: Vec<String> = line.words(2).map(str::to_string).collect();
    match section {
        "agents" => {
            if draft.agents.iter().any(|(n, _)| *n == key) {
                return Err(line.err(0, format!("duplicate agent `{key}`")));
            }
            if let Some(k) = rest.iter().position(|e| e == HIDDEN_TOKEN || e == "ε") {
                return Err(line.err(k + 2, Error::ReservedEvent.to_string()));
            }
            draft.agents.push((key, rest));
        }
        "channels" => {
            if rest.len() != 3 || rest[1] != "->" {
                return Err(line.err(2, "expected `EVENT: SENDER -> RECEIVER`"));
            }
            draft
                .channels
                .push((line, key, rest[0].clone(), rest[2].clone()));
        }
        "failures" => draft.failures.push((line, key, rest)),
        _ => {
            if rest.len() != 1 {
                return Err(line.err(2, "expected `AGENT: AUTOMATON`"));
            }
            let entry = (line, key, rest[0].clone());
            if section == "plants" {
                draft.plants.push(entry);
            } else {
                draft.controllers.push(entry);
            }
        }
    }
    Ok(())
}

fn parse_automaton(lines: &[Line], start: usize) -> Result<(String, Automaton, usize)> {
    let header = &lines[start];
    if header.tokens.len() != 3 || header.tokens[2].1 != "{" {
        return Err(header.err(1, "expected `automaton NAME {`"));
    }
    let name = header.tokens[1].1.to_string();
    let end = block_end(lines, start)?;
    let mut initials: Option<Vec<String>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut alphabet: Option<Vec<String>> = None;
    let mut edges: Vec<(&Line, String, Label, String)> = Vec::new();
    for line in &lines[start + 1..end] {
        let head = line.tokens[0].1;
        if line.tokens.get(1).map(|t| t.1) == Some(":") {
            let values: Vec<String> = line.words(2).map(str::to_string).collect();
            let slot = match head {
                "initial" => &mut initials,
                "states" => &mut states,
                "alphabet" => &mut alphabet,
                other => return Err(line.err(0, format!("unknown key `{other}`"))),
            };
            if slot.is_some() {
                return Err(line.err(0, format!("duplicate key `{head}`")));
            }
            *slot = Some(values);
        } else if line.tokens.len() == 3 {
            let label = Label::parse(line.tokens[1].1);
            edges.push((line, head.to_string(), label, line.tokens[2].1.to_string()));
        } else {
            return Err(line.err(0, "expected `FROM EVENT TO` or `key: values`"));
        }
    }
    let initials = initials
        .ok_or_else(|| header.err(0, format!("automaton `{name}` has no `initial:` line")))?;
    let declared = states.is_some();
    let mut order: Vec<String> = states.unwrap_or_default();
    let mut seen: BTreeSet<String> = order.iter().cloned().collect();
    if !declared {
        for s in initials
            .iter()
            .chain(edges.iter().flat_map(|(_, f, _, t)| [f, t]))
        {
            if seen.insert(s.clone()) {
                order.push(s.clone());
            }
        }
    }
    let alphabet = match alphabet {
        Some(a) => a,
        None => edges
            .iter()
            .filter_map(|(_, _, l, _)| l.as_event().map(str::to_string))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    for (line, from, label, to) in &edges {
        for (k, s) in [(0, from), (2, to)] {
            if !seen.contains(s.as_str()) {
                return Err(line.err(k, Error::DanglingState(s.clone()).to_string()));
            }
        }
        if let Label::Event(e) = label {
            if !alphabet.contains(e) {
                return Err(line.err(1, Error::LabelOutsideAlphabet(e.clone()).to_string()));
            }
        }
    }
    let raw = RawAutomaton {
        states: order,
        initials,
        alphabet,
        transitions: edges.into_iter().map(|(_, f, l, t)| (f, l, t)).collect(),
    };
    let a =
        Automaton::build(&raw).map_err(|e| header.err(1, format!("automaton `{name}`: {e}")))?;
    Ok((name, a, end + 1))
}

fn finish(draft: Draft, last: Option<&Line>) -> Result<Scenario> {
    let eof = |message: &str| Error::Parse {
        line: last.map(|l| l.number).unwrap_or(1),
        column: 1,
        message: message.to_string(),
    };
    let (task_line, task) = draft.task.ok_or_else(|| eof("missing `task:`"))?;
    if !draft.automata.iter().any(|(n, _)| *n == task) {
        return Err(task_line.err(2, format!("no automaton named `{task}`")));
    }
    let agents_line = draft
        .agents_line
        .ok_or_else(|| eof("missing `agents` block"))?;
    let at_agents = |e: Error| agents_line.err(0, e.to_string());
    DistributedAlphabet::new(draft.agents.clone(), Vec::new()).map_err(at_agents)?;
    for (line, e, s, r) in &draft.channels {
        DistributedAlphabet::new(draft.agents.clone(), [(e.clone(), s.clone(), r.clone())])
            .map_err(|err| line.err(0, err.to_string()))?;
    }
    let channels = draft
        .channels
        .iter()
        .map(|(_, e, s, r)| (e.clone(), s.clone(), r.clone()));
    let alphabet = DistributedAlphabet::new(draft.agents.clone(), channels).map_err(at_agents)?;
    let mut failures = FailureSpec::none(alphabet.agent_count());
    for (line, agent, events) in &draft.failures {
        let more = FailureSpec::new(&alphabet, [(agent.clone(), events.clone())])
            .map_err(|e| line.err(0, e.to_string()))?;
        let mut sets = failures.sets().to_vec();
        for (i, s) in more.sets().iter().enumerate() {
            sets[i].extend(s.iter().cloned());
        }
        failures = FailureSpec::from_sets(&alphabet, sets)?;
    }
    let assign = |entries: &[(&Line, String, String)]| -> Result<BTreeMap<AgentId, String>> {
        let mut map = BTreeMap::new();
        for (line, agent, aut) in entries {
            let i = alphabet
                .agent_id(agent)
                .map_err(|e| line.err(0, e.to_string()))?;
            if !draft.automata.iter().any(|(n, _)| n == aut) {
                return Err(line.err(2, format!("no automaton named `{aut}`")));
            }
            if map.insert(i, aut.clone()).is_some() {
                return Err(line.err(0, format!("duplicate entry for agent `{agent}`")));
            }
        }
        Ok(map)
    };
    let plants = assign(&draft.plants)?;
    let controllers = assign(&draft.controllers)?;
    let scenario = Scenario {
        automata: draft.automata,
        task,
        alphabet,
        failures,
        plants,
        controllers,
    };
    scenario
        .validate()
        .map_err(|e| task_line.err(2, e.to_string()))?;
    Ok(scenario)
}

/// Canonical text of a single automaton block.
pub fn emit_automaton(name: &str, a: &Automaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "automaton {name} {{");
    let initials: Vec<&str> = a.initials().iter().map(|&q| a.name(q)).collect();
    let _ = writeln!(out, "  initial: {}", initials.join(" "));
    let _ = writeln!(out, "  states: {}", a.state_names().join(" "));
    let events: Vec<&str> = a.alphabet().iter().map(String::as_str).collect();
    let _ = writeln!(out, "  alphabet: {}", events.join(" "));
    for (q, l, t) in a.transitions() {
        let _ = writeln!(out, "  {} {} {}", a.name(q), l, a.name(t));
    }
    out.push_str("}\n");
    out
}

/// Canonical text; `parse_scenario(&emit_scenario(s)) == s`.
pub fn emit_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    for (name, a) in &s.automata {
        out.push_str(&emit_automaton(name, a));
        out.push('\n');
    }
    let _ = writeln!(out, "task: {}", s.task);
    out.push_str("\nagents {\n");
    for (i, agent) in s.alphabet.agents().iter().enumerate() {
        let events: Vec<&str> = s.alphabet.local_set(i).iter().map(String::as_str).collect();
        let _ = writeln!(out, "  {agent}: {}", events.join(" "));
    }
    out.push_str("}\n");
    if !s.alphabet.channels().is_empty() {
        out.push_str("\nchannels {\n");
        for c in s.alphabet.channels() {
            let _ = writeln!(
                out,
                "  {}: {} -> {}",
                c.event,
                s.alphabet.agent_name(c.sender),
                s.alphabet.agent_name(c.receiver)
            );
        }
        out.push_str("}\n");
    }
    if !s.failures.is_empty() {
        out.push_str("\nfailures {\n");
        for (i, set) in s.failures.sets().iter().enumerate() {
            if !set.is_empty() {
                let events: Vec<&str> = set.iter().map(String::as_str).collect();
                let _ = writeln!(out, "  {}: {}", s.alphabet.agent_name(i), events.join(" "));
            }
        }
        out.push_str("}\n");
    }
    for (title, map) in [("plants", &s.plants), ("controllers", &s.controllers)] {
        if !map.is_empty() {
            let _ = writeln!(out, "\n{title} {{");
            for (i, aut) in map {
                let _ = writeln!(out, "  {}: {aut}", s.alphabet.agent_name(*i));
            }
            out.push_str("}\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two agents choosing between a and b
automaton spec {
  initial: q0
  q0 a q1
  q0 b q2
}
task: spec
agents {
  1: a
  2: b
  3: a b
}
channels {
  a: 1 -> 3
  b: 2 -> 3
}
failures {
  3: a
}
";

    #[test]
    fn parses_and_round_trips() {
        let s = parse_scenario(SMALL).unwrap();
        assert_eq!(s.task().num_states(), 3);
        assert_eq!(s.alphabet.agent_count(), 3);
        assert_eq!(s.failures.failed(2).len(), 1);
        let text = emit_scenario(&s);
        let again = parse_scenario(&text).unwrap();
        assert_eq!(again, s);
        assert_eq!(emit_scenario(&again), text);
    }

    #[test]
    fn unknown_key_is_located() {
        let err = parse_scenario("task: x\nbogus: 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                column: 1,
                message: "unknown key `bogus`".into()
            }
        );
    }

    #[test]
    fn channel_to_missing_agent_is_a_semantic_error() {
        let text = SMALL.replace("b: 2 -> 3", "a: 3 -> 4");
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 15,
                    column: 3,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn dangling_state_is_located() {
        let text = "automaton s {\n  initial: q0\n  states: q0\n  q0 a q9\n}\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 4,
                    column: 8,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn task_events_need_a_location() {
        let text = SMALL
            .replace("  3: a b", "  3: a")
            .replace("  2: b", "  2: a");
        let text = text.replace("b: 2 -> 3\n", "");
        assert!(parse_scenario(&text).is_err());
    }
}

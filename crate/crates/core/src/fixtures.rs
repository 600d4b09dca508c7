//! Bundled scenarios with a golden verdict table, and the matrix runner that
//! re-derives every verdict and compares it with the table.

use std::cell::OnceCell;

use serde::Serialize;

use crate::automaton::{format_word, parse_word, Automaton};
use crate::compose::compose_all;
use crate::decomposability::{
    check_dc3, decomposability_report, local_automata, CheckMode, Condition, DecompositionReport,
    Violation,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::failure::{check_ef, failed_locals, passivity, remains_decomposable, FailureReport};
use crate::relations::{language_equal, simulates, Witness};
use crate::scenario::{parse_scenario, Scenario};
use crate::testkit::bounded_language;
use crate::topdown::{verify_team, verify_team_under_failure, ClosedLoop};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        [$(($name, include_str!(concat!("../../../fixtures/", $name, ".scn")))),*]
    };
}

/// Name and text of every bundled scenario.
pub const FIXTURES: [(&str, &str); 17] = bundle!(
    "ex1",
    "ex1_source",
    "ex1_relay",
    "ex2",
    "ex2b",
    "ex3",
    "ex4",
    "ex5",
    "ex6",
    "ex6_private",
    "ex7",
    "ex8",
    "ex9",
    "counterexamples/dc4_not_necessary",
    "counterexamples/ef4_not_necessary",
    "counterexamples/literal_ef4_too_strong",
    "counterexamples/literal_ef4_too_weak",
);

pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load_fixture(name: &str) -> Result<Scenario> {
    let text = fixture_text(name)
        .ok_or_else(|| Error::Precondition(format!("no fixture named `{name}`")))?;
    parse_scenario(text)
}

/// Expected verdicts: fixture, fact, value. Boolean facts read `true` or
/// `false`; witness facts hold the witness text.
pub const GOLDEN: &[(&str, &str, &str)] = &[
    ("ex1", "decomposable", "true"),
    ("ex1", "passive", "true"),
    ("ex1", "EF1", "true"),
    ("ex1", "EF2", "true"),
    ("ex1", "EF3", "true"),
    ("ex1", "EF3_literal", "true"),
    ("ex1", "EF4", "true"),
    ("ex1", "remains_decomposable", "true"),
    ("ex1_source", "decomposable", "true"),
    ("ex1_source", "passive", "false"),
    ("ex1_source", "remains_decomposable", "false"),
    ("ex1_relay", "decomposable", "true"),
    ("ex1_relay", "passive", "false"),
    ("ex1_relay", "remains_decomposable", "false"),
    ("ex2", "decomposable", "true"),
    ("ex2", "passive", "true"),
    ("ex2", "EF1", "false"),
    ("ex2", "EF2", "true"),
    ("ex2", "EF3", "false"),
    ("ex2", "EF3_literal", "true"),
    ("ex2", "EF4", "true"),
    ("ex2", "remains_decomposable", "false"),
    ("ex2b", "decomposable", "true"),
    ("ex2b", "passive", "true"),
    ("ex2b", "remains_decomposable", "true"),
    ("ex3", "decomposable", "true"),
    ("ex3", "EF1", "true"),
    ("ex3", "EF2", "false"),
    ("ex3", "EF3", "false"),
    ("ex3", "EF3_literal", "true"),
    ("ex3", "EF4", "true"),
    ("ex3", "remains_decomposable", "false"),
    ("ex4", "decomposable", "true"),
    ("ex4", "EF1", "true"),
    ("ex4", "EF2", "true"),
    ("ex4", "EF3", "false"),
    ("ex4", "EF3_literal", "false"),
    ("ex4", "EF4", "true"),
    ("ex4", "remains_decomposable", "false"),
    ("ex4", "team_after_failure_defines:a c b", "true"),
    ("ex4", "team_after_failure_defines:b c", "true"),
    ("ex4", "task_defines:a c b", "false"),
    ("ex4", "task_defines:b c", "false"),
    ("ex5", "decomposable", "true"),
    ("ex5", "EF1", "true"),
    ("ex5", "EF2", "true"),
    ("ex5", "EF3", "true"),
    ("ex5", "EF3_literal", "true"),
    ("ex5", "EF4", "false"),
    ("ex5", "EF4_witness", "agent 1, t = a"),
    ("ex5", "remains_decomposable", "false"),
    ("ex6", "decomposable", "true"),
    ("ex6", "passive", "true"),
    ("ex6", "remains_decomposable", "true"),
    ("ex6", "locals", "true"),
    ("ex6", "team", "true"),
    ("ex6", "team_after_failure", "true"),
    ("ex6_private", "passive", "false"),
    ("ex6_private", "locals", "true"),
    ("ex6_private", "team", "true"),
    ("ex6_private", "team_after_failure", "false"),
    ("ex7", "decomposable", "true"),
    ("ex7", "P1_simulated", "b"),
    ("ex7", "P2_simulated", "a b"),
    ("ex8", "decomposable", "true"),
    ("ex8", "DC4", "true"),
    ("ex8", "P2_deterministic", "false"),
    ("ex9", "decomposable", "false"),
    ("ex9", "bounded_language_equal", "true"),
    ("ex9", "language_equal", "true"),
    ("counterexamples/dc4_not_necessary", "decomposable", "true"),
    ("counterexamples/dc4_not_necessary", "DC1", "true"),
    ("counterexamples/dc4_not_necessary", "DC2", "true"),
    ("counterexamples/dc4_not_necessary", "DC3", "true"),
    ("counterexamples/dc4_not_necessary", "DC4", "false"),
    ("counterexamples/ef4_not_necessary", "decomposable", "true"),
    ("counterexamples/ef4_not_necessary", "passive", "true"),
    ("counterexamples/ef4_not_necessary", "EF1", "true"),
    ("counterexamples/ef4_not_necessary", "EF2", "true"),
    ("counterexamples/ef4_not_necessary", "EF3", "true"),
    ("counterexamples/ef4_not_necessary", "EF4", "false"),
    (
        "counterexamples/ef4_not_necessary",
        "remains_decomposable",
        "true",
    ),
    (
        "counterexamples/literal_ef4_too_strong",
        "decomposable",
        "true",
    ),
    ("counterexamples/literal_ef4_too_strong", "passive", "true"),
    ("counterexamples/literal_ef4_too_strong", "EF4", "true"),
    (
        "counterexamples/literal_ef4_too_strong",
        "EF4_literal",
        "false",
    ),
    (
        "counterexamples/literal_ef4_too_strong",
        "remains_decomposable",
        "true",
    ),
    (
        "counterexamples/literal_ef4_too_weak",
        "decomposable",
        "true",
    ),
    ("counterexamples/literal_ef4_too_weak", "passive", "true"),
    ("counterexamples/literal_ef4_too_weak", "EF4", "false"),
    (
        "counterexamples/literal_ef4_too_weak",
        "EF4_literal",
        "true",
    ),
    (
        "counterexamples/literal_ef4_too_weak",
        "remains_decomposable",
        "false",
    ),
];

/// Depth of the literal interleaving check; every bundled task is acyclic
/// with paths shorter than this.
const LITERAL_DEPTH: usize = 8;

/// Lazily computed analyses of one scenario.
pub struct FactSheet {
    scenario: Scenario,
    exec: Execution,
    report: OnceCell<DecompositionReport>,
    failure: OnceCell<FailureReport>,
}

fn flag(b: bool) -> String {
    b.to_string()
}

impl FactSheet {
    pub fn new(scenario: Scenario, exec: Execution) -> Self {
        FactSheet {
            scenario,
            exec,
            report: OnceCell::new(),
            failure: OnceCell::new(),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn report(&self) -> Result<&DecompositionReport> {
        if self.report.get().is_none() {
            let r = decomposability_report(self.scenario.task(), self.scenario.sets(), self.exec)?;
            let _ = self.report.set(r);
        }
        Ok(self.report.get().expect("just set"))
    }

    fn failure(&self) -> Result<&FailureReport> {
        if self.failure.get().is_none() {
            let s = &self.scenario;
            let r = remains_decomposable(s.task(), &s.alphabet, &s.failures, self.exec)?;
            let _ = self.failure.set(r);
        }
        Ok(self.failure.get().expect("just set"))
    }

    fn local(&self, agent: &str) -> Result<Automaton> {
        let i = self.scenario.alphabet.agent_id(agent)?;
        Ok(local_automata(
            self.scenario.task(),
            &self.scenario.sets()[i..=i],
            Execution::Sequential,
        )
        .remove(0))
    }

    /// Evaluates one fact. `P<agent>_simulated` reads `true` or the word
    /// the projection executes and the task does not.
    pub fn fact(&self, key: &str) -> Result<String> {
        let s = &self.scenario;
        if let Some(word) = key.strip_prefix("task_defines:") {
            return Ok(flag(s.task().defined(&parse_word(word))));
        }
        if let Some(word) = key.strip_prefix("team_after_failure_defines:") {
            let post = failed_locals(s.task(), &s.alphabet, &s.failures, self.exec)?;
            let refs: Vec<&Automaton> = post.iter().collect();
            return Ok(flag(compose_all(&refs)?.defined(&parse_word(word))));
        }
        if let Some(agent) = key
            .strip_prefix('P')
            .and_then(|k| k.strip_suffix("_simulated"))
        {
            let v = simulates(&self.local(agent)?, s.task());
            return Ok(match v.witness {
                None => flag(true),
                Some(Witness::Trace { word, .. }) => format_word(&word),
                Some(_) => flag(false),
            });
        }
        if let Some(agent) = key
            .strip_prefix('P')
            .and_then(|k| k.strip_suffix("_deterministic"))
        {
            return Ok(flag(self.local(agent)?.is_deterministic()));
        }
        let condition = |c: Condition| -> Result<String> {
            let r = if Condition::DC.contains(&c) {
                self.report()?.get(c)
            } else {
                self.failure()?.get(c)
            };
            r.map(|r| flag(r.holds)).ok_or_else(|| {
                Error::Precondition(format!("{c} is not evaluated for this scenario"))
            })
        };
        match key {
            "DC1" => condition(Condition::DC1),
            "DC2" => condition(Condition::DC2),
            "DC3" => condition(Condition::DC3),
            "DC4" => condition(Condition::DC4),
            "EF1" => condition(Condition::EF1),
            "EF2" => condition(Condition::EF2),
            "EF3" => condition(Condition::EF3),
            "EF4" => condition(Condition::EF4),
            "DC3_literal" => Ok(flag(
                check_dc3(
                    s.task(),
                    s.sets(),
                    CheckMode::Bounded {
                        depth: LITERAL_DEPTH,
                    },
                )?
                .holds,
            )),
            "EF3_literal" => {
                let mode = CheckMode::Bounded {
                    depth: LITERAL_DEPTH,
                };
                Ok(flag(
                    check_ef(s.task(), &s.alphabet, &s.failures, Condition::EF3, mode)?.holds,
                ))
            }
            "decomposable" => Ok(flag(self.report()?.decomposable())),
            "bounded_language_equal" => {
                let locals = local_automata(s.task(), s.sets(), self.exec);
                let refs: Vec<&Automaton> = locals.iter().collect();
                let team = bounded_language(&compose_all(&refs)?, LITERAL_DEPTH)?;
                let task = bounded_language(s.task(), LITERAL_DEPTH)?;
                Ok(flag(team.is_subset(&task) && task.is_subset(&team)))
            }
            "language_equal" => {
                let locals = local_automata(s.task(), s.sets(), self.exec);
                let refs: Vec<&Automaton> = locals.iter().collect();
                Ok(flag(language_equal(&compose_all(&refs)?, s.task())))
            }
            "passive" => Ok(flag(passivity(&s.alphabet, &s.failures).all_passive)),
            "remains_decomposable" => Ok(flag(self.failure()?.remains_decomposable)),
            "EF1_literal" | "EF2_literal" | "EF4_literal" => {
                let c = match key {
                    "EF1_literal" => Condition::EF1,
                    "EF2_literal" => Condition::EF2,
                    _ => Condition::EF4,
                };
                self.failure()?
                    .duals
                    .iter()
                    .find(|d| d.condition == c)
                    .map(|d| flag(d.literal_holds))
                    .ok_or_else(|| {
                        Error::Precondition(format!(
                            "literal {c} is not evaluated for this scenario"
                        ))
                    })
            }
            "EF4_witness" => {
                let r = self.failure()?.get(Condition::EF4).ok_or_else(|| {
                    Error::Precondition("EF4 is not evaluated for this scenario".into())
                })?;
                Ok(match r.witnesses.first() {
                    Some(Violation::Nondeterminism {
                        agent,
                        continuation,
                        ..
                    }) => format!(
                        "agent {}, t = {}",
                        s.alphabet.agent_name(*agent),
                        format_word(continuation)
                    ),
                    Some(other) => other.to_string(),
                    None => "none".into(),
                })
            }
            "locals" | "team" => {
                let v = verify_team(&ClosedLoop::from_scenario(s)?, self.exec)?;
                Ok(flag(if key == "locals" {
                    v.locals_hold
                } else {
                    v.holds()
                }))
            }
            "team_after_failure" => {
                let v = verify_team_under_failure(&ClosedLoop::from_scenario(s)?, self.exec)?;
                Ok(flag(v.holds()))
            }
            other => Err(Error::Precondition(format!("unknown fact `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub fixture: &'static str,
    pub fact: &'static str,
    pub expected: &'static str,
    pub actual: String,
    pub pass: bool,
}

/// Re-derives every row of the golden table.
pub fn fixture_matrix(exec: Execution) -> Result<Vec<MatrixRow>> {
    let mut rows = Vec::with_capacity(GOLDEN.len());
    for (name, _) in FIXTURES {
        let sheet = FactSheet::new(load_fixture(name)?, exec);
        for &(_, fact, expected) in GOLDEN.iter().filter(|(f, _, _)| *f == name) {
            let actual = sheet.fact(fact)?;
            rows.push(MatrixRow {
                fixture: name,
                fact,
                expected,
                pass: actual == expected,
                actual,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses() {
        for (name, _) in FIXTURES {
            load_fixture(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn golden_rows_name_bundled_fixtures() {
        assert!(GOLDEN.iter().all(|(f, _, _)| fixture_text(f).is_some()));
    }
}

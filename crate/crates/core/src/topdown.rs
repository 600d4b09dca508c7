//! Closed-loop verification: local plant and controller pairs against the
//! local projections of the task, the composed team against the task, and
//! the team after event failures.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::alphabet::{AgentId, DistributedAlphabet};
use crate::automaton::{Automaton, Event};
use crate::compose::{compose_all, parallel_compose};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::failure::{apply_failure, passivity, refined_alphabets, FailureSpec, PassivityVerdict};
use crate::projection::project_automaton;
use crate::relations::{bisimilar, RelationVerdict};
use crate::scenario::Scenario;

/// Plants and controllers per agent together with the task they should
/// jointly realize.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    spec: Automaton,
    alphabet: DistributedAlphabet,
    plants: Vec<Automaton>,
    controllers: Vec<Automaton>,
    failures: FailureSpec,
}

impl ClosedLoop {
    pub fn new(
        spec: Automaton,
        alphabet: DistributedAlphabet,
        plants: Vec<Automaton>,
        controllers: Vec<Automaton>,
        failures: FailureSpec,
    ) -> Result<Self> {
        if !spec.is_deterministic() {
            return Err(Error::NotDeterministic("the task automaton"));
        }
        let n = alphabet.agent_count();
        for found in [plants.len(), controllers.len(), failures.agent_count()] {
            if found != n {
                return Err(Error::AgentCount { expected: n, found });
            }
        }
        for i in 0..n {
            let local = alphabet.local_set(i);
            for (what, a) in [("plant", &plants[i]), ("controller", &controllers[i])] {
                if !a.alphabet().is_subset(local) {
                    return Err(Error::Precondition(format!(
                        "{what} of agent `{}` uses events outside its local set",
                        alphabet.agent_name(i)
                    )));
                }
            }
        }
        Ok(ClosedLoop {
            spec,
            alphabet,
            plants,
            controllers,
            failures,
        })
    }

    /// Controllers set to the local projections of the task and plants that
    /// accept everything over their local sets.
    pub fn with_projection_controllers(
        spec: Automaton,
        alphabet: DistributedAlphabet,
    ) -> Result<Self> {
        let sets = alphabet.local_sets();
        let controllers = sets.iter().map(|s| project_automaton(&spec, s)).collect();
        let plants = sets
            .iter()
            .map(|s| Automaton::universal(s.iter().cloned()))
            .collect();
        let failures = FailureSpec::none(alphabet.agent_count());
        ClosedLoop::new(spec, alphabet, plants, controllers, failures)
    }

    /// Reads plants and controllers from a scenario; every agent needs both.
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let n = s.alphabet.agent_count();
        let mut plants = Vec::with_capacity(n);
        let mut controllers = Vec::with_capacity(n);
        for i in 0..n {
            let missing = |what: &str| {
                Error::Precondition(format!(
                    "agent `{}` has no {what}",
                    s.alphabet.agent_name(i)
                ))
            };
            plants.push(s.plant(i).ok_or_else(|| missing("plant"))?.clone());
            controllers.push(
                s.controller(i)
                    .ok_or_else(|| missing("controller"))?
                    .clone(),
            );
        }
        ClosedLoop::new(
            s.task().clone(),
            s.alphabet.clone(),
            plants,
            controllers,
            s.failures.clone(),
        )
    }

    pub fn with_failures(mut self, failures: FailureSpec) -> Result<Self> {
        if failures.agent_count() != self.alphabet.agent_count() {
            return Err(Error::AgentCount {
                expected: self.alphabet.agent_count(),
                found: failures.agent_count(),
            });
        }
        self.failures = failures;
        Ok(self)
    }

    pub fn spec(&self) -> &Automaton {
        &self.spec
    }

    pub fn alphabet(&self) -> &DistributedAlphabet {
        &self.alphabet
    }

    pub fn failures(&self) -> &FailureSpec {
        &self.failures
    }

    pub fn controller(&self, agent: AgentId) -> &Automaton {
        &self.controllers[agent]
    }

    pub fn plant(&self, agent: AgentId) -> &Automaton {
        &self.plants[agent]
    }

    fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent >= self.alphabet.agent_count() {
            return Err(Error::UnknownAgent(agent.to_string()));
        }
        Ok(())
    }

    /// `A_Pi || A_Ci` over the whole local set of the agent, so that local
    /// events neither component mentions stay blocked in the team.
    pub fn local_loop(&self, agent: AgentId) -> Result<Automaton> {
        self.check_agent(agent)?;
        let product = parallel_compose(&self.plants[agent], &self.controllers[agent])?;
        Ok(over(&product, self.alphabet.local_set(agent)))
    }

    fn loops(&self, exec: Execution) -> Result<Vec<Automaton>> {
        let agents: Vec<AgentId> = (0..self.alphabet.agent_count()).collect();
        exec.map(&agents, |&i| self.local_loop(i))
            .into_iter()
            .collect()
    }
}

/// `a` with its alphabet widened to `events`.
fn over(a: &Automaton, events: &BTreeSet<Event>) -> Automaton {
    let alphabet = a.alphabet().union(events).cloned().collect();
    let edges = a.transitions().map(|(q, l, t)| (q, l.clone(), t)).collect();
    Automaton::assemble(
        a.state_names().to_vec(),
        a.initials().to_vec(),
        alphabet,
        edges,
    )
}

fn compose_owned(parts: &[Automaton]) -> Result<Automaton> {
    let refs: Vec<&Automaton> = parts.iter().collect();
    compose_all(&refs)
}

/// Whether the closed loop of `agent` is bisimilar to the local projection
/// of the task.
pub fn verify_local(cl: &ClosedLoop, agent: AgentId) -> Result<RelationVerdict> {
    let closed = cl.local_loop(agent)?;
    Ok(bisimilar(
        &closed,
        &project_automaton(&cl.spec, cl.alphabet.local_set(agent)),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TeamVerdict {
    pub locals: Vec<RelationVerdict>,
    pub locals_hold: bool,
    pub team: RelationVerdict,
    /// Set when the team was checked although some local loop failed.
    pub warning: Option<String>,
}

impl TeamVerdict {
    pub fn holds(&self) -> bool {
        self.team.holds
    }
}

fn local_verdicts(
    cl: &ClosedLoop,
    exec: Execution,
) -> Result<(Vec<RelationVerdict>, bool, Option<String>)> {
    let agents: Vec<AgentId> = (0..cl.alphabet.agent_count()).collect();
    let locals: Vec<RelationVerdict> = exec
        .map(&agents, |&i| verify_local(cl, i))
        .into_iter()
        .collect::<Result<_>>()?;
    let failing: Vec<&str> = agents
        .iter()
        .filter(|&&i| !locals[i].holds)
        .map(|&i| cl.alphabet.agent_name(i))
        .collect();
    let warning = (!failing.is_empty()).then(|| {
        format!(
            "local loops not bisimilar to their projections: {}",
            failing.join(", ")
        )
    });
    Ok((locals, failing.is_empty(), warning))
}

/// Composes every local closed loop and compares the team with the task.
pub fn verify_team(cl: &ClosedLoop, exec: Execution) -> Result<TeamVerdict> {
    let (locals, locals_hold, warning) = local_verdicts(cl, exec)?;
    let team = compose_owned(&cl.loops(exec)?)?;
    Ok(TeamVerdict {
        locals,
        locals_hold,
        team: bisimilar(&team, &cl.spec),
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainLink {
    /// The two sides compared, in text.
    pub claim: &'static str,
    pub verdict: RelationVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailureTeamReport {
    pub passivity: PassivityVerdict,
    /// Pre-failure local verdicts.
    pub locals: Vec<RelationVerdict>,
    pub locals_hold: bool,
    /// The composed post-failure team against the task.
    pub team: RelationVerdict,
    /// Intermediate bisimilarities leading from the post-failure team to the
    /// task. The last link is the end-to-end verdict.
    pub chain: Vec<ChainLink>,
    /// When every intermediate link holds, so does the end-to-end verdict.
    pub chain_consistent: bool,
    pub warning: Option<String>,
}

impl FailureTeamReport {
    pub fn holds(&self) -> bool {
        self.team.holds
    }
}

pub const CHAIN_CLAIMS: [&str; 5] = [
    "||F(Pi||Ci) ~ ||P_sigma(Pi||Ci)",
    "||P_sigma(Pi||Ci) ~ ||P_sigma(P_i(S))",
    "||P_sigma(P_i(S)) ~ ||P_sigma(S)",
    "||P_sigma(S) ~ S",
    "||F(Pi||Ci) ~ S",
];

/// Applies the failures to every local closed loop, composes the results and
/// compares the team with the task. Non-passive failures stop their events,
/// passive ones hide them.
pub fn verify_team_under_failure(cl: &ClosedLoop, exec: Execution) -> Result<FailureTeamReport> {
    let (locals, locals_hold, warning) = local_verdicts(cl, exec)?;
    let verdict = passivity(&cl.alphabet, &cl.failures);
    let sigma = refined_alphabets(&cl.alphabet, &cl.failures);
    let loops = cl.loops(exec)?;
    let agents: Vec<AgentId> = (0..cl.alphabet.agent_count()).collect();
    let failed: Vec<Automaton> = exec
        .map(&agents, |&i| {
            apply_failure(&loops[i], cl.failures.failed(i), &verdict.passive_events(i))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let project_each = |parts: Vec<Automaton>| -> Result<Automaton> {
        let projected: Vec<Automaton> = agents
            .iter()
            .map(|&i| project_automaton(&parts[i], &sigma[i]))
            .collect();
        compose_owned(&projected)
    };
    let team = compose_owned(&failed)?;
    let hidden_loops = project_each(loops)?;
    let locals_projected = project_each(
        agents
            .iter()
            .map(|&i| project_automaton(&cl.spec, cl.alphabet.local_set(i)))
            .collect(),
    )?;
    let spec_projected = project_each(vec![cl.spec.clone(); agents.len()])?;
    let verdicts = [
        bisimilar(&team, &hidden_loops),
        bisimilar(&hidden_loops, &locals_projected),
        bisimilar(&locals_projected, &spec_projected),
        bisimilar(&spec_projected, &cl.spec),
        bisimilar(&team, &cl.spec),
    ];
    let chain_consistent = !verdicts[..4].iter().all(|v| v.holds) || verdicts[4].holds;
    let chain = CHAIN_CLAIMS
        .iter()
        .zip(verdicts)
        .map(|(claim, verdict)| ChainLink { claim, verdict })
        .collect::<Vec<_>>();
    Ok(FailureTeamReport {
        passivity: verdict,
        locals,
        locals_hold,
        team: chain[4].verdict.clone(),
        chain,
        chain_consistent,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choice() -> (Automaton, DistributedAlphabet) {
        let spec = Automaton::from_edges("q0", &[("q0", "a", "q1"), ("q1", "b", "q2")]).unwrap();
        let d = DistributedAlphabet::numbered(&[&["a", "b"], &["b"]], &[("b", 1, 2)]).unwrap();
        (spec, d)
    }

    #[test]
    fn projection_controllers_realize_a_decomposable_task() {
        let (spec, d) = choice();
        let cl = ClosedLoop::with_projection_controllers(spec, d).unwrap();
        let v = verify_team(&cl, Execution::Sequential).unwrap();
        assert!(v.locals_hold && v.holds() && v.warning.is_none());
    }

    #[test]
    fn neutral_controller_leaves_the_plant() {
        let (spec, d) = choice();
        let plant = project_automaton(&spec, d.local_set(0));
        let universal = Automaton::universal(d.local_set(0).iter().cloned());
        let cl = ClosedLoop::new(
            spec.clone(),
            d.clone(),
            vec![plant, Automaton::universal(["b"])],
            vec![universal, project_automaton(&spec, d.local_set(1))],
            FailureSpec::none(2),
        )
        .unwrap();
        assert!(verify_local(&cl, 0).unwrap().holds);
        assert!(verify_local(&cl, 2).is_err());
    }

    #[test]
    fn wrong_controller_is_reported() {
        let (spec, d) = choice();
        let broken = Automaton::from_edges("q0", &[("q0", "a", "q1")]).unwrap();
        let broken = over(&broken, d.local_set(0));
        let cl = ClosedLoop::new(
            spec.clone(),
            d.clone(),
            vec![
                Automaton::universal(["a", "b"]),
                Automaton::universal(["b"]),
            ],
            vec![broken, project_automaton(&spec, d.local_set(1))],
            FailureSpec::none(2),
        )
        .unwrap();
        let v = verify_local(&cl, 0).unwrap();
        assert!(!v.holds && v.witness.is_some());
        let team = verify_team(&cl, Execution::Sequential).unwrap();
        assert!(!team.locals_hold && team.warning.is_some());
    }

    #[test]
    fn empty_failure_matches_the_team_verdict() {
        let (spec, d) = choice();
        let cl = ClosedLoop::with_projection_controllers(spec, d).unwrap();
        let team = verify_team(&cl, Execution::Sequential).unwrap();
        let post = verify_team_under_failure(&cl, Execution::Sequential).unwrap();
        assert_eq!(team.team, post.team);
        assert!(post.chain.iter().all(|l| l.verdict.holds) && post.chain_consistent);
    }

    #[test]
    fn source_failure_blocks_the_team() {
        let (spec, d) = choice();
        let f = FailureSpec::new(&d, [("1".to_string(), ["b".to_string()])]).unwrap();
        let cl = ClosedLoop::with_projection_controllers(spec, d)
            .unwrap()
            .with_failures(f)
            .unwrap();
        let post = verify_team_under_failure(&cl, Execution::Sequential).unwrap();
        assert!(!post.passivity.all_passive);
        assert!(!post.holds() && post.chain_consistent);
    }

    #[test]
    fn alphabets_must_fit_the_local_sets() {
        let (spec, d) = choice();
        let err = ClosedLoop::new(
            spec,
            d,
            vec![
                Automaton::universal(["a", "b"]),
                Automaton::universal(["a"]),
            ],
            vec![
                Automaton::universal(["a", "b"]),
                Automaton::universal(["b"]),
            ],
            FailureSpec::none(2),
        );
        assert!(err.is_err());
    }
}

//! Agents, their local event sets, and the communication channels between them.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{Event, HIDDEN_TOKEN};
use crate::error::{Error, Result};

pub type AgentId = usize;

/// Agent `sender` forwards occurrences of `event` to agent `receiver`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    pub event: Event,
    pub sender: AgentId,
    pub receiver: AgentId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributedAlphabet {
    agents: Vec<String>,
    local: Vec<BTreeSet<Event>>,
    channels: BTreeSet<Channel>,
}

impl DistributedAlphabet {
    /// `agents` pairs each agent name with its local event set; channels are
    /// `(event, sender, receiver)` by agent name.
    pub fn new<A, E, C>(agents: A, channels: C) -> Result<Self>
    where
        A: IntoIterator<Item = (String, E)>,
        E: IntoIterator<Item = Event>,
        C: IntoIterator<Item = (Event, String, String)>,
    {
        let mut names = Vec::new();
        let mut local = Vec::new();
        for (name, events) in agents {
            if names.contains(&name) {
                return Err(Error::DuplicateAgent(name));
            }
            let events: BTreeSet<Event> = events.into_iter().collect();
            if events.iter().any(|e| e == HIDDEN_TOKEN) {
                return Err(Error::ReservedEvent);
            }
            names.push(name);
            local.push(events);
        }
        let mut d = DistributedAlphabet {
            agents: names,
            local,
            channels: BTreeSet::new(),
        };
        for (event, sender, receiver) in channels {
            let bad = |reason| Error::InvalidChannel {
                event: event.clone(),
                sender: sender.clone(),
                receiver: receiver.clone(),
                reason,
            };
            let s = d.agent_id(&sender).map_err(|_| bad("unknown sender"))?;
            let r = d.agent_id(&receiver).map_err(|_| bad("unknown receiver"))?;
            if s == r {
                return Err(bad("sender and receiver coincide"));
            }
            if !d.local[s].contains(&event) {
                return Err(bad("sender does not own the event"));
            }
            if !d.local[r].contains(&event) {
                return Err(bad("receiver does not own the event"));
            }
            d.channels.insert(Channel {
                event,
                sender: s,
                receiver: r,
            });
        }
        Ok(d)
    }

    /// Convenience constructor from string slices; agents are named `1..=n`.
    pub fn numbered(sets: &[&[&str]], channels: &[(&str, usize, usize)]) -> Result<Self> {
        Self::new(
            sets.iter().enumerate().map(|(i, s)| {
                (
                    (i + 1).to_string(),
                    s.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                )
            }),
            channels
                .iter()
                .map(|(e, s, r)| (e.to_string(), s.to_string(), r.to_string())),
        )
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_name(&self, i: AgentId) -> &str {
        &self.agents[i]
    }

    pub fn agent_id(&self, name: &str) -> Result<AgentId> {
        self.agents
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn local_set(&self, i: AgentId) -> &BTreeSet<Event> {
        &self.local[i]
    }

    pub fn local_sets(&self) -> &[BTreeSet<Event>] {
        &self.local
    }

    pub fn channels(&self) -> &BTreeSet<Channel> {
        &self.channels
    }

    /// The global event set: union of all local sets.
    pub fn global(&self) -> BTreeSet<Event> {
        self.local.iter().flatten().cloned().collect()
    }

    /// Agents whose local set contains `event`.
    pub fn loc(&self, event: &str) -> Result<BTreeSet<AgentId>> {
        let agents: BTreeSet<AgentId> = (0..self.local.len())
            .filter(|&i| self.local[i].contains(event))
            .collect();
        if agents.is_empty() {
            Err(Error::UnknownEvent(event.to_string()))
        } else {
            Ok(agents)
        }
    }

    /// Whether some agent observes both events.
    pub fn co_located(sets: &[BTreeSet<Event>], e1: &str, e2: &str) -> bool {
        sets.iter().any(|s| s.contains(e1) && s.contains(e2))
    }

    /// Channels grouped by event, for display.
    pub fn channels_by_event(&self) -> BTreeMap<&str, Vec<(&str, &str)>> {
        let mut map: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
        for c in &self.channels {
            map.entry(c.event.as_str())
                .or_default()
                .push((&self.agents[c.sender], &self.agents[c.receiver]));
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> DistributedAlphabet {
        DistributedAlphabet::numbered(
            &[&["e1", "a"], &["e2", "a"], &["a"]],
            &[("a", 3, 1), ("a", 3, 2)],
        )
        .unwrap()
    }

    #[test]
    fn locations_of_shared_and_private_events() {
        let d = ex1();
        assert_eq!(d.loc("a").unwrap(), BTreeSet::from([0, 1, 2]));
        assert_eq!(d.loc("e1").unwrap(), BTreeSet::from([0]));
        assert!(matches!(d.loc("zz"), Err(Error::UnknownEvent(_))));
    }

    #[test]
    fn channel_to_missing_agent_is_rejected() {
        let err =
            DistributedAlphabet::numbered(&[&["a"], &["a"], &["a"]], &[("a", 3, 4)]).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidChannel {
                reason: "unknown receiver",
                ..
            }
        ));
    }

    #[test]
    fn channel_event_must_belong_to_both_endpoints() {
        let err = DistributedAlphabet::numbered(&[&["a"], &["b"]], &[("a", 1, 2)]).unwrap_err();
        assert!(matches!(err, Error::InvalidChannel { .. }));
        let err = DistributedAlphabet::numbered(&[&["a"], &["a"]], &[("a", 1, 1)]).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidChannel {
                reason: "sender and receiver coincide",
                ..
            }
        ));
    }

    #[test]
    fn global_set_is_union() {
        let d = ex1();
        let g: Vec<_> = d.global().into_iter().collect();
        assert_eq!(g, ["a", "e1", "e2"]);
    }
}

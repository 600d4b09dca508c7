use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dangling state `{0}`: referenced but not declared")]
    DanglingState(String),

    #[error("duplicate state `{0}`")]
    DuplicateState(String),

    #[error("transition label `{0}` is outside the alphabet")]
    LabelOutsideAlphabet(String),

    #[error("automaton has no initial state")]
    EmptyInitials,

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("unknown event `{0}`")]
    UnknownEvent(String),

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("duplicate agent `{0}`")]
    DuplicateAgent(String),

    #[error("`eps` is reserved for hidden moves and cannot be used as an event name")]
    ReservedEvent,

    #[error("hidden transition encountered where an observable automaton is required")]
    HiddenTransition,

    #[error("{0} must be deterministic")]
    NotDeterministic(&'static str),

    #[error("invalid channel `{event}: {sender} -> {receiver}`: {reason}")]
    InvalidChannel {
        event: String,
        sender: String,
        receiver: String,
        reason: &'static str,
    },

    #[error("event `{event}` of the task is not in any agent's local event set")]
    EventWithoutLocation { event: String },

    #[error("failed event `{event}` is not in the event set of agent `{agent}`")]
    FailureOutsideAlphabet { agent: String, event: String },

    #[error("non-passive failure of `{event}` in agent `{agent}`")]
    NonPassiveFailure { agent: String, event: String },

    #[error("expected {expected} agents, found {found}")]
    AgentCount { expected: usize, found: usize },

    #[error("depth {depth} exceeds the enumeration guard of {max}")]
    DepthGuard { depth: usize, max: usize },

    #[error("rejection budget of {attempts} draws exhausted (seed {seed})")]
    RejectionExhausted { seed: u64, attempts: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

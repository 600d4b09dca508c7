pub mod alphabet;
pub mod automaton;
pub mod compose;
pub mod decomposability;
pub mod dot;
pub mod error;
pub mod exec;
pub mod failure;
pub mod fixtures;
pub mod projection;
pub mod relations;
pub mod scenario;
pub mod testkit;
pub mod topdown;

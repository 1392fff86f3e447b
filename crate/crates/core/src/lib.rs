//! Multi-agent debate over configurable communication topologies.
//!
//! The crate builds ring, complete, random and small-world graphs
//! ([`graph`]), runs synchronous debates of synthetic or remote agents over
//! them ([`agents`], [`engine`]), measures per-agent uncertainty from
//! sampled answers ([`uq`]) and uses it to add shortcut edges mid-debate
//! ([`rewire`]). [`roles`] simulates how node position alone shapes noisy
//! belief dynamics, and [`experiment`] drives seeded sweeps that write JSONL
//! and CSV results.

pub mod agents;
pub mod engine;
pub mod experiment;
pub mod graph;
pub mod rewire;
pub mod rng;
pub mod roles;
pub mod uq;

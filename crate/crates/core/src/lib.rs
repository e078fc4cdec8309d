//! Model-carrying random walkers on graphs of data-holding nodes.
//!
//! A walker owns a small classifier, hops between nodes of a network
//! according to a transition policy, and trains on the local data of each
//! node it lands on. Several walkers may share a network and exchange
//! knowledge by averaging their models when they meet.
//!
//! Layout:
//!
//! - [`topology`]: caveman and random geometric graphs, betweenness, steering.
//! - [`datahub`]: synthetic Gaussian-mixture data and non-iid partitions.
//! - [`learner`]: softmax regression / one-hidden-layer MLP trained by SGD.
//! - [`policy`]: node importance, transition rows, elastic SGD budgets.
//! - [`walker`]: single-walker state machine with optional two-model memory.
//! - [`swarm`]: collisions, rendezvous, attraction and the uplink baseline.
//! - [`experiment`]: configs, runs, sweeps, presets and CSV summaries.

pub mod datahub;
pub mod error;
pub mod experiment;
pub mod learner;
pub mod policy;
pub mod rng;
pub mod swarm;
pub mod topology;
pub mod walker;

pub use error::{Error, Result};

//! Core library for `dialoforge`: a corpus-free toolkit that builds
//! task-oriented dialogue user simulators from hand-written template
//! bundles.
//!
//! The pipeline is:
//!
//! 1. [`ontology`] — parse and validate a template bundle (acts, slots,
//!    goals, response rules, NLG rules, knowledge base).
//! 2. [`rules`] — run the agenda user simulator and the rule agent that
//!    the bundle defines.
//! 3. [`datagen`] — roll out rule-vs-rule dialogues (basic data) and
//!    dialogues against snapshots of a learning agent (diverse data).
//! 4. [`models`] — train neural user simulators (state-to-sequence with
//!    attention, a multi-label variant, and sequence-to-sequence
//!    baselines) on the generated logs.
//! 5. [`dqn`] — train a DQN dialogue agent against any user simulator.
//! 6. [`evalkit`] — cross-model evaluation matrices and generalization
//!    tests against the rule agent.
//!
//! Everything is deterministic given a seed: logs, checkpoints and
//! reports are byte-identical across reruns.

pub mod datagen;
pub mod dialogue;
pub mod dqn;
pub mod error;
pub mod evalkit;
pub mod models;
pub mod neural;
pub mod ontology;
pub mod rng;
pub mod rules;

pub use error::{Error, Result};

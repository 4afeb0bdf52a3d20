// Step and replay errors carry full transition context for diagnostics;
// boxing them would complicate every call site.
#![allow(clippy::result_large_err)]

//! Broadcast networks: static, reconfigurable and lossy-at-send semantics.
//!
//! The crate decides coverability through a refined saturation algorithm,
//! synthesizes small replayable covering witnesses via copycat constructions,
//! and computes exact cutoffs and covering lengths on small instances with a
//! brute-force explorer, including the MinCover decision problem and its
//! SetCover reduction.
//!
//! Modules follow the pipeline: [`protocol`] and [`dsl`] define and parse
//! protocols, [`semantics`] replays executions (serialized by [`trace`]),
//! [`saturation`] computes the coverable set, [`witness`] turns its trace
//! into executions, [`explorer`] answers exact questions at fixed node
//! counts, and [`instances`] generates the named protocol families.

pub mod dsl;
pub mod explorer;
pub mod instances;
pub mod protocol;
pub mod saturation;
pub mod semantics;
pub mod trace;
pub mod witness;

pub use protocol::{Action, MsgId, Protocol, StateId, TargetSet, Transition};
pub use semantics::{
    apply_step, covers, enabled_steps, lossy_to_reconfig, replay, Configuration, ExecMetrics,
    Execution, NodeId, SemanticsKind, StepDescriptor,
};

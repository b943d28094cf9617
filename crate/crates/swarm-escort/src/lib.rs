//! Simulation library for a networked UAV defense swarm.
//!
//! A set of defense UAVs self-organizes into balanced tree clusters around
//! elected cluster heads, wraps an intruding UAV in a hemispherical capture
//! formation, and escorts it out of a bounded flight zone. Everything is
//! discrete-time and deterministic: a `(ScenarioConfig, seed)` pair always
//! produces the same trajectory, tick for tick.
//!
//! Module map:
//!
//! * [`geometry`] vectors, axis-angle rotation, formation radius
//! * [`protocol`] leader election, balanced cluster trees, swarm messages
//! * [`formation`] capture-formation frames and member slot positions
//! * [`pursuit`] chase/escort phase logic and steering for cluster heads
//! * [`physics`] separation forces, noise-driven wobble, integration
//! * [`engine`] scenario config, the per-tick world step, trace output
//! * [`harness`] batch runs, parameter sweeps, summary statistics
//!
//! The `swarm-escort` binary is a thin front end over [`engine`] and
//! [`harness`]; the `examples/` directory shows each capability in
//! isolation.

pub mod engine;
pub mod formation;
pub mod geometry;
pub mod harness;
pub mod physics;
pub mod protocol;
pub mod pursuit;

pub use engine::{Outcome, RunRecord, ScenarioConfig, World};
pub use harness::{SummaryRow, SweepSpec};
pub use geometry::Vec3;
pub use protocol::{NodeId, NodeState, Role};
pub use pursuit::Phase;

//! Distributed online least-squares estimation over a network.
//!
//! Each of `m` agents receives a stream of pairs `y = Θx + η`, keeps the
//! sufficient statistics of its local least-squares problem, and every `ζ`
//! steps (until a stopping time `S`) runs `T` rounds of consensus averaging on
//! those statistics through a doubly stochastic weight matrix. The crate
//! provides the simulator, closed-form finite-time error bounds for the local,
//! pooled and communicated estimates, and a planner that picks `T` and `S`
//! from accuracy targets.
//!
//! Modules:
//!
//! * [`model`]: seeded data generation and the pairwise differencing transform
//! * [`local`]: per-agent recursive least squares (Sherman-Morrison)
//! * [`consensus`]: weight matrix validation, `ρ(W)`, communication phases
//! * [`bounds`]: burn-in times, constants and error bounds
//! * [`planner`]: choosing `T` and `S`
//! * [`sim`]: end-to-end runs and error traces
//! * [`config`], [`trace`], [`commands`]: JSON configs, CSV traces and the CLI commands

pub mod bounds;
pub mod commands;
pub mod config;
pub mod consensus;
pub mod linalg;
pub mod local;
pub mod model;
pub mod planner;
pub mod sim;
pub mod trace;

pub use bounds::{BoundInputs, BoundReport, Confidence};
pub use consensus::WeightMatrix;
pub use local::AgentState;
pub use model::{DataPair, MeanSchedule, ModelSpec, SeededStream};
pub use planner::{Plan, PlanRequest, Schedule};
pub use sim::{ErrorTrace, Network, SimConfig, TraceRow};

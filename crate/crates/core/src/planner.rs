//! Choosing the number of consensus rounds `T` and the stopping time `S`.
//!
//! `T` is the smallest round count for which the network term of the
//! communicated bound stays below `ε_N` at every communication time. `S` is
//! the first communication time at which the better of the local and the
//! communicated bound drops below the target accuracy `ε`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    burn_in, comm_bound, first_valid, local_bound, BoundInputs, BoundsError, Confidence,
};
use crate::model::ModelSpec;

/// Search cap for `T`; only reached when `ρ` is extremely close to 1.
pub const MAX_STEPS: u32 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("communication period must be at least 1")]
    ZeroPeriod,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("no T up to {MAX_STEPS} brings the network term below {epsilon_network}")]
    StepsUnbounded { epsilon_network: f64 },
    #[error("target accuracy not reachable within horizon t <= {horizon}")]
    Unreachable { horizon: u64 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Communication schedule consumed by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Communication period `ζ`.
    pub zeta: u64,
    /// Consensus rounds per phase `T`.
    pub steps: u32,
    /// Last time at which a phase may fire `S` (inclusive).
    pub stop: u64,
}

impl Schedule {
    /// Whether a communication phase runs after the data step `t`.
    pub fn fires_at(&self, t: u64) -> bool {
        t.is_multiple_of(self.zeta) && t <= self.stop
    }
}

/// How `λ_min(I + μ̄)` enters the bounds during planning.
#[derive(Debug, Clone, Copy, Default)]
pub enum Curvature<'a> {
    /// Replace `μ̄` by zero, so `λ_min = 1`.
    #[default]
    Conservative,
    /// Evaluate `μ̄` from a known mean schedule.
    Model(&'a ModelSpec),
}

impl Curvature<'_> {
    /// Smallest per-agent `λ_min(I + μ̄_{i,t})`; gives the largest local bound.
    fn worst_local(&self, t: u64) -> f64 {
        match self {
            Curvature::Conservative => 1.0,
            Curvature::Model(spec) => (0..spec.m())
                .map(|i| spec.lambda_min_local(i, t))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn pooled(&self, t: u64) -> f64 {
        match self {
            Curvature::Conservative => 1.0,
            Curvature::Model(spec) => spec.lambda_min_pooled(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub steps: u32,
    /// First communication time past the burn-in at `δ̂`.
    pub first_comm_time: u64,
    /// `ρ^T C₀(first_comm_time, T)`.
    pub network_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPlan {
    pub stop: u64,
    /// Largest local bound over agents at `stop`.
    pub local_bound: f64,
    /// Communicated bound at `stop`.
    pub comm_bound: f64,
}

fn positive(name: &'static str, value: f64) -> Result<(), PlanError> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(PlanError::NonPositive { name, value })
    }
}

fn next_multiple(t: u64, zeta: u64) -> u64 {
    t.div_ceil(zeta) * zeta
}

/// Smallest `T ≥ 1` with `ρ^T C₀(t_first, T) ≤ ε_N`.
///
/// `C₀` decreases in `t`, so meeting the tolerance at the first
/// communication time covers every later one.
pub fn plan_steps(
    inputs: &BoundInputs,
    zeta: u64,
    epsilon_network: f64,
) -> Result<StepPlan, PlanError> {
    inputs.validate()?;
    if zeta == 0 {
        return Err(PlanError::ZeroPeriod);
    }
    positive("epsilon_network", epsilon_network)?;
    let first_comm_time = next_multiple(
        first_valid(burn_in(inputs, Confidence::DeltaHat).max()),
        zeta,
    );
    for steps in 1..=MAX_STEPS {
        let term = inputs.network_term(first_comm_time, steps);
        if term <= epsilon_network {
            return Ok(StepPlan {
                steps,
                first_comm_time,
                network_term: term,
            });
        }
    }
    Err(PlanError::StepsUnbounded { epsilon_network })
}

/// First multiple of `ζ` (past both burn-ins) where
/// `min(max_i local_bound(t), comm_bound(t, T)) < ε`, searched up to `horizon`.
pub fn plan_stop(
    inputs: &BoundInputs,
    zeta: u64,
    steps: u32,
    epsilon: f64,
    horizon: u64,
    curvature: Curvature<'_>,
) -> Result<StopPlan, PlanError> {
    inputs.validate()?;
    if zeta == 0 {
        return Err(PlanError::ZeroPeriod);
    }
    positive("epsilon", epsilon)?;
    let start = first_valid(burn_in(inputs, Confidence::Delta).max())
        .max(first_valid(burn_in(inputs, Confidence::DeltaHat).max()));
    let mut t = next_multiple(start, zeta);
    while t <= horizon {
        let local = local_bound(inputs, t, curvature.worst_local(t))?.value;
        let comm = comm_bound(inputs, t, steps, curvature.pooled(t))?.value;
        if local.min(comm) < epsilon {
            return Ok(StopPlan {
                stop: t,
                local_bound: local,
                comm_bound: comm,
            });
        }
        t += zeta;
    }
    Err(PlanError::Unreachable { horizon })
}

/// Targets for a full planning pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub zeta: u64,
    pub epsilon: f64,
    pub epsilon_network: f64,
    pub horizon: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub schedule: Schedule,
    pub steps: StepPlan,
    pub stop: StopPlan,
}

/// Plan `T`, then `S` with that `T`.
pub fn plan(
    inputs: &BoundInputs,
    request: &PlanRequest,
    curvature: Curvature<'_>,
) -> Result<Plan, PlanError> {
    let steps = plan_steps(inputs, request.zeta, request.epsilon_network)?;
    let stop = plan_stop(
        inputs,
        request.zeta,
        steps.steps,
        request.epsilon,
        request.horizon,
        curvature,
    )?;
    Ok(Plan {
        schedule: Schedule {
            zeta: request.zeta,
            steps: steps.steps,
            stop: stop.stop,
        },
        steps,
        stop,
    })
}

//! End-to-end simulation of the distributed estimator.
//!
//! Every data step each agent draws one pair and updates its local
//! statistics. After steps that are multiples of `ζ` (up to `S`), the agents
//! run `T` consensus rounds on copies of their statistics and form `Θ̄` from
//! the mixed values; otherwise `Θ̄` is carried over unchanged. The pooled
//! estimator over all agents is tracked by the harness as a reference.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::consensus::{run_comm_phase_observed, WeightMatrix};
use crate::linalg::{is_well_conditioned, spectral_norm};
use crate::local::{estimate_from_stats, AgentState};
use crate::model::{sample_pair, ModelSpec, SeededStream};
use crate::planner::Schedule;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("weight matrix has {weights} agents but the model has {model}")]
    AgentCount { weights: usize, model: usize },
    #[error("horizon {horizon} is shorter than the stopping time {stop}")]
    Horizon { horizon: u64, stop: u64 },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("could not build a worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub weights: WeightMatrix,
    pub schedule: Schedule,
    /// Last simulated data step.
    pub horizon: u64,
    /// Monte Carlo replications.
    pub runs: u64,
    pub seed: u64,
    /// Replace the local statistics by the mixed ones after each phase.
    pub writeback_mixed: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.weights.m() != self.model.m() {
            return Err(SimError::AgentCount {
                weights: self.weights.m(),
                model: self.model.m(),
            });
        }
        if self.runs == 0 {
            return Err(SimError::Zero("runs"));
        }
        if self.horizon == 0 {
            return Err(SimError::Zero("horizon"));
        }
        if self.schedule.zeta == 0 {
            return Err(SimError::Zero("zeta"));
        }
        if self.schedule.steps == 0 {
            return Err(SimError::Zero("steps"));
        }
        if self.horizon < self.schedule.stop {
            return Err(SimError::Horizon {
                horizon: self.horizon,
                stop: self.schedule.stop,
            });
        }
        Ok(())
    }
}

/// Errors recorded after data step `t` (spectral norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    /// Mean over agents of `‖Θ̂_i - Θ‖`.
    pub local_err: f64,
    /// Mean over agents of `‖Θ̄_i - Θ‖`.
    pub comm_err: f64,
    /// `‖Θ̂ - Θ‖` for the pooled estimator.
    pub global_err: f64,
    pub comm_fired: bool,
    /// Agents whose `β` is not yet invertible. Max over runs in an averaged trace.
    pub pre_invertible_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTrace {
    pub rows: Vec<TraceRow>,
}

impl ErrorTrace {
    /// Column-wise arithmetic mean across traces of equal length.
    pub fn average(traces: &[ErrorTrace]) -> ErrorTrace {
        let Some(first) = traces.first() else {
            return ErrorTrace::default();
        };
        let k = traces.len() as f64;
        let rows = (0..first.rows.len())
            .map(|r| {
                let mut row = first.rows[r];
                let (mut le, mut ce, mut ge) = (0.0, 0.0, 0.0);
                for tr in traces {
                    let x = &tr.rows[r];
                    le += x.local_err;
                    ce += x.comm_err;
                    ge += x.global_err;
                    row.pre_invertible_count = row.pre_invertible_count.max(x.pre_invertible_count);
                }
                row.local_err = le / k;
                row.comm_err = ce / k;
                row.global_err = ge / k;
                row
            })
            .collect();
        ErrorTrace { rows }
    }

    pub fn row(&self, t: u64) -> Option<&TraceRow> {
        self.rows.get((t as usize).checked_sub(1)?)
    }
}

/// State of all agents in one replication.
#[derive(Debug, Clone)]
pub struct Network<'a> {
    config: &'a SimConfig,
    stream: SeededStream,
    run: u64,
    agents: Vec<AgentState>,
    t: u64,
}

impl<'a> Network<'a> {
    pub fn new(config: &'a SimConfig, run: u64) -> Self {
        let m = config.model.m();
        let (n, l) = (config.model.n(), config.model.l());
        Self {
            config,
            stream: SeededStream::new(config.seed),
            run,
            agents: (0..m).map(|_| AgentState::new(n, l)).collect(),
            t: 0,
        }
    }

    /// Last completed data step (0 before the first).
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Advance one data step.
    pub fn step(&mut self) -> TraceRow {
        self.step_observed(|_, _, _| {})
    }

    /// Advance one data step, calling `observe(k, α^k, β^k)` after every
    /// consensus round if a phase fires.
    pub fn step_observed<F>(&mut self, observe: F) -> TraceRow
    where
        F: FnMut(u32, &[DMatrix<f64>], &[DMatrix<f64>]),
    {
        self.t += 1;
        let t = self.t;
        let model = &self.config.model;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let pair = sample_pair(model, &self.stream, self.run, i, t);
            agent
                .ingest(&pair)
                .expect("model and agent dimensions agree");
        }

        let schedule = &self.config.schedule;
        let fired = schedule.fires_at(t);
        if fired {
            let alphas: Vec<_> = self.agents.iter().map(|a| a.alpha().clone()).collect();
            let betas: Vec<_> = self.agents.iter().map(|a| a.beta().clone()).collect();
            let mixed =
                run_comm_phase_observed(&self.config.weights, &alphas, &betas, schedule.steps, observe)
                    .expect("validated configuration");
            for (i, agent) in self.agents.iter_mut().enumerate() {
                agent.theta_comm = estimate_from_stats(&mixed.alphas[i], &mixed.betas[i]);
                if self.config.writeback_mixed {
                    agent.overwrite_statistics(mixed.alphas[i].clone(), mixed.betas[i].clone());
                }
            }
        }
        self.record(fired)
    }

    fn pooled_stats(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (n, l) = (self.config.model.n(), self.config.model.l());
        self.agents.iter().fold(
            (DMatrix::zeros(l, n), DMatrix::zeros(n, n)),
            |(a, b), s| (a + s.alpha(), b + s.beta()),
        )
    }

    /// Pooled estimator `(Σ α_i)(Σ β_i)†` over the current statistics.
    pub fn global_estimate(&self) -> DMatrix<f64> {
        let (a, b) = self.pooled_stats();
        estimate_from_stats(&a, &b)
    }

    /// Whether the pooled `Σ β_i` is still singular.
    pub fn global_pre_invertible(&self) -> bool {
        !is_well_conditioned(&self.pooled_stats().1)
    }

    /// `max_i ‖Θ̄_i - Θ̂_global‖`.
    pub fn consensus_gap(&self) -> f64 {
        let g = self.global_estimate();
        self.agents
            .iter()
            .map(|a| spectral_norm(&(&a.theta_comm - &g)))
            .fold(0.0, f64::max)
    }

    fn record(&self, comm_fired: bool) -> TraceRow {
        let theta = self.config.model.theta();
        let m = self.agents.len() as f64;
        let mut local_err = 0.0;
        let mut comm_err = 0.0;
        let mut pre_invertible_count = 0;
        for a in &self.agents {
            local_err += spectral_norm(&(a.local_estimate() - theta));
            comm_err += spectral_norm(&(&a.theta_comm - theta));
            pre_invertible_count += usize::from(a.is_pre_invertible());
        }
        TraceRow {
            t: self.t,
            local_err: local_err / m,
            comm_err: comm_err / m,
            global_err: spectral_norm(&(self.global_estimate() - theta)),
            comm_fired,
            pre_invertible_count,
        }
    }
}

/// Run one replication to the horizon.
pub fn run_single(config: &SimConfig, run: u64) -> ErrorTrace {
    let mut net = Network::new(config, run);
    ErrorTrace {
        rows: (0..config.horizon).map(|_| net.step()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub traces: Vec<ErrorTrace>,
    pub mean: ErrorTrace,
}

/// All replications in run order, plus their average.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    run_parallel(config, 1)
}

/// As [`run`], spreading replications over `workers` threads. Results are
/// merged by run index, so the output does not depend on `workers`.
pub fn run_parallel(config: &SimConfig, workers: usize) -> Result<SimOutput, SimError> {
    config.validate()?;
    let traces: Vec<ErrorTrace> = if workers <= 1 {
        (0..config.runs).map(|r| run_single(config, r)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        pool.install(|| {
            (0..config.runs)
                .into_par_iter()
                .map(|r| run_single(config, r))
                .collect()
        })
    };
    let mean = ErrorTrace::average(&traces);
    Ok(SimOutput { traces, mean })
}

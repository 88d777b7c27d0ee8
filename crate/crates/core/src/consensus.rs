//! Consensus weight matrices and the synchronous averaging phase.
//!
//! A valid weight matrix is nonnegative, symmetric, row-stochastic (hence
//! doubly stochastic) and has `ρ(W) = max{λ₂, -λ_m} < 1`. A phase runs `T`
//! synchronous rounds in which every agent replaces its statistics with the
//! `W`-weighted sum of its own and its neighbours' statistics.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::local::estimate_from_stats;

/// Tolerance for row sums and symmetry.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("weight matrix must be square and non-empty, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("entry ({i}, {j}) = {value} is negative or not finite")]
    Negative { i: usize, j: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("matrix is not symmetric: w({i},{j}) = {a} but w({j},{i}) = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("rho(W) = {rho} is not below 1; the graph does not mix")]
    NotMixing { rho: f64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("expected statistics for {expected} agents, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("agent {agent} holds a {got:?} matrix, expected {expected:?}")]
    Shape {
        agent: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("a communication phase needs at least one step")]
    ZeroSteps,
    #[error("agent index {0} out of range")]
    Agent(usize),
}

/// Validated consensus matrix with its mixing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
    rho: f64,
    /// `neighbors[i]` lists `(j, w(i,j))` for every `j` with `w(i,j) > 0`, self included.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self, WeightError> {
        let (rows, cols) = w.shape();
        if rows != cols || rows == 0 {
            return Err(WeightError::Shape { rows, cols });
        }
        let m = rows;
        for i in 0..m {
            for j in 0..m {
                let value = w[(i, j)];
                if !(value.is_finite() && value >= 0.0) {
                    return Err(WeightError::Negative { i, j, value });
                }
            }
        }
        for i in 0..m {
            let sum: f64 = w.row(i).iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(WeightError::RowSum { row: i, sum });
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (w[(i, j)], w[(j, i)]);
                if (a - b).abs() > STOCHASTIC_TOL {
                    return Err(WeightError::Asymmetric { i, j, a, b });
                }
            }
        }
        let rho = mixing_rate(&w);
        if rho >= 1.0 - STOCHASTIC_TOL {
            return Err(WeightError::NotMixing { rho });
        }
        let neighbors = (0..m)
            .map(|i| {
                (0..m)
                    .filter(|&j| w[(i, j)] > 0.0)
                    .map(|j| (j, w[(i, j)]))
                    .collect()
            })
            .collect();
        Ok(Self { w, rho, neighbors })
    }

    /// Ring of `m` agents: each keeps `self_weight` and splits the rest
    /// evenly between its two neighbours.
    pub fn ring(m: usize, self_weight: f64) -> Result<Self, WeightError> {
        if m == 0 {
            return Err(WeightError::Shape { rows: 0, cols: 0 });
        }
        let mut w = DMatrix::zeros(m, m);
        if m == 1 {
            w[(0, 0)] = 1.0;
        } else {
            let side = (1.0 - self_weight) / 2.0;
            for i in 0..m {
                w[(i, i)] += self_weight;
                w[(i, (i + 1) % m)] += side;
                w[(i, (i + m - 1) % m)] += side;
            }
        }
        Self::new(w)
    }

    /// Complete graph with uniform weights `1/m`; mixes in one step.
    pub fn complete(m: usize) -> Result<Self, WeightError> {
        if m == 0 {
            return Err(WeightError::Shape { rows: 0, cols: 0 });
        }
        Self::new(DMatrix::from_element(m, m, 1.0 / m as f64))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn m(&self) -> usize {
        self.w.nrows()
    }
    /// Agents `j ≠ i` with `w(i,j) > 0`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i]
            .iter()
            .map(|&(j, _)| j)
            .filter(move |&j| j != i)
    }

    /// One synchronous round: every output reads only the round-`k` snapshot.
    pub fn mix_once(&self, values: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        self.neighbors
            .iter()
            .map(|row| {
                let mut acc = DMatrix::zeros(values[0].nrows(), values[0].ncols());
                for &(j, wij) in row {
                    acc += &values[j] * wij;
                }
                acc
            })
            .collect()
    }
}

/// `max{λ₂, -λ_m}` of the symmetrised matrix; 0 for a single agent.
fn mixing_rate(w: &DMatrix<f64>) -> f64 {
    let m = w.nrows();
    if m == 1 {
        return 0.0;
    }
    let sym = (w + w.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig[1].max(-eig[m - 1])
}

/// Statistics held by every agent after `steps` mixing rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CommPhaseResult {
    pub alphas: Vec<DMatrix<f64>>,
    pub betas: Vec<DMatrix<f64>>,
    pub steps: u32,
}

impl CommPhaseResult {
    /// `α^T_i (β^T_i)†` for `agent`.
    pub fn estimate(&self, agent: usize) -> Result<DMatrix<f64>, ConsensusError> {
        match (self.alphas.get(agent), self.betas.get(agent)) {
            (Some(a), Some(b)) => Ok(estimate_from_stats(a, b)),
            _ => Err(ConsensusError::Agent(agent)),
        }
    }
}

/// Run `steps` rounds of mixing on both statistics.
pub fn run_comm_phase(
    weights: &WeightMatrix,
    alphas: &[DMatrix<f64>],
    betas: &[DMatrix<f64>],
    steps: u32,
) -> Result<CommPhaseResult, ConsensusError> {
    run_comm_phase_observed(weights, alphas, betas, steps, |_, _, _| {})
}

/// As [`run_comm_phase`], calling `observe(k, α^k, β^k)` after each round
/// `k = 1..=steps`.
pub fn run_comm_phase_observed<F>(
    weights: &WeightMatrix,
    alphas: &[DMatrix<f64>],
    betas: &[DMatrix<f64>],
    steps: u32,
    mut observe: F,
) -> Result<CommPhaseResult, ConsensusError>
where
    F: FnMut(u32, &[DMatrix<f64>], &[DMatrix<f64>]),
{
    if steps == 0 {
        return Err(ConsensusError::ZeroSteps);
    }
    check_uniform(weights.m(), alphas)?;
    check_uniform(weights.m(), betas)?;
    let mut a = alphas.to_vec();
    let mut b = betas.to_vec();
    for k in 1..=steps {
        a = weights.mix_once(&a);
        b = weights.mix_once(&b);
        observe(k, &a, &b);
    }
    Ok(CommPhaseResult {
        alphas: a,
        betas: b,
        steps,
    })
}

fn check_uniform(m: usize, values: &[DMatrix<f64>]) -> Result<(), ConsensusError> {
    if values.len() != m {
        return Err(ConsensusError::AgentCount {
            expected: m,
            got: values.len(),
        });
    }
    let expected = values[0].shape();
    for (agent, v) in values.iter().enumerate() {
        if v.shape() != expected {
            return Err(ConsensusError::Shape {
                agent,
                expected,
                got: v.shape(),
            });
        }
    }
    Ok(())
}

/// `max_i Σ_j |W^T(i,j) - 1/m|`, from the explicit matrix power.
pub fn mixing_deficit(weights: &WeightMatrix, steps: u32) -> f64 {
    let m = weights.m();
    let mut p = DMatrix::identity(m, m);
    for _ in 0..steps {
        p = &p * weights.matrix();
    }
    let avg = 1.0 / m as f64;
    (0..m)
        .map(|i| p.row(i).iter().map(|x| (x - avg).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Upper bound `√m ρ^T` on [`mixing_deficit`].
pub fn mixing_deficit_bound(weights: &WeightMatrix, steps: u32) -> f64 {
    (weights.m() as f64).sqrt() * weights.rho().powi(steps as i32)
}

//! Per-agent sufficient statistics and the recursive least-squares estimate.
//!
//! The state keeps `α = Σ y x*` and `β = Σ x x*`. Once `β` is numerically
//! invertible its inverse is formed once and then carried forward with
//! Sherman-Morrison rank-one updates; before that the estimate is `α β†`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{is_well_conditioned, pinv};
use crate::model::DataPair;

/// Number of Sherman-Morrison updates between direct re-inversions of `β`.
pub const REFACTOR_INTERVAL: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EstimatorError {
    #[error("pair dimensions (x: {x}, y: {y}) do not match state (n: {n}, l: {l})")]
    DimensionMismatch { x: usize, y: usize, n: usize, l: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    alpha: DMatrix<f64>,
    beta: DMatrix<f64>,
    beta_inv: Option<DMatrix<f64>>,
    theta_local: DMatrix<f64>,
    /// Estimate formed from mixed statistics; only written by a communication phase.
    pub theta_comm: DMatrix<f64>,
    sample_count: u64,
    since_refactor: u64,
}

impl AgentState {
    /// All-zero state for `n` features and `l` labels.
    pub fn new(n: usize, l: usize) -> Self {
        assert!(n >= 1 && l >= 1, "dimensions must be positive");
        Self {
            alpha: DMatrix::zeros(l, n),
            beta: DMatrix::zeros(n, n),
            beta_inv: None,
            theta_local: DMatrix::zeros(l, n),
            theta_comm: DMatrix::zeros(l, n),
            sample_count: 0,
            since_refactor: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.beta.nrows()
    }
    pub fn l(&self) -> usize {
        self.alpha.nrows()
    }
    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }
    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }
    pub fn beta_inv(&self) -> Option<&DMatrix<f64>> {
        self.beta_inv.as_ref()
    }
    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }
    /// `β` has not yet been declared invertible.
    pub fn is_pre_invertible(&self) -> bool {
        self.beta_inv.is_none()
    }

    /// Current local estimate `Θ̂`.
    pub fn local_estimate(&self) -> &DMatrix<f64> {
        &self.theta_local
    }

    pub fn ingest(&mut self, pair: &DataPair) -> Result<(), EstimatorError> {
        self.ingest_xy(&pair.x, &pair.y)
    }

    pub fn ingest_xy(&mut self, x: &DVector<f64>, y: &DVector<f64>) -> Result<(), EstimatorError> {
        if x.len() != self.n() || y.len() != self.l() {
            return Err(EstimatorError::DimensionMismatch {
                x: x.len(),
                y: y.len(),
                n: self.n(),
                l: self.l(),
            });
        }
        self.alpha += y * x.transpose();
        self.beta += x * x.transpose();
        self.sample_count += 1;

        match self.beta_inv.as_mut() {
            Some(inv) if self.since_refactor + 1 < REFACTOR_INTERVAL => {
                sherman_morrison_update(inv, x);
                self.since_refactor += 1;
            }
            Some(_) => self.refactor(),
            None => {
                if is_well_conditioned(&self.beta) {
                    self.refactor();
                }
            }
        }

        self.theta_local = match &self.beta_inv {
            Some(inv) => &self.alpha * inv,
            None => &self.alpha * pinv(&self.beta),
        };
        Ok(())
    }

    /// Replace `α` and `β` wholesale (e.g. with mixed statistics) and rebuild
    /// the inverse and the local estimate from them.
    pub fn overwrite_statistics(&mut self, alpha: DMatrix<f64>, beta: DMatrix<f64>) {
        assert_eq!(alpha.shape(), self.alpha.shape());
        assert_eq!(beta.shape(), self.beta.shape());
        self.alpha = alpha;
        self.beta = beta;
        self.beta_inv = None;
        if is_well_conditioned(&self.beta) {
            self.refactor();
        }
        self.theta_local = match &self.beta_inv {
            Some(inv) => &self.alpha * inv,
            None => &self.alpha * pinv(&self.beta),
        };
    }

    fn refactor(&mut self) {
        self.beta_inv = direct_inverse(&self.beta);
        self.since_refactor = 0;
    }
}

/// Estimate `α β†` from a pair of statistics.
pub fn estimate_from_stats(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> DMatrix<f64> {
    alpha * pinv(beta)
}

/// In-place `A⁻¹ ← A⁻¹ - A⁻¹ x x* A⁻¹ / (1 + x* A⁻¹ x)` for symmetric `A`.
pub fn sherman_morrison_update(inv: &mut DMatrix<f64>, x: &DVector<f64>) {
    let ax = &*inv * x;
    let denom = 1.0 + x.dot(&ax);
    *inv -= (&ax * ax.transpose()) / denom;
}

fn direct_inverse(beta: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    beta.clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| beta.clone().try_inverse())
}

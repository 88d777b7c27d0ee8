//! Streaming data model `y = Θx + η` with Gaussian features and noise.
//!
//! Each agent `i` observes at every step `t` a pair `(x, y)` where
//! `x ~ N(μ_{i,t}, σx² I_n)`, `η ~ N(0, ση² I_l)` and `y = Θx + η`.
//! Draws are keyed by `(seed, run, agent, t)` so any pair can be regenerated
//! on its own, in any order, on any thread.
//!
//! Agents are indexed from 0 throughout the crate; time steps start at 1.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sigma_x must be positive and finite, got {0}")]
    SigmaX(f64),
    #[error("sigma_eta must be nonnegative and finite, got {0}")]
    SigmaEta(f64),
    #[error("dimensions must be at least 1 (n={n}, l={l}, m={m})")]
    EmptyDimension { n: usize, l: usize, m: usize },
    #[error("mean schedule: {0}")]
    Schedule(String),
    #[error("difference transform needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
}

/// Deterministic per-agent feature means `μ_{i,t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanSchedule {
    Zero,
    /// `μ_{i,t} = v_i` for all `t`.
    Constant { means: Vec<Vec<f64>> },
    /// `μ_{i,t} = a_i cos(2π t / p_i)`.
    Sinusoid {
        amplitudes: Vec<Vec<f64>>,
        periods: Vec<f64>,
    },
}

impl MeanSchedule {
    fn validate(&self, n: usize, m: usize) -> Result<(), ModelError> {
        let check_vectors = |name: &str, vs: &[Vec<f64>]| {
            if vs.len() != m {
                return Err(ModelError::Schedule(format!(
                    "{name} has {} entries, expected one per agent ({m})",
                    vs.len()
                )));
            }
            for (i, v) in vs.iter().enumerate() {
                if v.len() != n {
                    return Err(ModelError::Schedule(format!(
                        "{name}[{i}] has length {}, expected n = {n}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ModelError::Schedule(format!("{name}[{i}] is not finite")));
                }
            }
            Ok(())
        };
        match self {
            MeanSchedule::Zero => Ok(()),
            MeanSchedule::Constant { means } => check_vectors("means", means),
            MeanSchedule::Sinusoid {
                amplitudes,
                periods,
            } => {
                check_vectors("amplitudes", amplitudes)?;
                if periods.len() != m {
                    return Err(ModelError::Schedule(format!(
                        "periods has {} entries, expected {m}",
                        periods.len()
                    )));
                }
                if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                    return Err(ModelError::Schedule(format!(
                        "periods must be positive, got {p}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Ground truth and noise scales of the data model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    theta: DMatrix<f64>,
    sigma_x: f64,
    sigma_eta: f64,
    mean: MeanSchedule,
    m: usize,
}

impl ModelSpec {
    /// `theta` is `l × n`.
    pub fn new(
        theta: DMatrix<f64>,
        sigma_x: f64,
        sigma_eta: f64,
        mean: MeanSchedule,
        m: usize,
    ) -> Result<Self, ModelError> {
        let (l, n) = theta.shape();
        if n == 0 || l == 0 || m == 0 {
            return Err(ModelError::EmptyDimension { n, l, m });
        }
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(ModelError::SigmaX(sigma_x));
        }
        if !(sigma_eta.is_finite() && sigma_eta >= 0.0) {
            return Err(ModelError::SigmaEta(sigma_eta));
        }
        mean.validate(n, m)?;
        Ok(Self {
            theta,
            sigma_x,
            sigma_eta,
            mean,
            m,
        })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }
    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }
    pub fn sigma_eta(&self) -> f64 {
        self.sigma_eta
    }
    pub fn mean_schedule(&self) -> &MeanSchedule {
        &self.mean
    }
    /// Feature dimension.
    pub fn n(&self) -> usize {
        self.theta.ncols()
    }
    /// Label dimension.
    pub fn l(&self) -> usize {
        self.theta.nrows()
    }
    /// Number of agents.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `μ_{agent,t}`.
    pub fn mean(&self, agent: usize, t: u64) -> DVector<f64> {
        match &self.mean {
            MeanSchedule::Zero => DVector::zeros(self.n()),
            MeanSchedule::Constant { means } => DVector::from_column_slice(&means[agent]),
            MeanSchedule::Sinusoid {
                amplitudes,
                periods,
            } => {
                let phase = (2.0 * PI * t as f64 / periods[agent]).cos();
                DVector::from_column_slice(&amplitudes[agent]) * phase
            }
        }
    }

    /// Supremum of `‖μ_{i,t}‖` over agents and time, computed from the
    /// schedule parameters.
    pub fn mu_hat(&self) -> f64 {
        let max_norm = |vs: &[Vec<f64>]| {
            vs.iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0_f64, f64::max)
        };
        match &self.mean {
            MeanSchedule::Zero => 0.0,
            MeanSchedule::Constant { means } => max_norm(means),
            MeanSchedule::Sinusoid { amplitudes, .. } => max_norm(amplitudes),
        }
    }

    /// `(4 / (t σx²)) Σ_{j=1..t} μ_{agent,j} μ_{agent,j}*`.
    pub fn mu_bar(&self, agent: usize, t: u64) -> DMatrix<f64> {
        assert!(t >= 1, "mu_bar needs t >= 1");
        let n = self.n();
        let mut acc = DMatrix::zeros(n, n);
        if matches!(self.mean, MeanSchedule::Zero) {
            return acc;
        }
        for j in 1..=t {
            let mu = self.mean(agent, j);
            acc += &mu * mu.transpose();
        }
        acc * (4.0 / (t as f64 * self.sigma_x * self.sigma_x))
    }

    /// Network-pooled `(4 / (m t σx²)) Σ_i Σ_j μ_{i,j} μ_{i,j}*`.
    pub fn mu_bar_pooled(&self, t: u64) -> DMatrix<f64> {
        let n = self.n();
        let sum = (0..self.m).fold(DMatrix::zeros(n, n), |acc, i| acc + self.mu_bar(i, t));
        sum / self.m as f64
    }

    /// `λ_min(I + μ̄_{agent,t})`, the curvature factor in the local bound.
    /// `μ̄` is PSD, so the result is at least 1; the clamp removes rounding.
    pub fn lambda_min_local(&self, agent: usize, t: u64) -> f64 {
        let a = DMatrix::identity(self.n(), self.n()) + self.mu_bar(agent, t);
        crate::linalg::lambda_min_sym(&a).max(1.0)
    }

    /// `λ_min(I + μ̄_t)` for the pooled estimator.
    pub fn lambda_min_pooled(&self, t: u64) -> f64 {
        let a = DMatrix::identity(self.n(), self.n()) + self.mu_bar_pooled(t);
        crate::linalg::lambda_min_sym(&a).max(1.0)
    }

    /// Model followed by the output of [`difference_transform`]: zero mean,
    /// both scales multiplied by `√2`.
    pub fn differenced(&self) -> ModelSpec {
        ModelSpec {
            theta: self.theta.clone(),
            sigma_x: self.sigma_x * 2f64.sqrt(),
            sigma_eta: self.sigma_eta * 2f64.sqrt(),
            mean: MeanSchedule::Zero,
            m: self.m,
        }
    }
}

/// One observation `(x, y)` gathered by `agent` at step `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPair {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub agent: usize,
    pub time: u64,
}

/// Counter-based random source: every `(run, agent, t)` triple gets its own
/// ChaCha key, so draws do not depend on generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    master_seed: u64,
}

impl SeededStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Fresh generator for one `(run, agent, t)` cell.
    pub fn rng(&self, run: u64, agent: usize, t: u64) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&run.to_le_bytes());
        key[16..24].copy_from_slice(&(agent as u64).to_le_bytes());
        key[24..].copy_from_slice(&t.to_le_bytes());
        ChaCha12Rng::from_seed(key)
    }
}

/// Draw the pair of `agent` at step `t` for Monte Carlo replication `run`.
pub fn sample_pair(
    spec: &ModelSpec,
    stream: &SeededStream,
    run: u64,
    agent: usize,
    t: u64,
) -> DataPair {
    assert!(t >= 1, "time steps start at 1");
    assert!(agent < spec.m, "agent {agent} out of range (m = {})", spec.m);
    let mut rng = stream.rng(run, agent, t);
    let mu = spec.mean(agent, t);
    let x = DVector::from_fn(spec.n(), |k, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        mu[k] + spec.sigma_x * z
    });
    let eta = DVector::from_fn(spec.l(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        spec.sigma_eta * z
    });
    let y = &spec.theta * &x + eta;
    DataPair {
        x,
        y,
        agent,
        time: t,
    }
}

/// Pairwise differencing `x̂_t = x_{2t-1} - x_{2t}`, `ŷ_t = y_{2t-1} - y_{2t}`.
///
/// Removes a time-invariant mean at the cost of half the samples. A trailing
/// odd pair is dropped.
pub fn difference_transform(pairs: &[DataPair]) -> Result<Vec<DataPair>, ModelError> {
    if pairs.len() < 2 {
        return Err(ModelError::TooFewPairs(pairs.len()));
    }
    Ok(pairs
        .chunks_exact(2)
        .enumerate()
        .map(|(k, w)| DataPair {
            x: &w[0].x - &w[1].x,
            y: &w[0].y - &w[1].y,
            agent: w[0].agent,
            time: k as u64 + 1,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring6_theta() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.6, 0.3, 0.8, 0.3])
    }

    fn ring6_spec() -> ModelSpec {
        ModelSpec::new(ring6_theta(), 3.0, 1.0, MeanSchedule::Zero, 6).unwrap()
    }

    #[test]
    fn noiseless_pairs_follow_theta_exactly() {
        let spec = ModelSpec::new(ring6_theta(), 2.0, 0.0, MeanSchedule::Zero, 3).unwrap();
        let s = SeededStream::new(9);
        for t in 1..50 {
            let p = sample_pair(&spec, &s, 0, 1, t);
            assert_eq!(p.y, ring6_theta() * &p.x);
        }
    }

    #[test]
    fn zero_map_gives_zero_labels() {
        let spec =
            ModelSpec::new(DMatrix::zeros(3, 2), 1.0, 0.0, MeanSchedule::Zero, 1).unwrap();
        let s = SeededStream::new(1);
        for t in 1..20 {
            assert!(sample_pair(&spec, &s, 0, 0, t).y.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn draws_are_order_insensitive() {
        let spec = ring6_spec();
        let s = SeededStream::new(77);
        let forward: Vec<_> = (1..=10).map(|t| sample_pair(&spec, &s, 3, 2, t)).collect();
        let backward: Vec<_> = (1..=10).rev().map(|t| sample_pair(&spec, &s, 3, 2, t)).collect();
        for (a, b) in forward.iter().zip(backward.iter().rev()) {
            assert_eq!(a, b);
        }
        assert_ne!(sample_pair(&spec, &s, 3, 2, 1), sample_pair(&spec, &s, 4, 2, 1));
        assert_ne!(sample_pair(&spec, &s, 3, 2, 1), sample_pair(&spec, &s, 3, 1, 1));
    }

    #[test]
    fn feature_covariance_matches_sigma_x() {
        let spec = ring6_spec();
        let s = SeededStream::new(2024);
        let draws = 100_000;
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        let mut mean = DVector::<f64>::zeros(2);
        for t in 1..=draws {
            let p = sample_pair(&spec, &s, 0, 0, t);
            cov += &p.x * p.x.transpose();
            mean += &p.x;
        }
        cov /= draws as f64;
        mean /= draws as f64;
        // 9 I within 2% per entry (off-diagonal measured against the diagonal scale)
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 9.0 } else { 0.0 };
                assert!((cov[(i, j)] - target).abs() <= 0.02 * 9.0, "cov = {cov}");
            }
        }
        // sample mean within 4 σx sqrt(n / N)
        assert!(mean.norm() <= 4.0 * 3.0 * (2.0 / draws as f64).sqrt());
    }

    #[test]
    fn mu_bar_zero_schedule() {
        let spec = ring6_spec();
        assert_eq!(spec.mu_bar(0, 10), DMatrix::zeros(2, 2));
        assert_eq!(spec.lambda_min_local(0, 10), 1.0);
        assert_eq!(spec.mu_hat(), 0.0);
    }

    #[test]
    fn mu_bar_constant_is_time_invariant() {
        let means = vec![vec![1.0, -2.0]; 2];
        let spec = ModelSpec::new(
            ring6_theta(),
            2.0,
            1.0,
            MeanSchedule::Constant { means },
            2,
        )
        .unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0]);
        let expected = &v * v.transpose() * (4.0 / 4.0);
        for t in [1, 5, 100] {
            assert!((spec.mu_bar(1, t) - &expected).norm() < 1e-12);
        }
        assert!((spec.mu_hat() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mu_bar_sinusoid_direct_sum() {
        // n = 1, amplitude a, period 2, t = 2: (4 / (2 σx²)) (a² + a²) = 4a²/σx²
        let a = 1.5;
        let sx = 2.0;
        let spec = ModelSpec::new(
            DMatrix::from_element(1, 1, 1.0),
            sx,
            0.0,
            MeanSchedule::Sinusoid {
                amplitudes: vec![vec![a]],
                periods: vec![2.0],
            },
            1,
        )
        .unwrap();
        let got = spec.mu_bar(0, 2)[(0, 0)];
        assert!((got - 4.0 * a * a / (sx * sx)).abs() < 1e-12);
        assert_eq!(spec.mu_hat(), a);
    }

    #[test]
    fn pooled_mu_bar_averages_agents() {
        let spec = ModelSpec::new(
            DMatrix::from_element(1, 1, 1.0),
            1.0,
            0.0,
            MeanSchedule::Constant {
                means: vec![vec![1.0], vec![3.0]],
            },
            2,
        )
        .unwrap();
        // (4 / (2 · 1 · 1)) (1 + 9) = 20
        assert!((spec.mu_bar_pooled(1)[(0, 0)] - 20.0).abs() < 1e-12);
        assert!((spec.lambda_min_pooled(1) - 21.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert_eq!(
            ModelSpec::new(ring6_theta(), 0.0, 1.0, MeanSchedule::Zero, 1),
            Err(ModelError::SigmaX(0.0))
        );
        assert_eq!(
            ModelSpec::new(ring6_theta(), 1.0, -1.0, MeanSchedule::Zero, 1),
            Err(ModelError::SigmaEta(-1.0))
        );
        assert!(ModelSpec::new(ring6_theta(), 1.0, 1.0, MeanSchedule::Zero, 0).is_err());
        let bad = MeanSchedule::Constant {
            means: vec![vec![1.0]],
        };
        assert!(matches!(
            ModelSpec::new(ring6_theta(), 1.0, 1.0, bad, 1),
            Err(ModelError::Schedule(_))
        ));
    }

    #[test]
    fn difference_of_identical_pairs_is_zero() {
        let spec = ring6_spec();
        let p = sample_pair(&spec, &SeededStream::new(1), 0, 0, 1);
        let out = difference_transform(&[p.clone(), p]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].x.iter().chain(out[0].y.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn difference_definition_and_length() {
        let spec = ring6_spec();
        let s = SeededStream::new(5);
        let pairs: Vec<_> = (1..=7).map(|t| sample_pair(&spec, &s, 0, 4, t)).collect();
        let out = difference_transform(&pairs).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].x, &pairs[0].x - &pairs[1].x);
        assert_eq!(out[2].y, &pairs[4].y - &pairs[5].y);
        assert_eq!(out[1].time, 2);
        assert_eq!(out[1].agent, 4);
        assert_eq!(
            difference_transform(&pairs[..1]),
            Err(ModelError::TooFewPairs(1))
        );
        assert_eq!(difference_transform(&[]), Err(ModelError::TooFewPairs(0)));
    }

    #[test]
    fn differenced_noiseless_stream_keeps_the_linear_relation() {
        let spec = ModelSpec::new(
            ring6_theta(),
            3.0,
            0.0,
            MeanSchedule::Constant {
                means: vec![vec![5.0, -4.0]],
            },
            1,
        )
        .unwrap();
        let s = SeededStream::new(8);
        let pairs: Vec<_> = (1..=40).map(|t| sample_pair(&spec, &s, 0, 0, t)).collect();
        for p in difference_transform(&pairs).unwrap() {
            assert!((&p.y - ring6_theta() * &p.x).norm() < 1e-12);
        }
    }

    #[test]
    fn differenced_constant_mean_stream_is_centered() {
        let spec = ModelSpec::new(
            ring6_theta(),
            3.0,
            1.0,
            MeanSchedule::Constant {
                means: vec![vec![10.0, -7.0]],
            },
            1,
        )
        .unwrap();
        let s = SeededStream::new(31);
        let pairs: Vec<_> = (1..=20_000).map(|t| sample_pair(&spec, &s, 0, 0, t)).collect();
        let out = difference_transform(&pairs).unwrap();
        let k = out.len() as f64;
        let mean = out.iter().fold(DVector::zeros(2), |acc, p| acc + &p.x) / k;
        // each coordinate has std sqrt(2) σx; 3 standard errors
        let se = 2f64.sqrt() * 3.0 / k.sqrt();
        for v in mean.iter() {
            assert!(v.abs() <= 3.0 * se, "mean = {mean}");
        }
        let d = spec.differenced();
        assert_eq!(d.mu_hat(), 0.0);
        assert!((d.sigma_x() - 3.0 * 2f64.sqrt()).abs() < 1e-15);
    }
}

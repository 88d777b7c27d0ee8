//! Closed-form finite-time error bounds.
//!
//! Three regimes are covered:
//!
//! * **local**: agent estimate from its own `t` samples,
//!   `C₁ / (√t σx² λ_min(I + μ̄_{i,t}))` with probability `1 - 4δ`;
//! * **global**: pooled estimate over all `m t` samples,
//!   `C₁ / (√(mt) σx² λ_min(I + μ̄_t))`;
//! * **communicated**: agent estimate after `T` consensus rounds, the global
//!   bound plus a network term `ρ^T C₀` that decays with `T`
//!   (probability `1 - 4mδ̂ - 4δ`).
//!
//! Each bound holds only after the burn-in `t ≥ max(t₁, t₂, t₃)` evaluated at
//! the relevant confidence level. All logarithms are natural.
//!
//! Parameters are taken as known bounds: the lower bound on `σx` is used
//! wherever `σx` appears in a denominator and upper bounds everywhere else,
//! so every value stays conservative when the true scalars are unknown.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::spectral_norm;
use crate::model::ModelSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid bound input: {0}")]
    Input(String),
    #[error("t = {t} is below the burn-in; the bound is valid from t = {valid_from}")]
    BelowBurnIn { t: u64, valid_from: u64 },
    #[error("the communicated bound needs at least one consensus step")]
    ZeroSteps,
    #[error("lambda_min(I + mu_bar) must be >= 1, got {0}")]
    Curvature(f64),
}

/// Known scalars and confidence levels feeding every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub sigma_x_lower: f64,
    pub sigma_x_upper: f64,
    pub sigma_eta_upper: f64,
    pub mu_hat_upper: f64,
    pub theta_norm_upper: f64,
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub delta: f64,
    pub delta_hat: f64,
    pub rho: f64,
}

impl BoundInputs {
    /// Inputs with every scalar taken exactly from `spec`.
    pub fn from_model(spec: &ModelSpec, rho: f64, delta: f64, delta_hat: f64) -> Self {
        Self {
            sigma_x_lower: spec.sigma_x(),
            sigma_x_upper: spec.sigma_x(),
            sigma_eta_upper: spec.sigma_eta(),
            mu_hat_upper: spec.mu_hat(),
            theta_norm_upper: spectral_norm(spec.theta()),
            n: spec.n(),
            l: spec.l(),
            m: spec.m(),
            delta,
            delta_hat,
            rho,
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |msg: String| Err(BoundsError::Input(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.delta_hat > 0.0 && self.delta_hat < 1.0) {
            return bad(format!("delta_hat must lie in (0, 1), got {}", self.delta_hat));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.sigma_x_lower > 0.0 && self.sigma_x_lower.is_finite()) {
            return bad(format!("sigma_x_lower must be positive, got {}", self.sigma_x_lower));
        }
        if self.sigma_x_upper < self.sigma_x_lower || !self.sigma_x_upper.is_finite() {
            return bad(format!(
                "sigma_x_upper ({}) must be finite and at least sigma_x_lower ({})",
                self.sigma_x_upper, self.sigma_x_lower
            ));
        }
        for (name, v) in [
            ("sigma_eta_upper", self.sigma_eta_upper),
            ("mu_hat_upper", self.mu_hat_upper),
            ("theta_norm_upper", self.theta_norm_upper),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        if self.n == 0 || self.l == 0 || self.m == 0 {
            return bad("dimensions n, l, m must be at least 1".into());
        }
        Ok(())
    }

    fn confidence(&self, which: Confidence) -> f64 {
        match which {
            Confidence::Delta => self.delta,
            Confidence::DeltaHat => self.delta_hat,
        }
    }

    fn n_plus_l(&self) -> f64 {
        (self.n + self.l) as f64
    }

    /// Noise constant `C₁` at `δ`.
    pub fn noise_constant(&self) -> f64 {
        let d = self.delta;
        8.0 * self.sigma_eta_upper
            * (4.0 * self.sigma_x_upper * (self.n_plus_l() * (9.0 / d).ln()).sqrt()
                + self.mu_hat_upper
                    * ((2.0 * self.n_plus_l()).sqrt() + 2.0 * (2.0 / d).ln().sqrt()))
    }

    /// Growth rate of `‖α‖ / t` (`c₁`).
    pub fn alpha_growth(&self) -> f64 {
        let sx = self.sigma_x_upper;
        self.theta_norm_upper * (19.0 / 8.0 * sx * sx + self.mu_hat_upper.powi(2))
    }

    /// Noise part of `‖α‖ / √t` at `δ̂` (`c₂`).
    pub fn alpha_noise(&self) -> f64 {
        let d = self.delta_hat;
        self.sigma_eta_upper
            * (4.0 * self.sigma_x_upper * (self.n_plus_l() * (9.0 / d).ln()).sqrt()
                + self.mu_hat_upper
                    * ((2.0 * self.n_plus_l()).sqrt() + (2.0 * (2.0 / d).ln()).sqrt()))
    }

    /// Inverse-perturbation constant (`c₃`).
    pub fn inverse_gap(&self) -> f64 {
        let sx2 = self.sigma_x_lower * self.sigma_x_lower;
        let m32 = (self.m as f64).powf(1.5);
        let root = (5.0 * self.n as f64).sqrt();
        152.0 * m32 * root / sx2 + 64.0 * m32 * root * self.mu_hat_upper.powi(2) / (sx2 * sx2)
    }

    /// Network coefficient `C₀(t, T)`; the network error is `ρ^T C₀`.
    pub fn network_coefficient(&self, t: u64, steps: u32) -> f64 {
        let a = self.alpha_growth() + self.alpha_noise() / (t as f64).sqrt();
        let c3 = self.inverse_gap();
        let m32l = (self.m as f64).powf(1.5) * (self.l as f64).sqrt();
        let sx2 = self.sigma_x_lower * self.sigma_x_lower;
        c3 * a + 8.0 * m32l * a / sx2 + self.rho.powi(steps as i32) * m32l * c3 * a
    }

    /// `ρ^T C₀(t, T)`.
    pub fn network_term(&self, t: u64, steps: u32) -> f64 {
        self.rho.powi(steps as i32) * self.network_coefficient(t, steps)
    }
}

/// Which confidence level a burn-in is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Delta,
    DeltaHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnIn {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl BurnIn {
    pub fn max(&self) -> f64 {
        self.t1.max(self.t2).max(self.t3)
    }
}

/// Smallest integer `t ≥ 1` with `t ≥ threshold`.
pub fn first_valid(threshold: f64) -> u64 {
    (threshold.ceil() as u64).max(1)
}

/// `t₁ = 8n + 16 ln(2/δ)`, `t₂ = (16 μ̂ (√(4n) + √(2 ln(2/δ))) / σx)²`,
/// `t₃ = 2(n+l) ln(1/δ)`.
pub fn burn_in(inputs: &BoundInputs, which: Confidence) -> BurnIn {
    let d = inputs.confidence(which);
    let n = inputs.n as f64;
    let t1 = 8.0 * n + 16.0 * (2.0 / d).ln();
    let t2 = (16.0 * inputs.mu_hat_upper * ((4.0 * n).sqrt() + (2.0 * (2.0 / d).ln()).sqrt())
        / inputs.sigma_x_lower)
        .powi(2);
    let t3 = 2.0 * inputs.n_plus_l() * (1.0 / d).ln();
    BurnIn { t1, t2, t3 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Local,
    Global,
    Communicated,
}

/// An evaluated bound with the constants that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub regime: Regime,
    pub burn_in: BurnIn,
    pub valid_from: u64,
    /// `C₁`
    pub noise_constant: f64,
    /// `c₁`, `c₂`, `c₃`, `C₀`; zero outside the communicated regime.
    pub alpha_growth: f64,
    pub alpha_noise: f64,
    pub inverse_gap: f64,
    pub network_coefficient: f64,
    pub network_term: f64,
    pub noise_term: f64,
    pub value: f64,
}

fn check_curvature(lambda_min: f64) -> Result<(), BoundsError> {
    if lambda_min >= 1.0 && lambda_min.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::Curvature(lambda_min))
    }
}

fn gate(t: u64, threshold: f64) -> Result<u64, BoundsError> {
    let valid_from = first_valid(threshold);
    if t < valid_from {
        Err(BoundsError::BelowBurnIn { t, valid_from })
    } else {
        Ok(valid_from)
    }
}

fn noise_only(
    inputs: &BoundInputs,
    regime: Regime,
    burn: BurnIn,
    valid_from: u64,
    samples: f64,
    lambda_min: f64,
) -> BoundReport {
    let c1 = inputs.noise_constant();
    let sx2 = inputs.sigma_x_lower * inputs.sigma_x_lower;
    let value = c1 / (samples.sqrt() * sx2 * lambda_min);
    BoundReport {
        regime,
        burn_in: burn,
        valid_from,
        noise_constant: c1,
        alpha_growth: 0.0,
        alpha_noise: 0.0,
        inverse_gap: 0.0,
        network_coefficient: 0.0,
        network_term: 0.0,
        noise_term: value,
        value,
    }
}

/// Bound on `‖Θ̂_{i,t+1} - Θ‖` from an agent's own `t` samples.
pub fn local_bound(
    inputs: &BoundInputs,
    t: u64,
    lambda_min: f64,
) -> Result<BoundReport, BoundsError> {
    inputs.validate()?;
    check_curvature(lambda_min)?;
    let burn = burn_in(inputs, Confidence::Delta);
    let valid_from = gate(t, burn.max())?;
    Ok(noise_only(inputs, Regime::Local, burn, valid_from, t as f64, lambda_min))
}

/// Bound on the pooled estimator after `t` steps of every agent.
pub fn global_bound(
    inputs: &BoundInputs,
    t: u64,
    lambda_min: f64,
) -> Result<BoundReport, BoundsError> {
    inputs.validate()?;
    check_curvature(lambda_min)?;
    let burn = burn_in(inputs, Confidence::Delta);
    let valid_from = gate(t, burn.max() / inputs.m as f64)?;
    let samples = (inputs.m as u64 * t) as f64;
    Ok(noise_only(inputs, Regime::Global, burn, valid_from, samples, lambda_min))
}

/// Bound on `‖Θ̄_{i,t+1} - Θ‖` after a phase of `steps` consensus rounds at
/// communication time `t`. `lambda_min` is `λ_min(I + μ̄_t)` for the pooled data.
pub fn comm_bound(
    inputs: &BoundInputs,
    t: u64,
    steps: u32,
    lambda_min: f64,
) -> Result<BoundReport, BoundsError> {
    inputs.validate()?;
    check_curvature(lambda_min)?;
    if steps == 0 {
        return Err(BoundsError::ZeroSteps);
    }
    let burn = burn_in(inputs, Confidence::DeltaHat);
    let valid_from = gate(t, burn.max())?;
    let noise = noise_only(
        inputs,
        Regime::Global,
        burn,
        valid_from,
        (inputs.m as u64 * t) as f64,
        lambda_min,
    );
    let network_coefficient = inputs.network_coefficient(t, steps);
    let network_term = inputs.rho.powi(steps as i32) * network_coefficient;
    Ok(BoundReport {
        regime: Regime::Communicated,
        alpha_growth: inputs.alpha_growth(),
        alpha_noise: inputs.alpha_noise(),
        inverse_gap: inputs.inverse_gap(),
        network_coefficient,
        network_term,
        noise_term: noise.value,
        value: network_term + noise.value,
        ..noise
    })
}

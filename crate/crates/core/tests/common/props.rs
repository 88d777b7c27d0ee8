//! Property checks shared by the proptest suite and the acceptance gate.

use drls::bounds::{burn_in, comm_bound, first_valid, global_bound, local_bound, Confidence};
use drls::consensus::{mixing_deficit, mixing_deficit_bound, run_comm_phase_observed, WeightMatrix};
use drls::linalg::{lambda_min_sym, rel_diff};
use drls::local::AgentState;
use drls::planner::{plan_steps, plan_stop, Curvature};
use drls::BoundInputs;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{max_abs, mix_by_power, random_matrices, random_weights};

type Check = Result<(), TestCaseError>;

/// `(m, graph seed)` for a random valid weight matrix with `m ≤ 10`.
pub fn weights_strategy() -> impl Strategy<Value = (usize, u64)> {
    (1usize..=10, any::<u64>())
}

pub fn build_weights(m: usize, seed: u64) -> Result<WeightMatrix, TestCaseError> {
    WeightMatrix::new(random_weights(m, seed))
        .map_err(|e| TestCaseError::fail(format!("generator produced invalid W: {e}")))
}

fn network_total(values: &[DMatrix<f64>]) -> DMatrix<f64> {
    values.iter().skip(1).fold(values[0].clone(), |acc, v| acc + v)
}

/// `Σ_i α_i` and `Σ_i β_i` are unchanged by every round.
pub fn sum_preservation(m: usize, seed: u64, steps: u32) -> Check {
    let w = build_weights(m, seed)?;
    let alphas = random_matrices(m, 2, 3, seed ^ 1);
    let betas = random_matrices(m, 3, 3, seed ^ 2);
    let (sa, sb) = (network_total(&alphas), network_total(&betas));
    let mut worst = 0.0_f64;
    run_comm_phase_observed(&w, &alphas, &betas, steps, |_, a, b| {
        worst = worst
            .max(rel_diff(&network_total(a), &sa))
            .max(rel_diff(&network_total(b), &sb));
    })
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(worst <= 1e-10, "sum drift {worst:e} (m={m}, T={steps})");
    Ok(())
}

/// The round-by-round phase equals mixing by the explicit power `W^T`.
pub fn power_equivalence(m: usize, seed: u64, steps: u32) -> Check {
    let w = build_weights(m, seed)?;
    let alphas = random_matrices(m, 2, 2, seed ^ 3);
    let betas = random_matrices(m, 2, 2, seed ^ 4);
    let out = run_comm_phase_observed(&w, &alphas, &betas, steps, |_, _, _| {})
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let pa = mix_by_power(w.matrix(), &alphas, steps);
    let pb = mix_by_power(w.matrix(), &betas, steps);
    for i in 0..m {
        let scale = max_abs(&pa[i]).max(max_abs(&pb[i])).max(1.0);
        let d = max_abs(&(&out.alphas[i] - &pa[i])).max(max_abs(&(&out.betas[i] - &pb[i])));
        prop_assert!(d <= 1e-10 * scale, "agent {i}: {d:e} (m={m}, T={steps})");
    }
    Ok(())
}

/// `mixing_deficit(W, T) ≤ √m ρ^T` for every `T` in `1..=50`.
pub fn deficit_envelope(m: usize, seed: u64) -> Check {
    let w = build_weights(m, seed)?;
    for steps in 1..=50 {
        let d = mixing_deficit(&w, steps);
        let b = mixing_deficit_bound(&w, steps);
        prop_assert!(d <= b + 1e-12, "T={steps}: deficit {d} > {b} (m={m}, rho={})", w.rho());
    }
    Ok(())
}

/// `max_i ‖α^k_i - average‖` never grows with `k`.
pub fn contraction(m: usize, seed: u64) -> Check {
    let w = build_weights(m, seed)?;
    let alphas = random_matrices(m, 2, 2, seed ^ 5);
    let avg = network_total(&alphas) / m as f64;
    let spread = |a: &[DMatrix<f64>]| a.iter().map(|x| (x - &avg).norm()).fold(0.0, f64::max);
    let mut prev = spread(&alphas);
    let mut ok = true;
    run_comm_phase_observed(&w, &alphas, &alphas, 30, |_, a, _| {
        let s = spread(a);
        ok &= s <= prev * (1.0 + 1e-12) + 1e-12;
        prev = s;
    })
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(ok, "spread increased (m={m})");
    Ok(())
}

fn random_stream(seed: u64, n: usize, l: usize, len: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = rng.random_range(0.5..5.0);
    let offset = rng.random_range(-2.0..2.0);
    (0..len)
        .map(|_| {
            let x = DVector::from_fn(n, |_, _| offset + scale * rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(l, |_, _| rng.random_range(-3.0..3.0));
            (x, y)
        })
        .collect()
}

/// `λ_min(β)` is nondecreasing along any stream.
pub fn beta_monotone(seed: u64, n: usize, len: usize) -> Check {
    let mut s = AgentState::new(n, 1);
    let mut prev = 0.0_f64;
    for (k, (x, y)) in random_stream(seed, n, 1, len).iter().enumerate() {
        s.ingest_xy(x, y).unwrap();
        let lam = lambda_min_sym(s.beta());
        let slack = 1e-10 * s.beta().norm();
        prop_assert!(lam >= prev - slack, "step {k}: {lam} < {prev}");
        prev = lam;
    }
    Ok(())
}

/// The carried inverse stays within `1e-6` relative of a direct inverse, and
/// the streamed estimate matches batch least squares.
pub fn stream_matches_batch(seed: u64, n: usize, l: usize, len: usize) -> Check {
    let stream = random_stream(seed, n, l, len);
    let mut s = AgentState::new(n, l);
    for (x, y) in &stream {
        s.ingest_xy(x, y).unwrap();
        if let Some(inv) = s.beta_inv() {
            let direct = s.beta().clone().try_inverse().unwrap();
            prop_assert!(rel_diff(inv, &direct) <= 1e-6);
        }
    }
    let xs: Vec<_> = stream.iter().map(|p| p.0.clone()).collect();
    let ys: Vec<_> = stream.iter().map(|p| p.1.clone()).collect();
    let batch = super::batch_least_squares(&xs, &ys);
    let alpha = ys.iter().zip(&xs).fold(DMatrix::zeros(l, n), |a, (y, x)| a + y * x.transpose());
    let beta = xs.iter().fold(DMatrix::zeros(n, n), |a, x| a + x * x.transpose());
    prop_assert!(rel_diff(s.alpha(), &alpha) <= 1e-12);
    prop_assert!(rel_diff(s.beta(), &beta) <= 1e-12);
    let d = rel_diff(s.local_estimate(), &batch);
    prop_assert!(d <= 1e-8, "estimate differs from batch by {d:e}");
    Ok(())
}

pub fn inputs_strategy() -> impl Strategy<Value = BoundInputs> {
    (
        (0.5f64..5.0, 1.0f64..2.0, 0.05f64..3.0, 0.0f64..3.0, 0.1f64..5.0),
        (1usize..=5, 1usize..=5, 1usize..=10),
        (1e-4f64..0.3, 1e-4f64..0.3, 0.01f64..0.99),
    )
        .prop_map(|((sx, up, se, mu, th), (n, l, m), (d, dh, rho))| BoundInputs {
            sigma_x_lower: sx,
            sigma_x_upper: sx * up,
            sigma_eta_upper: se,
            mu_hat_upper: mu,
            theta_norm_upper: th,
            n,
            l,
            m,
            delta: d,
            delta_hat: dh,
            rho,
        })
}

/// Strict decrease in `t` for every bound, strict decrease in `T` for the
/// communicated bound, and `comm ≥ global`.
pub fn bound_monotonicity(inputs: &BoundInputs, offset: u64, gap: u64, steps: u32) -> Check {
    let t_local = first_valid(burn_in(inputs, Confidence::Delta).max()) + offset;
    let t_comm = first_valid(burn_in(inputs, Confidence::DeltaHat).max()).max(t_local);
    let v = |r: Result<drls::BoundReport, _>| r.map(|r| r.value).map_err(|e: drls::bounds::BoundsError| TestCaseError::fail(e.to_string()));

    let (a, b) = (v(local_bound(inputs, t_local, 1.0))?, v(local_bound(inputs, t_local + gap, 1.0))?);
    prop_assert!(b < a, "local: {a} -> {b}");
    let (a, b) = (v(global_bound(inputs, t_local, 1.0))?, v(global_bound(inputs, t_local + gap, 1.0))?);
    prop_assert!(b < a, "global: {a} -> {b}");
    let (a, b) = (v(comm_bound(inputs, t_comm, steps, 1.0))?, v(comm_bound(inputs, t_comm + gap, steps, 1.0))?);
    prop_assert!(b < a, "comm in t: {a} -> {b}");
    // the T dependence sits in the network term; the total can round flat
    let (ra, rc) = (comm_bound(inputs, t_comm, steps, 1.0), comm_bound(inputs, t_comm, steps + 1, 1.0));
    let (na, nc) = (ra.unwrap().network_term, rc.unwrap().network_term);
    prop_assert!(nc < na, "network term in T: {na} -> {nc}");
    let c = v(comm_bound(inputs, t_comm, steps + 1, 1.0))?;
    prop_assert!(c <= a, "comm in T: {a} -> {c}");
    let g = v(global_bound(inputs, t_comm, 1.0))?;
    prop_assert!(a >= g, "comm {a} below global {g}");
    Ok(())
}

/// Planner outputs are minimal, and tighter targets never shrink them.
/// `eps` is taken as `eps_frac` times the local bound at the first
/// communication time, so `S` stays within a few hundred periods.
pub fn planner_minimal(inputs: &BoundInputs, zeta: u64, eps_n: f64, eps_frac: f64) -> Check {
    let fail = |e: drls::planner::PlanError| TestCaseError::fail(e.to_string());
    let horizon = 100_000_000;
    let sp = plan_steps(inputs, zeta, eps_n).map_err(fail)?;
    let t_first = sp.first_comm_time;
    let eps = eps_frac * local_bound(inputs, t_first.max(first_valid(burn_in(inputs, Confidence::Delta).max())), 1.0).unwrap().value;
    prop_assert!(sp.network_term <= eps_n);
    if sp.steps > 1 {
        prop_assert!(inputs.network_term(t_first, sp.steps - 1) > eps_n);
    }
    let tighter = plan_steps(inputs, zeta, eps_n / 2.0).map_err(fail)?;
    prop_assert!(tighter.steps >= sp.steps);

    let stop = match plan_stop(inputs, zeta, sp.steps, eps, horizon, Curvature::Conservative) {
        Ok(s) => s,
        Err(drls::planner::PlanError::Unreachable { .. }) => return Ok(()),
        Err(e) => return Err(fail(e)),
    };
    prop_assert!(stop.local_bound.min(stop.comm_bound) < eps);
    prop_assert!(inputs.network_term(stop.stop, sp.steps) <= eps_n);
    let earlier = stop.stop - zeta;
    let start = first_valid(burn_in(inputs, Confidence::Delta).max())
        .max(first_valid(burn_in(inputs, Confidence::DeltaHat).max()));
    if earlier >= start {
        let l = local_bound(inputs, earlier, 1.0).unwrap().value;
        let c = comm_bound(inputs, earlier, sp.steps, 1.0).unwrap().value;
        prop_assert!(l.min(c) >= eps, "S - zeta already meets eps");
    }
    if let Ok(s2) = plan_stop(inputs, zeta, sp.steps, eps / 2.0, horizon, Curvature::Conservative) {
        prop_assert!(s2.stop >= stop.stop);
    }
    Ok(())
}

#![allow(dead_code)]

pub mod props;

use drls::consensus::WeightMatrix;
use drls::model::{MeanSchedule, ModelSpec};
use drls::planner::Schedule;
use drls::sim::SimConfig;
use drls::BoundInputs;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ring6_theta() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.6, 0.3, 0.8, 0.3])
}

pub fn ring6_model() -> ModelSpec {
    ModelSpec::new(ring6_theta(), 3.0, 1.0, MeanSchedule::Zero, 6).unwrap()
}

/// The 6-agent ring with every nonzero entry equal to 1/3, written out by hand.
pub fn ring6_matrix() -> DMatrix<f64> {
    let t = 1.0 / 3.0;
    #[rustfmt::skip]
    let w = DMatrix::from_row_slice(6, 6, &[
        t, t, 0., 0., 0., t,
        t, t, t, 0., 0., 0.,
        0., t, t, t, 0., 0.,
        0., 0., t, t, t, 0.,
        0., 0., 0., t, t, t,
        t, 0., 0., 0., t, t,
    ]);
    w
}

pub fn ring6() -> WeightMatrix {
    WeightMatrix::new(ring6_matrix()).unwrap()
}

pub fn ring6_inputs() -> BoundInputs {
    BoundInputs::from_model(&ring6_model(), ring6().rho(), 0.05, 0.001)
}

/// Planned ring schedule, with `S` pulled in to the horizon when it is shorter.
pub fn ring6_sim(runs: u64, horizon: u64, seed: u64) -> SimConfig {
    SimConfig {
        model: ring6_model(),
        weights: ring6(),
        schedule: Schedule { zeta: 20, steps: 38, stop: horizon.min(1620) },
        horizon,
        runs,
        seed,
        writeback_mixed: false,
    }
}

/// Metropolis-Hastings weights on a random connected graph (ring backbone plus
/// random chords). Symmetric, doubly stochastic, positive diagonal.
#[allow(clippy::needless_range_loop)]
pub fn random_weights(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; m]; m];
    if m > 1 {
        for i in 0..m {
            let j = (i + 1) % m;
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.random_bool(0.3) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|b| **b).count()).collect();
    let mut w = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j && adj[i][j] {
                w[(i, j)] = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
            }
        }
    }
    for i in 0..m {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

pub fn random_matrices(count: usize, rows: usize, cols: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-10.0..10.0)))
        .collect()
}

/// `W^T` applied along the agent axis via the explicit matrix power.
pub fn mix_by_power(w: &DMatrix<f64>, values: &[DMatrix<f64>], steps: u32) -> Vec<DMatrix<f64>> {
    let m = w.nrows();
    let mut p = DMatrix::identity(m, m);
    for _ in 0..steps {
        p = &p * w;
    }
    (0..m)
        .map(|i| {
            (0..m).fold(DMatrix::zeros(values[0].nrows(), values[0].ncols()), |acc, j| {
                acc + &values[j] * p[(i, j)]
            })
        })
        .collect()
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Least squares from stacked data: minimise ‖X Θ* - Y‖ through an SVD of X.
pub fn batch_least_squares(xs: &[nalgebra::DVector<f64>], ys: &[nalgebra::DVector<f64>]) -> DMatrix<f64> {
    let n = xs[0].len();
    let l = ys[0].len();
    let x = DMatrix::from_fn(xs.len(), n, |r, c| xs[r][c]);
    let y = DMatrix::from_fn(ys.len(), l, |r, c| ys[r][c]);
    let sol = x.svd(true, true).solve(&y, 1e-14).unwrap();
    sol.transpose()
}

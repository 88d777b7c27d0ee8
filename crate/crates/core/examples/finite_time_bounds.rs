//! Evaluate the local, pooled and communicated error bounds over time.

use drls::bounds::{burn_in, comm_bound, global_bound, local_bound, Confidence};
use drls::{BoundInputs, MeanSchedule, ModelSpec, WeightMatrix};
use nalgebra::DMatrix;

fn main() {
    let theta = DMatrix::from_row_slice(2, 2, &[1.6, 0.3, 0.8, 0.3]);
    let model = ModelSpec::new(theta, 3.0, 1.0, MeanSchedule::Zero, 6).unwrap();
    let rho = WeightMatrix::ring(6, 1.0 / 3.0).unwrap().rho();
    let inputs = BoundInputs::from_model(&model, rho, 0.05, 0.001);

    for which in [Confidence::Delta, Confidence::DeltaHat] {
        let b = burn_in(&inputs, which);
        println!("{which:?}: t1 = {:.2}, t2 = {:.2}, t3 = {:.2}", b.t1, b.t2, b.t3);
    }
    println!(
        "C1 = {:.4}, c1 = {:.4}, c2 = {:.4}, c3 = {:.4}\n",
        inputs.noise_constant(),
        inputs.alpha_growth(),
        inputs.alpha_noise(),
        inputs.inverse_gap()
    );

    let show = |r: Result<drls::BoundReport, _>| match r {
        Ok(r) => format!("{:>9.4}", r.value),
        Err(_) => format!("{:>9}", "-"),
    };
    println!("     t     local    global   comm(T=38)");
    for t in [50, 100, 140, 400, 1000, 1620, 5000] {
        println!(
            "{t:>6} {} {} {}",
            show(local_bound(&inputs, t, 1.0)),
            show(global_bound(&inputs, t, 1.0)),
            show(comm_bound(&inputs, t, 38, 1.0)),
        );
    }
}

//! Pick the number of consensus rounds `T` and the stopping time `S` for a
//! 6-agent ring, then show how `T` responds to the network tolerance.

use drls::planner::{plan, plan_steps, Curvature, PlanRequest};
use drls::{BoundInputs, MeanSchedule, ModelSpec, WeightMatrix};
use nalgebra::DMatrix;

fn main() {
    let theta = DMatrix::from_row_slice(2, 2, &[1.6, 0.3, 0.8, 0.3]);
    let model = ModelSpec::new(theta, 3.0, 1.0, MeanSchedule::Zero, 6).unwrap();
    let ring = WeightMatrix::ring(6, 1.0 / 3.0).unwrap();
    let inputs = BoundInputs::from_model(&model, ring.rho(), 0.05, 0.001);

    let request = PlanRequest {
        zeta: 20,
        epsilon: 0.5,
        epsilon_network: 0.01,
        horizon: 100_000,
    };
    let p = plan(&inputs, &request, Curvature::Conservative).unwrap();
    println!("rho = {:.6}", ring.rho());
    println!(
        "first phase at t = {}, T = {} (network term {:.5})",
        p.steps.first_comm_time, p.schedule.steps, p.steps.network_term
    );
    println!(
        "stop at S = {}: local bound {:.4}, communicated bound {:.4}",
        p.schedule.stop, p.stop.local_bound, p.stop.comm_bound
    );

    println!("\n eps_N      T");
    for eps_n in [0.1, 0.03, 0.01, 0.003, 0.001] {
        let s = plan_steps(&inputs, request.zeta, eps_n).unwrap();
        println!("{eps_n:>6}  {:>5}", s.steps);
    }
}

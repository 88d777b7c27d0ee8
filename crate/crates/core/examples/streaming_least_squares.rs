//! One agent running recursive least squares on a Gaussian stream.

use drls::local::AgentState;
use drls::model::{sample_pair, SeededStream};
use drls::{MeanSchedule, ModelSpec};
use nalgebra::DMatrix;

fn main() {
    let theta = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 0.25, 0.0, 2.0, -1.0]);
    let model = ModelSpec::new(theta.clone(), 1.0, 0.3, MeanSchedule::Zero, 1).unwrap();
    let stream = SeededStream::new(42);
    let mut agent = AgentState::new(3, 2);

    println!("     t  invertible  ||theta_hat - theta||");
    for t in 1..=5000 {
        agent.ingest(&sample_pair(&model, &stream, 0, 0, t)).unwrap();
        if t <= 4 || [10, 100, 1000, 5000].contains(&t) {
            let err = (agent.local_estimate() - &theta).norm();
            println!("{t:>6}  {:>10}  {err:.5}", !agent.is_pre_invertible());
        }
    }

    let direct = agent.beta().clone().try_inverse().unwrap();
    let drift = (agent.beta_inv().unwrap() - &direct).norm() / direct.norm();
    println!("\ncarried inverse vs direct inverse: {drift:.2e} relative");
}

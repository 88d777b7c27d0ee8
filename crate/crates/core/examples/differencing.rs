//! Features with a time-varying mean inflate the burn-in and the bound
//! constants. Differencing consecutive pairs gives a zero-mean stream with the
//! same linear map, at half the sample count.

use drls::bounds::{burn_in, first_valid, local_bound, Confidence};
use drls::local::AgentState;
use drls::model::{difference_transform, sample_pair, SeededStream};
use drls::{BoundInputs, DataPair, MeanSchedule, ModelSpec};
use nalgebra::{DMatrix, DVector};

fn fit(theta: &DMatrix<f64>, data: &[DataPair]) -> f64 {
    let mut a = AgentState::new(theta.ncols(), theta.nrows());
    for p in data {
        a.ingest(p).unwrap();
    }
    (a.local_estimate() - theta).norm()
}

fn main() {
    let theta = DMatrix::from_row_slice(1, 2, &[0.7, -1.2]);
    let mean = MeanSchedule::Sinusoid {
        amplitudes: vec![vec![4.0, -3.0]],
        periods: vec![50.0],
    };
    let model = ModelSpec::new(theta.clone(), 1.0, 0.5, mean, 1).unwrap();
    let stream = SeededStream::new(1);
    let raw: Vec<_> = (1..=40_000).map(|t| sample_pair(&model, &stream, 0, 0, t)).collect();
    let diffed = difference_transform(&raw).unwrap();
    let zero_mean = model.differenced();

    let mean_x = diffed.iter().fold(DVector::zeros(2), |s, p| s + &p.x) / diffed.len() as f64;
    println!("differenced feature mean: [{:.4}, {:.4}]", mean_x[0], mean_x[1]);
    println!("differenced scales: sigma_x = {:.4}, sigma_eta = {:.4}\n", zero_mean.sigma_x(), zero_mean.sigma_eta());

    println!("            mu_hat  burn-in  samples  bound      error");
    for (name, spec, data) in [("raw", &model, &raw[..]), ("differenced", &zero_mean, &diffed[..])] {
        let inputs = BoundInputs::from_model(spec, 0.0, 0.05, 0.05);
        let start = first_valid(burn_in(&inputs, Confidence::Delta).max());
        let t = data.len() as u64;
        let bound = local_bound(&inputs, t, spec.lambda_min_local(0, t))
            .map_or("-".to_string(), |r| format!("{:.4}", r.value));
        println!(
            "{name:<11} {:>7.2} {start:>8} {t:>8}  {bound:<9} {:.5}",
            spec.mu_hat(),
            fit(&theta, data)
        );
    }
}

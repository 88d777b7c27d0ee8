//! Consensus on a ring: how fast every agent's copy approaches the network
//! average, against the `√m ρ^T` envelope.

use drls::consensus::{mixing_deficit, mixing_deficit_bound, run_comm_phase_observed};
use drls::WeightMatrix;
use nalgebra::DMatrix;

fn main() {
    let w = WeightMatrix::ring(6, 1.0 / 3.0).unwrap();
    println!("ring(6): rho = {:.6}", w.rho());
    println!("agent 0 talks to {:?}", w.neighbors(0).collect::<Vec<_>>());

    println!("\n  T   deficit     sqrt(m) rho^T");
    for t in [1, 2, 5, 10, 20, 38] {
        println!("{t:>3}   {:.3e}   {:.3e}", mixing_deficit(&w, t), mixing_deficit_bound(&w, t));
    }

    // one agent holds all the information; watch it spread
    let values: Vec<_> = (0..6)
        .map(|i| DMatrix::from_element(1, 1, if i == 0 { 6.0 } else { 0.0 }))
        .collect();
    println!("\nround  values (average is 1)");
    run_comm_phase_observed(&w, &values, &values, 8, |k, a, _| {
        let row: Vec<String> = a.iter().map(|v| format!("{:.3}", v[(0, 0)])).collect();
        println!("{k:>5}  {}", row.join(" "));
    })
    .unwrap();
}

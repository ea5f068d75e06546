//! Median reconstruction fidelity against shots per setting for random
//! two-qubit pure states.
//!
//! `cargo run --release -p spintomo --example shot_noise_scaling`

use spintomo::hamiltonian::{ModelConfig, ModelKind, ParamMode};
use spintomo::measurement::simulate_plan;
use spintomo::planner::{plan_tomography, DEFAULT_MAX_DEPTH};
use spintomo::reconstruction::{reconstruct, MleOptions};
use spintomo::states::{random_density, StateKind};

const SEEDS: u64 = 20;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = plan_tomography(&ModelConfig::new(ModelKind::Xy, ParamMode::Switchable), 2, DEFAULT_MAX_DEPTH)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "shots", "projected", "refined", "worst");
    for shots in [100u64, 1_000, 10_000, 100_000] {
        let (mut projected, mut refined) = (Vec::new(), Vec::new());
        for seed in 0..SEEDS {
            let truth = random_density(2, StateKind::Pure, seed);
            let records = simulate_plan(&truth, &plan, shots, seed)?;
            let result = reconstruct(&plan, &records, Some(&MleOptions::default()), Some(&truth))?;
            let m = result.metrics.expect("truth supplied");
            projected.push(m.fidelity_projected);
            refined.push(m.fidelity_refined.expect("refinement ran"));
        }
        let worst = refined.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{shots:>8} {:>12.5} {:>12.5} {worst:>12.5}", median(projected), median(refined));
    }
    Ok(())
}

//! Settings count, deepest sequence and pair-gate usage of every model preset.
//!
//! `cargo run --release -p spintomo --example plan_survey`

use std::time::Instant;

use spintomo::hamiltonian::{ModelConfig, ModelKind, ParamMode};
use spintomo::planner::{plan_tomography, DEFAULT_MAX_DEPTH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let presets = [
        (ModelKind::Xy, ParamMode::Switchable),
        (ModelKind::Heisenberg, ParamMode::Switchable),
        (ModelKind::Xxz, ParamMode::Switchable),
        (ModelKind::Xy, ParamMode::FixedEz),
    ];
    for (kind, mode) in presets {
        let cfg = ModelConfig::new(kind, mode);
        for n in 1..=3 {
            let start = Instant::now();
            let plan = plan_tomography(&cfg, n, DEFAULT_MAX_DEPTH)?;
            let pairs: usize = plan.settings.iter().map(|s| s.setting.sequence.pair_count()).sum();
            println!(
                "{:<24} n={n} settings={:<3} depth={} pair gates={:<4} {:.2?}",
                cfg.label(),
                plan.len(),
                plan.depth(),
                pairs,
                start.elapsed()
            );
        }
    }
    Ok(())
}

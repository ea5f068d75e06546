//! Browser bindings. Every export takes plain numbers or strings and returns
//! a JSON document: `{"ok": true, ...}` on success, `{"ok": false, "error": ...}`
//! otherwise, so the page never has to catch exceptions.

use serde_json::{json, Value};
use spintomo::hamiltonian::{checked_closed_form, ModelConfig, ModelKind, ParamMode, TwoQubitParams};
use spintomo::measurement::simulate_plan;
use spintomo::planner::{plan_tomography, DEFAULT_MAX_DEPTH};
use spintomo::protocol::{equivalent_measurement, PulseSequence};
use spintomo::reconstruction::{reconstruct, MleOptions};
use spintomo::states::{random_density, StateKind};
use wasm_bindgen::prelude::*;

/// Largest register the page offers; planning beyond this is too slow for a click.
pub const MAX_DEMO_QUBITS: usize = 3;

fn respond(result: Result<Value, String>) -> String {
    let value = match result {
        Ok(Value::Object(mut map)) => {
            map.insert("ok".into(), Value::Bool(true));
            Value::Object(map)
        }
        Ok(other) => json!({ "ok": true, "value": other }),
        Err(error) => json!({ "ok": false, "error": error }),
    };
    value.to_string()
}

fn model(name: &str, mode: &str) -> Result<ModelConfig, String> {
    let kind: ModelKind = name.parse().map_err(|e: spintomo::hamiltonian::ModelError| e.to_string())?;
    let mode = match mode {
        "switchable" => ParamMode::Switchable,
        "fixed_ez" => ParamMode::FixedEz,
        other => return Err(format!("unknown parameter mode {other:?}")),
    };
    Ok(ModelConfig::new(kind, mode))
}

fn closed_form_inner(jx: f64, jy: f64, jz: f64, eps_z: f64, t: f64) -> Result<Value, String> {
    let p = TwoQubitParams { jx, jy, jz, eps_z, t };
    let check = checked_closed_form(&p).map_err(|e| e.to_string())?;
    let entries = |m: &spintomo::linalg::CMatrix| {
        (0..4)
            .map(|i| (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    Ok(json!({
        "gamma": p.gamma(),
        "beta": p.beta(),
        "phi": p.phi(),
        "b": p.b(),
        "deviation": check.deviation,
        "closed_form": entries(&check.closed_form),
        "numerical": entries(&check.numerical),
    }))
}

/// Closed-form pair propagator next to the matrix exponential, with their
/// Frobenius distance.
#[wasm_bindgen]
pub fn closed_form(jx: f64, jy: f64, jz: f64, eps_z: f64, t: f64) -> String {
    respond(closed_form_inner(jx, jy, jz, eps_z, t))
}

fn explore_inner(model_name: &str, mode: &str, n: usize, sequence: &str, pom_qubit: usize) -> Result<Value, String> {
    if !(1..=MAX_DEMO_QUBITS).contains(&n) {
        return Err(format!("n must be between 1 and {MAX_DEMO_QUBITS}"));
    }
    if !(1..=n).contains(&pom_qubit) {
        return Err(format!("readout qubit must be between 1 and {n}"));
    }
    let params = model(model_name, mode)?.resolve().map_err(|e| e.to_string())?;
    let seq = PulseSequence::parse(sequence, Some(&params)).map_err(|e| e.to_string())?;
    let em = equivalent_measurement(&seq, pom_qubit - 1, n).map_err(|e| e.to_string())?;
    let terms: Vec<Value> = em.terms().map(|(p, c)| json!({ "pauli": p.to_string(), "coefficient": c })).collect();
    let mut formula = String::from("p = 1/2");
    for (p, c) in em.terms() {
        let k = -0.5 * c;
        formula.push_str(&format!(" {} {:.6} r_{}", if k < 0.0 { '-' } else { '+' }, k.abs(), p));
    }
    Ok(json!({
        "sequence": seq.to_string(),
        "pair_gates": seq.pair_count(),
        "pair_time": params.t,
        "terms": terms,
        "norm_sqr": em.norm_sqr(),
        "probability": formula,
    }))
}

/// Pauli expansion of what a `|1><1|` readout on `pom_qubit` (1-based)
/// measures after `sequence`, e.g. `"Y1 U12 U23"`.
#[wasm_bindgen]
pub fn explore(model_name: &str, mode: &str, n: usize, sequence: &str, pom_qubit: usize) -> String {
    respond(explore_inner(model_name, mode, n, sequence, pom_qubit))
}

fn tomography_inner(model_name: &str, mode: &str, n: usize, shots: u32, seed: u32, pure: bool) -> Result<Value, String> {
    if !(1..=MAX_DEMO_QUBITS).contains(&n) {
        return Err(format!("n must be between 1 and {MAX_DEMO_QUBITS}"));
    }
    let cfg = model(model_name, mode)?;
    let plan = plan_tomography(&cfg, n, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())?;
    let kind = if pure { StateKind::Pure } else { StateKind::Mixed };
    let seed = u64::from(seed);
    let truth = random_density(n, kind, seed);
    let records = simulate_plan(&truth, &plan, u64::from(shots), seed).map_err(|e| e.to_string())?;
    let mle = MleOptions::default();
    let result = reconstruct(&plan, &records, Some(&mle), Some(&truth)).map_err(|e| e.to_string())?;
    let settings: Vec<Value> = plan
        .settings
        .iter()
        .zip(&records)
        .map(|(s, r)| {
            json!({
                "target": s.target.to_string(),
                "sequence": s.setting.sequence.to_string(),
                "pom_qubit": s.setting.pom_qubit + 1,
                "p_hat": r.p_hat(),
            })
        })
        .collect();
    let metrics = result.metrics.as_ref().ok_or("no metrics")?;
    Ok(json!({
        "settings": settings,
        "raw_eigenvalues": result.raw_eigenvalues,
        "raw_physical": result.raw_physical,
        "fidelity_projected": metrics.fidelity_projected,
        "fidelity_refined": metrics.fidelity_refined,
        "trace_distance_refined": metrics.trace_distance_refined,
        "mle": result.mle,
    }))
}

/// Full round trip in the browser: plan, simulate `shots` per setting
/// (0 = exact), reconstruct and score against the hidden state.
#[wasm_bindgen]
pub fn tomography(model_name: &str, mode: &str, n: usize, shots: u32, seed: u32, pure: bool) -> String {
    respond(tomography_inner(model_name, mode, n, shots, seed, pure))
}

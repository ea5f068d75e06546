use serde_json::Value;
use spintomo_web::{closed_form, explore, tomography};

fn parse(reply: String) -> Value {
    serde_json::from_str(&reply).unwrap()
}

#[test]
fn closed_form_reply_matches_exponential() {
    let v = parse(closed_form(1.0, 0.4, 0.7, 1.2, 2.0));
    assert_eq!(v["ok"], true);
    assert!(v["deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["closed_form"].as_array().unwrap().len(), 4);
}

#[test]
fn closed_form_reports_degenerate_couplings() {
    let v = parse(closed_form(1.0, 1.0, 0.7, 1.2, 2.0));
    assert_eq!(v["ok"], false);
    assert!(v["error"].as_str().is_some());
}

#[test]
fn explore_reproduces_three_qubit_chain() {
    let v = parse(explore("xy", "switchable", 3, "Y1 U12 U23", 1));
    assert_eq!(v["ok"], true);
    assert_eq!(v["pair_gates"], 2);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 3);
    let zzx = terms.iter().find(|t| t["pauli"] == "ZZX").unwrap();
    assert!((zzx["coefficient"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(v["probability"].as_str().unwrap().starts_with("p = 1/2"));
}

#[test]
fn explore_rejects_bad_input() {
    for reply in [
        explore("xy", "switchable", 2, "Q1", 1),
        explore("ising", "switchable", 2, "X1", 1),
        explore("xy", "switchable", 2, "X1", 3),
        explore("xy", "sometimes", 2, "X1", 1),
        explore("xy", "switchable", 9, "X1", 1),
    ] {
        assert_eq!(parse(reply)["ok"], false);
    }
}

#[test]
fn tomography_round_trip() {
    let v = parse(tomography("xy", "switchable", 2, 0, 3, true));
    assert_eq!(v["ok"], true);
    assert_eq!(v["settings"].as_array().unwrap().len(), 15);
    assert!(v["fidelity_projected"].as_f64().unwrap() > 1.0 - 1e-9);

    let v = parse(tomography("heisenberg", "switchable", 2, 5000, 3, false));
    assert_eq!(v["ok"], true);
    assert!(v["fidelity_refined"].as_f64().unwrap() > 0.9);
    assert_eq!(v["mle"]["monotone"], true);
}

use std::f64::consts::FRAC_1_SQRT_2;

use spintomo::hamiltonian::{u1, ModelConfig, ModelKind, ParamMode};
use spintomo::linalg::phase_overlap;
use spintomo::pauli::PauliString;
use spintomo::planner::{plan_tomography, DEFAULT_MAX_DEPTH};
use spintomo::protocol::{compile, equivalent_measurement, PulseSequence};
use spintomo::verification::{closed_form_sweep, verify_chain, verify_operators, verify_table_one, EntryStatus};

fn ps(s: &str) -> PauliString {
    s.parse().unwrap()
}

#[test]
fn table_entries_are_normalized_with_one_flagged_row() {
    let report = verify_table_one().unwrap();
    assert!(report.consistent);
    assert_eq!(report.rows.len(), 18);
    assert_eq!(report.matches, 17);
    assert_eq!(report.sign_flips, 0);
    let bad: Vec<_> = report.rows.iter().filter(|r| r.status == EntryStatus::Discrepancy).collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].operations, "X1 U12 Y1");
    assert!((bad[0].computed.coefficient(&ps("Y0")) - 1.0).abs() < 1e-12);
    assert!((bad[0].computed.coefficient(&ps("XX")) - 1.0).abs() < 1e-12);
}

#[test]
fn three_qubit_chain_expansion() {
    let xy = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable).resolve().unwrap();
    let seq = PulseSequence::parse("Y1 U12 U23", Some(&xy)).unwrap();
    let em = equivalent_measurement(&seq, 0, 3).unwrap();
    assert_eq!(em.len(), 3);
    assert!((em.coefficient(&ps("XII")) + FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((em.coefficient(&ps("ZYI")) + 0.5).abs() < 1e-12);
    assert!((em.coefficient(&ps("ZZX")) - 0.5).abs() < 1e-12);

    let chain = verify_chain().unwrap();
    assert!(chain.consistent && chain.matches_probability_formula);
    assert!((chain.common_ratio.unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn closed_form_sweep_is_tight() {
    let sweep = closed_form_sweep(200, 77).unwrap();
    assert!(sweep.passed, "{}", sweep.max_deviation);
    assert!(sweep.max_deviation < 1e-8);
}

#[test]
fn entangler_checks() {
    let checks = verify_operators().unwrap();
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    let u2 = checks.iter().find(|c| c.name.starts_with("u2")).unwrap();
    assert!((u2.phase - std::f64::consts::FRAC_PI_8).abs() < 1e-10);
}

#[test]
fn planned_pair_gate_is_u1_for_xy() {
    let xy = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable).resolve().unwrap();
    let w = compile(&PulseSequence::parse("U12", Some(&xy)).unwrap(), 2).unwrap();
    let (overlap, phase) = phase_overlap(&u1(), &w);
    assert!((overlap - 1.0).abs() < 1e-12);
    assert!(phase.abs() < 1e-12);
}

#[test]
fn single_qubit_plan_uses_three_settings() {
    let plan = plan_tomography(&ModelConfig::new(ModelKind::Heisenberg, ParamMode::Switchable), 1, DEFAULT_MAX_DEPTH)
        .unwrap();
    let seqs: Vec<String> = plan.settings.iter().map(|s| s.setting.sequence.to_string()).collect();
    assert_eq!(seqs, ["Y1", "X1", "I"]);
    assert_eq!(plan.targets().keys().map(|t| t.to_string()).collect::<Vec<_>>(), ["X", "Y", "Z"]);
}

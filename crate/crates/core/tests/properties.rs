use proptest::prelude::*;
use spintomo::hamiltonian::{closed_form_u12, ModelConfig, ModelKind, ParamMode, TwoQubitParams};
use spintomo::linalg::{evolve, CMatrix};
use spintomo::measurement::{exact_probability, probability_paths, sample, simulate_plan};
use spintomo::pauli::conjugate_expand;
use spintomo::planner::{plan_tomography, TomographyPlan, DEFAULT_MAX_DEPTH};
use spintomo::protocol::{compile, equivalent_measurement, Axis, Gate, MeasurementSetting, PulseSequence};
use spintomo::reconstruction::{linear_invert, mle_refine, MleOptions};
use spintomo::states::{fidelity, from_bloch, random_density, to_bloch, trace_distance, StateKind};

fn axis(i: usize) -> Axis {
    [Axis::X, Axis::Y, Axis::Z][i % 3]
}

fn arb_params() -> impl Strategy<Value = TwoQubitParams> {
    (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0, 0.0f64..2.0, 0.0f64..4.0).prop_map(|(jx, jy, jz, eps_z, t)| {
        let jy = if eps_z > 0.0 && (jx - jy).abs() < 1e-3 { jy + 0.05 } else { jy };
        TwoQubitParams { jx, jy, jz, eps_z, t }
    })
}

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    (0usize..8, 0..n, 0..n, -3.2f64..3.2, 0usize..3, 1usize..3, arb_params()).prop_map(
        move |(kind, q, r, theta, a, b, params)| match kind {
            0 => Gate::X(q),
            1 => Gate::Y(q),
            2 => Gate::Z(q),
            3 => Gate::Xbar(q),
            4 => Gate::ZAngle { qubit: q, theta },
            5 => Gate::YAngle { qubit: q, theta },
            6 => Gate::Composite { qubit: q, alpha: axis(a), beta: axis(a + b), theta },
            _ if n > 1 && q != r => Gate::Pair { first: q.min(r), second: q.max(r), params },
            _ => Gate::Z(q),
        },
    )
}

fn arb_sequence(n: usize, max_len: usize) -> impl Strategy<Value = PulseSequence> {
    prop::collection::vec(arb_gate(n), 0..=max_len).prop_map(PulseSequence::new)
}

fn arb_setting() -> impl Strategy<Value = (usize, PulseSequence, usize)> {
    (1usize..=3).prop_flat_map(|n| (Just(n), arb_sequence(n, 5), 0..n))
}

fn xy_plan(n: usize) -> TomographyPlan {
    plan_tomography(&ModelConfig::new(ModelKind::Xy, ParamMode::Switchable), n, DEFAULT_MAX_DEPTH).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compile_is_multiplicative(
        (n, a, b) in (1usize..=3).prop_flat_map(|n| (Just(n), arb_sequence(n, 3), arb_sequence(n, 3)))
    ) {
        let joined = a.then_before(&b);
        let lhs = compile(&joined, n).unwrap();
        let rhs = &compile(&a, n).unwrap() * &compile(&b, n).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        prop_assert!(lhs.is_unitary(1e-10));
    }

    #[test]
    fn equivalent_measurement_is_normalized_conjugation((n, seq, pom) in arb_setting()) {
        let em = equivalent_measurement(&seq, pom, n).unwrap();
        prop_assert!((em.norm_sqr() - 1.0).abs() < 1e-10);
        let w = compile(&seq, n).unwrap();
        let direct = conjugate_expand(&w, &spintomo::pauli::PauliString::single(n, pom, spintomo::pauli::Pauli::Z)).unwrap();
        prop_assert!(em.max_diff(&direct) < 1e-12);
    }

    #[test]
    fn probability_paths_agree((n, seq, pom) in arb_setting(), seed in any::<u64>(), pure in any::<bool>()) {
        let kind = if pure { StateKind::Pure } else { StateKind::Mixed };
        let rho = random_density(n, kind, seed);
        let setting = MeasurementSetting::new(seq, pom, n).unwrap();
        let (direct, linear) = probability_paths(&rho, &setting).unwrap();
        prop_assert!((direct - linear).abs() < 1e-10);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&direct));
    }

    #[test]
    fn closed_form_matches_exponential(p in arb_params()) {
        let cf = closed_form_u12(&p).unwrap();
        let num = p.numerical().unwrap();
        prop_assert!(cf.frobenius_distance(&num) < 1e-8, "{:?}", p);
    }

    #[test]
    fn evolution_is_a_one_parameter_group(p in arb_params(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let h = p.hamiltonian().to_matrix();
        let lhs = &evolve(&h, t1).unwrap() * &evolve(&h, t2).unwrap();
        let rhs = evolve(&h, t1 + t2).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        prop_assert!(evolve(&h, 0.0).unwrap().max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn bloch_round_trip(n in 1usize..=3, seed in any::<u64>(), pure in any::<bool>()) {
        let kind = if pure { StateKind::Pure } else { StateKind::Mixed };
        let rho = random_density(n, kind, seed);
        let raw = from_bloch(&to_bloch(&rho)).unwrap();
        prop_assert!(raw.matrix.max_abs_diff(rho.matrix()) < 1e-12);
        prop_assert!(raw.is_physical());
    }

    #[test]
    fn fidelity_and_trace_distance_bounds(n in 1usize..=2, s1 in any::<u64>(), s2 in any::<u64>(), pure in any::<bool>()) {
        let kind = if pure { StateKind::Pure } else { StateKind::Mixed };
        let a = random_density(n, kind, s1);
        let b = random_density(n, StateKind::Mixed, s2);
        let f = fidelity(&a, &b).unwrap();
        let g = fidelity(&b, &a).unwrap();
        let d = trace_distance(&a, &b).unwrap();
        prop_assert!((f - g).abs() < 1e-8);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(1.0 - f.sqrt() <= d + 1e-8);
        prop_assert!(d <= (1.0 - f).sqrt() + 1e-8);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_records_invert_exactly(n in 1usize..=2, seed in any::<u64>(), model in 0usize..4) {
        let (kind, mode) = [
            (ModelKind::Xy, ParamMode::Switchable),
            (ModelKind::Heisenberg, ParamMode::Switchable),
            (ModelKind::Xxz, ParamMode::Switchable),
            (ModelKind::Xy, ParamMode::FixedEz),
        ][model];
        let plan = plan_tomography(&ModelConfig::new(kind, mode), n, DEFAULT_MAX_DEPTH).unwrap();
        let truth = random_density(n, StateKind::Mixed, seed);
        let probs: Vec<f64> = plan.settings.iter().map(|s| exact_probability(&truth, &s.setting).unwrap()).collect();
        let bloch = linear_invert(&plan, &probs).unwrap();
        prop_assert!(bloch.max_diff(&to_bloch(&truth)) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mle_never_decreases_likelihood(seed in any::<u64>(), shots in 20u64..2000) {
        let plan = xy_plan(2);
        let truth = random_density(2, StateKind::Pure, seed);
        let records = simulate_plan(&truth, &plan, shots, seed).unwrap();
        let probs: Vec<f64> = records.iter().map(|r| r.p_hat()).collect();
        let raw = from_bloch(&linear_invert(&plan, &probs).unwrap()).unwrap();
        let out = mle_refine(&plan, &records, &raw.matrix, &MleOptions::default()).unwrap();
        prop_assert!(out.is_monotone());
        prop_assert!(out.state.eigenvalues().iter().all(|&e| e > -1e-12));
        prop_assert!((out.state.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_reproducible_per_setting(seed in any::<u64>(), shots in 1u64..100_000) {
        let plan = xy_plan(2);
        let truth = random_density(2, StateKind::Mixed, seed);
        let all = simulate_plan(&truth, &plan, shots, seed).unwrap();
        prop_assert_eq!(&all, &simulate_plan(&truth, &plan, shots, seed).unwrap());
        for (i, ps) in plan.settings.iter().enumerate() {
            let alone = sample(&truth, &ps.setting, i, shots, seed).unwrap();
            prop_assert_eq!(&alone, &all[i]);
            prop_assert!(alone.ones <= shots);
        }
    }
}

#[test]
fn plan_json_round_trips_bit_exactly() {
    for n in 1..=3 {
        let plan = xy_plan(n);
        let text = serde_json::to_string(&plan).unwrap();
        let back: TomographyPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, plan);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        back.validate().unwrap();
    }
}

#[test]
fn gate_tokens_round_trip() {
    let xy = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable).resolve().unwrap();
    let text = "X1 Xbar2 Y3 Z1 Z2(0.25) Y1(-1.5) R2xz(0.75) U12 U23";
    let seq = PulseSequence::parse(text, Some(&xy)).unwrap();
    assert_eq!(seq.to_string(), text);
    assert_eq!(PulseSequence::parse(&seq.to_string(), Some(&xy)).unwrap(), seq);
}

//! Readout simulation: exact `|1><1|` probabilities and seeded shot sampling.
//!
//! Every probability is computed twice, once as `Tr[W rho W^dagger (|1><1|)_l]`
//! and once from the equivalent measurement as `(1 - sum_P c_P r_P) / 2`.
//! The two must agree to 1e-10; a disagreement means the gate, ordering or
//! basis conventions have drifted apart.
//!
//! Sampling uses ChaCha8 seeded from a single `u64`. Setting `i` draws from
//! stream `i + 1` of that seed, so settings can be simulated in any order
//! with identical results; stream 0 is left for state preparation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{qubit_bit, CMatrix, EIGEN_TOL};
use crate::planner::TomographyPlan;
use crate::protocol::{MeasurementSetting, ProtocolError};
use crate::states::DensityMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("state has {state} qubit(s) but the setting acts on {setting}")]
    QubitMismatch { state: usize, setting: usize },

    #[error("probability paths disagree: direct {direct} vs linear form {linear} (difference {diff:e})")]
    ConventionMismatch { direct: f64, linear: f64, diff: f64 },

    #[error("probability {0} is outside [0, 1] beyond rounding")]
    OutOfRange(f64),

    #[error("shot count must be positive")]
    NoShots,

    #[error("record {index}: {reason}")]
    BadRecord { index: usize, reason: String },

    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type MeasurementResult<T> = Result<T, MeasurementError>;

/// Counts for one setting. `shots = 0` marks an exact-probability record,
/// which carries `p` instead of counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub setting: usize,
    pub shots: u64,
    pub ones: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ShotRecord {
    pub fn exact(setting: usize, p: f64) -> Self {
        Self { setting, shots: 0, ones: 0, p: Some(p) }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Observed frequency of `|1>`, or the exact probability.
    pub fn p_hat(&self) -> f64 {
        match self.p {
            Some(p) if self.shots == 0 => p,
            _ if self.shots == 0 => 0.5,
            _ => self.ones as f64 / self.shots as f64,
        }
    }

    pub fn check(&self, index: usize) -> MeasurementResult<()> {
        let bad = |reason: String| MeasurementError::BadRecord { index, reason };
        if self.setting != index {
            return Err(bad(format!("expected setting {index}, found {}", self.setting)));
        }
        match (self.shots, self.p) {
            (0, Some(p)) if (0.0..=1.0).contains(&p) => Ok(()),
            (0, Some(p)) => Err(bad(format!("exact probability {p} outside [0, 1]"))),
            (0, None) => Err(bad("zero shots without an exact probability".into())),
            (_, Some(_)) => Err(bad("sampled record must not carry p".into())),
            (n, None) if self.ones > n => Err(bad(format!("{} ones out of {n} shots", self.ones))),
            _ => Ok(()),
        }
    }
}

/// Checks that `records` hold exactly one well-formed record per setting, in order.
pub fn check_records(plan: &TomographyPlan, records: &[ShotRecord]) -> MeasurementResult<()> {
    if records.len() != plan.len() {
        return Err(MeasurementError::BadRecord {
            index: records.len().min(plan.len()),
            reason: format!("plan has {} settings but {} records were given", plan.len(), records.len()),
        });
    }
    records.iter().enumerate().try_for_each(|(i, r)| r.check(i))
}

/// `W^dagger (|1><1|)_l W`: the operator whose expectation is the readout probability.
pub fn readout_operator(w: &CMatrix, pom_qubit: usize, n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut proj = CMatrix::zeros(d, d);
    for i in 0..d {
        if qubit_bit(i, pom_qubit, n) == 1 {
            proj[(i, i)] = 1.0.into();
        }
    }
    &(&w.adjoint() * &proj) * w
}

fn clamp_probability(p: f64) -> MeasurementResult<f64> {
    if !(-EIGEN_TOL..=1.0 + EIGEN_TOL).contains(&p) {
        return Err(MeasurementError::OutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `Tr[W rho W^dagger (|1><1|)_l]`, cross-checked against the linear form.
pub fn exact_probability(rho: &DensityMatrix, s: &MeasurementSetting) -> MeasurementResult<f64> {
    let (direct, linear) = probability_paths(rho, s)?;
    let diff = (direct - linear).abs();
    if diff > EIGEN_TOL {
        return Err(MeasurementError::ConventionMismatch { direct, linear, diff });
    }
    clamp_probability(direct)
}

/// Both probability evaluations, unclamped: `(direct trace, em linear form)`.
pub fn probability_paths(rho: &DensityMatrix, s: &MeasurementSetting) -> MeasurementResult<(f64, f64)> {
    let n = rho.qubits();
    if s.qubits() != n {
        return Err(MeasurementError::QubitMismatch { state: n, setting: s.qubits() });
    }
    let w = s.unitary()?;
    let evolved = &(&w * rho.matrix()) * &w.adjoint();
    let d = 1usize << n;
    let direct: f64 = (0..d)
        .filter(|&i| qubit_bit(i, s.pom_qubit, n) == 1)
        .map(|i| evolved[(i, i)].re)
        .sum();
    let linear = 0.5 * (1.0 - s.em.evaluate(|p| rho.expectation(p)));
    Ok((direct, linear))
}

/// Generator for setting `index` under `seed`.
pub fn setting_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Draws `ones ~ Binomial(shots, p)`.
pub fn sample_counts(p: f64, shots: u64, rng: &mut ChaCha8Rng) -> MeasurementResult<u64> {
    if shots == 0 {
        return Err(MeasurementError::NoShots);
    }
    let p = clamp_probability(p)?;
    let dist = Binomial::new(shots, p).map_err(|_| MeasurementError::OutOfRange(p))?;
    Ok(dist.sample(rng))
}

pub fn sample(
    rho: &DensityMatrix,
    s: &MeasurementSetting,
    index: usize,
    shots: u64,
    seed: u64,
) -> MeasurementResult<ShotRecord> {
    let p = exact_probability(rho, s)?;
    let ones = sample_counts(p, shots, &mut setting_rng(seed, index))?;
    Ok(ShotRecord { setting: index, shots, ones, p: None })
}

/// One record per plan setting; `shots = 0` gives exact-probability records.
pub fn simulate_plan(rho: &DensityMatrix, plan: &TomographyPlan, shots: u64, seed: u64) -> MeasurementResult<Vec<ShotRecord>> {
    plan.settings
        .iter()
        .enumerate()
        .map(|(i, ps)| {
            if shots == 0 {
                Ok(ShotRecord::exact(i, exact_probability(rho, &ps.setting)?))
            } else {
                sample(rho, &ps.setting, i, shots, seed)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{ModelConfig, ModelKind, ParamMode};
    use crate::planner::plan_tomography;
    use crate::protocol::{spin_adapter, PulseSequence, SpinAxis};
    use crate::states::{random_density, to_bloch, StateKind};
    use std::f64::consts::SQRT_2;

    fn xy_setting(text: &str, n: usize) -> MeasurementSetting {
        let p = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable).resolve().unwrap();
        MeasurementSetting::new(PulseSequence::parse(text, Some(&p)).unwrap(), 0, n).unwrap()
    }

    #[test]
    fn maximally_mixed_gives_one_half() {
        let rho = DensityMatrix::maximally_mixed(2);
        for text in ["", "X1", "Y1 U12", "X1 U12 Y1"] {
            assert!((exact_probability(&rho, &xy_setting(text, 2)).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_two_qubit_probability() {
        let s = xy_setting("Y1 U12", 2);
        for seed in 0..10 {
            let rho = random_density(2, StateKind::Mixed, seed);
            let r = to_bloch(&rho);
            let expected = (SQRT_2 + r.get(&"X0".parse().unwrap()) + r.get(&"ZY".parse().unwrap())) / (2.0 * SQRT_2);
            assert!((exact_probability(&rho, &s).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_state_readout_is_deterministic() {
        let s = MeasurementSetting::new(PulseSequence::empty(), 1, 2).unwrap();
        let rho = DensityMatrix::basis(2, 0b01);
        assert_eq!(exact_probability(&rho, &s).unwrap(), 1.0);
        let rec = sample(&rho, &s, 0, 1000, 9).unwrap();
        assert_eq!(rec.ones, 1000);
        let rho = DensityMatrix::basis(2, 0b10);
        assert_eq!(sample(&rho, &s, 0, 1000, 9).unwrap().ones, 0);
    }

    #[test]
    fn spin_adapter_sign() {
        // |+x> has r_x = 1; the sigma_x adapter reads |1> with certainty
        let h = 1.0 / SQRT_2;
        let plus = DensityMatrix::from_pure(&[h.into(), h.into()]).unwrap();
        let s = MeasurementSetting::new(spin_adapter(SpinAxis::SigmaX, 0), 0, 1).unwrap();
        assert!((exact_probability(&plus, &s).unwrap() - 1.0).abs() < 1e-12);
        let s = MeasurementSetting::new(spin_adapter(SpinAxis::SigmaY, 0), 0, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((exact_probability(&mixed, &s).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_and_order_free() {
        let plan = plan_tomography(&ModelConfig::new(ModelKind::Xy, ParamMode::Switchable), 2, 5).unwrap();
        let rho = random_density(2, StateKind::Pure, 4);
        let a = simulate_plan(&rho, &plan, 500, 77).unwrap();
        let b = simulate_plan(&rho, &plan, 500, 77).unwrap();
        assert_eq!(a, b);
        let last = plan.len() - 1;
        let single = sample(&rho, &plan.settings[last].setting, last, 500, 77).unwrap();
        assert_eq!(single, a[last]);
        check_records(&plan, &a).unwrap();
        assert_ne!(a, simulate_plan(&rho, &plan, 500, 78).unwrap());
    }

    #[test]
    fn five_sigma_at_one_half() {
        let s = MeasurementSetting::new(PulseSequence::empty(), 0, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(1);
        let shots = 100_000;
        let rec = sample(&rho, &s, 0, shots, 2024).unwrap();
        assert!((rec.p_hat() - 0.5).abs() <= 5.0 * (0.25 / shots as f64).sqrt());
    }

    #[test]
    fn record_checks() {
        assert!(ShotRecord { setting: 0, shots: 10, ones: 11, p: None }.check(0).is_err());
        assert!(ShotRecord { setting: 1, shots: 10, ones: 1, p: None }.check(0).is_err());
        assert!(ShotRecord { setting: 0, shots: 0, ones: 0, p: None }.check(0).is_err());
        assert!(ShotRecord::exact(0, 1.5).check(0).is_err());
        ShotRecord::exact(0, 0.25).check(0).unwrap();
        assert_eq!(ShotRecord::exact(0, 0.25).p_hat(), 0.25);
        let json = serde_json::to_string(&ShotRecord { setting: 2, shots: 10, ones: 3, p: None }).unwrap();
        assert_eq!(json, r#"{"setting":2,"shots":10,"ones":3}"#);
        assert!(sample_counts(0.5, 0, &mut setting_rng(1, 0)).is_err());
    }

    #[test]
    fn qubit_mismatch_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(1);
        assert!(matches!(
            exact_probability(&rho, &xy_setting("", 2)),
            Err(MeasurementError::QubitMismatch { .. })
        ));
    }
}

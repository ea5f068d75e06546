//! From readout probabilities back to a density matrix.
//!
//! Linear inversion walks the plan in order; each setting contributes
//! `1 - 2p = sum_Q c_Q r_Q`, in which only its target is still unknown.
//! The raw result always has unit trace but may have negative eigenvalues
//! when the data are noisy; it is kept as-is and flagged. Positivity is
//! restored either by clipping the spectrum ([`psd_project`]) or by
//! maximum likelihood over `rho = T T^dagger / Tr(T T^dagger)` with `T`
//! lower triangular ([`mle_refine`]).

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{herm_eigen, CMatrix, LinalgError};
use crate::measurement::{check_records, readout_operator, MeasurementError, ShotRecord};
use crate::planner::{PlanError, TomographyPlan};
use crate::states::{fidelity, from_bloch, trace_distance, BlochVector, DensityMatrix, RawDensity, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("plan has {settings} settings but {probabilities} probabilities were given")]
    CountMismatch { settings: usize, probabilities: usize },

    #[error("probability {value} for setting {setting} is not finite")]
    BadProbability { setting: usize, value: f64 },

    #[error("setting {setting} depends on {dependency}, which is not determined yet")]
    Undetermined { setting: usize, dependency: String },

    #[error("no positive eigenvalues; cannot form a state")]
    Degenerate,

    #[error("truth has {truth} qubit(s), plan has {plan}")]
    QubitMismatch { truth: usize, plan: usize },

    #[error(transparent)]
    Plan(#[from] PlanError),

    #[error(transparent)]
    State(#[from] StateError),

    #[error(transparent)]
    Measurement(#[from] MeasurementError),

    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type ReconResult<T> = Result<T, ReconstructionError>;

/// Solves for the Bloch vector one target at a time:
/// `r_P = [(1 - 2p) - sum_{Q != P} c_Q r_Q] / c_P`.
pub fn linear_invert(plan: &TomographyPlan, probs: &[f64]) -> ReconResult<BlochVector> {
    if probs.len() != plan.len() {
        return Err(ReconstructionError::CountMismatch { settings: plan.len(), probabilities: probs.len() });
    }
    let mut r = BlochVector::new(plan.n);
    for (i, (ps, &p)) in plan.settings.iter().zip(probs).enumerate() {
        if !p.is_finite() {
            return Err(ReconstructionError::BadProbability { setting: i, value: p });
        }
        let mut rhs = 1.0 - 2.0 * p;
        for (q, c) in ps.setting.em.terms() {
            if q == &ps.target {
                continue;
            }
            if !r.contains(q) {
                return Err(ReconstructionError::Undetermined { setting: i, dependency: q.to_string() });
            }
            rhs -= c * r.get(q);
        }
        let c_target = ps.setting.em.coefficient(&ps.target);
        if c_target == 0.0 {
            return Err(ReconstructionError::Undetermined { setting: i, dependency: ps.target.to_string() });
        }
        r.insert(ps.target.clone(), rhs / c_target)?;
    }
    Ok(r)
}

/// Clips negative eigenvalues to zero and renormalizes the trace.
pub fn psd_project(h: &CMatrix) -> ReconResult<DensityMatrix> {
    let eig = herm_eigen(&h.hermitian_part())?;
    let total: f64 = eig.values.iter().map(|e| e.max(0.0)).sum();
    if total <= 0.0 {
        return Err(ReconstructionError::Degenerate);
    }
    let m = eig.map(|e| C64::new(e.max(0.0) / total, 0.0)).hermitian_part();
    Ok(DensityMatrix::new(m)?)
}

/// Lower-triangular `L` with `L L^dagger = a` for positive semidefinite `a`;
/// pivots at rounding level are treated as zero.
pub fn cholesky_psd(a: &CMatrix) -> CMatrix {
    let d = a.rows();
    let scale = a.trace().re.abs().max(f64::MIN_POSITIVE);
    let mut l = CMatrix::zeros(d, d);
    for j in 0..d {
        let pivot = a[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if pivot <= 1e-14 * scale {
            continue;
        }
        let root = pivot.sqrt();
        l[(j, j)] = root.into();
        for i in j + 1..d {
            let s: C64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (a[(i, j)] - s) / root;
        }
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once `|dL| / |L|` falls below this.
    pub relative_tolerance: f64,
    /// Probabilities are kept inside `[floor, 1 - floor]` in the likelihood.
    pub probability_floor: f64,
    /// Weight of `I/d` mixed into a non-physical starting point so that every
    /// direction of the Cholesky factor is live.
    pub start_mixing: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, relative_tolerance: 1e-9, probability_floor: 1e-12, start_mixing: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub state: DensityMatrix,
    /// Log-likelihood before the first step and after every accepted step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MleOutcome {
    pub fn is_monotone(&self) -> bool {
        self.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0))
    }
}

struct Likelihood {
    ops: Vec<CMatrix>,
    weights: Vec<f64>,
    freqs: Vec<f64>,
    total: f64,
    floor: f64,
}

impl Likelihood {
    fn new(plan: &TomographyPlan, records: &[ShotRecord], floor: f64) -> ReconResult<Self> {
        check_records(plan, records)?;
        let n = plan.n;
        let mut ops = Vec::with_capacity(plan.len());
        for ps in &plan.settings {
            ops.push(readout_operator(&ps.setting.unitary()?, ps.setting.pom_qubit, n));
        }
        let counts: Vec<f64> = records.iter().map(|r| if r.is_exact() { 1.0 } else { r.shots as f64 }).collect();
        let total: f64 = counts.iter().sum();
        Ok(Self {
            ops,
            weights: counts.iter().map(|c| c / total).collect(),
            freqs: records.iter().map(ShotRecord::p_hat).collect(),
            total,
            floor,
        })
    }

    fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.ops.iter().map(|m| m.trace_product(rho).re).collect()
    }

    /// Normalized log-likelihood (per shot).
    fn value(&self, rho: &CMatrix) -> f64 {
        let lo = self.floor;
        self.probabilities(rho)
            .iter()
            .zip(&self.weights)
            .zip(&self.freqs)
            .map(|((&p, &w), &f)| {
                let p = p.clamp(lo, 1.0 - lo);
                let mut v = 0.0;
                if f > 0.0 {
                    v += f * p.ln();
                }
                if f < 1.0 {
                    v += (1.0 - f) * (1.0 - p).ln();
                }
                w * v
            })
            .sum()
    }

    /// `G = sum_s w_s [f/p - (1-f)/(1-p)] M_s`, the derivative with respect to rho.
    fn gradient(&self, rho: &CMatrix) -> CMatrix {
        let lo = self.floor;
        let d = rho.rows();
        let mut g = CMatrix::zeros(d, d);
        for (((m, p), &w), &f) in self.ops.iter().zip(self.probabilities(rho)).zip(&self.weights).zip(&self.freqs) {
            let p = p.clamp(lo, 1.0 - lo);
            let coeff = w * (f / p - (1.0 - f) / (1.0 - p));
            g = &g + &m.scale_real(coeff);
        }
        g
    }
}

fn density_of(t: &CMatrix) -> CMatrix {
    let a = t * &t.adjoint();
    let tr = a.trace().re;
    a.scale_real(1.0 / tr).hermitian_part()
}

fn lower_part(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.rows(), m.cols(), |i, j| if j <= i { m[(i, j)] } else { C64::new(0.0, 0.0) })
}

/// Log-likelihood `sum_s [k log p + (N - k) log(1 - p)]` of `rho` under the
/// records (exact records count as one shot with frequency `p`).
pub fn log_likelihood(plan: &TomographyPlan, records: &[ShotRecord], rho: &DensityMatrix) -> ReconResult<f64> {
    let lik = Likelihood::new(plan, records, MleOptions::default().probability_floor)?;
    Ok(lik.value(rho.matrix()) * lik.total)
}

/// Maximum-likelihood state by gradient ascent on the Cholesky factor with
/// Armijo backtracking. Only steps that do not lower the likelihood are
/// taken, so the recorded trace is nondecreasing.
pub fn mle_refine(
    plan: &TomographyPlan,
    records: &[ShotRecord],
    init: &CMatrix,
    options: &MleOptions,
) -> ReconResult<MleOutcome> {
    let lik = Likelihood::new(plan, records, options.probability_floor)?;
    let d = 1usize << plan.n;
    let start = {
        let projected = psd_project(init)?;
        let physical = herm_eigen(&init.hermitian_part())?.min_value() >= -crate::linalg::EIGEN_TOL;
        if physical {
            projected.into_matrix()
        } else {
            let mix = options.start_mixing;
            &projected.into_matrix().scale_real(1.0 - mix) + &CMatrix::identity(d).scale_real(mix / d as f64)
        }
    };
    let mut t = cholesky_psd(&start);
    let mut rho = density_of(&t);
    let mut value = lik.value(&rho);
    let mut trace = vec![value * lik.total];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let g = lik.gradient(&rho);
        let shift = g.trace_product(&rho).re;
        let k = &g - &CMatrix::identity(d).scale_real(shift);
        let tr_a = (&t * &t.adjoint()).trace().re;
        let grad = lower_part(&(&k * &t).scale_real(2.0 / tr_a));
        let grad_sq: f64 = grad.as_slice().iter().map(C64::norm_sqr).sum();
        if grad_sq == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut alpha = step;
        for _ in 0..60 {
            let candidate = &t + &grad.scale_real(alpha);
            let cand_rho = density_of(&candidate);
            let cand_value = lik.value(&cand_rho);
            if cand_value.is_finite() && cand_value >= value + 1e-4 * alpha * grad_sq {
                accepted = Some((candidate, cand_rho, cand_value));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand_t, cand_rho, cand_value)) = accepted else {
            converged = true;
            break;
        };
        let change = (cand_value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        let norm = (&cand_t * &cand_t.adjoint()).trace().re.sqrt();
        t = cand_t.scale_real(1.0 / norm);
        rho = cand_rho;
        value = cand_value;
        trace.push(value * lik.total);
        step = (alpha * 2.0).min(1e6);
        if change < options.relative_tolerance {
            converged = true;
            break;
        }
    }
    Ok(MleOutcome { state: DensityMatrix::new(rho)?, log_likelihood: trace, iterations, converged })
}

#[derive(Debug, Clone, Serialize)]
pub struct MleSummary {
    pub iterations: usize,
    pub converged: bool,
    pub monotone: bool,
    pub initial_log_likelihood: f64,
    pub final_log_likelihood: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub fidelity_projected: f64,
    pub trace_distance_projected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_refined: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_distance_refined: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub bloch: BlochVector,
    pub raw: RawDensity,
    pub raw_eigenvalues: Vec<f64>,
    pub raw_physical: bool,
    pub projected: DensityMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<DensityMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle: Option<MleSummary>,
    /// `|p_model - p_hat|` per setting for the final estimate.
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

impl ReconstructionResult {
    /// The refined state when available, otherwise the projected one.
    pub fn estimate(&self) -> &DensityMatrix {
        self.refined.as_ref().unwrap_or(&self.projected)
    }
}

/// Linear inversion, projection, optional MLE, residuals and (given the
/// true state) fidelity metrics.
pub fn reconstruct(
    plan: &TomographyPlan,
    records: &[ShotRecord],
    mle: Option<&MleOptions>,
    truth: Option<&DensityMatrix>,
) -> ReconResult<ReconstructionResult> {
    check_records(plan, records)?;
    if let Some(t) = truth {
        if t.qubits() != plan.n {
            return Err(ReconstructionError::QubitMismatch { truth: t.qubits(), plan: plan.n });
        }
    }
    let probs: Vec<f64> = records.iter().map(ShotRecord::p_hat).collect();
    let bloch = linear_invert(plan, &probs)?;
    let raw = from_bloch(&bloch)?;
    let projected = psd_project(&raw.matrix)?;
    let outcome = mle.map(|opts| mle_refine(plan, records, &raw.matrix, opts)).transpose()?;

    let mut result = ReconstructionResult {
        raw_eigenvalues: raw.eigenvalues.clone(),
        raw_physical: raw.is_physical(),
        bloch,
        raw,
        projected,
        refined: None,
        mle: None,
        residuals: Vec::new(),
        metrics: None,
    };
    if let Some(o) = outcome {
        result.mle = Some(MleSummary {
            iterations: o.iterations,
            converged: o.converged,
            monotone: o.is_monotone(),
            initial_log_likelihood: o.log_likelihood[0],
            final_log_likelihood: *o.log_likelihood.last().expect("trace starts non-empty"),
        });
        result.refined = Some(o.state);
    }
    let est = result.estimate().matrix().clone();
    result.residuals = plan
        .settings
        .iter()
        .zip(&probs)
        .map(|(ps, &p_hat)| {
            let p = 0.5 * (1.0 - ps.setting.em.evaluate(|q| q.trace_with(&est).re));
            (p - p_hat).abs()
        })
        .collect();
    if let Some(t) = truth {
        let refined = result.refined.as_ref();
        result.metrics = Some(Metrics {
            fidelity_projected: fidelity(t, &result.projected)?,
            trace_distance_projected: trace_distance(t, &result.projected)?,
            fidelity_refined: refined.map(|r| fidelity(t, r)).transpose()?,
            trace_distance_refined: refined.map(|r| trace_distance(t, r)).transpose()?,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{ModelConfig, ModelKind, ParamMode};
    use crate::measurement::simulate_plan;
    use crate::planner::plan_tomography;
    use crate::states::{random_density, to_bloch, StateKind};
    use std::f64::consts::SQRT_2;

    fn xy_plan(n: usize) -> TomographyPlan {
        plan_tomography(&ModelConfig::new(ModelKind::Xy, ParamMode::Switchable), n, 5).unwrap()
    }

    #[test]
    fn maximally_mixed_inverts_to_zero() {
        let plan = xy_plan(2);
        let r = linear_invert(&plan, &vec![0.5; plan.len()]).unwrap();
        assert!(r.iter().all(|(_, v)| v.abs() < 1e-12));
    }

    #[test]
    fn exact_round_trip_two_qubits() {
        let plan = xy_plan(2);
        for seed in 0..5 {
            let rho = random_density(2, StateKind::Mixed, seed);
            let records = simulate_plan(&rho, &plan, 0, 0).unwrap();
            let probs: Vec<f64> = records.iter().map(ShotRecord::p_hat).collect();
            let r = linear_invert(&plan, &probs).unwrap();
            assert!(r.max_diff(&to_bloch(&rho)) < 1e-10);
        }
    }

    #[test]
    fn worked_pair_solves_for_the_correlation() {
        // p = (sqrt2 + r_x0 + r_zy) / (2 sqrt2)  =>  r_zy = 2 sqrt2 p - sqrt2 - r_x0
        let rho = random_density(2, StateKind::Pure, 11);
        let r = to_bloch(&rho);
        let params = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable).resolve().unwrap();
        let s = crate::protocol::MeasurementSetting::new(
            crate::protocol::PulseSequence::parse("Y1 U12", Some(&params)).unwrap(),
            0,
            2,
        )
        .unwrap();
        let p = crate::measurement::exact_probability(&rho, &s).unwrap();
        let r_zy = 2.0 * SQRT_2 * p - SQRT_2 - r.get(&"X0".parse().unwrap());
        assert!((r_zy - r.get(&"ZY".parse().unwrap())).abs() < 1e-10);
    }

    #[test]
    fn wrong_probability_count_is_rejected() {
        let plan = xy_plan(1);
        assert!(matches!(linear_invert(&plan, &[0.5]), Err(ReconstructionError::CountMismatch { .. })));
        assert!(matches!(
            linear_invert(&plan, &[0.5, f64::NAN, 0.5]),
            Err(ReconstructionError::BadProbability { setting: 1, .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let rho = random_density(2, StateKind::Mixed, 3);
        let p = psd_project(rho.matrix()).unwrap();
        assert!(p.matrix().max_abs_diff(rho.matrix()) < 1e-12);

        let h = CMatrix::from_real_diagonal(&[1.1, -0.1]);
        let p = psd_project(&h).unwrap();
        assert!(p.matrix().max_abs_diff(&CMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-12);

        assert!(matches!(
            psd_project(&CMatrix::from_real_diagonal(&[-1.0, 0.0])),
            Err(ReconstructionError::Degenerate)
        ));
    }

    #[test]
    fn cholesky_reproduces_psd_input() {
        for kind in [StateKind::Pure, StateKind::Mixed] {
            let rho = random_density(3, kind, 8);
            let l = cholesky_psd(rho.matrix());
            assert!((&l * &l.adjoint()).max_abs_diff(rho.matrix()) < 1e-10);
            assert!((0..8).all(|i| (i + 1..8).all(|j| l[(i, j)] == C64::new(0.0, 0.0))));
        }
    }

    #[test]
    fn mle_is_stationary_at_truth_for_exact_data() {
        let plan = xy_plan(2);
        let rho = random_density(2, StateKind::Mixed, 21);
        let records = simulate_plan(&rho, &plan, 0, 0).unwrap();
        let out = mle_refine(&plan, &records, rho.matrix(), &MleOptions::default()).unwrap();
        assert!(out.is_monotone());
        assert!(out.state.matrix().max_abs_diff(rho.matrix()) < 1e-6);
    }

    #[test]
    fn mle_repairs_noisy_inversion() {
        let plan = xy_plan(2);
        let truth = random_density(2, StateKind::Pure, 5);
        let records = simulate_plan(&truth, &plan, 2000, 42).unwrap();
        let result = reconstruct(&plan, &records, Some(&MleOptions::default()), Some(&truth)).unwrap();
        let mle = result.mle.as_ref().unwrap();
        assert!(mle.monotone);
        assert!(mle.final_log_likelihood >= mle.initial_log_likelihood);
        let refined = result.refined.as_ref().unwrap();
        assert!(refined.eigenvalues()[0] >= -1e-12);
        let m = result.metrics.as_ref().unwrap();
        assert!(m.fidelity_refined.unwrap() >= m.fidelity_projected - 0.01, "{m:?}");
        assert_eq!(result.residuals.len(), plan.len());
    }
}

//! Spin Hamiltonians with diagonal exchange couplings, the analytic
//! two-qubit propagator, and the timing rules for the model presets.
//!
//! Units: hbar = 1, so a duration `t` multiplies energies directly.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{evolve, CMatrix, LinalgError};
use crate::pauli::{Pauli, PauliPolynomial, PauliString};

/// Agreement required between the analytic and numerical propagators.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Relative tolerance for the timing constraint solvers.
pub const TIMING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("analytic propagator does not apply: {0}")]
    ClosedFormInapplicable(String),

    #[error("analytic propagator deviates from exp(-iHt) by {deviation:e}; parameters are outside its regime")]
    OutsideRegime { deviation: f64 },

    #[error("eps_z/Jx = {ratio} is not of the form 4m/(2n-1); nearest admissible is m = {m}, n = {n} (ratio {nearest})")]
    RatioMismatch { ratio: f64, m: u32, n: u32, nearest: f64 },

    #[error("no common evolution time: {0}")]
    NoCommonTime(String),

    #[error("unknown model {0:?} (expected xy, xxz or heisenberg)")]
    UnknownModel(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type ModelResult<T> = Result<T, ModelError>;

/// Exchange coupling `sum_a j[a] sigma_{first,a} sigma_{second,a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub first: usize,
    pub second: usize,
    /// `[Jx, Jy, Jz]`
    pub j: [f64; 3],
}

/// `H = sum_l sum_a eps[l][a] sigma_{l,a} + sum_{l<m} sum_a J^a_{lm} sigma_{l,a} sigma_{m,a}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinHamiltonianSpec {
    pub n: usize,
    /// One-qubit energies `[eps_x, eps_y, eps_z]` per qubit.
    pub eps: Vec<[f64; 3]>,
    pub couplings: Vec<Coupling>,
}

const AXES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

impl SpinHamiltonianSpec {
    pub fn zero(n: usize) -> Self {
        Self { n, eps: vec![[0.0; 3]; n], couplings: Vec::new() }
    }

    /// Same one-qubit energies on every qubit and the same coupling on every pair.
    pub fn uniform(n: usize, eps: [f64; 3], j: [f64; 3]) -> Self {
        let mut couplings = Vec::new();
        for first in 0..n {
            for second in (first + 1)..n {
                couplings.push(Coupling { first, second, j });
            }
        }
        Self { n, eps: vec![eps; n], couplings }
    }

    /// Pair Hamiltonian for a two-qubit parameter set.
    pub fn pair(p: &TwoQubitParams) -> Self {
        Self::uniform(2, [0.0, 0.0, p.eps_z], [p.jx, p.jy, p.jz])
    }

    pub fn validate(&self) -> ModelResult<()> {
        if self.n == 0 {
            return Err(ModelError::InvalidParameter("need at least one qubit".into()));
        }
        if self.eps.len() != self.n {
            return Err(ModelError::InvalidParameter(format!(
                "{} one-qubit energy triples for {} qubits",
                self.eps.len(),
                self.n
            )));
        }
        for c in &self.couplings {
            if c.first >= c.second || c.second >= self.n {
                return Err(ModelError::InvalidParameter(format!(
                    "coupling ({}, {}) must satisfy first < second < n",
                    c.first, c.second
                )));
            }
        }
        let finite = self.eps.iter().flatten().chain(self.couplings.iter().flat_map(|c| &c.j));
        if let Some(bad) = finite.clone().find(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("non-finite parameter {bad}")));
        }
        Ok(())
    }
}

pub fn build_hamiltonian(spec: &SpinHamiltonianSpec) -> ModelResult<PauliPolynomial> {
    spec.validate()?;
    let n = spec.n;
    let mut h = PauliPolynomial::zero(n);
    for (l, e) in spec.eps.iter().enumerate() {
        for (a, &v) in AXES.iter().zip(e) {
            if v != 0.0 {
                h.add_term(PauliString::single(n, l, *a), v);
            }
        }
    }
    for c in &spec.couplings {
        for (a, &v) in AXES.iter().zip(&c.j) {
            if v != 0.0 {
                let mut labels = vec![Pauli::I; n];
                labels[c.first] = *a;
                labels[c.second] = *a;
                h.add_term(PauliString::new(labels), v);
            }
        }
    }
    Ok(h)
}

/// Parameters of the pair propagator: couplings `Jx, Jy, Jz`, the fixed
/// one-qubit energy `eps_z` (zero when switchable) and the duration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub eps_z: f64,
    pub t: f64,
}

impl TwoQubitParams {
    pub fn gamma(&self) -> f64 {
        self.t * (self.jx + self.jy)
    }

    pub fn beta(&self) -> f64 {
        let d = self.jx - self.jy;
        self.t * (4.0 * self.eps_z * self.eps_z + d * d).sqrt()
    }

    pub fn phi(&self) -> f64 {
        self.t * self.jz
    }

    /// `eps_z / (Jx - Jy)`; zero when `eps_z = 0`, undefined for `Jx = Jy` otherwise.
    pub fn b(&self) -> Option<f64> {
        if self.eps_z == 0.0 {
            Some(0.0)
        } else if self.jx == self.jy {
            None
        } else {
            Some(self.eps_z / (self.jx - self.jy))
        }
    }

    /// `a = 2b + sgn(Jx - Jy) sqrt(4b^2 + 1)`. For `Jx > Jy` this is the
    /// positive root; `Jx < Jy` needs the other root for the propagator to
    /// stay exact.
    pub fn a(&self) -> Option<f64> {
        let b = self.b()?;
        let sign = if self.jx >= self.jy { 1.0 } else { -1.0 };
        Some(2.0 * b + sign * (4.0 * b * b + 1.0).sqrt())
    }

    pub fn c(&self) -> Option<f64> {
        let a = self.a()?;
        Some(1.0 / (1.0 + a * a))
    }

    /// The two mixing weights `((1 - a^2) c, 2 a c)` of the (00, 11) sector.
    pub fn mixing_weights(&self) -> Option<(f64, f64)> {
        let a = self.a()?;
        let c = self.c()?;
        Some(((1.0 - a * a) * c, 2.0 * a * c))
    }

    pub fn hamiltonian(&self) -> PauliPolynomial {
        build_hamiltonian(&SpinHamiltonianSpec::pair(self)).expect("pair spec is valid")
    }

    /// `exp(-i H12 t)` by eigendecomposition.
    pub fn numerical(&self) -> ModelResult<CMatrix> {
        Ok(evolve(&self.hamiltonian().to_matrix(), self.t)?)
    }
}

fn two_qubit(label: &str) -> CMatrix {
    label.parse::<PauliString>().expect("valid label").to_matrix()
}

/// Analytic propagator of the pair Hamiltonian with diagonal couplings and
/// a common `eps_z` on both qubits.
pub fn closed_form_u12(p: &TwoQubitParams) -> ModelResult<CMatrix> {
    let (zw, xyw) = p.mixing_weights().ok_or_else(|| {
        ModelError::ClosedFormInapplicable(format!(
            "Jx = Jy = {} with eps_z = {} leaves b = eps_z/(Jx - Jy) undefined",
            p.jx, p.eps_z
        ))
    })?;
    let (gamma, beta, phi) = (p.gamma(), p.beta(), p.phi());
    let ep = C64::from_polar(1.0, phi);
    let em = C64::from_polar(1.0, -phi);
    let i = C64::new(0.0, 1.0);

    let c_id = (ep * gamma.cos() + em * beta.cos()) * 0.5;
    let c_z = i * em * (zw * beta.sin() * 0.5);
    let c_zz = (em * beta.cos() - ep * gamma.cos()) * 0.5;
    let c_xx = -i * 0.5 * (ep * gamma.sin() + em * (xyw * beta.sin()));
    let c_yy = -i * 0.5 * (ep * gamma.sin() - em * (xyw * beta.sin()));

    let terms = [
        ("00", c_id),
        ("Z0", c_z),
        ("0Z", c_z),
        ("ZZ", c_zz),
        ("XX", c_xx),
        ("YY", c_yy),
    ];
    Ok(terms
        .iter()
        .fold(CMatrix::zeros(4, 4), |acc, (label, c)| &acc + &two_qubit(label).scale(*c)))
}

/// Analytic vs numerical propagator for one parameter set.
#[derive(Debug, Clone)]
pub struct ClosedFormCheck {
    pub closed_form: CMatrix,
    pub numerical: CMatrix,
    /// Frobenius norm of the difference.
    pub deviation: f64,
}

/// Accepts the analytic propagator only where it reproduces `exp(-iHt)`.
pub fn checked_closed_form(p: &TwoQubitParams) -> ModelResult<ClosedFormCheck> {
    let closed_form = closed_form_u12(p)?;
    let numerical = p.numerical()?;
    let deviation = closed_form.frobenius_distance(&numerical);
    if deviation > CLOSED_FORM_TOL {
        return Err(ModelError::OutsideRegime { deviation });
    }
    Ok(ClosedFormCheck { closed_form, numerical, deviation })
}

/// XY entangler at `t = pi/(8J)`:
/// `[(sqrt2 + 1) I + (sqrt2 - 1) ZZ - i YY - i XX] / (2 sqrt2)`.
pub fn u1() -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let m = &(&(&CMatrix::identity(4).scale_real(SQRT_2 + 1.0) + &two_qubit("ZZ").scale_real(SQRT_2 - 1.0))
        - &two_qubit("YY").scale(i))
        - &two_qubit("XX").scale(i);
    m.scale_real(1.0 / (2.0 * SQRT_2))
}

/// Heisenberg entangler at `t = pi/(8J)`:
/// `[(2 - i) I - i ZZ - i YY - i XX] / (2 sqrt2)`.
pub fn u2() -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let m = &(&(&CMatrix::identity(4).scale(C64::new(2.0, -1.0)) - &two_qubit("ZZ").scale(i))
        - &two_qubit("YY").scale(i))
        - &two_qubit("XX").scale(i);
    m.scale_real(1.0 / (2.0 * SQRT_2))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIMING_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Duration for the XY/Heisenberg pair gate with a fixed `eps_z`:
/// requires `eps_z / Jx = 4m / (2n - 1)` and gives `t = n pi / (2 eps_z)`.
pub fn solve_fixed_ez_time(eps_z: f64, jx: f64, m: u32, n: u32) -> ModelResult<f64> {
    if !(eps_z > 0.0 && jx > 0.0) {
        return Err(ModelError::InvalidParameter(format!("need eps_z > 0 and Jx > 0, got {eps_z}, {jx}")));
    }
    if m == 0 || n == 0 {
        return Err(ModelError::InvalidParameter("timing indices start at 1".into()));
    }
    let ratio = eps_z / jx;
    let target = 4.0 * m as f64 / (2.0 * n as f64 - 1.0);
    if close(ratio, target) {
        return Ok(n as f64 * PI / (2.0 * eps_z));
    }
    let mut best = (1u32, 1u32, f64::INFINITY);
    for nn in 1..=64u32 {
        for mm in 1..=64u32 {
            let r = 4.0 * mm as f64 / (2.0 * nn as f64 - 1.0);
            if (r - ratio).abs() < (best.2 - ratio).abs() {
                best = (mm, nn, r);
            }
        }
    }
    Err(ModelError::RatioMismatch { ratio, m: best.0, n: best.1, nearest: best.2 })
}

/// Common duration for the XXZ pair gate: `Jz t = 2 n pi`,
/// `Jx t = (2m - 1) pi / 8`, and with a fixed `eps_z` also `eps_z t = l pi / 2`.
pub fn solve_xxz_times(jz: f64, jx: f64, eps_z: Option<f64>, l: u32, m: u32, n: u32) -> ModelResult<f64> {
    if !(jz > 0.0 && jx > 0.0) {
        return Err(ModelError::InvalidParameter(format!("need Jz > 0 and Jx > 0, got {jz}, {jx}")));
    }
    if l == 0 || m == 0 || n == 0 {
        return Err(ModelError::InvalidParameter("timing indices start at 1".into()));
    }
    let t_x = (2.0 * m as f64 - 1.0) * PI / (8.0 * jx);
    let t_z = 2.0 * n as f64 * PI / jz;
    if !close(t_x, t_z) {
        return Err(ModelError::NoCommonTime(format!(
            "Jx fixes t = {t_x} but Jz fixes t = {t_z}; need Jz/Jx = {}",
            16.0 * n as f64 / (2.0 * m as f64 - 1.0)
        )));
    }
    if let Some(eps) = eps_z {
        if eps.is_nan() || eps <= 0.0 {
            return Err(ModelError::InvalidParameter(format!("need eps_z > 0, got {eps}")));
        }
        let t_e = l as f64 * PI / (2.0 * eps);
        if !close(t_x, t_e) {
            return Err(ModelError::NoCommonTime(format!(
                "eps_z fixes t = {t_e} but Jx fixes t = {t_x}; need eps_z/Jx = {}",
                4.0 * l as f64 / (2.0 * m as f64 - 1.0)
            )));
        }
    }
    Ok(t_x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Xy,
    Xxz,
    Heisenberg,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Xy => "xy",
            ModelKind::Xxz => "xxz",
            ModelKind::Heisenberg => "heisenberg",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(ModelKind::Xy),
            "xxz" => Ok(ModelKind::Xxz),
            "heisenberg" | "heis" => Ok(ModelKind::Heisenberg),
            _ => Err(ModelError::UnknownModel(s.to_string())),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether `eps_z` can be switched off during the pair evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Switchable,
    FixedEz,
}

/// Integer indices `l, m, n` of the timing constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingIndices {
    pub l: u32,
    pub m: u32,
    pub n: u32,
}

impl Default for TimingIndices {
    fn default() -> Self {
        Self { l: 1, m: 1, n: 1 }
    }
}

/// A named model preset plus the parameters needed to time its pair gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: ModelKind,
    pub mode: ParamMode,
    #[serde(default = "one")]
    pub jx: f64,
    /// Only used by `xxz`; derived from the timing indices when absent.
    #[serde(default)]
    pub jz: Option<f64>,
    /// Only used in `fixed_ez` mode; derived from the timing indices when absent.
    #[serde(default)]
    pub eps_z: Option<f64>,
    #[serde(default)]
    pub timing: TimingIndices,
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn new(name: ModelKind, mode: ParamMode) -> Self {
        Self { name, mode, jx: 1.0, jz: None, eps_z: None, timing: TimingIndices::default() }
    }

    pub fn label(&self) -> String {
        let mode = match self.mode {
            ParamMode::Switchable => "switchable",
            ParamMode::FixedEz => "fixed_ez",
        };
        format!("{}/{}", self.name, mode)
    }

    /// Pair-gate parameters (couplings, eps_z and duration) for this preset.
    pub fn resolve(&self) -> ModelResult<TwoQubitParams> {
        let jx = self.jx;
        if !(jx > 0.0 && jx.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("Jx must be positive, got {jx}")));
        }
        let TimingIndices { l, m, n } = self.timing;
        if l == 0 || m == 0 || n == 0 {
            return Err(ModelError::InvalidParameter("timing indices start at 1".into()));
        }
        if self.mode == ParamMode::Switchable && self.eps_z.is_some_and(|e| e != 0.0) {
            return Err(ModelError::InvalidParameter("eps_z is switched off in switchable mode".into()));
        }
        if self.name != ModelKind::Xxz && self.jz.is_some() {
            let expected = if self.name == ModelKind::Heisenberg { jx } else { 0.0 };
            if self.jz != Some(expected) {
                return Err(ModelError::InvalidParameter(format!(
                    "model {} fixes Jz = {expected}",
                    self.name
                )));
            }
        }
        let jz = match self.name {
            ModelKind::Xy => 0.0,
            ModelKind::Heisenberg => jx,
            ModelKind::Xxz => self
                .jz
                .unwrap_or_else(|| 16.0 * n as f64 * jx / (2.0 * m as f64 - 1.0)),
        };
        let (eps_z, t) = match (self.name, self.mode) {
            (ModelKind::Xy | ModelKind::Heisenberg, ParamMode::Switchable) => (0.0, PI / (8.0 * jx)),
            (ModelKind::Xy | ModelKind::Heisenberg, ParamMode::FixedEz) => {
                let eps = self
                    .eps_z
                    .unwrap_or_else(|| 4.0 * m as f64 * jx / (2.0 * n as f64 - 1.0));
                (eps, solve_fixed_ez_time(eps, jx, m, n)?)
            }
            (ModelKind::Xxz, ParamMode::Switchable) => (0.0, solve_xxz_times(jz, jx, None, l, m, n)?),
            (ModelKind::Xxz, ParamMode::FixedEz) => {
                let eps = self
                    .eps_z
                    .unwrap_or_else(|| 4.0 * l as f64 * jx / (2.0 * m as f64 - 1.0));
                (eps, solve_xxz_times(jz, jx, Some(eps), l, m, n)?)
            }
        };
        Ok(TwoQubitParams { jx, jy: jx, jz, eps_z, t })
    }
}

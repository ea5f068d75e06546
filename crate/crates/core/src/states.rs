//! Density matrices and their Bloch-coefficient form.
//!
//! An `n`-qubit state is `rho = 2^-n * sum_P r_P P` with `r_{0..0} = 1`, so it
//! is fixed by the `4^n - 1` expectation values `r_P = Tr(rho P)` of the
//! non-identity Pauli strings. Basis convention: `|0> = up`, `|1> = down`, so
//! `Z|1> = -|1>`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{herm_eigen, CMatrix, LinalgError, EIGEN_TOL};
use crate::pauli::PauliString;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("matrix of size {rows}x{cols} is not an n-qubit operator")]
    NotQubitOperator { rows: usize, cols: usize },

    #[error("density matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("density matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("states act on different qubit counts ({0} vs {1})")]
    QubitMismatch(usize, usize),

    #[error("Bloch coefficient for {0} is invalid: {1}")]
    BadCoefficient(String, String),

    #[error("malformed state data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Validated `n`-qubit density matrix: Hermitian, unit trace, PSD (all within 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: CMatrix,
}

fn qubit_count(m: &CMatrix) -> Result<usize, StateError> {
    let d = m.rows();
    if !m.is_square() || !d.is_power_of_two() || d < 2 {
        return Err(StateError::NotQubitOperator { rows: m.rows(), cols: m.cols() });
    }
    Ok(d.trailing_zeros() as usize)
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, StateError> {
        let n = qubit_count(&matrix)?;
        let asym = matrix.hermitian_asymmetry();
        if asym > EIGEN_TOL {
            return Err(StateError::NotHermitian(asym));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > EIGEN_TOL {
            return Err(StateError::BadTrace(tr));
        }
        let min = herm_eigen(&matrix)?.min_value();
        if min < -EIGEN_TOL {
            return Err(StateError::NotPositive(min));
        }
        Ok(Self { n, matrix })
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self, StateError> {
        let norm = psi.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StateError::Malformed("zero state vector".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::projector(&unit))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1 << n;
        Self { n, matrix: CMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    /// Computational basis state `|index><index|`.
    pub fn basis(n: usize, index: usize) -> Self {
        let d = 1 << n;
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = C64::new(1.0, 0.0);
        Self { n, matrix: m }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(C64::norm_sqr).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigen(&self.matrix).map(|e| e.values).unwrap_or_default()
    }

    /// `Tr(rho P)`.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        p.trace_with(&self.matrix).re
    }
}

#[derive(Serialize, Deserialize)]
struct DensityRecord {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn matrix_record(n: usize, m: &CMatrix) -> DensityRecord {
    let d = m.rows();
    DensityRecord {
        n,
        re: (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect(),
        im: (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect(),
    }
}

fn record_matrix(rec: &DensityRecord) -> Result<CMatrix, StateError> {
    let d = 1usize << rec.n;
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !shape_ok(&rec.re) || !shape_ok(&rec.im) {
        return Err(StateError::Malformed(format!("expected {d}x{d} re/im arrays for n = {}", rec.n)));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| C64::new(rec.re[i][j], rec.im[i][j])))
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        matrix_record(self.n, &self.matrix).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = DensityRecord::deserialize(d)?;
        let m = record_matrix(&rec).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Hermitian unit-trace matrix that may fail positivity, such as the output
/// of linear inversion on noisy data.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDensity {
    pub n: usize,
    pub matrix: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl RawDensity {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -EIGEN_TOL
    }

    pub fn to_density(&self) -> Result<DensityMatrix, StateError> {
        DensityMatrix::new(self.matrix.clone())
    }
}

impl Serialize for RawDensity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        matrix_record(self.n, &self.matrix).serialize(s)
    }
}

/// Non-identity Pauli expectation values `r_P` of an `n`-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    n: usize,
    r: BTreeMap<PauliString, f64>,
}

impl BlochVector {
    pub fn new(n: usize) -> Self {
        Self { n, r: BTreeMap::new() }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, p: PauliString, value: f64) -> Result<(), StateError> {
        if p.len() != self.n {
            return Err(StateError::BadCoefficient(p.to_string(), format!("expected {} qubits", self.n)));
        }
        if p.is_identity() {
            return Err(StateError::BadCoefficient(p.to_string(), "identity coefficient is fixed to 1".into()));
        }
        if !value.is_finite() {
            return Err(StateError::BadCoefficient(p.to_string(), format!("non-finite value {value}")));
        }
        self.r.insert(p, value);
        Ok(())
    }

    /// `r_P`, with the implicit `r_{0..0} = 1` and zero for absent entries.
    pub fn get(&self, p: &PauliString) -> f64 {
        if p.is_identity() {
            return 1.0;
        }
        self.r.get(p).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        p.is_identity() || self.r.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.r.iter().map(|(p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.r.values().map(|v| v * v).sum()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.r
            .keys()
            .chain(other.r.keys())
            .map(|p| (self.get(p) - other.get(p)).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for BlochVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.r.len()))?;
        for (p, v) in &self.r {
            map.serialize_entry(&p.to_string(), v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for BlochVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, f64> = BTreeMap::deserialize(d)?;
        let mut out: Option<BlochVector> = None;
        for (k, v) in raw {
            let p: PauliString = k.parse().map_err(serde::de::Error::custom)?;
            let b = out.get_or_insert_with(|| BlochVector::new(p.len()));
            b.insert(p, v).map_err(serde::de::Error::custom)?;
        }
        Ok(out.unwrap_or_else(|| BlochVector::new(0)))
    }
}

/// Number of free real parameters of an `n`-qubit state, `4^n - 1`.
pub fn parameter_count(n: usize) -> usize {
    (1usize << (2 * n)) - 1
}

/// Number of weight-`j` Pauli strings on `n` qubits, `3^j * C(n, j)`.
pub fn weight_class_size(n: usize, j: usize) -> usize {
    if j > n {
        return 0;
    }
    let binom = (0..j).fold(1usize, |acc, k| acc * (n - k) / (k + 1));
    3usize.pow(j as u32) * binom
}

pub fn to_bloch(rho: &DensityMatrix) -> BlochVector {
    let n = rho.n;
    let mut b = BlochVector::new(n);
    for k in 1..1usize << (2 * n) {
        let p = PauliString::from_index(n, k);
        let v = rho.expectation(&p);
        b.r.insert(p, v);
    }
    b
}

/// `rho = 2^-n (I + sum_P r_P P)`; positivity is reported, not enforced.
pub fn from_bloch(b: &BlochVector) -> Result<RawDensity, StateError> {
    let n = b.n;
    if n == 0 {
        return Err(StateError::Malformed("Bloch vector has no qubits".into()));
    }
    let d = 1usize << n;
    let mut m = CMatrix::identity(d);
    for (p, &v) in &b.r {
        let pm = p.to_matrix();
        m = &m + &pm.scale_real(v);
    }
    let matrix = m.scale_real(1.0 / d as f64).hermitian_part();
    let eigenvalues = herm_eigen(&matrix)?.values;
    Ok(RawDensity { n, matrix, eigenvalues })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Random state drawn from `rng`: Haar-random pure states, or
/// Hilbert-Schmidt mixed states `G G^dagger / Tr(G G^dagger)`.
pub fn random_density_with<R: Rng + ?Sized>(rng: &mut R, n: usize, kind: StateKind) -> DensityMatrix {
    assert!(n >= 1, "need at least one qubit");
    let d = 1usize << n;
    let matrix = match kind {
        StateKind::Pure => {
            let psi: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
            let norm = psi.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
            let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
            CMatrix::projector(&unit)
        }
        StateKind::Mixed => {
            let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
            let ggd = &g * &g.adjoint();
            let tr = ggd.trace().re;
            ggd.scale_real(1.0 / tr).hermitian_part()
        }
    };
    DensityMatrix { n, matrix }
}

/// Deterministic random state from a 64-bit seed (ChaCha8 stream 0).
pub fn random_density(n: usize, kind: StateKind, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_with(&mut rng, n, kind)
}

/// Eigenvalues below this fraction of the largest one are rounding noise;
/// their square roots would otherwise leak ~1e-8 into fidelities.
const SPECTRAL_FLOOR: f64 = 1e-14;

fn floored_sqrt(e: f64, largest: f64) -> f64 {
    if e <= SPECTRAL_FLOOR * largest {
        0.0
    } else {
        e.sqrt()
    }
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix, StateError> {
    let eig = herm_eigen(m)?;
    let largest = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.map(|e| C64::new(floored_sqrt(e, largest), 0.0)))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, StateError> {
    if a.n != b.n {
        return Err(StateError::QubitMismatch(a.n, b.n));
    }
    let sa = psd_sqrt(&a.matrix)?;
    let inner = (&(&sa * &b.matrix) * &sa).hermitian_part();
    let values = herm_eigen(&inner)?.values;
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let root: f64 = values.iter().map(|&e| floored_sqrt(e, largest)).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// `Tr|a - b| / 2`, clamped to `[0, 1]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, StateError> {
    if a.n != b.n {
        return Err(StateError::QubitMismatch(a.n, b.n));
    }
    let diff = (&a.matrix - &b.matrix).hermitian_part();
    let sum: f64 = herm_eigen(&diff)?.values.iter().map(|e| e.abs()).sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn maximally_mixed_has_zero_bloch_vector() {
        for n in 1..=3 {
            let b = to_bloch(&DensityMatrix::maximally_mixed(n));
            assert_eq!(b.len(), parameter_count(n));
            assert!(b.iter().all(|(_, v)| v.abs() < 1e-15));
        }
    }

    #[test]
    fn down_state_has_negative_z() {
        let one = DensityMatrix::basis(1, 1);
        let b = to_bloch(&one);
        assert_eq!(b.get(&ps("Z")), -1.0);
        assert_eq!(b.get(&ps("X")), 0.0);
        assert_eq!(b.get(&ps("Y")), 0.0);
    }

    #[test]
    fn from_bloch_simple_cases() {
        let raw = from_bloch(&BlochVector::new(2)).unwrap();
        assert!(raw.matrix.max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let mut b = BlochVector::new(1);
        b.insert(ps("Z"), -1.0).unwrap();
        let raw = from_bloch(&b).unwrap();
        assert!(raw.is_physical());
        assert!(raw.matrix.max_abs_diff(DensityMatrix::basis(1, 1).matrix()) < 1e-15);
    }

    #[test]
    fn from_bloch_flags_unphysical_vectors() {
        let mut b = BlochVector::new(1);
        b.insert(ps("Z"), 1.0).unwrap();
        b.insert(ps("X"), 1.0).unwrap();
        let raw = from_bloch(&b).unwrap();
        assert!(!raw.is_physical());
        assert!((raw.matrix.trace().re - 1.0).abs() < 1e-15);
        assert!(matches!(raw.to_density(), Err(StateError::NotPositive(_))));
    }

    #[test]
    fn bloch_rejects_identity_and_wrong_length() {
        let mut b = BlochVector::new(2);
        assert!(b.insert(ps("00"), 1.0).is_err());
        assert!(b.insert(ps("X"), 1.0).is_err());
    }

    #[test]
    fn bloch_round_trip_random_states() {
        for seed in 0..20 {
            for kind in [StateKind::Pure, StateKind::Mixed] {
                let rho = random_density(2, kind, seed);
                let raw = from_bloch(&to_bloch(&rho)).unwrap();
                assert!(raw.is_physical());
                assert!(raw.matrix.max_abs_diff(rho.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn purity_bound() {
        for seed in 0..10 {
            for n in 1..=3 {
                let d = (1usize << n) as f64;
                let pure = random_density(n, StateKind::Pure, seed);
                let s = to_bloch(&pure).norm_sqr();
                assert!((s - (d - 1.0)).abs() < 1e-10);
                let mixed = random_density(n, StateKind::Mixed, seed);
                let s = to_bloch(&mixed).norm_sqr();
                assert!((s - (d * mixed.purity() - 1.0)).abs() < 1e-10);
                assert!(s < d - 1.0);
            }
        }
    }

    #[test]
    fn parameter_count_identity() {
        for n in 1..=6 {
            let sum: usize = (1..=n).map(|j| weight_class_size(n, j)).sum();
            assert_eq!(sum, parameter_count(n));
        }
        assert_eq!(weight_class_size(2, 1), 6);
        assert_eq!(weight_class_size(2, 2), 9);
    }

    #[test]
    fn random_states_are_valid_and_deterministic() {
        let p = random_density(1, StateKind::Pure, 7);
        assert!((p.purity() - 1.0).abs() < 1e-10);
        let m = random_density(2, StateKind::Mixed, 7);
        assert!(DensityMatrix::new(m.matrix().clone()).is_ok());
        assert!(m.eigenvalues()[0] > 0.0);
        assert_eq!(random_density(2, StateKind::Mixed, 7), m);
        assert_ne!(random_density(2, StateKind::Mixed, 8), m);
    }

    #[test]
    fn fidelity_and_trace_distance_extremes() {
        let rho = random_density(2, StateKind::Mixed, 3);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-12);
        let zero = DensityMatrix::basis(1, 0);
        let one = DensityMatrix::basis(1, 1);
        assert!(fidelity(&zero, &one).unwrap() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &rho).is_err());
    }

    #[test]
    fn fidelity_lower_bound_against_trace_distance() {
        for seed in 0..50 {
            let a = random_density(2, StateKind::Mixed, seed);
            let b = random_density(2, if seed % 2 == 0 { StateKind::Pure } else { StateKind::Mixed }, seed + 1000);
            let f = fidelity(&a, &b).unwrap();
            let d = trace_distance(&a, &b).unwrap();
            assert!(f >= 1.0 - d - 1e-12, "seed {seed}: F={f} D={d}");
            // Fuchs-van de Graaf upper side
            assert!(d <= (1.0 - f).sqrt() + 1e-12);
        }
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let a = random_density(2, StateKind::Pure, 1);
        let b = random_density(2, StateKind::Pure, 2);
        let overlap = a.matrix().trace_product(b.matrix()).re;
        assert!((fidelity(&a, &b).unwrap() - overlap).abs() < 1e-10);
    }

    #[test]
    fn density_json_shape() {
        let rho = DensityMatrix::basis(1, 1);
        let json = serde_json::to_string(&rho).unwrap();
        assert_eq!(json, r#"{"n":1,"re":[[0.0,0.0],[0.0,1.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#);
        let back: DensityMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rho);
        let bad = r#"{"n":1,"re":[[2.0,0.0],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(bad).is_err());
    }

    #[test]
    fn bloch_json_uses_labels() {
        let mut b = BlochVector::new(2);
        b.insert(ps("ZX"), 0.5).unwrap();
        b.insert(ps("X0"), -0.25).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"X0":-0.25,"ZX":0.5}"#);
        assert_eq!(serde_json::from_str::<BlochVector>(&json).unwrap(), b);
    }
}

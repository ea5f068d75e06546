//! Pauli strings and real linear combinations of them.
//!
//! A [`PauliString`] is a tensor product of single-qubit labels `0, X, Y, Z`
//! with qubit 0 written first, so `"ZX0"` is `Z ⊗ X ⊗ I`. Strings order by
//! weight first and then label-wise (`0 < X < Y < Z`), which is the order the
//! tomography planner solves coefficients in.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{CMatrix, EIGEN_TOL};

/// Coefficients below this magnitude are dropped from a [`PauliPolynomial`].
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("Pauli strings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("operator is not Hermitian (max asymmetry {0:e}); its Pauli coefficients would be complex")]
    NotHermitian(f64),

    #[error("operator is not unitary (max |UU^dagger - I| = {0:e})")]
    NotUnitary(f64),

    #[error("matrix of size {rows}x{cols} is not a qubit operator")]
    NotQubitOperator { rows: usize, cols: usize },

    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => '0',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' | 'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// `self * other = i^k * result`, returned as `(k, result)`.
    pub fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    pub fn matrix(self) -> CMatrix {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => CMatrix::identity(2),
            Pauli::X => CMatrix::from_rows(&[vec![o, one], vec![one, o]]),
            Pauli::Y => CMatrix::from_rows(&[vec![o, -i], vec![i, o]]),
            Pauli::Z => CMatrix::from_rows(&[vec![one, o], vec![o, -one]]),
        }
    }
}

/// Power of `i`: one of `1, i, -1, -i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

/// Tensor product of single-qubit Pauli labels; qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    labels: Vec<Pauli>,
}

impl PauliString {
    pub fn new(labels: Vec<Pauli>) -> Self {
        Self { labels }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// `label` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, label: Pauli) -> Self {
        let mut labels = vec![Pauli::I; n];
        labels[qubit] = label;
        Self::new(labels)
    }

    /// Decodes a base-4 index (qubit 0 most significant, digits `0,X,Y,Z`).
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut labels = vec![Pauli::I; n];
        for q in (0..n).rev() {
            labels[q] = Pauli::ALL[index & 3];
            index >>= 2;
        }
        Self::new(labels)
    }

    /// Every string on `n` qubits, identity included, in canonical order.
    pub fn all(n: usize) -> Vec<PauliString> {
        let mut v: Vec<_> = (0..1usize << (2 * n)).map(|k| Self::from_index(n, k)).collect();
        v.sort();
        v
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.labels
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.labels[qubit]
    }

    pub fn weight(&self) -> usize {
        self.labels.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Qubits carrying a non-identity label.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&q| self.labels[q] != Pauli::I).collect()
    }

    fn masks(&self) -> (usize, usize, usize) {
        let n = self.len();
        let (mut x, mut y, mut z) = (0, 0, 0);
        for (q, &p) in self.labels.iter().enumerate() {
            let bit = 1 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => y |= bit,
                Pauli::Z => z |= bit,
            }
        }
        (x, y, z)
    }

    /// Visits the single nonzero entry of each row: `f(row, col, value)`.
    fn for_each_entry(&self, mut f: impl FnMut(usize, usize, C64)) {
        let (x, y, z) = self.masks();
        let flip = x | y;
        let y_count = y.count_ones();
        for row in 0..(1usize << self.len()) {
            let y_ones = (row & y).count_ones();
            let z_ones = (row & z).count_ones();
            // Y = [[0, -i], [i, 0]]: -i on a 0 bit, +i on a 1 bit
            let power = 3 * (y_count - y_ones) + y_ones + 2 * z_ones;
            f(row, row ^ flip, Phase::from_power((power % 4) as u8).to_complex());
        }
    }

    /// Dense matrix realization.
    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1 << self.len();
        let mut m = CMatrix::zeros(dim, dim);
        self.for_each_entry(|i, j, v| m[(i, j)] = v);
        m
    }

    /// `Tr(P * m)` using the monomial structure of `P`.
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        self.for_each_entry(|i, j, v| acc += v * m[(j, i)]);
        acc
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.weight(), &self.labels).cmp(&(other.weight(), &other.labels))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.labels {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let labels = s
            .chars()
            .map(|c| Pauli::from_symbol(c).ok_or_else(|| PauliError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if labels.is_empty() {
            return Err(PauliError::Parse(s.to_string()));
        }
        Ok(Self::new(labels))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `p * q = phase * r`.
pub fn pauli_mul(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString), PauliError> {
    if p.len() != q.len() {
        return Err(PauliError::LengthMismatch(p.len(), q.len()));
    }
    let mut power = 0u8;
    let labels = p
        .labels
        .iter()
        .zip(&q.labels)
        .map(|(&a, &b)| {
            let (k, r) = a.product(b);
            power += k;
            r
        })
        .collect();
    Ok((Phase::from_power(power), PauliString::new(labels)))
}

/// Real linear combination of Pauli strings on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliPolynomial {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliPolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (PauliString, f64)>) -> Self {
        let mut poly = Self::zero(n);
        for (p, c) in terms {
            poly.add_term(p, c);
        }
        poly
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    /// Adds `coeff * p`, dropping the term if the result is negligible.
    pub fn add_term(&mut self, p: PauliString, coeff: f64) {
        assert_eq!(p.len(), self.n, "term {p} does not act on {} qubits", self.n);
        let entry = self.terms.entry(p.clone()).or_insert(0.0);
        *entry += coeff;
        if entry.abs() < PRUNE_TOL {
            self.terms.remove(&p);
        }
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.terms.contains_key(p)
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of squared coefficients.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(PauliString::weight).max().unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_terms(self.n, self.terms.iter().map(|(p, &c)| (p.clone(), c * s)))
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1 << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        for (p, &c) in &self.terms {
            p.for_each_entry(|i, j, v| m[(i, j)] += v * c);
        }
        m
    }

    /// `sum_P c_P * r_P` for expectation values supplied by `expectation`.
    pub fn evaluate(&self, mut expectation: impl FnMut(&PauliString) -> f64) -> f64 {
        self.terms.iter().map(|(p, &c)| c * expectation(p)).sum()
    }

    /// Largest coefficient difference against `other`, over the union of terms.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|p| (self.coefficient(p) - other.coefficient(p)).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for PauliPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (p, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0.0 { '-' } else { '+' };
            if k == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{:.6}*{}", c.abs(), p)?;
        }
        Ok(())
    }
}

impl Serialize for PauliPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.terms.len()))?;
        for (p, c) in &self.terms {
            map.serialize_entry(&p.to_string(), c)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for PauliPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, f64> = BTreeMap::deserialize(d)?;
        let mut n = None;
        let mut poly_terms = Vec::with_capacity(raw.len());
        for (k, c) in raw {
            let p: PauliString = k.parse().map_err(serde::de::Error::custom)?;
            match n {
                None => n = Some(p.len()),
                Some(len) if len != p.len() => {
                    return Err(serde::de::Error::custom(format!("term {p} has inconsistent length")))
                }
                _ => {}
            }
            poly_terms.push((p, c));
        }
        // terms are inserted verbatim so stored coefficients survive bit-exactly
        let terms = poly_terms.into_iter().collect();
        Ok(Self { n: n.unwrap_or(0), terms })
    }
}

fn qubit_count(m: &CMatrix) -> Result<usize, PauliError> {
    let d = m.rows();
    if !m.is_square() || !d.is_power_of_two() {
        return Err(PauliError::NotQubitOperator { rows: m.rows(), cols: m.cols() });
    }
    Ok(d.trailing_zeros() as usize)
}

/// Pauli-basis expansion `c_P = Tr(P m) / 2^n` of a Hermitian operator.
pub fn expand(m: &CMatrix) -> Result<PauliPolynomial, PauliError> {
    let n = qubit_count(m)?;
    let asym = m.hermitian_asymmetry();
    if asym > EIGEN_TOL {
        return Err(PauliError::NotHermitian(asym));
    }
    let norm = (1usize << n) as f64;
    let mut poly = PauliPolynomial::zero(n);
    for k in 0..1usize << (2 * n) {
        let p = PauliString::from_index(n, k);
        let c = p.trace_with(m).re / norm;
        if c.abs() >= PRUNE_TOL {
            poly.terms.insert(p, c);
        }
    }
    Ok(poly)
}

/// Expansion of `W^dagger P W` for unitary `W`.
pub fn conjugate_expand(w: &CMatrix, p: &PauliString) -> Result<PauliPolynomial, PauliError> {
    let n = qubit_count(w)?;
    if p.len() != n {
        return Err(PauliError::LengthMismatch(p.len(), n));
    }
    let dev = w.unitarity_deviation();
    if dev > EIGEN_TOL {
        return Err(PauliError::NotUnitary(dev));
    }
    let conj = &(&w.adjoint() * &p.to_matrix()) * w;
    expand(&conj)
}

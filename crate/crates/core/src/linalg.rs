//! Dense complex matrices sized for a handful of qubits.
//!
//! Everything here works on row-major [`CMatrix`] values. Operators on `n`
//! qubits are `2^n x 2^n` with qubit 0 as the most significant bit of the
//! basis index, so `kron(a, b)` places `a` on the lower-numbered qubit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Tolerance for identities that should hold to rounding (phases, small integers).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for results that go through an eigendecomposition.
pub const EIGEN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |h_ij - conj(h_ji)| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

pub type LinalgResult<T> = Result<T, LinalgError>;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(rows * cols, data.len(), "entry count must equal rows * cols");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![C64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Outer product `|v><v|` of a column vector.
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.rows, self.cols, self.data.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise deviation `|a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |h_ij - conj(h_ji)|`, zero for an exactly Hermitian matrix.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_asymmetry() <= tol
    }

    /// `||U U^dagger - I||_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Averages the matrix with its adjoint, removing rounding asymmetry.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + adj[(i, j)]) * 0.5)
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

/// Kronecker product; `a` occupies the leading (most significant) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..a.rows {
        for k in 0..b.rows {
            for j in 0..a.cols {
                let aij = a[(i, j)];
                for l in 0..b.cols {
                    data.push(aij * b[(k, l)]);
                }
            }
        }
    }
    CMatrix::new(rows, cols, data)
}

/// Bit of `index` that encodes `qubit` in an `n`-qubit register.
#[inline]
pub fn qubit_bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Lifts a `k`-qubit operator acting on `qubits` (in that order) to the full
/// `n`-qubit space.
pub fn embed(op: &CMatrix, qubits: &[usize], n: usize) -> LinalgResult<CMatrix> {
    let k = qubits.len();
    if op.rows != 1 << k || op.cols != 1 << k {
        return Err(LinalgError::DimensionMismatch(format!(
            "operator is {}x{} but acts on {} qubit(s)",
            op.rows, op.cols, k
        )));
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n || qubits[..i].contains(&q) {
            return Err(LinalgError::DimensionMismatch(format!(
                "qubit list {qubits:?} is invalid for a {n}-qubit register"
            )));
        }
    }
    let dim = 1 << n;
    let mask: usize = qubits.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let local = |idx: usize| -> usize {
        qubits
            .iter()
            .fold(0, |acc, &q| (acc << 1) | qubit_bit(idx, q, n))
    };
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let li = local(i);
        let rest = i & !mask;
        for lj in 0..(1 << k) {
            let v = op[(li, lj)];
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let mut j = rest;
            for (pos, &q) in qubits.iter().enumerate() {
                if (lj >> (k - 1 - pos)) & 1 == 1 {
                    j |= 1 << (n - 1 - q);
                }
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// `V f(E) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let d = self.values.len();
        let weights: Vec<C64> = self.values.iter().map(|&e| f(e)).collect();
        CMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|g| self.vectors[(i, g)] * weights[g] * self.vectors[(j, g)].conj())
                .sum()
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|e| C64::new(e, 0.0))
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn herm_eigen(h: &CMatrix) -> LinalgResult<EigenSystem> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows, cols: h.cols });
    }
    let asym = h.hermitian_asymmetry();
    if asym > EIGEN_TOL * h.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { max_asymmetry: asym });
    }
    let d = h.rows;
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(d);
    let scale = a.frobenius_norm();

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                s += a[(p, q)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= f64::EPSILON * scale * 1e-1 || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) block
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;

                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(d, d, |i, g| v[(i, order[g])]);
    Ok(EigenSystem { values, vectors })
}

/// `exp(-i h t)` through the spectral decomposition of `h` (hbar = 1).
pub fn evolve(h: &CMatrix, t: f64) -> LinalgResult<CMatrix> {
    let eig = herm_eigen(h)?;
    Ok(eig.map(|e| C64::from_polar(1.0, -e * t)))
}

/// Overlap `|Tr(A^dagger B)| / d` and the phase of `Tr(A^dagger B)`.
///
/// For unitaries, an overlap of one means `B = e^{i phase} A`.
pub fn phase_overlap(a: &CMatrix, b: &CMatrix) -> (f64, f64) {
    let tr = a.adjoint().trace_product(b);
    (tr.norm() / a.rows as f64, tr.arg())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(h: &CMatrix) -> LinalgResult<Vec<f64>> {
    Ok(herm_eigen(h)?.values)
}

//! Gate vocabulary, pulse sequences and equivalent measurements.
//!
//! A [`PulseSequence`] is written as an operator product: the first gate in
//! the list is the leftmost factor, so the *last* gate acts first on the
//! state. Compiling `[A, B]` yields `W = A * B`.
//!
//! A projective readout of `|1><1|` on qubit `l` after `W` measures
//! `W^dagger (|1><1|)_l W = (I - em) / 2` on the original state, where the
//! equivalent measurement is `em = W^dagger sigma_{lz} W`. Hence
//! `p = (1 - sum_P c_P r_P) / 2`.
//!
//! Qubit indices are 0-based in the API and 1-based in text and JSON.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::hamiltonian::{ModelError, TwoQubitParams};
use crate::linalg::{embed, CMatrix, LinalgError, EIGEN_TOL};
use crate::pauli::{conjugate_expand, Pauli, PauliError, PauliPolynomial, PauliString};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("gate {gate} addresses qubit {qubit} but the register has {n} qubit(s)")]
    QubitOutOfRange { gate: String, qubit: usize, n: usize },

    #[error("pair gate needs two distinct qubits, got {0} and {1}")]
    SameQubit(usize, usize),

    #[error("composite rotation needs two different axes, got {0} twice")]
    RepeatedAxis(Axis),

    #[error("cannot parse gate {0:?}")]
    Parse(String),

    #[error("pair gate {0} needs coupling parameters")]
    MissingPairParams(String),

    #[error("equivalent measurement has norm {0}, expected 1")]
    NotNormalized(f64),

    #[error("stored equivalent measurement differs from the compiled one by {0:e}")]
    StaleMeasurement(f64),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Pauli(#[from] PauliError),

    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type ProtocolResult<T> = Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// The remaining axis `c` and the Levi-Civita sign `eps_{self, other, c}`.
    pub fn complete(self, other: Axis) -> Option<(Axis, f64)> {
        if self == other {
            return None;
        }
        let all = [Axis::X, Axis::Y, Axis::Z];
        let third = 3 - self.index() - other.index();
        let sign = if (other.index() + 3 - self.index()) % 3 == 1 { 1.0 } else { -1.0 };
        Some((all[third], sign))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// `exp(-i theta sigma_a / 2)` as a 2x2 matrix.
pub fn rotation(axis: Axis, theta: f64) -> CMatrix {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(theta / 2.0).sin());
    let sigma = axis.pauli().matrix();
    &CMatrix::identity(2).scale(c) + &sigma.scale(s)
}

/// One step of a pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `exp(-i pi sigma_x / 4)`
    X(usize),
    /// `exp(-i pi sigma_y / 4)`
    Y(usize),
    /// `exp(-i pi sigma_z / 4)`
    Z(usize),
    /// `exp(-i 3 pi sigma_x / 4)`
    Xbar(usize),
    /// `exp(-i theta sigma_z / 2)`
    ZAngle { qubit: usize, theta: f64 },
    /// `exp(-i theta sigma_y / 2)`
    YAngle { qubit: usize, theta: f64 },
    /// `exp(-i pi sigma_a / 4) exp(-i theta sigma_b / 2) exp(i pi sigma_a / 4)`
    Composite { qubit: usize, alpha: Axis, beta: Axis, theta: f64 },
    /// Free evolution of the coupled pair for `params.t`.
    Pair { first: usize, second: usize, params: TwoQubitParams },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::Xbar(q) => vec![q],
            Gate::ZAngle { qubit, .. } | Gate::YAngle { qubit, .. } | Gate::Composite { qubit, .. } => {
                vec![qubit]
            }
            Gate::Pair { first, second, .. } => vec![first, second],
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, Gate::Pair { .. })
    }

    /// The gate on its own qubits (2x2 or 4x4).
    pub fn local_matrix(&self) -> ProtocolResult<CMatrix> {
        Ok(match *self {
            Gate::X(_) => rotation(Axis::X, FRAC_PI_2),
            Gate::Y(_) => rotation(Axis::Y, FRAC_PI_2),
            Gate::Z(_) => rotation(Axis::Z, FRAC_PI_2),
            Gate::Xbar(_) => rotation(Axis::X, 3.0 * FRAC_PI_2),
            Gate::ZAngle { theta, .. } => rotation(Axis::Z, theta),
            Gate::YAngle { theta, .. } => rotation(Axis::Y, theta),
            Gate::Composite { alpha, beta, theta, .. } => {
                if alpha == beta {
                    return Err(ProtocolError::RepeatedAxis(alpha));
                }
                let outer = rotation(alpha, FRAC_PI_2);
                &(&outer * &rotation(beta, theta)) * &outer.adjoint()
            }
            Gate::Pair { first, second, params } => {
                if first == second {
                    return Err(ProtocolError::SameQubit(first + 1, second + 1));
                }
                params.numerical()?
            }
        })
    }

    /// The gate lifted to an `n`-qubit register.
    pub fn matrix(&self, n: usize) -> ProtocolResult<CMatrix> {
        let qubits = self.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            return Err(ProtocolError::QubitOutOfRange { gate: self.to_string(), qubit: q + 1, n });
        }
        Ok(embed(&self.local_matrix()?, &qubits, n)?)
    }

    /// For a composite rotation, the axis it is equivalent to and the sign of
    /// its angle: `exp(-i sign theta sigma_c / 2)`.
    pub fn composite_equivalent(&self) -> Option<(Axis, f64)> {
        match *self {
            Gate::Composite { alpha, beta, .. } => alpha.complete(beta),
            _ => None,
        }
    }

    /// Parses a text token such as `X1`, `Xbar2`, `Z1(0.5)`, `Y3(1.2)`,
    /// `R1xy(0.3)` or `U12` / `U(1,2)`. Pair tokens take `pair` as their
    /// coupling parameters.
    pub fn parse_token(token: &str, pair: Option<&TwoQubitParams>) -> ProtocolResult<Gate> {
        let bad = || ProtocolError::Parse(token.to_string());
        let (head, angle) = match token.find('(') {
            Some(i) if !token.starts_with('U') => {
                let inner = token[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&token[..i], Some(inner.trim().parse::<f64>().map_err(|_| bad())?))
            }
            _ => (token, None),
        };
        let one_based = |digits: &str| -> ProtocolResult<usize> {
            match digits.parse::<usize>() {
                Ok(q) if q >= 1 => Ok(q - 1),
                _ => Err(bad()),
            }
        };
        if let Some(rest) = head.strip_prefix('U') {
            let (a, b) = if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
                inner.split_once(',').ok_or_else(bad)?
            } else if rest.len() == 2 && rest.is_ascii() {
                rest.split_at(1)
            } else {
                return Err(bad());
            };
            let (first, second) = (one_based(a.trim())?, one_based(b.trim())?);
            let params = *pair.ok_or_else(|| ProtocolError::MissingPairParams(token.to_string()))?;
            return Ok(Gate::Pair { first, second, params });
        }
        if let Some(rest) = head.strip_prefix('R') {
            let split = rest.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
            let (digits, axes) = rest.split_at(split);
            let mut chars = axes.chars();
            let alpha = chars.next().and_then(Axis::from_symbol).ok_or_else(bad)?;
            let beta = chars.next().and_then(Axis::from_symbol).ok_or_else(bad)?;
            if chars.next().is_some() {
                return Err(bad());
            }
            let theta = angle.ok_or_else(bad)?;
            return Ok(Gate::Composite { qubit: one_based(digits)?, alpha, beta, theta });
        }
        if let Some(digits) = head.strip_prefix("Xbar") {
            return if angle.is_none() { Ok(Gate::Xbar(one_based(digits)?)) } else { Err(bad()) };
        }
        let mut chars = head.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let qubit = one_based(chars.as_str())?;
        match (letter, angle) {
            ('X', None) => Ok(Gate::X(qubit)),
            ('Y', None) => Ok(Gate::Y(qubit)),
            ('Z', None) => Ok(Gate::Z(qubit)),
            ('Y', Some(theta)) => Ok(Gate::YAngle { qubit, theta }),
            ('Z', Some(theta)) => Ok(Gate::ZAngle { qubit, theta }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X(q) => write!(f, "X{}", q + 1),
            Gate::Y(q) => write!(f, "Y{}", q + 1),
            Gate::Z(q) => write!(f, "Z{}", q + 1),
            Gate::Xbar(q) => write!(f, "Xbar{}", q + 1),
            Gate::ZAngle { qubit, theta } => write!(f, "Z{}({theta})", qubit + 1),
            Gate::YAngle { qubit, theta } => write!(f, "Y{}({theta})", qubit + 1),
            Gate::Composite { qubit, alpha, beta, theta } => write!(f, "R{}{alpha}{beta}({theta})", qubit + 1),
            Gate::Pair { first, second, .. } if first < 9 && second < 9 => {
                write!(f, "U{}{}", first + 1, second + 1)
            }
            Gate::Pair { first, second, .. } => write!(f, "U({},{})", first + 1, second + 1),
        }
    }
}

/// JSON form of a gate. Qubits are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GateRecord {
    name: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axes: Option<[Axis; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupling: Option<TwoQubitParams>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let qubits = g.qubits().iter().map(|q| q + 1).collect();
        let mut rec = GateRecord { name: String::new(), qubits, angle: None, axes: None, coupling: None };
        rec.name = match *g {
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::Xbar(_) => "Xbar",
            Gate::ZAngle { theta, .. } => {
                rec.angle = Some(theta);
                "Z_theta"
            }
            Gate::YAngle { theta, .. } => {
                rec.angle = Some(theta);
                "Y_theta"
            }
            Gate::Composite { alpha, beta, theta, .. } => {
                rec.angle = Some(theta);
                rec.axes = Some([alpha, beta]);
                "composite"
            }
            Gate::Pair { params, .. } => {
                rec.coupling = Some(params);
                "U"
            }
        }
        .to_string();
        rec
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = String;

    fn try_from(rec: GateRecord) -> Result<Self, String> {
        let arity = if rec.name == "U" { 2 } else { 1 };
        if rec.qubits.len() != arity || rec.qubits.contains(&0) {
            return Err(format!("gate {} needs {arity} qubit index(es) starting at 1, got {:?}", rec.name, rec.qubits));
        }
        let q = rec.qubits[0] - 1;
        let angle = || rec.angle.ok_or_else(|| format!("gate {} needs an angle", rec.name));
        Ok(match rec.name.as_str() {
            "X" => Gate::X(q),
            "Y" => Gate::Y(q),
            "Z" => Gate::Z(q),
            "Xbar" => Gate::Xbar(q),
            "Z_theta" => Gate::ZAngle { qubit: q, theta: angle()? },
            "Y_theta" => Gate::YAngle { qubit: q, theta: angle()? },
            "composite" => {
                let [alpha, beta] = rec.axes.ok_or("composite gate needs two axes")?;
                Gate::Composite { qubit: q, alpha, beta, theta: angle()? }
            }
            "U" => Gate::Pair {
                first: q,
                second: rec.qubits[1] - 1,
                params: rec.coupling.ok_or("pair gate needs coupling parameters")?,
            },
            other => return Err(format!("unknown gate name {other:?}")),
        })
    }
}

impl Serialize for Gate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GateRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = GateRecord::deserialize(d)?;
        Gate::try_from(rec).map_err(serde::de::Error::custom)
    }
}

/// Ordered gate list written as an operator product (rightmost acts first).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseSequence {
    pub gates: Vec<Gate>,
}

impl PulseSequence {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses whitespace-separated tokens, e.g. `"Y1 U12 U23"`.
    pub fn parse(text: &str, pair: Option<&TwoQubitParams>) -> ProtocolResult<Self> {
        let gates = text
            .split_whitespace()
            .map(|tok| Gate::parse_token(tok, pair))
            .collect::<ProtocolResult<_>>()?;
        Ok(Self { gates })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_pair()).count()
    }

    /// `self * other`: `other` acts first.
    pub fn then_before(&self, other: &PulseSequence) -> PulseSequence {
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        PulseSequence { gates }
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gates.is_empty() {
            return f.write_str("I");
        }
        for (i, g) in self.gates.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// `W = g_0 g_1 ... g_k` for an `n`-qubit register.
pub fn compile(seq: &PulseSequence, n: usize) -> ProtocolResult<CMatrix> {
    let mut w = CMatrix::identity(1 << n);
    for g in &seq.gates {
        w = &w * &g.matrix(n)?;
    }
    Ok(w)
}

/// `em = W^dagger sigma_{lz} W` expanded in the Pauli basis.
pub fn equivalent_measurement(seq: &PulseSequence, pom_qubit: usize, n: usize) -> ProtocolResult<PauliPolynomial> {
    if pom_qubit >= n {
        return Err(ProtocolError::QubitOutOfRange { gate: "readout".into(), qubit: pom_qubit + 1, n });
    }
    let w = compile(seq, n)?;
    let z = PauliString::single(n, pom_qubit, Pauli::Z);
    Ok(conjugate_expand(&w, &z)?)
}

/// Probability of reading `|1>` given the equivalent measurement and a
/// Bloch-coefficient lookup: `p = (1 - sum_P c_P r_P) / 2`.
pub fn pom_probability(em: &PauliPolynomial, r: impl FnMut(&PauliString) -> f64) -> f64 {
    0.5 * (1.0 - em.evaluate(r))
}

/// A pulse sequence followed by a `|1><1|` readout of one qubit, with its
/// equivalent measurement cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub sequence: PulseSequence,
    #[serde(with = "one_based")]
    pub pom_qubit: usize,
    pub em: PauliPolynomial,
}

impl MeasurementSetting {
    pub fn new(sequence: PulseSequence, pom_qubit: usize, n: usize) -> ProtocolResult<Self> {
        let em = equivalent_measurement(&sequence, pom_qubit, n)?;
        Ok(Self { sequence, pom_qubit, em })
    }

    pub fn qubits(&self) -> usize {
        self.em.qubits()
    }

    pub fn unitary(&self) -> ProtocolResult<CMatrix> {
        compile(&self.sequence, self.qubits())
    }

    /// Recompiles the sequence and checks the cached `em` against it.
    pub fn validate(&self) -> ProtocolResult<()> {
        let norm = self.em.norm_sqr();
        if (norm - 1.0).abs() > EIGEN_TOL {
            return Err(ProtocolError::NotNormalized(norm));
        }
        let fresh = equivalent_measurement(&self.sequence, self.pom_qubit, self.qubits())?;
        let diff = fresh.max_diff(&self.em);
        if diff > EIGEN_TOL {
            return Err(ProtocolError::StaleMeasurement(diff));
        }
        Ok(())
    }
}

pub(crate) mod one_based {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*q as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let q = usize::deserialize(d)?;
        q.checked_sub(1).ok_or_else(|| serde::de::Error::custom("qubit indices start at 1"))
    }
}

/// Gates realizing `exp(-i theta sigma_y / 2)` from x and z rotations:
/// `Xbar Z(theta) X`, equal to it up to a global sign.
pub fn y_rotation_from_xz(qubit: usize, theta: f64) -> PulseSequence {
    PulseSequence::new(vec![Gate::Xbar(qubit), Gate::ZAngle { qubit, theta }, Gate::X(qubit)])
}

/// Direct spin readout that a `|1><1|` measurement can emulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinAxis {
    SigmaX,
    SigmaY,
}

/// Rotation applied before the readout so that it measures the requested
/// spin component: a pi/2 turn about y for sigma_x and a -pi/2 turn about x
/// (realized as `Xbar`) for sigma_y. Either way `em = -sigma`.
pub fn spin_adapter(kind: SpinAxis, qubit: usize) -> PulseSequence {
    let gate = match kind {
        SpinAxis::SigmaX => Gate::YAngle { qubit, theta: FRAC_PI_2 },
        SpinAxis::SigmaY => Gate::Xbar(qubit),
    };
    PulseSequence::new(vec![gate])
}

/// The composite-axis identity: `exp(-i pi s_a/4) exp(-i t s_b/2) exp(i pi s_a/4)`
/// against `exp(-i eps_abc t s_c/2)`; returns the max entry deviation.
pub fn composite_axis_deviation(alpha: Axis, beta: Axis, theta: f64) -> ProtocolResult<f64> {
    let g = Gate::Composite { qubit: 0, alpha, beta, theta };
    let (gamma, sign) = g.composite_equivalent().ok_or(ProtocolError::RepeatedAxis(alpha))?;
    Ok(g.local_matrix()?.max_abs_diff(&rotation(gamma, sign * theta)))
}

//! Tomography planning: one readout setting per Bloch coefficient, ordered
//! so that the coefficients can be solved one at a time.
//!
//! The search enumerates pulse sequences breadth-first over the vocabulary
//! `{X_l, Y_l, Z_l, Xbar_l, U_lm}` and records every distinct equivalent
//! measurement. Extending a sequence `W` by a gate `g` that acts first gives
//! `(W g)^dagger Z (W g) = g^dagger em g`, so the search works on `em`
//! directly. Coefficients are then assigned weight class by weight class: a
//! setting determines target `P` if its `em` contains `P` with
//! `|c_P| >= min_coefficient` and every other term is already determined.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{ModelConfig, ModelError, TwoQubitParams};
use crate::linalg::{CMatrix, EIGEN_TOL};
use crate::pauli::{expand, Pauli, PauliError, PauliPolynomial, PauliString};
use crate::protocol::{Gate, MeasurementSetting, ProtocolError, PulseSequence};

pub const PLAN_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_DEPTH: usize = 5;
pub const MIN_TARGET_COEFFICIENT: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("need at least one qubit")]
    NoQubits,

    #[error("no sequence of at most {max_depth} gates determines {target}")]
    Uncovered { target: PauliString, max_depth: usize },

    #[error("setting {setting} targets {target}, which is already determined")]
    DuplicateTarget { setting: usize, target: PauliString },

    #[error("coefficient {0} is never targeted")]
    MissingTarget(PauliString),

    #[error("setting {setting} needs {dependency} before it is determined")]
    Undetermined { setting: usize, dependency: PauliString },

    #[error("setting {setting}: target coefficient {coefficient} is below {min}")]
    WeakTarget { setting: usize, coefficient: f64, min: f64 },

    #[error("setting {setting}: {reason}")]
    BadSetting { setting: usize, reason: String },

    #[error("unsupported plan schema version {0}")]
    SchemaVersion(u32),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Pauli(#[from] PauliError),
}

pub type PlanResult<T> = Result<T, PlanError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedSetting {
    pub target: PauliString,
    /// Coefficient of `target` in `em`.
    pub coefficient: f64,
    #[serde(flatten)]
    pub setting: MeasurementSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyPlan {
    pub schema_version: u32,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    pub max_depth: usize,
    /// Solve order: nondecreasing target weight.
    pub settings: Vec<PlannedSetting>,
}

impl TomographyPlan {
    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Target coefficient to `(setting index, coefficient)`.
    pub fn targets(&self) -> BTreeMap<PauliString, (usize, f64)> {
        self.settings
            .iter()
            .enumerate()
            .map(|(i, s)| (s.target.clone(), (i, s.coefficient)))
            .collect()
    }

    /// Longest pulse sequence in the plan.
    pub fn depth(&self) -> usize {
        self.settings.iter().map(|s| s.setting.sequence.len()).max().unwrap_or(0)
    }

    /// Structural check: every non-identity coefficient is targeted exactly
    /// once, targets come in nondecreasing weight, each `em` is normalized,
    /// and each setting only depends on coefficients solved before it.
    pub fn check_triangular(&self) -> PlanResult<()> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(PlanError::SchemaVersion(self.schema_version));
        }
        let mut determined: HashSet<&PauliString> = HashSet::new();
        let mut last_weight = 0;
        for (i, s) in self.settings.iter().enumerate() {
            let bad = |reason: String| PlanError::BadSetting { setting: i, reason };
            let em = &s.setting.em;
            if em.qubits() != self.n || s.target.len() != self.n {
                return Err(bad(format!("acts on the wrong number of qubits (plan has {})", self.n)));
            }
            if s.target.is_identity() {
                return Err(bad("targets the identity".into()));
            }
            let norm = em.norm_sqr();
            if (norm - 1.0).abs() > EIGEN_TOL {
                return Err(bad(format!("em has norm {norm}, expected 1")));
            }
            let c = em.coefficient(&s.target);
            if (c - s.coefficient).abs() > EIGEN_TOL {
                return Err(bad(format!("recorded coefficient {} differs from em ({c})", s.coefficient)));
            }
            if c.abs() < MIN_TARGET_COEFFICIENT {
                return Err(PlanError::WeakTarget { setting: i, coefficient: c, min: MIN_TARGET_COEFFICIENT });
            }
            if s.target.weight() < last_weight {
                return Err(bad(format!("target {} is out of weight order", s.target)));
            }
            last_weight = s.target.weight();
            if let Some((q, _)) = em.terms().find(|(q, _)| *q != &s.target && !determined.contains(q)) {
                return Err(PlanError::Undetermined { setting: i, dependency: q.clone() });
            }
            if !determined.insert(&s.target) {
                return Err(PlanError::DuplicateTarget { setting: i, target: s.target.clone() });
            }
        }
        for p in PauliString::all(self.n).into_iter().filter(|p| !p.is_identity()) {
            if !determined.contains(&p) {
                return Err(PlanError::MissingTarget(p));
            }
        }
        Ok(())
    }

    /// [`Self::check_triangular`] plus recompiling every sequence.
    pub fn validate(&self) -> PlanResult<()> {
        self.check_triangular()?;
        for (i, s) in self.settings.iter().enumerate() {
            s.setting
                .validate()
                .map_err(|e| PlanError::BadSetting { setting: i, reason: e.to_string() })?;
        }
        Ok(())
    }
}

/// Search vocabulary: the four quarter-turn gates on every qubit, then the
/// pair gate on every pair `l < m`.
pub fn vocabulary(n: usize, pair: &TwoQubitParams) -> Vec<Gate> {
    let mut gates = Vec::new();
    for q in 0..n {
        gates.extend([Gate::X(q), Gate::Y(q), Gate::Z(q), Gate::Xbar(q)]);
    }
    for l in 0..n {
        for m in l + 1..n {
            gates.push(Gate::Pair { first: l, second: m, params: *pair });
        }
    }
    gates
}

struct Candidate {
    gates: Vec<usize>,
    pom: usize,
    em: PauliPolynomial,
}

type EmKey = (usize, Vec<(PauliString, i64)>);

fn em_key(pom: usize, em: &PauliPolynomial) -> EmKey {
    (pom, em.terms().map(|(p, c)| (p.clone(), (c * 1e9).round() as i64)).collect())
}

/// Greedy triangular assignment over the candidates found so far.
/// Returns the chosen candidate per target in solve order, or the first
/// target that could not be covered.
fn assign(n: usize, candidates: &[Candidate], min_coefficient: f64) -> Result<Vec<(PauliString, usize)>, PauliString> {
    let mut by_term: HashMap<&PauliString, Vec<usize>> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        for (p, coeff) in c.em.terms() {
            if coeff.abs() >= min_coefficient {
                by_term.entry(p).or_default().push(i);
            }
        }
    }
    let all = PauliString::all(n);
    let mut determined: HashSet<PauliString> = HashSet::new();
    let mut order = Vec::new();
    for w in 1..=n {
        let mut todo: Vec<&PauliString> = all.iter().filter(|p| p.weight() == w).collect();
        loop {
            let before = todo.len();
            todo.retain(|&t| {
                let found = by_term.get(t).and_then(|idx| {
                    idx.iter().copied().find(|&i| {
                        candidates[i].em.terms().all(|(q, _)| q == t || determined.contains(q))
                    })
                });
                match found {
                    Some(i) => {
                        determined.insert(t.clone());
                        order.push((t.clone(), i));
                        false
                    }
                    None => true,
                }
            });
            if todo.is_empty() {
                break;
            }
            if todo.len() == before {
                return Err(todo[0].clone());
            }
        }
    }
    Ok(order)
}

/// Plans with an explicit pair gate. Sequences are deepened one gate at a
/// time and the shallowest depth that covers everything is used.
pub fn plan_with_pair(pair: &TwoQubitParams, n: usize, max_depth: usize) -> PlanResult<TomographyPlan> {
    if n == 0 {
        return Err(PlanError::NoQubits);
    }
    let vocab = vocabulary(n, pair);
    let mats: Vec<CMatrix> = vocab.iter().map(|g| g.matrix(n)).collect::<Result<_, _>>()?;
    let adjoints: Vec<CMatrix> = mats.iter().map(CMatrix::adjoint).collect();

    let mut seen: HashSet<EmKey> = HashSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    // (gate indices, operator) pairs whose em first appeared at the current depth
    let mut frontier: Vec<Vec<(Vec<usize>, CMatrix)>> = (0..n)
        .map(|l| vec![(Vec::new(), PauliString::single(n, l, Pauli::Z).to_matrix())])
        .collect();

    let mut uncovered = None;
    for depth in 0..=max_depth {
        for (pom, level) in frontier.iter_mut().enumerate() {
            let mut fresh = Vec::new();
            for (gates, m) in level.drain(..) {
                let em = expand(&m)?;
                if seen.insert(em_key(pom, &em)) {
                    candidates.push(Candidate { gates: gates.clone(), pom, em });
                    fresh.push((gates, m));
                }
            }
            *level = fresh;
        }
        match assign(n, &candidates, MIN_TARGET_COEFFICIENT) {
            Ok(order) => return Ok(build_plan(n, max_depth, &vocab, &candidates, order)),
            Err(target) => uncovered = Some(target),
        }
        if depth == max_depth {
            break;
        }
        for level in frontier.iter_mut() {
            let mut next = Vec::with_capacity(level.len() * vocab.len());
            for (gates, m) in level.iter() {
                for (k, (g, gd)) in mats.iter().zip(&adjoints).enumerate() {
                    let mut seq = gates.clone();
                    seq.push(k);
                    next.push((seq, &(gd * m) * g));
                }
            }
            *level = next;
        }
    }
    Err(PlanError::Uncovered { target: uncovered.expect("at least one depth was tried"), max_depth })
}

fn build_plan(
    n: usize,
    max_depth: usize,
    vocab: &[Gate],
    candidates: &[Candidate],
    order: Vec<(PauliString, usize)>,
) -> TomographyPlan {
    let settings = order
        .into_iter()
        .map(|(target, i)| {
            let c = &candidates[i];
            let sequence = PulseSequence::new(c.gates.iter().map(|&k| vocab[k]).collect());
            PlannedSetting {
                coefficient: c.em.coefficient(&target),
                target,
                setting: MeasurementSetting { sequence, pom_qubit: c.pom, em: c.em.clone() },
            }
        })
        .collect();
    TomographyPlan { schema_version: PLAN_SCHEMA_VERSION, n, model: None, max_depth, settings }
}

/// Plans for a model preset, using its timed pair gate.
pub fn plan_tomography(model: &ModelConfig, n: usize, max_depth: usize) -> PlanResult<TomographyPlan> {
    let pair = model.resolve()?;
    let mut plan = plan_with_pair(&pair, n, max_depth)?;
    plan.model = Some(model.clone());
    Ok(plan)
}

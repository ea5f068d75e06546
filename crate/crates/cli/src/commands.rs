use std::path::{Path, PathBuf};

use serde::Serialize;
use spintomo::hamiltonian::{ModelConfig, ModelKind, ParamMode};
use spintomo::measurement::{check_records, exact_probability, simulate_plan};
use spintomo::planner::{plan_tomography, TomographyPlan};
use spintomo::protocol::{MeasurementSetting, PulseSequence};
use spintomo::reconstruction::{reconstruct, MleOptions, ReconstructionResult};
use spintomo::states::{random_density, to_bloch, StateKind};
use spintomo::verification::{
    closed_form_sweep, verify_chain, verify_operators, verify_table_one, ChainReport, OperatorCheck, SweepReport,
    TableReport, CHAIN_PROBABILITY,
};

use crate::artifacts::{
    fingerprint, load_plan, load_records, load_truth, plan_json, records_jsonl, to_pretty, write_file, OutDir,
    RecordsHeader, Report, TruthFile, ARTIFACT_SCHEMA_VERSION,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Which identity suites `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// The eighteen two-qubit table entries and the two-step worked example.
    Table1,
    /// Analytic pair propagator against the matrix exponential.
    Eq7,
    /// The three-qubit readout through two pair gates.
    Eq10,
    /// Everything above plus the U1/U2 operator checks.
    All,
}

pub const DEFAULT_SWEEP_SEED: u64 = 2024;
pub const SWEEP_SAMPLES: usize = 1000;
const PROBABILITY_STATES: u64 = 100;
const PROBABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct TableSection {
    #[serde(flatten)]
    pub report: TableReport,
    /// Max deviation of `p = (sqrt2 + r_x0 + r_zy) / (2 sqrt2)` from the
    /// simulated readout over random states.
    pub probability_max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSection {
    #[serde(flatten)]
    pub report: ChainReport,
    pub probability_max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub scope: Scope,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table1: Option<TableSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eq7: Option<SweepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eq10: Option<ChainSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<OperatorCheck>>,
    pub passed: bool,
}

fn xy_setting(text: &str, n: usize) -> CliResult<MeasurementSetting> {
    let params = ModelConfig::new(ModelKind::Xy, ParamMode::Switchable)
        .resolve()
        .map_err(CliError::pipeline)?;
    let seq = PulseSequence::parse(text, Some(&params)).map_err(CliError::pipeline)?;
    MeasurementSetting::new(seq, 0, n).map_err(CliError::pipeline)
}

/// Largest gap between the simulated readout and `1/2 + sum_P k_P r_P`.
fn probability_deviation(setting: &MeasurementSetting, weights: &[(&str, f64)], seed: u64) -> CliResult<f64> {
    let n = setting.qubits();
    let mut worst = 0.0f64;
    for i in 0..PROBABILITY_STATES {
        let kind = if i % 2 == 0 { StateKind::Pure } else { StateKind::Mixed };
        let rho = random_density(n, kind, seed.wrapping_add(i));
        let r = to_bloch(&rho);
        let formula = 0.5
            + weights
                .iter()
                .map(|(label, k)| k * r.get(&label.parse().expect("valid label")))
                .sum::<f64>();
        let p = exact_probability(&rho, setting).map_err(|e| CliError::Verification(e.to_string()))?;
        worst = worst.max((p - formula).abs());
    }
    Ok(worst)
}

/// Bloch weights of the two-step readout `Y1 U12`.
pub const WORKED_PROBABILITY: [(&str, f64); 2] =
    [("X0", 0.5 * std::f64::consts::FRAC_1_SQRT_2), ("ZY", 0.5 * std::f64::consts::FRAC_1_SQRT_2)];

pub fn cmd_verify(scope: Scope, seed: Option<u64>) -> CliResult<VerifyReport> {
    let want = |s: Scope| scope == s || scope == Scope::All;
    let seed = seed.unwrap_or(DEFAULT_SWEEP_SEED);
    let mut report = VerifyReport {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        scope,
        table1: None,
        eq7: None,
        eq10: None,
        operators: None,
        passed: true,
    };
    if want(Scope::Table1) {
        let table = verify_table_one().map_err(|e| CliError::Verification(e.to_string()))?;
        let dev = probability_deviation(&xy_setting("Y1 U12", 2)?, &WORKED_PROBABILITY, seed)?;
        report.passed &= table.consistent && dev <= PROBABILITY_TOL;
        report.table1 = Some(TableSection { report: table, probability_max_deviation: dev });
    }
    if want(Scope::Eq7) {
        let sweep = closed_form_sweep(SWEEP_SAMPLES, seed).map_err(|e| CliError::Verification(e.to_string()))?;
        report.passed &= sweep.passed;
        report.eq7 = Some(sweep);
    }
    if want(Scope::Eq10) {
        let chain = verify_chain().map_err(|e| CliError::Verification(e.to_string()))?;
        let dev = probability_deviation(&xy_setting("Y1 U12 U23", 3)?, &CHAIN_PROBABILITY, seed)?;
        report.passed &= chain.consistent && chain.matches_probability_formula && dev <= PROBABILITY_TOL;
        report.eq10 = Some(ChainSection { report: chain, probability_max_deviation: dev });
    }
    if scope == Scope::All {
        let ops = verify_operators().map_err(|e| CliError::Verification(e.to_string()))?;
        report.passed &= ops.iter().all(|c| c.passed);
        report.operators = Some(ops);
    }
    Ok(report)
}

/// Human-readable lines for a verification report.
pub fn verify_summary(r: &VerifyReport) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(t) = &r.table1 {
        for row in &t.report.rows {
            lines.push(format!(
                "table1 {:<10} {:<14} {:?} computed {}",
                row.model.name(),
                row.operations,
                row.status,
                row.computed
            ));
        }
        let w = &t.report.worked_example;
        lines.push(format!("table1 worked example {} {:?} computed {}", w.operations, w.status, w.computed));
        lines.push(format!(
            "table1 matches {} sign flips {} discrepancies {} consistent {} probability deviation {:.3e}",
            t.report.matches, t.report.sign_flips, t.report.discrepancies, t.report.consistent, t.probability_max_deviation
        ));
    }
    if let Some(s) = &r.eq7 {
        lines.push(format!(
            "eq7 samples {} max deviation {:.3e} (tolerance {:.0e}) passed {}",
            s.samples, s.max_deviation, s.tolerance, s.passed
        ));
    }
    if let Some(c) = &r.eq10 {
        for t in &c.report.terms {
            lines.push(format!("eq10 {} printed {:+.6} computed {:+.6}", t.pauli, t.printed, t.computed));
        }
        lines.push(format!(
            "eq10 ratio {:?} matches probability {} probability deviation {:.3e}",
            c.report.common_ratio, c.report.matches_probability_formula, c.probability_max_deviation
        ));
    }
    for op in r.operators.iter().flatten() {
        lines.push(format!(
            "operator {} overlap {:.12} phase {:+.12} passed {}",
            op.name, op.overlap, op.phase, op.passed
        ));
    }
    lines.push(format!("verify {}", if r.passed { "PASSED" } else { "FAILED" }));
    lines
}

pub fn run_verify(scope: Scope, seed: Option<u64>, out: Option<&OutDir>) -> CliResult<VerifyReport> {
    let report = cmd_verify(scope, seed)?;
    if let Some(out) = out {
        write_file(&out.verify(), &to_pretty(&report))?;
    }
    Ok(report)
}

pub fn cmd_plan(cfg: &RunConfig, out: &OutDir) -> CliResult<TomographyPlan> {
    let plan = plan_tomography(&cfg.model, cfg.n, cfg.max_depth).map_err(CliError::pipeline)?;
    write_file(&out.plan(), &plan_json(&plan))?;
    Ok(plan)
}

pub struct Simulation {
    pub records: usize,
    pub fingerprint: String,
}

pub fn cmd_simulate(cfg: &RunConfig, out: &OutDir, plan_path: Option<&Path>) -> CliResult<Simulation> {
    let plan_path = plan_path.map(Path::to_path_buf).unwrap_or_else(|| out.plan());
    let (plan, fp) = load_plan(&plan_path)?;
    if plan.n != cfg.n {
        return Err(CliError::Config(format!("plan is for {} qubit(s), config for {}", plan.n, cfg.n)));
    }
    let truth = cfg.truth()?;
    let records = simulate_plan(&truth, &plan, cfg.shots, cfg.seed).map_err(CliError::pipeline)?;
    let header = RecordsHeader {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        plan_fingerprint: fp.clone(),
        seed: cfg.seed,
        shots: cfg.shots,
    };
    write_file(&out.truth(), &to_pretty(&TruthFile { schema_version: ARTIFACT_SCHEMA_VERSION, state: truth }))?;
    write_file(&out.records(), &records_jsonl(&header, &records))?;
    Ok(Simulation { records: records.len(), fingerprint: fp })
}

pub fn cmd_reconstruct(
    cfg: &RunConfig,
    out: &OutDir,
    plan_path: Option<&Path>,
    records_path: Option<&Path>,
) -> CliResult<ReconstructionResult> {
    let plan_path = plan_path.map(Path::to_path_buf).unwrap_or_else(|| out.plan());
    let records_path = records_path.map(Path::to_path_buf).unwrap_or_else(|| out.records());
    let (plan, fp) = load_plan(&plan_path)?;
    let (header, records) = load_records(&records_path)?;
    if header.plan_fingerprint != fp {
        return Err(CliError::artifact(
            &records_path,
            format!("recorded against plan {} but {} has fingerprint {fp}", header.plan_fingerprint, plan_path.display()),
        ));
    }
    check_records(&plan, &records).map_err(|e| CliError::artifact(&records_path, e))?;
    let truth_path: PathBuf = records_path.parent().unwrap_or(Path::new(".")).join(crate::artifacts::TRUTH_FILE);
    let truth = if truth_path.exists() { Some(load_truth(&truth_path)?) } else { None };
    let mle = cfg.mle.then(MleOptions::default);
    let result = reconstruct(&plan, &records, mle.as_ref(), truth.as_ref()).map_err(CliError::pipeline)?;
    let report = Report {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        plan_fingerprint: fp,
        model: cfg.model.label(),
        n: plan.n,
        seed: header.seed,
        shots: header.shots,
        settings: plan.len(),
        result: &result,
    };
    write_file(&out.report(), &to_pretty(&report))?;
    Ok(result)
}

pub fn cmd_pipeline(cfg: &RunConfig, out: &OutDir) -> CliResult<ReconstructionResult> {
    cmd_plan(cfg, out)?;
    cmd_simulate(cfg, out, None)?;
    let result = cmd_reconstruct(cfg, out, None, None)?;
    if let Some(m) = &result.mle {
        if !m.monotone {
            return Err(CliError::Verification("maximum-likelihood trace decreased".into()));
        }
    }
    Ok(result)
}

/// Reproducibility fingerprint of everything a pipeline run wrote.
pub fn run_fingerprint(out: &OutDir) -> CliResult<String> {
    let mut all = String::new();
    for p in [out.plan(), out.records(), out.report()] {
        all.push_str(&crate::artifacts::read_file(&p)?);
    }
    Ok(fingerprint(&all))
}

//! On-disk artifacts: `plan.json`, `records.jsonl`, `truth.json`,
//! `report.json` and `verify.json`. Every artifact carries a
//! `schema_version`; records carry it in a header line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spintomo::measurement::ShotRecord;
use spintomo::planner::{TomographyPlan, PLAN_SCHEMA_VERSION};
use spintomo::reconstruction::ReconstructionResult;
use spintomo::states::DensityMatrix;

use crate::error::{CliError, CliResult};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

pub const PLAN_FILE: &str = "plan.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRUTH_FILE: &str = "truth.json";
pub const REPORT_FILE: &str = "report.json";
pub const VERIFY_FILE: &str = "verify.json";

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

/// Hex SHA-256 of the serialized plan.
pub fn fingerprint(plan_json: &str) -> String {
    let digest = Sha256::digest(plan_json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn plan_json(plan: &TomographyPlan) -> String {
    to_pretty(plan)
}

/// Loads and structurally validates a plan; returns it with its fingerprint.
pub fn load_plan(path: &Path) -> CliResult<(TomographyPlan, String)> {
    let text = read_file(path)?;
    let plan: TomographyPlan = serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))?;
    if plan.schema_version != PLAN_SCHEMA_VERSION {
        return Err(CliError::artifact(path, format!("unsupported schema_version {}", plan.schema_version)));
    }
    plan.validate().map_err(|e| CliError::artifact(path, e))?;
    Ok((plan, fingerprint(&text)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsHeader {
    pub schema_version: u32,
    pub plan_fingerprint: String,
    pub seed: u64,
    pub shots: u64,
}

pub fn records_jsonl(header: &RecordsHeader, records: &[ShotRecord]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn load_records(path: &Path) -> CliResult<(RecordsHeader, Vec<ShotRecord>)> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| CliError::artifact(path, "empty records file"))?;
    let header: RecordsHeader =
        serde_json::from_str(first).map_err(|e| CliError::artifact(path, format!("header: {e}")))?;
    if header.schema_version != ARTIFACT_SCHEMA_VERSION {
        return Err(CliError::artifact(path, format!("unsupported schema_version {}", header.schema_version)));
    }
    let records = lines
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::artifact(path, format!("line {}: {e}", i + 1))))
        .collect::<CliResult<Vec<ShotRecord>>>()?;
    Ok((header, records))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema_version: u32,
    pub state: DensityMatrix,
}

pub fn load_truth(path: &Path) -> CliResult<DensityMatrix> {
    let text = read_file(path)?;
    let t: TruthFile = serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))?;
    if t.schema_version != ARTIFACT_SCHEMA_VERSION {
        return Err(CliError::artifact(path, format!("unsupported schema_version {}", t.schema_version)));
    }
    Ok(t.state)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub plan_fingerprint: String,
    pub model: String,
    pub n: usize,
    pub seed: u64,
    pub shots: u64,
    pub settings: usize,
    #[serde(flatten)]
    pub result: &'a ReconstructionResult,
}

/// Output locations inside one run directory.
#[derive(Debug, Clone)]
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn plan(&self) -> PathBuf {
        self.0.join(PLAN_FILE)
    }
    pub fn records(&self) -> PathBuf {
        self.0.join(RECORDS_FILE)
    }
    pub fn truth(&self) -> PathBuf {
        self.0.join(TRUTH_FILE)
    }
    pub fn report(&self) -> PathBuf {
        self.0.join(REPORT_FILE)
    }
    pub fn verify(&self) -> PathBuf {
        self.0.join(VERIFY_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let header = RecordsHeader { schema_version: 1, plan_fingerprint: "ab".into(), seed: 3, shots: 10 };
        let records = vec![
            ShotRecord { setting: 0, shots: 10, ones: 4, p: None },
            ShotRecord { setting: 1, shots: 10, ones: 0, p: None },
        ];
        write_file(&path, &records_jsonl(&header, &records)).unwrap();
        let (h, r) = load_records(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(r, records);
    }

    #[test]
    fn malformed_records_are_artifact_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_file(&path, "{\"schema_version\":1,\"plan_fingerprint\":\"x\",\"seed\":0,\"shots\":1}\n{\"setting\":0}\n")
            .unwrap();
        assert_eq!(load_records(&path).unwrap_err().exit_code(), 2);
        write_file(&path, "").unwrap();
        assert_eq!(load_records(&path).unwrap_err().exit_code(), 2);
        assert_eq!(load_records(&dir.path().join("missing")).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn fingerprint_is_hex_sha256() {
        let f = fingerprint("");
        assert_eq!(f, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}

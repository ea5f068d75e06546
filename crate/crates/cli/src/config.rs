use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spintomo::hamiltonian::ModelConfig;
use spintomo::planner::DEFAULT_MAX_DEPTH;
use spintomo::states::{random_density, DensityMatrix, StateKind};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const MAX_QUBITS: usize = 6;

/// Where the simulated ground-truth state comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSource {
    /// Haar-random pure state drawn from the master seed.
    RandomPure,
    /// Hilbert-Schmidt random mixed state drawn from the master seed.
    RandomMixed,
    /// A `{"n", "re", "im"}` JSON file; relative paths resolve against the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub n: usize,
    pub state: StateSource,
    /// Shots per setting; 0 means exact probabilities.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mle")]
    pub mle: bool,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_mle() -> bool {
    true
}

fn default_depth() -> usize {
    DEFAULT_MAX_DEPTH
}

impl RunConfig {
    pub fn new(model: ModelConfig, n: usize, state: StateSource) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            model,
            n,
            state,
            shots: 0,
            seed: 0,
            mle: true,
            max_depth: DEFAULT_MAX_DEPTH,
            out_dir: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative state-file path is resolved against
    /// the config's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let StateSource::File { path: state } = &mut cfg.state {
            if state.is_relative() {
                if let Some(dir) = path.parent() {
                    *state = dir.join(&*state);
                }
            }
        }
        Ok(cfg)
    }

    pub fn check(&self) -> CliResult<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(1..=MAX_QUBITS).contains(&self.n) {
            return Err(CliError::Config(format!("n = {} is outside 1..={MAX_QUBITS}", self.n)));
        }
        self.model.resolve().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// The ground-truth state; random sources draw from the master seed.
    pub fn truth(&self) -> CliResult<DensityMatrix> {
        let rho = match &self.state {
            StateSource::RandomPure => random_density(self.n, StateKind::Pure, self.seed),
            StateSource::RandomMixed => random_density(self.n, StateKind::Mixed, self.seed),
            StateSource::File { path } => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))?
            }
        };
        if rho.qubits() != self.n {
            return Err(CliError::Config(format!(
                "state has {} qubit(s) but the config asks for {}",
                rho.qubits(),
                self.n
            )));
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spintomo::hamiltonian::{ModelKind, ParamMode};

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::new(
            ModelConfig::new(ModelKind::Xxz, ParamMode::FixedEz),
            3,
            StateSource::File { path: "state.json".into() },
        );
        cfg.shots = 1000;
        cfg.seed = 9;
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse(
            r#"{"schema_version":1,"model":{"name":"heisenberg","mode":"switchable"},"n":2,"state":{"source":"random_pure"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.shots, 0);
        assert!(cfg.mle);
        assert_eq!(cfg.max_depth, DEFAULT_MAX_DEPTH);
        assert_eq!(cfg.model.jx, 1.0);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let base = r#"{"schema_version":1,"model":{"name":"xy","mode":"switchable"},"n":2,"state":{"source":"random_pure"}}"#;
        for bad in [
            base.replace("\"n\":2", "\"n\":0"),
            base.replace("\"n\":2", "\"n\":7"),
            base.replace("\"schema_version\":1", "\"schema_version\":2"),
            base.replace("\"xy\"", "\"ising\""),
            base.replace("random_pure", "random_thermal"),
            base.replace("\"n\":2", "\"n\":2,\"extra\":1"),
            base.replace("switchable\"}", "fixed_ez\",\"eps_z\":1.0}"),
        ] {
            assert!(matches!(RunConfig::parse(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn truth_is_seeded() {
        let mut cfg = RunConfig::new(ModelConfig::new(ModelKind::Xy, ParamMode::Switchable), 2, StateSource::RandomMixed);
        cfg.seed = 4;
        assert_eq!(cfg.truth().unwrap(), cfg.truth().unwrap());
        let mut other = cfg.clone();
        other.seed = 5;
        assert_ne!(cfg.truth().unwrap(), other.truth().unwrap());
    }
}

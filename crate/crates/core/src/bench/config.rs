use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::models::ModelSpec;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::cx;
use crate::schemes::SchemeId;

/// Row-major complex matrix with entries written as `[re, im]`.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

pub(crate) fn matrix_from_spec(spec: &MatrixSpec) -> Result<CMatrix<f64>> {
    CMatrix::from_rows(spec.iter().map(|row| row.iter().map(|&[re, im]| cx(re, im)).collect()).collect())
}

fn default_t() -> f64 {
    1.0
}

fn default_samples() -> usize {
    20
}

fn default_traj() -> usize {
    10_000
}

/// JSON experiment description shared by every CLI subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub schemes: Vec<SchemeId>,
    #[serde(rename = "T", default = "default_t")]
    pub t_final: f64,
    #[serde(rename = "N_values", default)]
    pub n_values: Vec<usize>,
    /// Step size for fixed-step runs.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Number of steps for fixed-step runs.
    #[serde(rename = "N", default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Explicit initial density matrix; otherwise drawn from the seed.
    #[serde(default)]
    pub initial_state: Option<MatrixSpec>,
    /// Initial wave function for unraveling, entries `[re, im]`.
    #[serde(default)]
    pub psi0: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_traj")]
    pub n_traj: usize,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, schemes: Vec<SchemeId>) -> Self {
        Self {
            model,
            schemes,
            t_final: 1.0,
            n_values: Vec::new(),
            dt: None,
            n_steps: None,
            n_samples: default_samples(),
            seed: 0,
            output: None,
            initial_state: None,
            psi0: None,
            n_traj: default_traj(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::BadParameter(format!("T must be positive, got {}", self.t_final)));
        }
        if self.n_values.contains(&0) || self.n_steps == Some(0) {
            return Err(Error::BadParameter("step counts must be at least 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidStepSize(dt));
            }
        }
        if self.schemes.is_empty() {
            return Err(Error::BadParameter("at least one scheme is required".into()));
        }
        Ok(())
    }

    /// `(Δt, N)` for fixed-step runs: explicit `dt` and `N`, or derived from `T`.
    pub fn fixed_step(&self) -> Result<(f64, usize)> {
        match (self.dt, self.n_steps) {
            (Some(dt), Some(n)) => Ok((dt, n)),
            (Some(dt), None) => Ok((dt, (self.t_final / dt).round().max(1.0) as usize)),
            (None, Some(n)) => Ok((self.t_final / n as f64, n)),
            (None, None) => Err(Error::BadParameter("fixed-step runs need `dt` or `N`".into())),
        }
    }

    pub fn initial_matrix(&self) -> Result<Option<CMatrix<f64>>> {
        self.initial_state.as_ref().map(matrix_from_spec).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let json = r#"{"model": {"kind": "two_level_decay", "lambda0": 1.0, "nu": 0.5},
            "schemes": ["sp1", "sp2tr", "spm:3"], "T": 1.0, "N_values": [16, 32, 64, 128],
            "n_samples": 20, "seed": 42, "output": "out.csv"}"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(cfg.schemes, vec![SchemeId::Sp1, SchemeId::Sp2Tr, SchemeId::Spm(3)]);
        assert_eq!(cfg.n_values, vec![16, 32, 64, 128]);
        assert_eq!(cfg.output.as_deref(), Some(Path::new("out.csv")));
    }

    #[test]
    fn custom_model_entries() {
        let json = r#"{"model": {"kind": "custom", "H": [[[0,0],[0,-1]],[[0,1],[0,0]]], "L": []}, "schemes": ["sp1"]}"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        let model = super::super::build_model(&cfg.model).unwrap();
        assert_eq!(model.hamiltonian()[(0, 1)], cx(0.0, -1.0));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json(r#"{"model": {"kind": "dephasing", "a": 1}, "schemes": ["sp7"]}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"model": {"kind": "dephasing", "a": 1}, "schemes": ["sp1"], "T": -1}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"kind": "dephasing", "a": 1}, "schemes": []}"#).is_err());
    }
}

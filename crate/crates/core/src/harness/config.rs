use std::cmp::Ordering::Less;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::systems::{PointSeed, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Bes,
    Classify,
    Fibre,
    Modulus,
    Probe,
    Axioms,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Bes => "bes",
            Task::Classify => "classify",
            Task::Fibre => "fibre",
            Task::Modulus => "modulus",
            Task::Probe => "probe",
            Task::Axioms => "axioms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyMode {
    Point,
    Search,
    Dichotomy,
}

/// One experiment. Which fields are required depends on `task`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Exponents `n` of `delta = 2^-n`, strictly increasing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_exps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ClassifyMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exhaustive: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_distance_exp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ms: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivariance_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivariance_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odometer_exhaustive_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointSeed>,
}

fn missing(task: Task, field: &str) -> Error {
    Error::Config(format!("task `{}` needs field `{field}`", task.name()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canon).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn system(&self) -> Result<&SystemConfig> {
        self.system.as_ref().ok_or_else(|| missing(self.task, "system"))
    }

    pub fn need<T: Copy>(&self, v: Option<T>, field: &str) -> Result<T> {
        v.ok_or_else(|| missing(self.task, field))
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_exps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`delta_exps` must be strictly increasing".into()));
        }
        let increasing = self.eps_grid.windows(2).all(|w| w[0].partial_cmp(&w[1]) == Some(Less));
        if !increasing || self.eps_grid.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(Error::Config("`eps_grid` must be positive and strictly increasing".into()));
        }
        if self.steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`steps` must be strictly increasing".into()));
        }
        if let Some(h) = self.horizon {
            if h < 2 {
                return Err(Error::Config("`horizon` must be at least 2".into()));
            }
        }
        if let Some(m) = self.m {
            if m < 2 {
                return Err(Error::Config("`m` must be at least 2".into()));
            }
        }
        let t = self.task;
        match t {
            Task::Bes => {
                self.system()?;
                self.need(self.horizon, "horizon")?;
                if self.points.len() < 2 {
                    return Err(Error::Config("task `bes` needs at least two `points`".into()));
                }
                if self.m.is_some_and(|m| m != self.points.len()) {
                    return Err(Error::Config("`m` does not match the number of `points`".into()));
                }
            }
            Task::Classify => {
                self.system()?;
                self.need(self.m, "m")?;
                self.need(self.horizon, "horizon")?;
                self.need(self.samples, "samples")?;
                if self.delta_exps.is_empty() {
                    return Err(missing(t, "delta_exps"));
                }
                match self.need(self.mode, "mode")? {
                    ClassifyMode::Point => {
                        if self.points.len() != 1 || self.eps_grid.len() != 1 {
                            return Err(Error::Config(
                                "point mode needs exactly one entry in `points` and in `eps_grid`".into(),
                            ));
                        }
                    }
                    ClassifyMode::Search | ClassifyMode::Dichotomy => {
                        self.need(self.base_points, "base_points")?;
                        if self.eps_grid.is_empty() {
                            return Err(missing(t, "eps_grid"));
                        }
                    }
                }
            }
            Task::Fibre => {
                self.system()?;
                self.need(self.word_radius, "word_radius")?;
                if self.address.is_none() {
                    self.need(self.depth, "depth")?;
                    if !self.exhaustive {
                        self.need(self.samples, "samples")?;
                    }
                }
            }
            Task::Modulus => {
                self.system()?;
                self.need(self.m, "m")?;
                self.need(self.horizon, "horizon")?;
                self.need(self.samples, "samples")?;
                self.need(self.depth, "depth")?;
                if self.delta_exps.is_empty() {
                    return Err(missing(t, "delta_exps"));
                }
            }
            Task::Probe => {
                self.system()?;
                let m = self.need(self.m, "m")?;
                self.need(self.horizon, "horizon")?;
                if self.steps.is_empty() {
                    return Err(missing(t, "steps"));
                }
                if self.points.len() != m - 1 {
                    return Err(Error::Config(format!(
                        "probe needs m - 1 = {} `points` (x_2, ..., x_m)",
                        m - 1
                    )));
                }
            }
            Task::Axioms => {
                let tuples = self.need(self.tuples, "tuples")?;
                self.need(self.horizon, "horizon")?;
                if (tuples > 0 && self.ms.is_empty()) || self.ms.iter().any(|&m| m < 2) {
                    return Err(Error::Config("`ms` must list values m >= 2".into()));
                }
            }
        }
        Ok(())
    }
}

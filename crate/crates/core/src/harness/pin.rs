//! Regression constants: runs the oracle experiments listed in a pin file
//! and records their values in a versioned TOML file.
//!
//! ```toml
//! # pin.toml; paths are relative to this file
//! [oracles]
//! tm_dbar2_shift = "oracles/tm_dbar2_shift.toml"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{execute, Payload};
use crate::error::{Error, Result};

pub const CONSTANTS_VERSION: u32 = 1;

/// The six oracles every pin file must list.
pub const ORACLES: [&str; 6] = [
    "tm_dbar2_shift",
    "tm_eps2_star",
    "tm_exceptional_fibre",
    "pd_multiplicity",
    "tm_modulus_m3",
    "tm_probe_gap",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinFile {
    pub oracles: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pinned {
    /// Config path as written in the pin file.
    pub config: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub version: u32,
    pub oracle: BTreeMap<String, Pinned>,
}

impl Constants {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let c: Constants =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if c.version != CONSTANTS_VERSION {
            return Err(Error::Config(format!("constants version {} (expected {CONSTANTS_VERSION})", c.version)));
        }
        Ok(c)
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        self.oracle
            .get(name)
            .and_then(|p| p.value)
            .ok_or_else(|| Error::Config(format!("constant `{name}` is not pinned")))
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.oracle
            .get(name)
            .map(|p| p.values.as_slice())
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::Config(format!("table `{name}` is not pinned")))
    }

    pub fn render(&self) -> String {
        let body = toml::to_string(self).expect("constants serialize");
        format!("# Generated by `mequi pin`. Do not edit by hand.\n{body}")
    }
}

/// Extracts the pinned quantity of one oracle from its payload.
pub fn extract(name: &str, payload: &Payload) -> Result<(Option<f64>, Vec<f64>)> {
    let wrong = || Error::Config(format!("oracle `{name}` produced an unexpected payload"));
    Ok(match (name, payload) {
        ("tm_dbar2_shift" | "tm_eps2_star", Payload::Bes { estimate, .. }) => (Some(estimate.value), vec![]),
        ("tm_exceptional_fibre", Payload::FibreAddress { report, .. }) => (Some(report.cardinality as f64), vec![]),
        ("pd_multiplicity", Payload::Fibre { multiplicity, .. }) => (Some(multiplicity.mode as f64), vec![]),
        ("tm_modulus_m3", Payload::Modulus { table, .. }) => {
            (None, table.rows.iter().map(|r| r.sup_estimate).collect())
        }
        ("tm_probe_gap", Payload::Probe { gap, .. }) => {
            let g = gap.ok_or_else(|| Error::Config("probe found no rows within the gap distance".into()))?;
            if g <= 0.0 {
                return Err(Error::Config(format!("probe gap {g} is not positive")));
            }
            (Some(g), vec![])
        }
        _ => return Err(wrong()),
    })
}

/// Runs every oracle named in `pin_path` and returns the constants. Any failure aborts.
pub fn pin_constants(pin_path: &Path) -> Result<Constants> {
    let text = std::fs::read_to_string(pin_path).map_err(|e| Error::Io(format!("{}: {e}", pin_path.display())))?;
    let pin: PinFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", pin_path.display())))?;
    for name in ORACLES {
        if !pin.oracles.contains_key(name) {
            return Err(Error::Config(format!("pin file does not list oracle `{name}`")));
        }
    }
    if let Some(extra) = pin.oracles.keys().find(|k| !ORACLES.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown oracle `{extra}`")));
    }
    let dir = pin_path.parent().unwrap_or(Path::new("."));
    let mut oracle = BTreeMap::new();
    for (name, rel) in &pin.oracles {
        let path: PathBuf = dir.join(rel);
        let cfg = ExperimentConfig::load(&path)?;
        let payload = execute(&cfg).map_err(|e| Error::Config(format!("oracle `{name}` failed: {e}")))?;
        let (value, values) = extract(name, &payload)?;
        oracle.insert(name.clone(), Pinned { config: rel.clone(), config_hash: cfg.hash(), value, values });
    }
    Ok(Constants { version: CONSTANTS_VERSION, oracle })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_round_trip() {
        let mut oracle = BTreeMap::new();
        oracle.insert(
            "tm_modulus_m3".to_string(),
            Pinned { config: "a.toml".into(), config_hash: "00".into(), value: None, values: vec![0.1, 1.0 / 3.0] },
        );
        oracle.insert(
            "tm_dbar2_shift".to_string(),
            Pinned { config: "b.toml".into(), config_hash: "11".into(), value: Some(0.8333339691162109), values: vec![] },
        );
        let c = Constants { version: 1, oracle };
        let text = c.render();
        let back: Constants = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.render(), text);
        assert!(back.value("tm_modulus_m3").is_err());
    }
}

//! Experiment configuration files (TOML, strict keys, versioned schema).

use std::path::{Path, PathBuf};

use efc_core::simulator::Mode;
use efc_core::{Characteristics, Partition};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub characteristics: Characteristics,
    #[serde(default)]
    pub rates: RatesParams,
    #[serde(default)]
    pub stationary: StationaryParams,
    #[serde(default)]
    pub transient: TransientParams,
    #[serde(default)]
    pub simulate: SimulateParams,
    #[serde(default)]
    pub dust_chain: DustChainParams,
    #[serde(default)]
    pub dust_sde: DustSdeParams,
    #[serde(default)]
    pub logistic: LogisticParams,
    #[serde(default)]
    pub cdi: CdiParams,
    #[serde(default)]
    pub compat_check: CompatParams,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::Config(format!("{}: not UTF-8: {e}", path.display())))?;
        let config = Self::parse(text)?;
        Ok((config, bytes))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }
}

/// `"singletons"`, `"one_block"`, or an explicit partition such as
/// `"{1,3}{2}"`.
pub fn parse_init(spec: &str, n: usize) -> Result<Partition, CliError> {
    let p = match spec {
        "singletons" => Partition::singletons(n),
        "one_block" => Partition::one_block(n),
        other => other
            .parse::<Partition>()
            .map_err(|e| CliError::Config(format!("init {other:?}: {e}")))?,
    };
    if p.n() != n {
        return Err(CliError::Config(format!("init {spec:?} is not a partition of [{n}]")));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesParams {
    pub n: usize,
}

impl Default for RatesParams {
    fn default() -> Self {
        Self { n: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryParams {
    pub n: usize,
    /// Defaults to `min(4, n - 1)`.
    pub k_max: Option<usize>,
    /// Defaults to `min(5, n - 1)`.
    pub b_max: Option<usize>,
}

impl Default for StationaryParams {
    fn default() -> Self {
        Self {
            n: 4,
            k_max: None,
            b_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientParams {
    pub n: usize,
    pub init: String,
    pub times: Vec<f64>,
    pub tolerance: f64,
    /// Total-variation level for the time-to-stationarity search.
    pub threshold: f64,
    pub t_max: f64,
}

impl Default for TransientParams {
    fn default() -> Self {
        Self {
            n: 4,
            init: "singletons".into(),
            times: vec![0.5, 1.0, 2.0, 4.0],
            tolerance: 1e-12,
            threshold: 1e-6,
            t_max: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub n: usize,
    pub horizon: f64,
    pub paths: usize,
    pub mode: Mode,
    pub init: String,
    pub track_dust: bool,
    pub max_jumps: Option<usize>,
    pub grid_points: usize,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            n: 8,
            horizon: 10.0,
            paths: 100,
            mode: Mode::Ppp,
            init: "singletons".into(),
            track_dust: false,
            max_jumps: None,
            grid_points: 51,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DustChainParams {
    pub n: usize,
    pub k0: usize,
    pub horizon: f64,
    pub paths: usize,
    pub grid_points: usize,
}

impl Default for DustChainParams {
    fn default() -> Self {
        Self {
            n: 64,
            k0: 0,
            horizon: 5.0,
            paths: 1000,
            grid_points: 51,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DustSdeParams {
    pub d0: f64,
    pub horizon: f64,
    pub paths: usize,
    pub grid_points: usize,
}

impl Default for DustSdeParams {
    fn default() -> Self {
        Self {
            d0: 0.0,
            horizon: 5.0,
            paths: 1000,
            grid_points: 51,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Count(u64),
    /// Only `"large"` is accepted.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    pub start: StartSpec,
    pub n_big: u64,
    pub horizon: f64,
    pub paths: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            start: StartSpec::Named("large".into()),
            n_big: efc_core::simulator::DEFAULT_N_BIG,
            horizon: 1e6,
            paths: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdiParams {
    pub horizon: usize,
    pub exact_threshold: usize,
    pub mc_samples: usize,
}

impl Default for CdiParams {
    fn default() -> Self {
        Self {
            horizon: 100,
            exact_threshold: 8,
            mc_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompatParams {
    pub n_max: usize,
    /// Also check the identities in exact rational arithmetic.
    pub exact: bool,
    pub tolerance: f64,
}

impl Default for CompatParams {
    fn default() -> Self {
        Self {
            n_max: 5,
            exact: true,
            tolerance: 1e-12,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\n[characteristics]\nc_k = 1.0\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.characteristics.c_k, 1.0);
        assert_eq!(c.stationary, StationaryParams::default());
        assert_eq!(c.logistic.start, StartSpec::Named("large".into()));
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let typo = format!("{MINIMAL}[stationary]\nnn = 3\n");
        assert!(matches!(ExperimentConfig::parse(&typo), Err(CliError::Config(_))));
        let top = format!("sed = 3\n{MINIMAL}");
        assert!(ExperimentConfig::parse(&top).is_err());
        let old = MINIMAL.replace("= 1\n", "= 0\n");
        assert!(ExperimentConfig::parse(&old).unwrap_err().to_string().contains("schema_version"));
    }

    #[test]
    fn atoms_parse_from_tables() {
        let text = format!(
            "{MINIMAL}[[characteristics.nu_disl]]\nweight = 1.0\nmasses = [0.5, 0.5]\n\n[logistic]\nstart = 12\n"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.characteristics.nu_disl.atoms().len(), 1);
        assert_eq!(c.logistic.start, StartSpec::Count(12));
    }

    #[test]
    fn init_specs() {
        assert_eq!(parse_init("one_block", 3).unwrap(), Partition::one_block(3));
        assert_eq!(parse_init("{1,3}{2}", 3).unwrap().block_count(), 2);
        assert!(parse_init("{1,2}", 3).is_err());
    }
}

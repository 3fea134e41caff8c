//! TOML run configuration: schema, loading, `key=value` overrides and the
//! stable hash echoed in every manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};
use crate::experiments::{JammingSpec, Scenario, SweepAxis, UsersSpec};
use crate::geometry::GeometryParams;
use crate::impairments::ImpairmentConfig;
use crate::training::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub payload_slots: usize,
    #[serde(default = "default_constellation_slots")]
    pub constellation_slots: usize,
}

fn default_constellation_slots() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Payload distance-scaling dump written by `multiuser`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    pub scale_range: (f64, f64),
    pub slots: usize,
}

impl Default for RobustnessSpec {
    fn default() -> Self {
        Self {
            scale_range: (0.5, 1.5),
            slots: 256,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// 0 silent; otherwise summary lines on stderr and the written paths on stdout.
    #[serde(default = "default_verbosity")]
    pub verbosity: u8,
}

fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}
fn default_verbosity() -> u8 {
    1
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
            verbosity: default_verbosity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub geometry: GeometryParams,
    pub users: UsersSpec,
    pub training: TrainConfig,
    #[serde(default)]
    pub training_snr_db: Option<f64>,
    #[serde(default)]
    pub jamming: JammingSpec,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub robustness: RobustnessSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            schema_version: SCHEMA_VERSION,
            seed: s.seed,
            geometry: s.geometry,
            users: s.users,
            training: s.training,
            training_snr_db: s.training_snr_db,
            jamming: s.jamming,
            impairments: s.impairments,
            evaluation: EvaluationSpec {
                snr_db: s.snr_db,
                realizations: s.realizations,
                payload_slots: s.payload_slots,
                constellation_slots: s.constellation_slots,
            },
            sweep: None,
            robustness: RobustnessSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            geometry: self.geometry.clone(),
            users: self.users.clone(),
            training: self.training.clone(),
            training_snr_db: self.training_snr_db,
            jamming: self.jamming.clone(),
            impairments: self.impairments.clone(),
            snr_db: self.evaluation.snr_db.clone(),
            realizations: self.evaluation.realizations,
            payload_slots: self.evaluation.payload_slots,
            constellation_slots: self.evaluation.constellation_slots,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SimError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.output.formats.is_empty() {
            return Err(SimError::Config("output.formats must list at least one format".into()));
        }
        self.scenario().validate().map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Parses, applies `overrides` (`dotted.key=value`) and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            let msg = match missing_field(&inner) {
                Some(field) if path == "." => format!("missing required key `{field}`"),
                Some(field) => format!("missing required key `{path}.{field}`"),
                None => format!("invalid value at `{path}`: {inner}"),
            };
            SimError::Config(msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 (hex) of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn missing_field(msg: &str) -> Option<&str> {
    let rest = msg.split("missing field `").nth(1)?;
    rest.split('`').next()
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text, overrides)
}

/// Sets `dotted.key` in `table`. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SimError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(SimError::Config(format!("override key `{key}` is malformed")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| SimError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

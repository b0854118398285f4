//! The run configuration: one TOML file drives every command.

use std::path::{Path, PathBuf};

use geonas_core::geo::ToolGeometry;
use geonas_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub seed: u64,
    pub tuning_count: usize,
    pub full_count: usize,
    pub validation_count: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tuning_count: 2000,
            full_count: 20_000,
            validation_count: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    /// Record real trial durations; off by default so logs are reproducible.
    pub log_wall_time: bool,
    pub dataset: DatasetConfig,
    pub geometry: ToolGeometry,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            log_wall_time: false,
            dataset: DatasetConfig::default(),
            geometry: ToolGeometry::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let d = &self.dataset;
        if d.tuning_count == 0 || d.full_count == 0 || d.validation_count == 0 {
            return Err(CliError::Input("dataset counts must be positive".into()));
        }
        self.geometry.validate()?;
        self.pipeline.validate()?;
        Ok(())
    }

    /// SHA-256 over the effective configuration with keys in canonical order,
    /// so reordering keys in the file leaves it unchanged. The output
    /// directory is excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

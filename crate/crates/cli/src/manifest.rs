use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Record of inputs, seeds and outputs written by every command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub exit_code: i32,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seeds: BTreeMap<String, u64>) -> Self {
        let versions = BTreeMap::from([
            ("geonas-core".to_string(), geonas_core::VERSION.to_string()),
            ("geonas-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ]);
        Self {
            command: command.to_string(),
            config_hash,
            seeds,
            versions,
            started_at: now(),
            finished_at: String::new(),
            outputs: Vec::new(),
            exit_code: 0,
        }
    }

    pub fn write(&mut self, dir: &Path) -> CliResult<PathBuf> {
        self.finished_at = now();
        let dir = dir.join("manifests");
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.json", self.command));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Run(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Exclusive marker in the output directory; removed on drop.
pub struct OutputLock {
    path: PathBuf,
    _file: File,
}

impl OutputLock {
    pub const NAME: &'static str = ".geonas.lock";

    pub fn acquire(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(Self::NAME);
        let file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::Io(format!(
                    "{} exists: another command is writing to this output directory (delete the file if no command is running)",
                    path.display()
                ))
            } else {
                CliError::from(e)
            }
        })?;
        Ok(Self { path, _file: file })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

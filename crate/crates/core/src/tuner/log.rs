use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::TrialRecord;
use crate::arch::SearchSpace;
use crate::error::{Error, Result};

/// Append-only JSON-lines trial log.
pub struct TrialLogWriter {
    out: BufWriter<File>,
}

impl TrialLogWriter {
    /// Truncates any previous log at `path`.
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn append(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?),
        })
    }

    pub fn write(&mut self, record: &TrialRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a trial log back, restoring each record's point from `space`.
pub fn read_trials(path: &Path, space: &SearchSpace) -> Result<Vec<TrialRecord>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: PathBuf::from(path),
            line: i + 1,
            message,
        };
        let mut rec: TrialRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rec.point = space.point_from_named(&rec.h).map_err(|e| parse_err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

/// Score-versus-size scatter: `Trainable_Parameters,Score,Score_loss,Score_unknowns`.
/// Failed trials are omitted.
pub fn write_score_csv(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "Trainable_Parameters,Score,Score_loss,Score_unknowns")?;
    for t in trials.iter().filter(|t| !t.failed()) {
        writeln!(
            out,
            "{},{},{},{}",
            t.n_params, t.score_total, t.score_error_term, t.score_size_term
        )?;
    }
    out.flush()?;
    Ok(())
}

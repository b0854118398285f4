use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_formation, ForwardModel, ScalingTable, MEASUREMENT_NAMES, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::nn::Samples;

pub const DATASET_FORMAT: &str = "geonas-dataset";
pub const DATASET_VERSION: u32 = 1;

pub const COLUMN_NAMES: [&str; 19] = [
    PARAM_NAMES[0],
    PARAM_NAMES[1],
    PARAM_NAMES[2],
    PARAM_NAMES[3],
    PARAM_NAMES[4],
    "dip",
    MEASUREMENT_NAMES[0],
    MEASUREMENT_NAMES[1],
    MEASUREMENT_NAMES[2],
    MEASUREMENT_NAMES[3],
    MEASUREMENT_NAMES[4],
    MEASUREMENT_NAMES[5],
    MEASUREMENT_NAMES[6],
    MEASUREMENT_NAMES[7],
    MEASUREMENT_NAMES[8],
    MEASUREMENT_NAMES[9],
    MEASUREMENT_NAMES[10],
    MEASUREMENT_NAMES[11],
    MEASUREMENT_NAMES[12],
];

const WIDTH: usize = COLUMN_NAMES.len();
const DIP: usize = 5;
const PARAMS: std::ops::Range<usize> = 0..5;
const MEAS: std::ops::Range<usize> = 6..19;

/// First line of a dataset file, stored as one JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub count: usize,
    pub forward_model: String,
    pub columns: Vec<String>,
    pub scaling: ScalingTable,
}

/// Scaled records, one row of 19 values each.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    rows: Vec<f64>,
}

/// Calibrates the scaling table for `model`, then draws `count` records.
pub fn generate_dataset(count: usize, seed: u64, model: &dyn ForwardModel) -> Result<Dataset> {
    let scaling = ScalingTable::calibrate(model)?;
    Dataset::generate(count, seed, model, &scaling)
}

impl Dataset {
    /// Record `i` uses its own derived seed, so the result does not depend on
    /// the worker count.
    pub fn generate(count: usize, seed: u64, model: &dyn ForwardModel, scaling: &ScalingTable) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("dataset count must be at least 1".into()));
        }
        scaling.validate()?;
        let rows = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = crate::seed::rng(crate::seed::derive(seed, &[i as u64]));
                let (p, t) = sample_formation(&mut rng);
                let m = model.simulate(&p, t)?;
                let mut raw = p.to_array().to_vec();
                raw.push(t.degrees());
                raw.extend_from_slice(&m.0);
                scaling.scale_row(&raw)
            })
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(Self {
            header: DatasetHeader {
                format: DATASET_FORMAT.into(),
                version: DATASET_VERSION,
                seed,
                count,
                forward_model: model.id(),
                columns: COLUMN_NAMES.iter().map(|s| s.to_string()).collect(),
                scaling: scaling.clone(),
            },
            rows,
        })
    }

    pub fn from_rows(header: DatasetHeader, rows: Vec<f64>) -> Result<Self> {
        if !rows.len().is_multiple_of(WIDTH) || rows.len() / WIDTH != header.count {
            return Err(Error::Format(format!(
                "{} values do not form {} rows of {WIDTH}",
                rows.len(),
                header.count
            )));
        }
        Ok(Self { header, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len() / WIDTH
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * WIDTH..(i + 1) * WIDTH]
    }

    pub fn raw_row(&self, i: usize) -> Result<Vec<f64>> {
        self.header.scaling.unscale_row(self.row(i))
    }

    pub fn scaling(&self) -> &ScalingTable {
        &self.header.scaling
    }

    /// Contiguous records `range`, with the header count adjusted.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let mut header = self.header.clone();
        header.count = range.len();
        Self {
            header,
            rows: self.rows[range.start * WIDTH..range.end * WIDTH].to_vec(),
        }
    }

    /// First `fraction` of the records and the rest; records are i.i.d. so a
    /// contiguous cut is an unbiased split.
    pub fn split(&self, fraction: f64) -> (Self, Self) {
        let cut = ((self.len() as f64) * fraction).round() as usize;
        let cut = cut.min(self.len());
        (self.slice(0..cut), self.slice(cut..self.len()))
    }

    /// (params, dip) → measurements.
    pub fn forward_samples(&self) -> Samples {
        let inputs: Vec<f64> = (0..self.len()).flat_map(|i| self.row(i)[..=DIP].to_vec()).collect();
        let targets: Vec<f64> = (0..self.len()).flat_map(|i| self.row(i)[MEAS].to_vec()).collect();
        Samples::new(6, 13, inputs, targets).expect("row layout")
    }

    /// (measurements, dip) → measurements: the inverse net is trained
    /// through the re-simulation misfit, so its target is the input record.
    pub fn inverse_samples(&self) -> Samples {
        let inputs: Vec<f64> = (0..self.len())
            .flat_map(|i| {
                let r = self.row(i);
                let mut v = r[MEAS].to_vec();
                v.push(r[DIP]);
                v
            })
            .collect();
        let targets: Vec<f64> = (0..self.len()).flat_map(|i| self.row(i)[MEAS].to_vec()).collect();
        Samples::new(14, 13, inputs, targets).expect("row layout")
    }

    pub fn params(&self, i: usize) -> &[f64] {
        &self.row(i)[PARAMS]
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for i in 0..self.len() {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:+.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn read<R: Read>(input: R, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: PathBuf::from(path),
            line,
            message,
        };
        let mut lines = BufReader::new(input).lines();
        let first = lines.next().ok_or_else(|| err(1, "empty file".into()))??;
        let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| err(1, e.to_string()))?;
        if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
            return Err(err(1, format!("unsupported format {} v{}", header.format, header.version)));
        }
        if header.columns != COLUMN_NAMES {
            return Err(err(1, "unexpected column layout".into()));
        }
        header.scaling.validate().map_err(|e| err(1, e.to_string()))?;
        let mut rows = Vec::with_capacity(header.count * WIDTH);
        for (k, line) in lines.enumerate() {
            let line = line?;
            let n = k + 2;
            if line.trim().is_empty() {
                continue;
            }
            let before = rows.len();
            for field in line.split_ascii_whitespace() {
                let v: f64 = field.parse().map_err(|_| err(n, format!("bad number {field:?}")))?;
                if !v.is_finite() {
                    return Err(err(n, "non-finite value".into()));
                }
                rows.push(v);
            }
            if rows.len() - before != WIDTH {
                return Err(err(n, format!("expected {WIDTH} values, found {}", rows.len() - before)));
            }
        }
        if rows.len() / WIDTH != header.count {
            return Err(err(
                rows.len() / WIDTH + 1,
                format!("header declares {} records, found {}", header.count, rows.len() / WIDTH),
            ));
        }
        Ok(Self { header, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(File::open(path)?, path)
    }
}

//! Well trajectories: positions along a path with dip and scaled measurements.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DipAngle, FormationParams, ForwardModel, ScalingTable, DISTANCE_RANGE};
use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 16] = [
    "hd_m", "tvd_m", "dip_deg", "m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9", "m10", "m11", "m12", "m13",
];

/// One logging position. `m` holds scaled measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub hd_m: f64,
    pub tvd_m: f64,
    pub dip_deg: f64,
    pub m: [f64; 13],
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let err = |line: u64, message: String| Error::Parse {
        path: PathBuf::from(path),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => err(1, format!("{other:?}")),
    })?;
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(err(1, format!("expected columns {}", TRAJECTORY_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut v = [0.0; 16];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, format!("bad number {field:?}")))?;
        }
        let mut m = [0.0; 13];
        m.copy_from_slice(&v[3..]);
        out.push(TrajectoryRecord {
            hd_m: v[0],
            tvd_m: v[1],
            dip_deg: v[2],
            m,
        });
    }
    if out.is_empty() {
        return Err(err(2, "trajectory has no records".into()));
    }
    Ok(out)
}

pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_io)?;
    for r in records {
        let mut row = vec![r.hd_m.to_string(), r.tvd_m.to_string(), r.dip_deg.to_string()];
        row.extend(r.m.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Three layers with horizontal boundaries; TVD grows downward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredSection {
    pub rho_c: f64,
    pub rho_u: f64,
    pub rho_l: f64,
    pub top_tvd_m: f64,
    pub bottom_tvd_m: f64,
}

/// Straight well at constant dip sampled every `step_m` of horizontal
/// displacement. Boundary distances are clamped to the model's range.
/// Returns the records and the true formation at each position.
pub fn synthesize_trajectory(
    model: &dyn ForwardModel,
    scaling: &ScalingTable,
    section: &LayeredSection,
    start_tvd_m: f64,
    dip: DipAngle,
    positions: usize,
    step_m: f64,
) -> Result<(Vec<TrajectoryRecord>, Vec<FormationParams>)> {
    if section.bottom_tvd_m <= section.top_tvd_m {
        return Err(Error::Config("section bottom must lie below its top".into()));
    }
    let slope = dip.radians().cos() / dip.radians().sin();
    let (dmin, dmax) = DISTANCE_RANGE;
    let mut records = Vec::with_capacity(positions);
    let mut truth = Vec::with_capacity(positions);
    for i in 0..positions {
        let hd = i as f64 * step_m;
        let tvd = start_tvd_m + hd * slope;
        let p = FormationParams::new(
            section.rho_c,
            section.rho_u,
            section.rho_l,
            (tvd - section.top_tvd_m).clamp(dmin, dmax),
            (section.bottom_tvd_m - tvd).clamp(dmin, dmax),
        )?;
        let raw = model.simulate(&p, dip)?;
        let mut m = [0.0; 13];
        for (j, (slot, v)) in m.iter_mut().zip(scaling.measurements()).enumerate() {
            *slot = v.scale(raw.0[j])?;
        }
        records.push(TrajectoryRecord {
            hd_m: hd,
            tvd_m: tvd,
            dip_deg: dip.degrees(),
            m,
        });
        truth.push(p);
    }
    Ok((records, truth))
}

//! Formation sampling, the built-in dipole surrogate, variable scaling and
//! dataset files.

mod dataset;
mod scaling;
mod surrogate;
mod trajectory;

pub use dataset::{generate_dataset, Dataset, DatasetHeader, COLUMN_NAMES, DATASET_FORMAT, DATASET_VERSION};
pub use scaling::{ScalingTable, Transform, VariableScale, CALIBRATION_SAMPLES, CALIBRATION_SEED, SCALED_HI, SCALED_LO};
pub use surrogate::{
    ratio_measurements, surrogate_forward, ArraySet, DeepPair, DipoleSurrogate, FieldComponents, ToolGeometry,
};
pub use trajectory::{
    read_trajectory, synthesize_trajectory, write_trajectory, LayeredSection, TrajectoryRecord, TRAJECTORY_HEADER,
};
pub(crate) use trajectory::csv_io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RHO_RANGE: (f64, f64) = (1.0, 1e3);
pub const DISTANCE_RANGE: (f64, f64) = (1e-2, 10.0);
pub const DIP_RANGE: (f64, f64) = (83.0, 97.0);

pub const PARAM_NAMES: [&str; 5] = ["rho_c", "rho_u", "rho_l", "d_u", "d_l"];

/// Measurement order shared by the surrogate, dataset files and every CSV.
pub const MEASUREMENT_NAMES: [&str; 13] = [
    "set1_zz_re",
    "set1_zz_im",
    "set1_yy_re",
    "set1_yy_im",
    "set1_symdir_re",
    "set1_symdir_im",
    "set1_geosignal_re",
    "set2_symdir_re",
    "set2_symdir_im",
    "deep12_zz_re",
    "deep12_zz_im",
    "deep25_symdir_re",
    "deep25_symdir_im",
];

fn check_range(variable: &str, value: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::Range {
            variable: variable.to_string(),
            value,
            lo,
            hi,
        })
    }
}

/// Three-layer formation: resistivities in Ω·m, boundary distances in m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormationParams {
    pub rho_c: f64,
    pub rho_u: f64,
    pub rho_l: f64,
    pub d_u: f64,
    pub d_l: f64,
}

impl FormationParams {
    pub fn new(rho_c: f64, rho_u: f64, rho_l: f64, d_u: f64, d_l: f64) -> Result<Self> {
        let p = Self { rho_c, rho_u, rho_l, d_u, d_l };
        p.validate()?;
        Ok(p)
    }

    pub fn from_array(v: [f64; 5]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.rho_c, self.rho_u, self.rho_l, self.d_u, self.d_l]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.to_array().into_iter().enumerate() {
            let range = if i < 3 { RHO_RANGE } else { DISTANCE_RANGE };
            check_range(PARAM_NAMES[i], v, range)?;
        }
        Ok(())
    }

    /// Mirror image across the tool: upper and lower layers exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            rho_u: self.rho_l,
            rho_l: self.rho_u,
            d_u: self.d_l,
            d_l: self.d_u,
            ..*self
        }
    }
}

/// Angle of the tool axis from vertical, in degrees; 90 is horizontal.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DipAngle(f64);

impl DipAngle {
    pub fn new(degrees: f64) -> Result<Self> {
        check_range("dip", degrees, DIP_RANGE)?;
        Ok(Self(degrees))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementVector(pub [f64; 13]);

impl MeasurementVector {
    pub fn new(values: [f64; 13]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range {
                variable: MEASUREMENT_NAMES[i].to_string(),
                value: values[i],
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64; 13] {
        &self.0
    }
}

/// Physics behind the 13 measurements. Implementations must be deterministic.
pub trait ForwardModel: Sync {
    /// Identifier recorded in dataset metadata.
    fn id(&self) -> String;

    fn simulate(&self, p: &FormationParams, t: DipAngle) -> Result<MeasurementVector>;
}

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let (a, b) = (lo.log10(), hi.log10());
    10f64.powf(rng.random_range(a..=b)).clamp(lo, hi)
}

/// Resistivities and distances uniform in log10, dip uniform in degrees.
pub fn sample_formation<R: Rng>(rng: &mut R) -> (FormationParams, DipAngle) {
    let p = FormationParams {
        rho_c: log_uniform(rng, RHO_RANGE),
        rho_u: log_uniform(rng, RHO_RANGE),
        rho_l: log_uniform(rng, RHO_RANGE),
        d_u: log_uniform(rng, DISTANCE_RANGE),
        d_l: log_uniform(rng, DISTANCE_RANGE),
    };
    let t = DipAngle(rng.random_range(DIP_RANGE.0..=DIP_RANGE.1));
    (p, t)
}

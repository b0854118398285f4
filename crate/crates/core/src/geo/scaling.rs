use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_formation, ForwardModel, DIP_RANGE, DISTANCE_RANGE, MEASUREMENT_NAMES, PARAM_NAMES, RHO_RANGE};
use crate::error::{check_len, Error, Result};

pub const SCALED_LO: f64 = 0.5;
pub const SCALED_HI: f64 = 1.5;
pub const CALIBRATION_SAMPLES: usize = 100_000;
pub const CALIBRATION_SEED: u64 = 0x5EED_CA11;
/// Fraction of the observed span added on each side of a calibrated range.
const CALIBRATION_PAD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Log10,
    Linear,
}

impl Transform {
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Log10 => x.log10(),
            Self::Linear => x,
        }
    }

    fn invert(self, y: f64) -> f64 {
        match self {
            Self::Log10 => 10f64.powf(y),
            Self::Linear => y,
        }
    }
}

/// Affine map of one variable's (transformed) range onto [0.5, 1.5].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableScale {
    pub name: String,
    pub transform: Transform,
    pub lo: f64,
    pub hi: f64,
}

impl VariableScale {
    pub fn new(name: &str, transform: Transform, lo: f64, hi: f64) -> Result<Self> {
        let v = Self {
            name: name.to_string(),
            transform,
            lo,
            hi,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let positive_ok = self.transform == Transform::Linear || self.lo > 0.0;
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && positive_ok) {
            return Err(Error::Config(format!("invalid range for {}: [{}, {}]", self.name, self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn scale(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && (self.lo..=self.hi).contains(&x)) {
            return Err(Error::Range {
                variable: self.name.clone(),
                value: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let (a, b) = (self.transform.apply(self.lo), self.transform.apply(self.hi));
        Ok(SCALED_LO + (self.transform.apply(x) - a) / (b - a))
    }

    /// Inverse of [`scale`](Self::scale); values outside [0.5, 1.5] extrapolate.
    pub fn unscale(&self, y: f64) -> f64 {
        let (a, b) = (self.transform.apply(self.lo), self.transform.apply(self.hi));
        self.transform.invert(a + (y - SCALED_LO) * (b - a))
    }
}

/// Scales for the 19 dataset columns: 5 parameters, dip, 13 measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalingTable {
    pub variables: Vec<VariableScale>,
}

impl ScalingTable {
    pub const WIDTH: usize = 19;

    pub fn new(measurements: Vec<VariableScale>) -> Result<Self> {
        check_len("measurement scales", MEASUREMENT_NAMES.len(), measurements.len())?;
        let mut variables = Vec::with_capacity(Self::WIDTH);
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            let (lo, hi) = if i < 3 { RHO_RANGE } else { DISTANCE_RANGE };
            variables.push(VariableScale::new(name, Transform::Log10, lo, hi)?);
        }
        variables.push(VariableScale::new("dip", Transform::Linear, DIP_RANGE.0, DIP_RANGE.1)?);
        variables.extend(measurements);
        let t = Self { variables };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        check_len("scaling table", Self::WIDTH, self.variables.len())?;
        self.variables.iter().try_for_each(VariableScale::validate)
    }

    /// Measurement ranges from the min/max of a fixed-seed draw, padded on each side.
    pub fn calibrate(model: &dyn ForwardModel) -> Result<Self> {
        Self::calibrate_with(model, CALIBRATION_SAMPLES, CALIBRATION_SEED)
    }

    pub fn calibrate_with(model: &dyn ForwardModel, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config("calibration needs at least one sample".into()));
        }
        let init = || ([f64::INFINITY; 13], [f64::NEG_INFINITY; 13]);
        let (lo, hi) = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = crate::seed::rng(crate::seed::derive(seed, &[i as u64]));
                let (p, t) = sample_formation(&mut rng);
                model.simulate(&p, t)
            })
            .try_fold(init, |(mut lo, mut hi), m| {
                let m = m?;
                for j in 0..13 {
                    lo[j] = lo[j].min(m.0[j]);
                    hi[j] = hi[j].max(m.0[j]);
                }
                Ok::<_, Error>((lo, hi))
            })
            .try_reduce(init, |(mut lo, mut hi), (l2, h2)| {
                for j in 0..13 {
                    lo[j] = lo[j].min(l2[j]);
                    hi[j] = hi[j].max(h2[j]);
                }
                Ok((lo, hi))
            })?;
        let measurements = MEASUREMENT_NAMES
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let pad = CALIBRATION_PAD * (hi[j] - lo[j]).max(1e-9);
                VariableScale::new(name, Transform::Linear, lo[j] - pad, hi[j] + pad)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(measurements)
    }

    pub fn scale_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        check_len("raw row", Self::WIDTH, raw.len())?;
        raw.iter().zip(&self.variables).map(|(&x, v)| v.scale(x)).collect()
    }

    pub fn unscale_row(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        check_len("scaled row", Self::WIDTH, scaled.len())?;
        Ok(scaled.iter().zip(&self.variables).map(|(&y, v)| v.unscale(y)).collect())
    }

    pub fn params(&self) -> &[VariableScale] {
        &self.variables[..5]
    }

    pub fn dip(&self) -> &VariableScale {
        &self.variables[5]
    }

    pub fn measurements(&self) -> &[VariableScale] {
        &self.variables[6..]
    }
}

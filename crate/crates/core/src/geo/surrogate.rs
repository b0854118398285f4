//! Whole-space magnetic-dipole surrogate for the tool's field couplings.
//!
//! Each transmitter-receiver pair sees a homogeneous medium whose
//! conductivity blends the three layers with weights that decay with the
//! boundary distance relative to the spacing. Boundary proximity and
//! contrast add a small formation-frame perturbation, phase-shifted by the
//! travel to each boundary, that the dip rotates into the cross components.
//! Couplings are normalized by their air value.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::{DipAngle, FormationParams, ForwardModel, MeasurementVector};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

const MU0: f64 = 4.0e-7 * PI;
const DENOMINATOR_FLOOR: f64 = 1e-12;
const BLEND_WEIGHT: f64 = 0.5;
const DIAGONAL_GAIN: f64 = 0.1;
const CROSS_GAIN: f64 = 0.3;

/// Symmetric array: transmitters at ±`tx_offset_m`, receivers at ±`rx_offset_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySet {
    pub tx_offset_m: f64,
    pub rx_offset_m: f64,
    pub frequency_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepPair {
    pub spacing_m: f64,
    pub frequency_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolGeometry {
    pub version: u32,
    pub set1: ArraySet,
    pub set2: ArraySet,
    pub deep_rx1: DeepPair,
    pub deep_rx2: DeepPair,
}

impl Default for ToolGeometry {
    fn default() -> Self {
        Self {
            version: 1,
            set1: ArraySet {
                tx_offset_m: 0.4064,
                rx_offset_m: 0.1016,
                frequency_hz: 2.0e6,
            },
            set2: ArraySet {
                tx_offset_m: 1.2192,
                rx_offset_m: 0.1016,
                frequency_hz: 0.25e6,
            },
            deep_rx1: DeepPair {
                spacing_m: 12.0,
                frequency_hz: 24.0e3,
            },
            deep_rx2: DeepPair {
                spacing_m: 25.0,
                frequency_hz: 2.0e3,
            },
        }
    }
}

impl ToolGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        for s in [self.set1, self.set2] {
            if !(ok(s.tx_offset_m) && ok(s.rx_offset_m) && ok(s.frequency_hz) && s.rx_offset_m < s.tx_offset_m) {
                return Err(Error::Config(format!("invalid array set {s:?}")));
            }
        }
        for d in [self.deep_rx1, self.deep_rx2] {
            if !(ok(d.spacing_m) && ok(d.frequency_hz)) {
                return Err(Error::Config(format!("invalid deep pair {d:?}")));
            }
        }
        Ok(())
    }
}

/// Tool-frame couplings of one transmitter-receiver set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldComponents {
    pub zz: C64,
    pub zx: C64,
    pub xz: C64,
    pub yy: C64,
}

fn guarded(value: C64) -> Result<C64> {
    if value.norm() < DENOMINATOR_FLOOR {
        Err(Error::DegenerateField { magnitude: value.norm() })
    } else {
        Ok(value)
    }
}

/// Returns `(geosignal, symmetrized directional)`.
pub fn ratio_measurements(f: &FieldComponents) -> Result<(C64, C64)> {
    let plus = guarded(f.zz + f.zx)?;
    let minus = guarded(f.zz - f.zx)?;
    let plus_xz = guarded(f.zz + f.xz)?;
    let geosignal = (f.zz - f.zx) / plus;
    let symmetrized = (plus / minus) * ((f.zz - f.xz) / plus_xz);
    Ok((geosignal, symmetrized))
}

fn conductivities(p: &FormationParams) -> (f64, f64, f64) {
    (1.0 / p.rho_c, 1.0 / p.rho_u, 1.0 / p.rho_l)
}

fn couple(p: &FormationParams, t: DipAngle, spacing: f64, frequency: f64) -> FieldComponents {
    let (sc, su, sl) = conductivities(p);
    let wu = BLEND_WEIGHT * (-p.d_u / spacing).exp();
    let wl = BLEND_WEIGHT * (-p.d_l / spacing).exp();
    let sigma = sc + wu * (su - sc) + wl * (sl - sc);
    let omega = 2.0 * PI * frequency;
    let k = C64::new(0.0, omega * MU0 * sigma).sqrt();
    let x = C64::i() * k * spacing;
    let e = x.exp();
    let axial = e * (1.0 - x);
    let transverse = e * (1.0 - x + x * x);

    // each boundary term carries the phase of the extra travel to its boundary
    let qu = C64::from_polar(wu * (su - sc) / (su + sc), k.re * p.d_u);
    let ql = C64::from_polar(wl * (sl - sc) / (sl + sc), k.re * p.d_l);
    let dh = axial * (qu + ql) * DIAGONAL_GAIN;
    let g = axial * (qu - ql) * CROSS_GAIN;
    let (s, c) = t.radians().sin_cos();
    FieldComponents {
        // vertical diagonal term is -dh
        zz: axial + dh * (s * s - c * c),
        zx: dh * (2.0 * s * c) - g,
        xz: dh * (2.0 * s * c) + g,
        yy: transverse + dh,
    }
}

fn average(a: FieldComponents, b: FieldComponents) -> FieldComponents {
    FieldComponents {
        zz: (a.zz + b.zz) * 0.5,
        zx: (a.zx + b.zx) * 0.5,
        xz: (a.xz + b.xz) * 0.5,
        yy: (a.yy + b.yy) * 0.5,
    }
}

impl ArraySet {
    /// Mean coupling over the near and far receiver.
    pub fn fields(&self, p: &FormationParams, t: DipAngle) -> FieldComponents {
        let near = couple(p, t, self.tx_offset_m - self.rx_offset_m, self.frequency_hz);
        let far = couple(p, t, self.tx_offset_m + self.rx_offset_m, self.frequency_hz);
        average(near, far)
    }
}

impl DeepPair {
    pub fn fields(&self, p: &FormationParams, t: DipAngle) -> FieldComponents {
        couple(p, t, self.spacing_m, self.frequency_hz)
    }
}

pub fn surrogate_forward(p: &FormationParams, t: DipAngle, geometry: &ToolGeometry) -> Result<MeasurementVector> {
    p.validate()?;
    let s1 = geometry.set1.fields(p, t);
    let (geo1, sym1) = ratio_measurements(&s1)?;
    let (_, sym2) = ratio_measurements(&geometry.set2.fields(p, t))?;
    let deep1 = geometry.deep_rx1.fields(p, t);
    let (_, sym_deep2) = ratio_measurements(&geometry.deep_rx2.fields(p, t))?;
    MeasurementVector::new([
        s1.zz.re,
        s1.zz.im,
        s1.yy.re,
        s1.yy.im,
        sym1.re,
        sym1.im,
        geo1.re,
        sym2.re,
        sym2.im,
        deep1.zz.re,
        deep1.zz.im,
        sym_deep2.re,
        sym_deep2.im,
    ])
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DipoleSurrogate {
    pub geometry: ToolGeometry,
}

impl ForwardModel for DipoleSurrogate {
    fn id(&self) -> String {
        format!("dipole-surrogate/v{}", self.geometry.version)
    }

    fn simulate(&self, p: &FormationParams, t: DipAngle) -> Result<MeasurementVector> {
        surrogate_forward(p, t, &self.geometry)
    }
}

use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::geo::{csv_io, ScalingTable, TrajectoryRecord, SCALED_HI, SCALED_LO};
use crate::nn::Network;

/// Scaled measurements outside this window are rejected rather than
/// extrapolated.
pub const INPUT_WINDOW: (f64, f64) = (0.25, 1.75);

#[derive(Clone, Debug, PartialEq)]
pub struct InversionRow {
    pub hd_m: f64,
    pub tvd_m: f64,
    pub dip_deg: f64,
    /// rho_c, rho_u, rho_l, d_u, d_l in physical units.
    pub params: [f64; 5],
    /// L1 distance between the re-simulated and observed scaled measurements.
    pub misfit: f64,
    /// Set when any predicted parameter left [0.5, 1.5] and was clamped.
    pub clamped: bool,
}

/// Applies the inverse net position by position and re-simulates each
/// estimate through the forward net.
pub fn invert_log(
    inverse: &Network,
    forward: &Network,
    scaling: &ScalingTable,
    records: &[TrajectoryRecord],
) -> Result<Vec<InversionRow>> {
    check_len("inverse network input", 14, inverse.input_len())?;
    check_len("inverse network output", 5, inverse.output_len())?;
    check_len("forward network input", 6, forward.input_len())?;
    check_len("forward network output", 13, forward.output_len())?;
    records
        .iter()
        .map(|r| {
            for (j, &v) in r.m.iter().enumerate() {
                if !(v.is_finite() && (INPUT_WINDOW.0..=INPUT_WINDOW.1).contains(&v)) {
                    return Err(Error::Range {
                        variable: format!("m{}", j + 1),
                        value: v,
                        lo: INPUT_WINDOW.0,
                        hi: INPUT_WINDOW.1,
                    });
                }
            }
            let dip = scaling.dip().scale(r.dip_deg)?;
            let mut x = r.m.to_vec();
            x.push(dip);
            let mut p = inverse.predict(&x)?;
            let mut clamped = false;
            for v in &mut p {
                let c = v.clamp(SCALED_LO, SCALED_HI);
                clamped |= c != *v;
                *v = c;
            }
            let mut fx = p.clone();
            fx.push(dip);
            let resim = forward.predict(&fx)?;
            let misfit = resim.iter().zip(&r.m).map(|(a, b)| (a - b).abs()).sum();
            let mut params = [0.0; 5];
            for (slot, (v, s)) in params.iter_mut().zip(p.iter().zip(scaling.params())) {
                *slot = s.unscale(*v).clamp(s.lo, s.hi);
            }
            Ok(InversionRow {
                hd_m: r.hd_m,
                tvd_m: r.tvd_m,
                dip_deg: r.dip_deg,
                params,
                misfit,
                clamped,
            })
        })
        .collect()
}

/// Inversion profile: position, estimated formation, misfit and clamp flag.
pub fn write_profile_csv(path: &Path, rows: &[InversionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record([
        "hd_m", "tvd_m", "dip_deg", "rho_c", "rho_u", "rho_l", "d_u", "d_l", "misfit", "clamped",
    ])
    .map_err(csv_io)?;
    for r in rows {
        let mut row = vec![r.hd_m.to_string(), r.tvd_m.to_string(), r.dip_deg.to_string()];
        row.extend(r.params.iter().map(|v| v.to_string()));
        row.push(r.misfit.to_string());
        row.push(u8::from(r.clamped).to_string());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

use std::path::Path;

use crate::error::{check_len, Result};
use crate::geo::{csv_io, Dataset, MEASUREMENT_NAMES, PARAM_NAMES};
use crate::nn::{Network, TrainHistory};

/// Coefficient of determination; 0 when the truth has no variance.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> f64 {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Ground truth against prediction, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossPlot {
    pub names: Vec<String>,
    pub truth: Vec<Vec<f64>>,
    pub pred: Vec<Vec<f64>>,
}

impl CrossPlot {
    fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
        rows.iter().map(|r| r[j]).collect()
    }

    pub fn r2(&self) -> Vec<f64> {
        (0..self.names.len())
            .map(|j| r_squared(&Self::column(&self.truth, j), &Self::column(&self.pred, j)))
            .collect()
    }
}

pub fn forward_cross_plot(net: &Network, data: &Dataset) -> Result<CrossPlot> {
    let s = data.forward_samples();
    let mut pred = Vec::with_capacity(s.len());
    for (x, _) in s.iter() {
        pred.push(net.predict(x)?);
    }
    Ok(CrossPlot {
        names: MEASUREMENT_NAMES.iter().map(|s| s.to_string()).collect(),
        truth: s.iter().map(|(_, y)| y.to_vec()).collect(),
        pred,
    })
}

/// Scaled formation parameters predicted by the inverse net.
pub fn inverse_cross_plot(net: &Network, data: &Dataset) -> Result<CrossPlot> {
    let s = data.inverse_samples();
    check_len("inverse network output", PARAM_NAMES.len(), net.output_len())?;
    let mut pred = Vec::with_capacity(s.len());
    for (x, _) in s.iter() {
        pred.push(net.predict(x)?);
    }
    Ok(CrossPlot {
        names: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
        truth: (0..data.len()).map(|i| data.params(i).to_vec()).collect(),
        pred,
    })
}

pub fn write_cross_plot_csv(path: &Path, plot: &CrossPlot) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let header: Vec<String> = plot
        .names
        .iter()
        .flat_map(|n| [format!("{n}_true"), format!("{n}_pred")])
        .collect();
    w.write_record(&header).map_err(csv_io)?;
    for (t, p) in plot.truth.iter().zip(&plot.pred) {
        let row: Vec<String> = t.iter().zip(p).flat_map(|(a, b)| [a.to_string(), b.to_string()]).collect();
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_r2_csv(path: &Path, plot: &CrossPlot) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["output", "r2"]).map_err(csv_io)?;
    for (name, r2) in plot.names.iter().zip(plot.r2()) {
        w.write_record([name.clone(), r2.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per epoch run.
pub fn write_history_csv(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["epoch", "train_loss", "val_loss"]).map_err(csv_io)?;
    for (e, (t, v)) in history.train_loss.iter().zip(&history.val_loss).enumerate() {
        w.write_record([(e + 1).to_string(), t.to_string(), v.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

use crate::error::{Error, Result};

/// Channel-major 1D feature map: `values[c * length + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor1D {
    channels: usize,
    length: usize,
    values: Vec<f64>,
}

impl Tensor1D {
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::Config(format!(
                "tensor shape must be positive, got {channels}x{length}"
            )));
        }
        crate::error::check_len("tensor values", channels * length, values.len())?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("tensor entry {bad} is not finite")));
        }
        Ok(Self {
            channels,
            length,
            values,
        })
    }

    /// A single-channel sequence.
    pub fn sequence(values: &[f64]) -> Result<Self> {
        Self::new(1, values.len(), values.to_vec())
    }

    pub(crate) fn from_raw(channels: usize, length: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), channels * length);
        Self {
            channels,
            length,
            values,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }
}

//! Same-padded 1D convolution kernels with their reverse-mode adjoints.
//!
//! Parameters of one layer are stored contiguously: the kernel laid out as
//! `[out][in][tap]`, followed by one bias per output channel.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor1D;
use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub relu: bool,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize, relu: bool) -> Result<Self> {
        validate_kernel(kernel_size)?;
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::Config("convolution channels must be positive".into()));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel_size,
            relu,
        })
    }

    pub fn weight_count(&self) -> usize {
        self.kernel_size * self.in_channels * self.out_channels
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.out_channels
    }

    fn pad(&self) -> usize {
        (self.kernel_size - 1) / 2
    }

    /// Forward pass on a channel-major buffer of `in_channels * length` values.
    /// Applies the rectifier when `relu` is set.
    pub(crate) fn forward(&self, params: &[f64], input: &[f64], length: usize) -> Vec<f64> {
        let (cin, cout, k) = (self.in_channels, self.out_channels, self.kernel_size);
        let pad = self.pad();
        let (weights, bias) = params[..self.param_count()].split_at(self.weight_count());
        let mut out = vec![0.0; cout * length];
        for o in 0..cout {
            let row = &mut out[o * length..(o + 1) * length];
            row.fill(bias[o]);
            for i in 0..cin {
                let x = &input[i * length..(i + 1) * length];
                let w = &weights[(o * cin + i) * k..(o * cin + i + 1) * k];
                for (j, &wj) in w.iter().enumerate() {
                    // output p reads input p + j - pad
                    let lo = pad.saturating_sub(j);
                    let hi = (length + pad).saturating_sub(j).min(length);
                    for p in lo..hi {
                        row[p] += wj * x[p + j - pad];
                    }
                }
            }
            if self.relu {
                row.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        out
    }

    /// Adjoint of [`ConvSpec::forward`]. `output` is the (post-activation)
    /// forward result, used for the rectifier mask; the subgradient at zero
    /// is taken as zero. Parameter gradients are accumulated into
    /// `grad_params`; the input gradient is returned when requested.
    pub(crate) fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        output: &[f64],
        grad_output: &[f64],
        length: usize,
        grad_params: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (cin, cout, k) = (self.in_channels, self.out_channels, self.kernel_size);
        let pad = self.pad();
        let wc = self.weight_count();
        let weights = &params[..wc];
        let mut gz = grad_output.to_vec();
        if self.relu {
            for (g, &y) in gz.iter_mut().zip(output) {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        let (gw, gb) = grad_params[..self.param_count()].split_at_mut(wc);
        let mut gx = want_input_grad.then(|| vec![0.0; cin * length]);
        for o in 0..cout {
            let g = &gz[o * length..(o + 1) * length];
            gb[o] += g.iter().sum::<f64>();
            for i in 0..cin {
                let x = &input[i * length..(i + 1) * length];
                let base = (o * cin + i) * k;
                for j in 0..k {
                    let lo = pad.saturating_sub(j);
                    let hi = (length + pad).saturating_sub(j).min(length);
                    let mut acc = 0.0;
                    for p in lo..hi {
                        acc += g[p] * x[p + j - pad];
                    }
                    gw[base + j] += acc;
                    if let Some(gx) = gx.as_mut() {
                        let wj = weights[base + j];
                        let gxi = &mut gx[i * length..(i + 1) * length];
                        for p in lo..hi {
                            gxi[p + j - pad] += wj * g[p];
                        }
                    }
                }
            }
        }
        gx
    }
}

pub(crate) fn validate_kernel(kernel_size: usize) -> Result<()> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "kernel size must be odd and positive, got {kernel_size}"
        )));
    }
    Ok(())
}

/// Same-length convolution with zero padding of `(kernel_size - 1) / 2`.
/// `weights` is laid out `[out][in][tap]`; the output channel count is
/// `bias.len()`.
pub fn conv1d(input: &Tensor1D, weights: &[f64], bias: &[f64], kernel_size: usize) -> Result<Tensor1D> {
    validate_kernel(kernel_size)?;
    let spec = ConvSpec::new(input.channels(), bias.len(), kernel_size, false)?;
    check_len("conv1d weights", spec.weight_count(), weights.len())?;
    let mut params = Vec::with_capacity(spec.param_count());
    params.extend_from_slice(weights);
    params.extend_from_slice(bias);
    let out = spec.forward(&params, input.values(), input.length());
    Ok(Tensor1D::from_raw(spec.out_channels, input.length(), out))
}

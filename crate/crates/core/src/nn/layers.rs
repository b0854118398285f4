use serde::{Deserialize, Serialize};

use super::conv::ConvSpec;
use crate::error::{Error, Result};

/// Descriptive view of one layer, in forward order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
    },
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Activation,
}

/// Kernel sizes and channel width of one residual block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub k0: usize,
    pub k1: usize,
    pub width: usize,
}

impl BlockSpec {
    pub const KERNELS: [usize; 3] = [3, 5, 7];

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("k0", self.k0), ("k1", self.k1)] {
            if !Self::KERNELS.contains(&k) {
                return Err(Error::Config(format!("block {name} must be one of 3, 5, 7; got {k}")));
            }
        }
        if self.width == 0 {
            return Err(Error::Config("block width must be positive".into()));
        }
        Ok(())
    }
}

/// Residual block: `relu(c3(relu(c2(relu(c1(x)))))) + skip(x)`, where c3 is
/// pointwise and `skip` is the identity or, when the channel count changes, a
/// pointwise projection without activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub convs: [ConvSpec; 3],
    pub skip: Option<ConvSpec>,
}

impl Block {
    pub fn param_count(&self) -> usize {
        self.convs.iter().map(ConvSpec::param_count).sum::<usize>()
            + self.skip.map_or(0, |s| s.param_count())
    }

    pub fn in_channels(&self) -> usize {
        self.convs[0].in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.convs[2].out_channels
    }

    /// Main-path layers in forward order (the skip path is not listed).
    pub fn layers(&self) -> Vec<LayerSpec> {
        self.convs
            .iter()
            .flat_map(|c| {
                [
                    LayerSpec::Conv1d {
                        kernel_size: c.kernel_size,
                        in_channels: c.in_channels,
                        out_channels: c.out_channels,
                    },
                    LayerSpec::Activation,
                ]
            })
            .collect()
    }
}

pub fn build_block(spec: BlockSpec, in_channels: usize) -> Result<Block> {
    spec.validate()?;
    if in_channels == 0 {
        return Err(Error::Config("block input channels must be positive".into()));
    }
    let w = spec.width;
    let convs = [
        ConvSpec::new(in_channels, w, spec.k0, true)?,
        ConvSpec::new(w, w, spec.k1, true)?,
        ConvSpec::new(w, w, 1, true)?,
    ];
    let skip = (in_channels != w)
        .then(|| ConvSpec::new(in_channels, w, 1, false))
        .transpose()?;
    Ok(Block { convs, skip })
}

/// Fully-connected map from the flattened (channel-major) input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseSpec {
    pub in_features: usize,
    pub out_features: usize,
    pub relu: bool,
}

impl DenseSpec {
    pub fn param_count(&self) -> usize {
        self.in_features * self.out_features + self.out_features
    }

    pub(crate) fn forward(&self, params: &[f64], input: &[f64]) -> Vec<f64> {
        let (weights, bias) = params[..self.param_count()].split_at(self.in_features * self.out_features);
        weights
            .chunks_exact(self.in_features)
            .zip(bias)
            .map(|(row, b)| {
                let v = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                if self.relu {
                    v.max(0.0)
                } else {
                    v
                }
            })
            .collect()
    }

    pub(crate) fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        output: &[f64],
        grad_output: &[f64],
        grad_params: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let nin = self.in_features;
        let wc = nin * self.out_features;
        let (gw, gb) = grad_params[..self.param_count()].split_at_mut(wc);
        let mut gx = want_input_grad.then(|| vec![0.0; nin]);
        for o in 0..self.out_features {
            let g = if self.relu && output[o] <= 0.0 { 0.0 } else { grad_output[o] };
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            let row = &params[o * nin..(o + 1) * nin];
            for (gwi, xi) in gw[o * nin..(o + 1) * nin].iter_mut().zip(input) {
                *gwi += g * xi;
            }
            if let Some(gx) = gx.as_mut() {
                for (gxi, wi) in gx.iter_mut().zip(row) {
                    *gxi += g * wi;
                }
            }
        }
        gx
    }
}

/// One stage of a sequential network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Conv(ConvSpec),
    Block(Block),
    /// Flattens the incoming feature map before the affine map.
    Dense(DenseSpec),
}

impl Stage {
    pub fn param_count(&self) -> usize {
        match self {
            Stage::Conv(c) => c.param_count(),
            Stage::Block(b) => b.param_count(),
            Stage::Dense(d) => d.param_count(),
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        match self {
            Stage::Conv(c) => {
                let mut v = vec![LayerSpec::Conv1d {
                    kernel_size: c.kernel_size,
                    in_channels: c.in_channels,
                    out_channels: c.out_channels,
                }];
                if c.relu {
                    v.push(LayerSpec::Activation);
                }
                v
            }
            Stage::Block(b) => b.layers(),
            Stage::Dense(d) => {
                let mut v = vec![LayerSpec::Dense {
                    in_features: d.in_features,
                    out_features: d.out_features,
                }];
                if d.relu {
                    v.push(LayerSpec::Activation);
                }
                v
            }
        }
    }
}

//! Discrete architecture spaces and the networks they generate.

mod space;

pub use space::{Dimension, HyperPoint, NamedPoint, SearchSpace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{build_block, Architecture, BlockSpec, ConvSpec, DenseSpec, Network, Stage};

/// Formation parameters plus dip.
pub const FORWARD_INPUTS: usize = 6;
pub const MEASUREMENTS: usize = 13;
pub const FORMATION_PARAMS: usize = 5;
/// Measurements plus dip.
pub const INVERSE_INPUTS: usize = 14;
pub const DEFAULT_WIDTH: usize = 30;
/// Channels of the pointwise adapter in front of the forward network's dense head.
pub const ADAPTER_CHANNELS: usize = 4;

/// Maps a hyperparameter record to and from a point of its search space.
pub trait Hyperparams: Sized + Clone + std::fmt::Debug {
    fn space() -> SearchSpace;
    fn to_point(&self) -> HyperPoint;
    fn from_point(point: &HyperPoint) -> Result<Self>;
    fn validate(&self) -> Result<()>;
    fn architecture(&self, width: usize) -> Result<Architecture>;

    fn build(&self, width: usize, seed: u64) -> Result<Network> {
        Ok(Network::new(self.architecture(width)?, seed))
    }

    fn count_params(&self, width: usize) -> Result<usize> {
        Ok(self.architecture(width)?.param_count())
    }
}

/// `{n, k0, k1, l}`: `n + 1` residual blocks after a head convolution of kernel `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardHyperparams {
    pub n: usize,
    pub k0: usize,
    pub k1: usize,
    pub l: usize,
}

/// `{n, k0, k1}`: `n + 1` residual blocks followed by a 5-node dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseHyperparams {
    pub n: usize,
    pub k0: usize,
    pub k1: usize,
}

fn check_blocks(n: usize, k0: usize, k1: usize, width: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("block count n must be at least 1".into()));
    }
    BlockSpec { k0, k1, width }.validate()
}

fn blocks(n: usize, k0: usize, k1: usize, width: usize, in_channels: usize) -> Result<Vec<Stage>> {
    let spec = BlockSpec { k0, k1, width };
    (0..=n)
        .map(|i| {
            let cin = if i == 0 { in_channels } else { width };
            build_block(spec, cin).map(Stage::Block)
        })
        .collect()
}

impl Hyperparams for ForwardHyperparams {
    fn space() -> SearchSpace {
        SearchSpace::forward()
    }

    fn to_point(&self) -> HyperPoint {
        HyperPoint(vec![self.n, self.k0, self.k1, self.l])
    }

    fn from_point(point: &HyperPoint) -> Result<Self> {
        match point.0.as_slice() {
            &[n, k0, k1, l] => Ok(Self { n, k0, k1, l }),
            other => Err(Error::Dimension {
                context: "forward hyperparameter point",
                expected: 4,
                found: other.len(),
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        check_blocks(self.n, self.k0, self.k1, 1)?;
        if self.l.is_multiple_of(2) || self.l > 7 {
            return Err(Error::Config(format!("head kernel l must be one of 1, 3, 5, 7; got {}", self.l)));
        }
        Ok(())
    }

    fn architecture(&self, width: usize) -> Result<Architecture> {
        self.validate()?;
        let mut stages = vec![Stage::Conv(ConvSpec::new(1, width, self.l, true)?)];
        stages.extend(blocks(self.n, self.k0, self.k1, width, width)?);
        stages.push(Stage::Conv(ConvSpec::new(width, ADAPTER_CHANNELS, 1, true)?));
        stages.push(Stage::Dense(DenseSpec {
            in_features: ADAPTER_CHANNELS * FORWARD_INPUTS,
            out_features: MEASUREMENTS,
            relu: false,
        }));
        Architecture::new(FORWARD_INPUTS, stages)
    }
}

impl Hyperparams for InverseHyperparams {
    fn space() -> SearchSpace {
        SearchSpace::inverse()
    }

    fn to_point(&self) -> HyperPoint {
        HyperPoint(vec![self.n, self.k0, self.k1])
    }

    fn from_point(point: &HyperPoint) -> Result<Self> {
        match point.0.as_slice() {
            &[n, k0, k1] => Ok(Self { n, k0, k1 }),
            other => Err(Error::Dimension {
                context: "inverse hyperparameter point",
                expected: 3,
                found: other.len(),
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        check_blocks(self.n, self.k0, self.k1, 1)
    }

    fn architecture(&self, width: usize) -> Result<Architecture> {
        self.validate()?;
        let mut stages = blocks(self.n, self.k0, self.k1, width, 1)?;
        stages.push(Stage::Dense(DenseSpec {
            in_features: width * INVERSE_INPUTS,
            out_features: FORMATION_PARAMS,
            relu: false,
        }));
        Architecture::new(INVERSE_INPUTS, stages)
    }
}

pub fn build_forward_net(h: &ForwardHyperparams, width: usize, seed: u64) -> Result<Network> {
    h.build(width, seed)
}

pub fn build_inverse_net(h: &InverseHyperparams, width: usize, seed: u64) -> Result<Network> {
    h.build(width, seed)
}

/// Reference architecture and its measured validation loss, the denominators
/// of the score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub h: HyperPoint,
    pub loss: f64,
    pub n_params: usize,
}

impl ReferenceConfig {
    pub fn new(h: HyperPoint, loss: f64, n_params: usize) -> Result<Self> {
        let r = Self { h, loss, n_params };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss > 0.0 && self.loss.is_finite()) {
            return Err(Error::Config(format!("reference loss must be positive, got {}", self.loss)));
        }
        if self.n_params == 0 {
            return Err(Error::Config("reference parameter count must be positive".into()));
        }
        Ok(())
    }
}

//! Minimal trainable network kernel.

mod conv;
mod gradcheck;
mod io;
mod layers;
mod loss;
mod network;
mod objective;
mod samples;
mod tensor;
mod train;

pub use conv::{conv1d, ConvSpec};
pub use gradcheck::{gradient_check, MIN_PROBES};
pub use io::{architecture_hash, load_weights, params_fingerprint, read_weights, save_weights, write_weights};
pub use layers::{build_block, Block, BlockSpec, DenseSpec, LayerSpec, Stage};
pub use loss::l1_loss;
pub use network::{Architecture, Network, Trace};
pub use objective::{Composed, DirectL1, Objective};
pub use samples::Samples;
pub use tensor::Tensor1D;
pub use train::{mean_loss, total_loss, train, EarlyStopping, StopReason, TrainConfig, TrainHistory};

//! Architecture search for compact 1D-convolutional networks approximating the
//! forward and inverse operators of 1D borehole resistivity problems.
//!
//! The crate is layered bottom-up:
//!
//! * [`nn`]: a small trainable network kernel (1D convolutions, residual
//!   blocks, dense heads, L1 loss, reverse-mode gradients, Adam training with
//!   patience-based early stopping).
//! * [`arch`]: the discrete search spaces and the builders that turn a
//!   hyperparameter set into a concrete network.
//! * [`gp`]: Gaussian-process regression with a Matérn 5/2 kernel.
//! * [`tuner`]: the scoring function and the grid, random and Bayesian (UCB)
//!   searches.
//! * [`geo`]: formation sampling, a dipole surrogate of the logging tools,
//!   measurement scaling and dataset files.
//! * [`pipeline`]: two-step training (forward first, then the inverse under the
//!   re-simulation loss) and the nested tuning problems.

pub mod arch;
pub mod error;
pub mod geo;
pub mod gp;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod tuner;

pub use arch::{ForwardHyperparams, HyperPoint, InverseHyperparams, ReferenceConfig, SearchSpace};
pub use error::{Error, Result};
pub use geo::{DipAngle, FormationParams, MeasurementVector};
pub use gp::{EncodedPoint, GpModel};
pub use nn::{Network, Samples, TrainConfig, TrainHistory};
pub use tuner::{ScoreBreakdown, SearchBudget, Strategy, TrialRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

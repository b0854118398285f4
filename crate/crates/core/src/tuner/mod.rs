//! Scoring of candidate architectures and the three search strategies.

mod log;
mod search;

pub use log::{read_trials, write_score_csv, TrialLogWriter};
pub use search::{bayesian_search, grid_search, random_search, run_search, SearchOutcome};

use serde::{Deserialize, Serialize};

use crate::arch::{HyperPoint, NamedPoint, ReferenceConfig};
use crate::error::Result;
use crate::nn::StopReason;

pub const DEFAULT_UCB_ALPHA: f64 = 2.6;
pub const DEFAULT_EXHAUSTION_WINDOW: usize = 5;
pub const DEFAULT_INITIAL_RANDOM: usize = 5;

/// Relative validation-error increase minus relative parameter-count decrease,
/// both against the reference architecture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreBreakdown {
    pub relative_error: f64,
    pub relative_size_decrease: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub const FAILED: Self = Self {
        relative_error: f64::INFINITY,
        relative_size_decrease: 0.0,
        total: f64::INFINITY,
    };
}

pub fn score(loss: f64, n_params: usize, reference: &ReferenceConfig) -> Result<ScoreBreakdown> {
    reference.validate()?;
    let relative_error = (loss - reference.loss) / reference.loss;
    let n_ref = reference.n_params as f64;
    let relative_size_decrease = (n_ref - n_params as f64) / n_ref;
    Ok(ScoreBreakdown {
        relative_error,
        relative_size_decrease,
        total: relative_error - relative_size_decrease,
    })
}

/// Lower confidence form used for minimization: `mean - alpha * std`.
pub fn ucb(mean: f64, std: f64, alpha: f64) -> f64 {
    mean - alpha * std
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Grid,
    Random,
    Bayesian,
}

impl std::str::FromStr for Strategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "random" => Ok(Self::Random),
            "bayesian" => Ok(Self::Bayesian),
            other => Err(crate::Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Grid => "grid",
            Self::Random => "random",
            Self::Bayesian => "bayesian",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    pub max_trials: usize,
    /// Consecutive already-tried draws that end a random search; `None`
    /// disables the rule.
    pub exhaustion_window: Option<usize>,
    pub initial_random: usize,
    pub ucb_alpha: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_trials: 1000,
            exhaustion_window: Some(DEFAULT_EXHAUSTION_WINDOW),
            initial_random: DEFAULT_INITIAL_RANDOM,
            ucb_alpha: DEFAULT_UCB_ALPHA,
            jitter: crate::gp::DEFAULT_JITTER,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.into()));
        if self.max_trials == 0 {
            return bad("max_trials must be positive");
        }
        if self.exhaustion_window == Some(0) {
            return bad("exhaustion_window must be positive");
        }
        if self.initial_random == 0 || self.initial_random > self.max_trials {
            return bad("initial_random must lie in 1..=max_trials");
        }
        if !(self.ucb_alpha > 0.0 && self.ucb_alpha.is_finite()) {
            return bad("ucb_alpha must be positive");
        }
        if !(self.jitter > 0.0) {
            return bad("jitter must be positive");
        }
        Ok(())
    }
}

/// Outcome of training one candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Validation loss, summed over the validation set.
    pub loss: f64,
    pub n_params: usize,
    pub epochs: usize,
    pub stop_reason: StopReason,
    pub seed: u64,
}

pub trait TrialEvaluator {
    fn evaluate(&mut self, h: &HyperPoint) -> Result<Evaluation>;
}

impl<F: FnMut(&HyperPoint) -> Result<Evaluation>> TrialEvaluator for F {
    fn evaluate(&mut self, h: &HyperPoint) -> Result<Evaluation> {
        self(h)
    }
}

/// How a trial's hyperparameters were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acquisition {
    Grid,
    Random,
    Initial,
    Ucb,
    /// Uniform pick after the surrogate could not be fitted.
    Fallback,
}

/// One line of the trial log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub strategy: Strategy,
    pub iteration: usize,
    pub h: NamedPoint,
    #[serde(skip)]
    pub point: HyperPoint,
    #[serde(rename = "H", with = "finite_or_null")]
    pub loss: f64,
    #[serde(rename = "Np")]
    pub n_params: usize,
    #[serde(with = "finite_or_null")]
    pub score_error_term: f64,
    #[serde(with = "finite_or_null")]
    pub score_size_term: f64,
    #[serde(with = "finite_or_null")]
    pub score_total: f64,
    pub epochs: usize,
    pub wall_seconds: f64,
    pub stop_reason: Option<StopReason>,
    pub seed: u64,
    pub acquisition: Acquisition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn score(&self) -> ScoreBreakdown {
        ScoreBreakdown {
            relative_error: self.score_error_term,
            relative_size_decrease: self.score_size_term,
            total: self.score_total,
        }
    }
}

/// Non-finite values (failed trials) travel as JSON `null` and read back as +∞.
mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

//! Two-step training and the two nested architecture searches: tune and
//! train the forward operator, freeze it, then tune and train the inverse
//! operator through the re-simulation misfit.

mod export;
mod invert;

pub use export::{
    forward_cross_plot, inverse_cross_plot, r_squared, write_cross_plot_csv, write_history_csv, write_r2_csv,
    CrossPlot,
};
pub use invert::{invert_log, write_profile_csv, InversionRow, INPUT_WINDOW};

use serde::{Deserialize, Serialize};

use crate::arch::{ForwardHyperparams, HyperPoint, Hyperparams, InverseHyperparams, ReferenceConfig, SearchSpace};
use crate::error::{check_len, Error, Result};
use crate::geo::Dataset;
use crate::nn::{
    params_fingerprint, total_loss, train, Composed, DirectL1, Network, Objective, Samples, TrainConfig, TrainHistory,
};
use crate::seed::derive;
use crate::tuner::{run_search, Evaluation, SearchBudget, SearchOutcome, Strategy, TrialRecord};

/// Input positions of the inverse net copied into the forward net's input
/// after the predicted parameters: the dip.
pub const DIP_CARRY: std::ops::Range<usize> = 13..14;

const INIT_LABEL: u64 = 0x1417;
const FINAL_LABEL: u64 = 0xF1A1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Forward,
    Inverse,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::Inverse => "inverse",
        }
    }

    fn label(self) -> u64 {
        match self {
            Self::Forward => 1,
            Self::Inverse => 2,
        }
    }

    pub fn default_space(self) -> SearchSpace {
        match self {
            Self::Forward => SearchSpace::forward(),
            Self::Inverse => SearchSpace::inverse(),
        }
    }

    /// The reference architectures lie outside the default grids.
    pub fn default_reference(self) -> HyperPoint {
        match self {
            Self::Forward => HyperPoint(vec![5, 3, 3, 1]),
            Self::Inverse => HyperPoint(vec![6, 3, 3]),
        }
    }

    fn dimension_names(self) -> &'static [&'static str] {
        match self {
            Self::Forward => &["n", "k0", "k1", "l"],
            Self::Inverse => &["n", "k0", "k1"],
        }
    }

    fn param_count(self, h: &HyperPoint, width: usize) -> Result<usize> {
        match self {
            Self::Forward => ForwardHyperparams::from_point(h)?.count_params(width),
            Self::Inverse => InverseHyperparams::from_point(h)?.count_params(width),
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Self::Forward),
            "inverse" => Ok(Self::Inverse),
            other => Err(Error::Config(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub strategy: Strategy,
    pub budget: SearchBudget,
    pub train: TrainConfig,
    /// Defaults to the phase's standard grid.
    pub space: Option<SearchSpace>,
    /// Defaults to the phase's standard reference point.
    pub reference: Option<HyperPoint>,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bayesian,
            budget: SearchBudget {
                max_trials: 30,
                ..SearchBudget::default()
            },
            train: TrainConfig::default(),
            space: None,
            reference: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub width: usize,
    pub seed: u64,
    /// Share of the tuning set held out for validation.
    pub validation_fraction: f64,
    /// Trials stop once validation loss reaches this multiple of the
    /// reference loss; `None` disables the cutoff.
    pub cutoff_factor: Option<f64>,
    pub forward: PhaseConfig,
    pub inverse: PhaseConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 8,
            seed: 0,
            validation_fraction: 0.2,
            cutoff_factor: Some(1.1),
            forward: PhaseConfig::default(),
            inverse: PhaseConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn phase(&self, phase: Phase) -> &PhaseConfig {
        match phase {
            Phase::Forward => &self.forward,
            Phase::Inverse => &self.inverse,
        }
    }

    pub fn space(&self, phase: Phase) -> SearchSpace {
        self.phase(phase).space.clone().unwrap_or_else(|| phase.default_space())
    }

    pub fn reference_point(&self, phase: Phase) -> HyperPoint {
        self.phase(phase).reference.clone().unwrap_or_else(|| phase.default_reference())
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("width must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must lie in (0, 1)".into()));
        }
        if self.cutoff_factor.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("cutoff_factor must be positive".into()));
        }
        for phase in [Phase::Forward, Phase::Inverse] {
            let pc = self.phase(phase);
            pc.train.validate()?;
            if pc.strategy != Strategy::Grid {
                pc.budget.validate()?;
            }
            let space = self.space(phase);
            if space.names() != phase.dimension_names() {
                return Err(Error::Config(format!(
                    "{} space must have dimensions {:?}, got {:?}",
                    phase.name(),
                    phase.dimension_names(),
                    space.names()
                )));
            }
            for h in space.enumerate().iter().chain([&self.reference_point(phase)]) {
                phase.param_count(h, self.width)?;
            }
        }
        Ok(())
    }
}

/// Train/validation records of one dataset, in both phase layouts.
#[derive(Clone, Debug)]
pub struct Split {
    pub forward_train: Samples,
    pub forward_val: Samples,
    pub inverse_train: Samples,
    pub inverse_val: Samples,
}

impl Split {
    pub fn new(data: &Dataset, validation_fraction: f64) -> Result<Self> {
        let (train, val) = data.split(1.0 - validation_fraction);
        if train.is_empty() || val.is_empty() {
            return Err(Error::Config(format!(
                "dataset of {} records is too small to split",
                data.len()
            )));
        }
        Ok(Self {
            forward_train: train.forward_samples(),
            forward_val: val.forward_samples(),
            inverse_train: train.inverse_samples(),
            inverse_val: val.inverse_samples(),
        })
    }

    fn val_len(&self) -> usize {
        self.forward_val.len()
    }
}

/// A trained network, its history and the summed validation loss.
#[derive(Clone, Debug)]
pub struct TrainedNet {
    pub net: Network,
    pub history: TrainHistory,
    pub loss: f64,
}

fn check_forward(forward: &Network) -> Result<()> {
    check_len("forward network input", crate::arch::FORWARD_INPUTS, forward.input_len())?;
    check_len("forward network output", crate::arch::MEASUREMENTS, forward.output_len())
}

pub fn fit_forward(net: &mut Network, train_set: &Samples, val: &Samples, config: &TrainConfig) -> Result<TrainedNet> {
    check_forward(net)?;
    let history = train(net, &DirectL1, train_set, val, config)?;
    let loss = total_loss(net, &DirectL1, val);
    Ok(TrainedNet {
        net: net.clone(),
        history,
        loss,
    })
}

pub fn train_forward(
    h: &ForwardHyperparams,
    width: usize,
    train_set: &Samples,
    val: &Samples,
    config: &TrainConfig,
) -> Result<TrainedNet> {
    let mut net = h.build(width, derive(config.seed, &[INIT_LABEL]))?;
    fit_forward(&mut net, train_set, val, config)
}

/// Trains `net` through the frozen `forward` net. Fails if `forward`'s
/// parameters change, which would break the freeze contract.
pub fn fit_inverse(
    net: &mut Network,
    forward: &Network,
    train_set: &Samples,
    val: &Samples,
    config: &TrainConfig,
) -> Result<TrainedNet> {
    check_forward(forward)?;
    let before = params_fingerprint(forward.params());
    let objective = Composed {
        outer: forward,
        carry: DIP_CARRY,
    };
    let history = train(net, &objective, train_set, val, config)?;
    let loss = total_loss(net, &objective, val);
    if params_fingerprint(forward.params()) != before {
        return Err(Error::Usage("forward weights changed during inverse training".into()));
    }
    Ok(TrainedNet {
        net: net.clone(),
        history,
        loss,
    })
}

pub fn train_inverse(
    h: &InverseHyperparams,
    width: usize,
    forward: &Network,
    train_set: &Samples,
    val: &Samples,
    config: &TrainConfig,
) -> Result<TrainedNet> {
    let mut net = h.build(width, derive(config.seed, &[INIT_LABEL]))?;
    fit_inverse(&mut net, forward, train_set, val, config)
}

/// Seed of the trial for `h`; logged so any trial can be replayed.
pub fn trial_seed(base: u64, phase: Phase, h: &HyperPoint) -> u64 {
    let mut labels = vec![phase.label()];
    labels.extend(h.0.iter().map(|&v| v as u64));
    derive(base, &labels)
}

fn final_seed(base: u64, phase: Phase, h: &HyperPoint) -> u64 {
    trial_seed(derive(base, &[FINAL_LABEL]), phase, h)
}

/// Trains `h` for one phase and reports the summed validation loss. The
/// forward net is required for the inverse phase.
pub fn evaluate_trial(
    config: &PipelineConfig,
    phase: Phase,
    split: &Split,
    forward: Option<&Network>,
    h: &HyperPoint,
    seed: u64,
    loss_cutoff: Option<f64>,
) -> Result<(TrainedNet, Evaluation)> {
    let train_config = TrainConfig {
        seed,
        loss_cutoff,
        ..config.phase(phase).train.clone()
    };
    let trained = match phase {
        Phase::Forward => train_forward(
            &ForwardHyperparams::from_point(h)?,
            config.width,
            &split.forward_train,
            &split.forward_val,
            &train_config,
        )?,
        Phase::Inverse => train_inverse(
            &InverseHyperparams::from_point(h)?,
            config.width,
            forward.ok_or_else(|| Error::Usage("inverse phase needs the trained forward network".into()))?,
            &split.inverse_train,
            &split.inverse_val,
            &train_config,
        )?,
    };
    let evaluation = Evaluation {
        loss: trained.loss,
        n_params: trained.net.param_count(),
        epochs: trained.history.epochs(),
        stop_reason: trained.history.stop_reason,
        seed,
    };
    Ok((trained, evaluation))
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub phase: Phase,
    pub reference: ReferenceConfig,
    pub reference_history: TrainHistory,
    pub search: SearchOutcome,
}

/// Trains the reference once without cutoff, then runs the configured search
/// on `split`, scoring against it.
pub fn tune_phase(
    config: &PipelineConfig,
    phase: Phase,
    split: &Split,
    forward: Option<&Network>,
    observer: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<PhaseOutcome> {
    config.validate()?;
    if phase == Phase::Inverse && forward.is_none() {
        return Err(Error::Usage("inverse tuning needs a completed forward phase".into()));
    }
    let ref_h = config.reference_point(phase);
    let (ref_net, _) = evaluate_trial(config, phase, split, forward, &ref_h, trial_seed(config.seed, phase, &ref_h), None)?;
    let reference = ReferenceConfig::new(ref_h, ref_net.loss, ref_net.net.param_count())?;
    // trials stop on mean validation loss, the reference is a sum
    let cutoff = config.cutoff_factor.map(|c| c * reference.loss / split.val_len() as f64);
    let mut evaluator = |h: &HyperPoint| {
        evaluate_trial(config, phase, split, forward, h, trial_seed(config.seed, phase, h), cutoff).map(|(_, e)| e)
    };
    let pc = config.phase(phase);
    let search = run_search(pc.strategy, &config.space(phase), &mut evaluator, &reference, &pc.budget, observer)?;
    Ok(PhaseOutcome {
        phase,
        reference,
        reference_history: ref_net.history,
        search,
    })
}

pub fn tune_forward(
    config: &PipelineConfig,
    split: &Split,
    observer: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<PhaseOutcome> {
    tune_phase(config, Phase::Forward, split, None, observer)
}

pub fn tune_inverse(
    config: &PipelineConfig,
    split: &Split,
    forward: &Network,
    observer: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<PhaseOutcome> {
    tune_phase(config, Phase::Inverse, split, Some(forward), observer)
}

/// Retrains `h` on the full dataset with the trial cutoff disabled.
pub fn final_train(
    config: &PipelineConfig,
    phase: Phase,
    full: &Split,
    forward: Option<&Network>,
    h: &HyperPoint,
) -> Result<TrainedNet> {
    evaluate_trial(config, phase, full, forward, h, final_seed(config.seed, phase, h), None).map(|(t, _)| t)
}

#[derive(Clone, Debug)]
pub struct StageResult {
    pub tuning: PhaseOutcome,
    pub h: HyperPoint,
    pub trained: TrainedNet,
}

/// Summary on the held-out set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub forward_val_mean_loss: f64,
    pub forward_r2: Vec<f64>,
    pub inverse_initial_val_mean_loss: f64,
    pub inverse_val_mean_loss: f64,
    pub inverse_param_r2: Vec<f64>,
    pub resimulation_median_misfit: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub forward: StageResult,
    pub inverse: StageResult,
    pub metrics: PipelineMetrics,
}

/// Sequential driver; each phase refuses to run before its prerequisites.
pub struct Pipeline {
    config: PipelineConfig,
    tuning: Split,
    full: Split,
    forward: Option<StageResult>,
    inverse: Option<StageResult>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, tuning: &Dataset, full: &Dataset) -> Result<Self> {
        config.validate()?;
        if tuning.scaling() != full.scaling() {
            return Err(Error::Config("tuning and full datasets use different scaling tables".into()));
        }
        Ok(Self {
            tuning: Split::new(tuning, config.validation_fraction)?,
            full: Split::new(full, config.validation_fraction)?,
            config,
            forward: None,
            inverse: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn tuning_split(&self) -> &Split {
        &self.tuning
    }

    pub fn forward(&self) -> Option<&StageResult> {
        self.forward.as_ref()
    }

    pub fn inverse(&self) -> Option<&StageResult> {
        self.inverse.as_ref()
    }

    pub fn run_forward(&mut self, observer: &mut dyn FnMut(&TrialRecord) -> Result<()>) -> Result<&StageResult> {
        let tuning = tune_forward(&self.config, &self.tuning, observer)?;
        let h = tuning.search.best.clone();
        let trained = final_train(&self.config, Phase::Forward, &self.full, None, &h)?;
        self.inverse = None;
        Ok(self.forward.insert(StageResult { tuning, h, trained }))
    }

    pub fn run_inverse(&mut self, observer: &mut dyn FnMut(&TrialRecord) -> Result<()>) -> Result<&StageResult> {
        let forward = &self
            .forward
            .as_ref()
            .ok_or_else(|| Error::Usage("inverse phase requested before the forward phase completed".into()))?
            .trained
            .net;
        let tuning = tune_inverse(&self.config, &self.tuning, forward, observer)?;
        let h = tuning.search.best.clone();
        let trained = final_train(&self.config, Phase::Inverse, &self.full, Some(forward), &h)?;
        Ok(self.inverse.insert(StageResult { tuning, h, trained }))
    }

    /// Metrics of both final networks on `held_out`.
    pub fn evaluate(&self, held_out: &Dataset) -> Result<PipelineMetrics> {
        let (Some(f), Some(i)) = (&self.forward, &self.inverse) else {
            return Err(Error::Usage("evaluation needs both phases".into()));
        };
        evaluate_pair(&f.trained.net, &i.trained.net, &i.trained.history, held_out)
    }

    pub fn run(
        mut self,
        held_out: &Dataset,
        observer: &mut dyn FnMut(Phase, &TrialRecord) -> Result<()>,
    ) -> Result<PipelineResult> {
        self.run_forward(&mut |t| observer(Phase::Forward, t))?;
        self.run_inverse(&mut |t| observer(Phase::Inverse, t))?;
        let metrics = self.evaluate(held_out)?;
        Ok(PipelineResult {
            forward: self.forward.take().expect("forward phase ran"),
            inverse: self.inverse.take().expect("inverse phase ran"),
            metrics,
        })
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Held-out metrics for a trained pair; `inverse_history` supplies the loss
/// at initialization.
pub fn evaluate_pair(
    forward: &Network,
    inverse: &Network,
    inverse_history: &TrainHistory,
    held_out: &Dataset,
) -> Result<PipelineMetrics> {
    check_forward(forward)?;
    let fwd = held_out.forward_samples();
    let inv = held_out.inverse_samples();
    let composed = Composed {
        outer: forward,
        carry: DIP_CARRY,
    };
    composed.check_dims(inverse, inv.input_dim(), inv.target_dim())?;
    let n = held_out.len() as f64;
    let fcp = forward_cross_plot(forward, held_out)?;
    let icp = inverse_cross_plot(inverse, held_out)?;
    let misfits: Vec<f64> = inv.iter().map(|(x, y)| composed.loss(inverse, x, y)).collect();
    Ok(PipelineMetrics {
        forward_val_mean_loss: total_loss(forward, &DirectL1, &fwd) / n,
        forward_r2: fcp.r2(),
        inverse_initial_val_mean_loss: inverse_history.initial_val_loss,
        inverse_val_mean_loss: misfits.iter().sum::<f64>() / n,
        inverse_param_r2: icp.r2(),
        resimulation_median_misfit: median(misfits),
    })
}

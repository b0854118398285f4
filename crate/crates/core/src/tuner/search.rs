use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{score, ucb, Acquisition, Evaluation, ScoreBreakdown, SearchBudget, Strategy, TrialEvaluator, TrialRecord};
use crate::arch::{HyperPoint, ReferenceConfig, SearchSpace};
use crate::error::{Error, Result};
use crate::gp::GpModel;

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: HyperPoint,
    pub trials: Vec<TrialRecord>,
    /// Random draws, including repeats.
    pub draws: usize,
    pub repeat_draws: usize,
    pub evaluator_calls: usize,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialRecord {
        self.trials.iter().find(|t| t.point == self.best).expect("best is evaluated")
    }
}

/// Shared bookkeeping: the evaluation cache, trial records and the observer.
struct Session<'a> {
    space: &'a SearchSpace,
    reference: &'a ReferenceConfig,
    strategy: Strategy,
    evaluator: &'a mut dyn TrialEvaluator,
    observer: &'a mut dyn FnMut(&TrialRecord) -> Result<()>,
    evaluated: BTreeSet<HyperPoint>,
    trials: Vec<TrialRecord>,
    calls: usize,
}

impl Session<'_> {
    fn is_evaluated(&self, h: &HyperPoint) -> bool {
        self.evaluated.contains(h)
    }

    fn evaluate(&mut self, h: &HyperPoint, acquisition: Acquisition) -> Result<()> {
        if !self.evaluated.insert(h.clone()) {
            return Ok(());
        }
        self.calls += 1;
        let started = Instant::now();
        let result = self.evaluator.evaluate(h);
        let wall_seconds = started.elapsed().as_secs_f64();
        let (eval, breakdown, error) = match result {
            Ok(e) => match score(e.loss, e.n_params, self.reference) {
                Ok(s) if s.total.is_finite() => (Some(e), s, None),
                Ok(_) => (Some(e), ScoreBreakdown::FAILED, Some("non-finite score".to_string())),
                Err(err) => (Some(e), ScoreBreakdown::FAILED, Some(err.to_string())),
            },
            Err(err) => (None, ScoreBreakdown::FAILED, Some(err.to_string())),
        };
        let record = TrialRecord {
            strategy: self.strategy,
            iteration: self.trials.len(),
            h: self.space.named(h),
            point: h.clone(),
            loss: eval.as_ref().map_or(f64::INFINITY, |e| e.loss),
            n_params: eval.as_ref().map_or(0, |e| e.n_params),
            score_error_term: breakdown.relative_error,
            score_size_term: breakdown.relative_size_decrease,
            score_total: breakdown.total,
            epochs: eval.as_ref().map_or(0, |e| e.epochs),
            wall_seconds,
            stop_reason: eval.as_ref().map(|e: &Evaluation| e.stop_reason),
            seed: eval.as_ref().map_or(0, |e| e.seed),
            acquisition,
            error,
        };
        (self.observer)(&record)?;
        self.trials.push(record);
        Ok(())
    }

    fn finish(self, draws: usize, repeat_draws: usize) -> Result<SearchOutcome> {
        let best = best_of(&self.trials).ok_or_else(|| Error::Usage("search evaluated no trials".into()))?;
        Ok(SearchOutcome {
            best,
            trials: self.trials,
            draws,
            repeat_draws,
            evaluator_calls: self.calls,
        })
    }
}

/// Minimum total score; ties go to the lexicographically smallest point.
fn best_of(trials: &[TrialRecord]) -> Option<HyperPoint> {
    trials
        .iter()
        .min_by(|a, b| a.score_total.total_cmp(&b.score_total).then_with(|| a.point.cmp(&b.point)))
        .map(|t| t.point.clone())
}

pub fn run_search(
    strategy: Strategy,
    space: &SearchSpace,
    evaluator: &mut dyn TrialEvaluator,
    reference: &ReferenceConfig,
    budget: &SearchBudget,
    observer: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<SearchOutcome> {
    reference.validate()?;
    if strategy != Strategy::Grid {
        budget.validate()?;
    }
    let mut session = Session {
        space,
        reference,
        strategy,
        evaluator,
        observer,
        evaluated: BTreeSet::new(),
        trials: Vec::new(),
        calls: 0,
    };
    match strategy {
        Strategy::Grid => {
            for h in space.enumerate() {
                session.evaluate(&h, Acquisition::Grid)?;
            }
            session.finish(0, 0)
        }
        Strategy::Random => random(session, budget),
        Strategy::Bayesian => bayesian(session, budget),
    }
}

fn random(mut s: Session<'_>, budget: &SearchBudget) -> Result<SearchOutcome> {
    let candidates = s.space.enumerate();
    let mut rng = crate::seed::rng(budget.seed);
    let (mut draws, mut repeats, mut consecutive) = (0, 0, 0);
    loop {
        if s.trials.len() >= budget.max_trials {
            break;
        }
        if budget.exhaustion_window.is_none() && s.evaluated.len() == candidates.len() {
            break;
        }
        let h = &candidates[rng.random_range(0..candidates.len())];
        draws += 1;
        if s.is_evaluated(h) {
            repeats += 1;
            consecutive += 1;
            if budget.exhaustion_window.is_some_and(|w| consecutive >= w) {
                break;
            }
            continue;
        }
        consecutive = 0;
        s.evaluate(h, Acquisition::Random)?;
    }
    s.finish(draws, repeats)
}

fn bayesian(mut s: Session<'_>, budget: &SearchBudget) -> Result<SearchOutcome> {
    let candidates = s.space.enumerate();
    let mut rng = crate::seed::rng(budget.seed);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut rng);
    let initial = budget.initial_random.min(candidates.len()).min(budget.max_trials);
    for &i in &order[..initial] {
        s.evaluate(&candidates[i], Acquisition::Initial)?;
    }
    let encoded = candidates.iter().map(|h| s.space.encode(h)).collect::<Result<Vec<_>>>()?;

    while s.trials.len() < budget.max_trials && s.evaluated.len() < candidates.len() {
        let open: Vec<usize> = (0..candidates.len()).filter(|&i| !s.is_evaluated(&candidates[i])).collect();
        let observations: Vec<_> = candidates
            .iter()
            .zip(&encoded)
            .filter_map(|(h, e)| {
                let t = s.trials.iter().find(|t| &t.point == h)?;
                t.score_total.is_finite().then(|| (e.clone(), t.score_total))
            })
            .collect();
        let pick = if observations.is_empty() {
            None
        } else {
            GpModel::fit(&observations, budget.jitter).ok().and_then(|model| {
                let queries: Vec<_> = open.iter().map(|&i| encoded[i].clone()).collect();
                let post = model.posterior(&queries).ok()?;
                let mut best: Option<(f64, usize)> = None;
                for (&i, p) in open.iter().zip(&post) {
                    let a = ucb(p.mean, p.std, budget.ucb_alpha);
                    // open is in enumeration order, so strict < keeps the lexicographic tie-break
                    if a.is_finite() && best.is_none_or(|(b, _)| a < b) {
                        best = Some((a, i));
                    }
                }
                best.map(|(_, i)| i)
            })
        };
        match pick {
            Some(i) => s.evaluate(&candidates[i], Acquisition::Ucb)?,
            None => {
                let i = open[rng.random_range(0..open.len())];
                s.evaluate(&candidates[i], Acquisition::Fallback)?;
            }
        }
    }
    s.finish(initial, 0)
}

pub fn grid_search(
    space: &SearchSpace,
    evaluator: &mut dyn TrialEvaluator,
    reference: &ReferenceConfig,
) -> Result<SearchOutcome> {
    run_search(Strategy::Grid, space, evaluator, reference, &SearchBudget::default(), &mut |_| Ok(()))
}

pub fn random_search(
    space: &SearchSpace,
    evaluator: &mut dyn TrialEvaluator,
    reference: &ReferenceConfig,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    run_search(Strategy::Random, space, evaluator, reference, budget, &mut |_| Ok(()))
}

pub fn bayesian_search(
    space: &SearchSpace,
    evaluator: &mut dyn TrialEvaluator,
    reference: &ReferenceConfig,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    run_search(Strategy::Bayesian, space, evaluator, reference, budget, &mut |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::StopReason;

    fn reference() -> ReferenceConfig {
        ReferenceConfig::new(HyperPoint(vec![0]), 1.0, 1000).unwrap()
    }

    /// Evaluator whose score equals `f(h)` exactly (constant parameter count).
    fn landscape(f: impl Fn(&HyperPoint) -> f64) -> impl FnMut(&HyperPoint) -> Result<Evaluation> {
        move |h| {
            Ok(Evaluation {
                loss: 1.0 + f(h),
                n_params: 1000,
                epochs: 1,
                stop_reason: StopReason::MaxEpochs,
                seed: 0,
            })
        }
    }

    #[test]
    fn grid_on_singleton() {
        let space = SearchSpace::from_grids(&[("n", &[2])]).unwrap();
        let mut ev = landscape(|_| 0.0);
        let out = grid_search(&space, &mut ev, &reference()).unwrap();
        assert_eq!(out.trials.len(), 1);
        assert_eq!(out.best, HyperPoint(vec![2]));
    }

    #[test]
    fn grid_prefers_smaller_models_at_equal_loss() {
        let space = SearchSpace::from_grids(&[("a", &[1, 2, 3]), ("b", &[1, 2])]).unwrap();
        let points = space.enumerate();
        let mut ev = |h: &HyperPoint| {
            let rank = points.iter().position(|p| p == h).unwrap();
            Ok(Evaluation {
                loss: 1.0,
                n_params: 1000 - 10 * rank,
                epochs: 1,
                stop_reason: StopReason::MaxEpochs,
                seed: 0,
            })
        };
        let out = grid_search(&space, &mut ev, &reference()).unwrap();
        assert_eq!(&out.best, points.last().unwrap());
    }

    #[test]
    fn grid_ties_break_lexicographically() {
        let space = SearchSpace::from_grids(&[("a", &[1, 2, 3])]).unwrap();
        let mut ev = landscape(|h| if h.0[0] == 1 { 0.5 } else { -1.0 });
        let out = grid_search(&space, &mut ev, &reference()).unwrap();
        assert_eq!(out.best, HyperPoint(vec![2]));
    }

    #[test]
    fn failed_trials_score_infinity_and_search_continues() {
        let space = SearchSpace::from_grids(&[("a", &[1, 2, 3])]).unwrap();
        let mut inner = landscape(|h| h.0[0] as f64);
        let mut ev = |h: &HyperPoint| {
            if h.0[0] == 1 {
                Err(Error::Evaluation("boom".into()))
            } else {
                inner(h)
            }
        };
        let out = grid_search(&space, &mut ev, &reference()).unwrap();
        assert_eq!(out.trials.len(), 3);
        assert!(out.trials[0].failed());
        assert_eq!(out.trials[0].score_total, f64::INFINITY);
        assert_eq!(out.best, HyperPoint(vec![2]));
    }

    #[test]
    fn random_exhaustion_on_singleton() {
        let space = SearchSpace::from_grids(&[("n", &[1])]).unwrap();
        let mut calls = 0;
        let mut inner = landscape(|_| 0.0);
        let mut ev = |h: &HyperPoint| {
            calls += 1;
            inner(h)
        };
        let out = random_search(&space, &mut ev, &reference(), &SearchBudget::default()).unwrap();
        assert_eq!(calls, 1);
        assert_eq!(out.trials.len(), 1);
        assert_eq!(out.repeat_draws, 5);
        assert_eq!(out.draws, 6);
    }

    #[test]
    fn random_same_seed_same_sequence() {
        let space = SearchSpace::inverse();
        let budget = SearchBudget { max_trials: 20, seed: 3, ..Default::default() };
        let run = || {
            let mut ev = landscape(|h| h.0.iter().sum::<usize>() as f64 / 10.0);
            random_search(&space, &mut ev, &reference(), &budget).unwrap()
        };
        let a: Vec<_> = run().trials.into_iter().map(|t| t.point).collect();
        let b: Vec<_> = run().trials.into_iter().map(|t| t.point).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn bayesian_one_dimensional_quadratic() {
        let grid: Vec<usize> = (1..=20).collect();
        let space = SearchSpace::from_grids(&[("h", &grid)]).unwrap();
        let f = |h: &HyperPoint| (h.0[0] as f64 - 7.0).powi(2) / 49.0 - 0.3;
        let budget = SearchBudget { max_trials: 12, initial_random: 3, seed: 1, ..Default::default() };
        let mut ev = landscape(f);
        let out = bayesian_search(&space, &mut ev, &reference(), &budget).unwrap();
        assert_eq!(out.best, HyperPoint(vec![7]));
        let mut ev = landscape(f);
        assert_eq!(grid_search(&space, &mut ev, &reference()).unwrap().best, HyperPoint(vec![7]));
    }

    #[test]
    fn bayesian_never_repeats_and_falls_back_when_all_fail() {
        let space = SearchSpace::from_grids(&[("a", &[1, 2, 3, 4, 5, 6])]).unwrap();
        let mut ev = |_: &HyperPoint| -> Result<Evaluation> { Err(Error::Evaluation("x".into())) };
        let budget = SearchBudget { max_trials: 6, initial_random: 2, ..Default::default() };
        let out = bayesian_search(&space, &mut ev, &reference(), &budget).unwrap();
        assert_eq!(out.trials.len(), 6);
        assert!(out.trials[2..].iter().all(|t| t.acquisition == Acquisition::Fallback));
        let distinct: BTreeSet<_> = out.trials.iter().map(|t| t.point.clone()).collect();
        assert_eq!(distinct.len(), 6);
    }
}

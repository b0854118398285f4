use std::collections::HashSet;

use geonas_core::arch::{HyperPoint, ReferenceConfig, SearchSpace};
use geonas_core::nn::StopReason;
use geonas_core::tuner::{
    bayesian_search, grid_search, random_search, run_search, score, Evaluation, SearchBudget, Strategy,
};
use geonas_core::Result;
use proptest::prelude::*;

fn reference() -> ReferenceConfig {
    ReferenceConfig::new(HyperPoint(vec![0]), 10.0, 5000).unwrap()
}

fn synthetic(f: impl Fn(&[usize]) -> (f64, usize)) -> impl FnMut(&HyperPoint) -> Result<Evaluation> {
    move |h| {
        let (loss, n_params) = f(&h.0);
        Ok(Evaluation {
            loss,
            n_params,
            epochs: 1,
            stop_reason: StopReason::MaxEpochs,
            seed: 0,
        })
    }
}

fn quadratic_space() -> SearchSpace {
    SearchSpace::from_grids(&[("a", &[1, 2, 3, 4, 5, 6]), ("b", &[1, 3, 5, 7, 9, 11]), ("c", &[1, 2, 3, 4, 5])]).unwrap()
}

fn quadratic(h: &[usize]) -> (f64, usize) {
    let (a, b, c) = (h[0] as f64, h[1] as f64, h[2] as f64);
    (5.0 + (a - 4.0).powi(2) + 0.3 * (b - 7.0).powi(2) + 0.8 * (c - 2.0).powi(2), 3000)
}

#[test]
fn full_budget_searches_agree_with_grid() {
    let space = quadratic_space();
    let n = space.cardinality();
    let grid = grid_search(&space, &mut synthetic(quadratic), &reference()).unwrap();
    let bayes_budget = SearchBudget { max_trials: n, ..SearchBudget::default() };
    let bayes = bayesian_search(&space, &mut synthetic(quadratic), &reference(), &bayes_budget).unwrap();
    let rand_budget = SearchBudget {
        max_trials: n,
        exhaustion_window: None,
        ..SearchBudget::default()
    };
    let rand = random_search(&space, &mut synthetic(quadratic), &reference(), &rand_budget).unwrap();
    assert_eq!(grid.best, HyperPoint(vec![4, 7, 2]));
    assert_eq!(bayes.best, grid.best);
    assert_eq!(rand.best, grid.best);
    assert_eq!(bayes.trials.len(), n);
    assert_eq!(rand.trials.len(), n);
}

#[test]
fn partial_bayesian_budget_finds_quadratic_minimum() {
    let space = quadratic_space();
    let budget = space.cardinality() * 2 / 5;
    let hits = (0..5)
        .filter(|&seed| {
            let b = SearchBudget { max_trials: budget, seed, ..SearchBudget::default() };
            bayesian_search(&space, &mut synthetic(quadratic), &reference(), &b).unwrap().best == HyperPoint(vec![4, 7, 2])
        })
        .count();
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn size_only_landscape_picks_fewest_parameters() {
    let space = SearchSpace::inverse();
    let mut ev = synthetic(|h| (10.0, 100 * h[0] + 10 * h[1] + h[2]));
    let out = grid_search(&space, &mut ev, &reference()).unwrap();
    assert_eq!(out.best, HyperPoint(vec![1, 3, 3]));
}

#[test]
fn grid_covers_both_spaces() {
    for (space, n) in [(SearchSpace::forward(), 108), (SearchSpace::inverse(), 45)] {
        let out = grid_search(&space, &mut synthetic(|_| (1.0, 10)), &reference()).unwrap();
        assert_eq!(out.trials.len(), n);
    }
}

#[test]
fn singleton_space_exhausts_after_five_repeats() {
    let space = SearchSpace::from_grids(&[("n", &[3])]).unwrap();
    let out = random_search(&space, &mut synthetic(|_| (1.0, 10)), &reference(), &SearchBudget::default()).unwrap();
    assert_eq!(out.evaluator_calls, 1);
    assert_eq!(out.repeat_draws, 5);
}

#[test]
fn random_search_on_inverse_space_never_repeats() {
    let space = SearchSpace::inverse();
    for seed in 0..5 {
        let b = SearchBudget { seed, ..SearchBudget::default() };
        let mut calls = Vec::new();
        let mut ev = |h: &HyperPoint| {
            calls.push(h.clone());
            synthetic(|_| (1.0, 10))(h)
        };
        random_search(&space, &mut ev, &reference(), &b).unwrap();
        let unique: HashSet<_> = calls.iter().collect();
        assert_eq!(unique.len(), calls.len());
    }
}

#[test]
fn logged_scores_recompute_exactly() {
    let space = quadratic_space();
    let b = SearchBudget { max_trials: 20, ..SearchBudget::default() };
    let out = run_search(Strategy::Bayesian, &space, &mut synthetic(quadratic), &reference(), &b, &mut |_| Ok(())).unwrap();
    for t in &out.trials {
        let s = score(t.loss, t.n_params, &reference()).unwrap();
        assert!((s.total - t.score_total).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn best_so_far_is_monotone(seed in 0u64..1000, strategy in prop_oneof![Just(Strategy::Random), Just(Strategy::Bayesian)]) {
        let space = quadratic_space();
        let b = SearchBudget { max_trials: 30, seed, ..SearchBudget::default() };
        let mut running = Vec::new();
        let mut best = f64::INFINITY;
        let out = run_search(strategy, &space, &mut synthetic(quadratic), &reference(), &b, &mut |t| {
            best = best.min(t.score_total);
            running.push(best);
            Ok(())
        }).unwrap();
        prop_assert!(running.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*running.last().unwrap(), out.best_trial().score_total);
    }

    #[test]
    fn searches_are_seed_deterministic(seed in 0u64..1000) {
        let space = quadratic_space();
        let b = SearchBudget { max_trials: 12, seed, ..SearchBudget::default() };
        let a = bayesian_search(&space, &mut synthetic(quadratic), &reference(), &b).unwrap();
        let c = bayesian_search(&space, &mut synthetic(quadratic), &reference(), &b).unwrap();
        let pa: Vec<_> = a.trials.iter().map(|t| t.point.clone()).collect();
        let pc: Vec<_> = c.trials.iter().map(|t| t.point.clone()).collect();
        prop_assert_eq!(pa, pc);
    }

    #[test]
    fn score_is_monotone(h in 0.1f64..100.0, dh in 0.0f64..10.0, n in 1usize..100_000, dn in 0usize..1000) {
        let r = reference();
        let base = score(h, n, &r).unwrap().total;
        prop_assert!(score(h + dh, n, &r).unwrap().total >= base);
        prop_assert!(score(h, n + dn, &r).unwrap().total >= base);
    }
}

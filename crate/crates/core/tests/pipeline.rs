use geonas_core::arch::{ForwardHyperparams, Hyperparams, InverseHyperparams, HyperPoint, SearchSpace};
use geonas_core::geo::{synthesize_trajectory, Dataset, DipAngle, DipoleSurrogate, LayeredSection, ScalingTable, RHO_RANGE};
use geonas_core::nn::{mean_loss, Composed, TrainConfig};
use geonas_core::pipeline::{
    evaluate_trial, fit_inverse, invert_log, train_forward, train_inverse, trial_seed, tune_forward, Phase, Pipeline,
    PipelineConfig, Split, DIP_CARRY,
};
use geonas_core::tuner::{SearchBudget, Strategy};
use geonas_core::Error;

fn scaling() -> &'static ScalingTable {
    static TABLE: std::sync::OnceLock<ScalingTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| ScalingTable::calibrate_with(&DipoleSurrogate::default(), 5000, 11).unwrap())
}

fn dataset(count: usize, seed: u64) -> Dataset {
    Dataset::generate(count, seed, &DipoleSurrogate::default(), scaling()).unwrap()
}

fn tiny_config() -> PipelineConfig {
    let mut c = PipelineConfig {
        width: 4,
        seed: 3,
        ..PipelineConfig::default()
    };
    for (phase, grids) in [
        (&mut c.forward, vec![("n", &[1usize][..]), ("k0", &[3, 5]), ("k1", &[3]), ("l", &[1, 3])]),
        (&mut c.inverse, vec![("n", &[1usize][..]), ("k0", &[3, 5]), ("k1", &[3])]),
    ] {
        phase.strategy = Strategy::Grid;
        phase.space = Some(SearchSpace::from_grids(&grids).unwrap());
        phase.train = TrainConfig {
            max_epochs: 3,
            batch_size: 32,
            ..TrainConfig::default()
        };
        phase.budget = SearchBudget::default();
    }
    c.forward.reference = Some(HyperPoint(vec![2, 5, 5, 3]));
    c.inverse.reference = Some(HyperPoint(vec![2, 5, 5]));
    c
}

#[test]
fn inverse_before_forward_is_a_usage_error() {
    let data = dataset(60, 1);
    let mut p = Pipeline::new(tiny_config(), &data, &data).unwrap();
    assert!(matches!(p.run_inverse(&mut |_| Ok(())), Err(Error::Usage(_))));
    assert!(matches!(p.evaluate(&data), Err(Error::Usage(_))));
}

#[test]
fn logged_trials_replay_exactly() {
    let config = tiny_config();
    let data = dataset(100, 2);
    let split = Split::new(&data, config.validation_fraction).unwrap();
    let outcome = tune_forward(&config, &split, &mut |_| Ok(())).unwrap();
    assert_eq!(outcome.search.trials.len(), 4);
    let cutoff = config.cutoff_factor.map(|c| c * outcome.reference.loss / split.forward_val.len() as f64);
    for t in &outcome.search.trials {
        assert_eq!(t.seed, trial_seed(config.seed, Phase::Forward, &t.point));
        let (_, e) = evaluate_trial(&config, Phase::Forward, &split, None, &t.point, t.seed, cutoff).unwrap();
        assert!((e.loss - t.loss).abs() <= 1e-10);
        assert_eq!(e.n_params, t.n_params);
    }
}

#[test]
fn full_pipeline_runs_on_tiny_spaces() {
    let config = tiny_config();
    let tuning = dataset(80, 3);
    let full = dataset(120, 4);
    let held = dataset(30, 5);
    let mut seen = Vec::new();
    let result = Pipeline::new(config, &tuning, &full)
        .unwrap()
        .run(&held, &mut |phase, t| {
            seen.push((phase, t.point.clone()));
            Ok(())
        })
        .unwrap();
    assert_eq!(seen.iter().filter(|(p, _)| *p == Phase::Forward).count(), 4);
    assert_eq!(seen.iter().filter(|(p, _)| *p == Phase::Inverse).count(), 2);
    assert_eq!(result.metrics.forward_r2.len(), 13);
    assert_eq!(result.metrics.inverse_param_r2.len(), 5);
    assert!(result.metrics.resimulation_median_misfit.is_finite());
}

#[test]
fn selected_architectures_build_and_train() {
    let data = dataset(60, 6);
    let split = Split::new(&data, 0.2).unwrap();
    let config = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let hf = ForwardHyperparams { n: 3, k0: 3, k1: 3, l: 7 };
    let hi = InverseHyperparams { n: 3, k0: 3, k1: 3 };
    assert!(SearchSpace::forward().contains(&hf.to_point()));
    assert!(SearchSpace::inverse().contains(&hi.to_point()));
    let f = train_forward(&hf, 8, &split.forward_train, &split.forward_val, &config).unwrap();
    let i = train_inverse(&hi, 8, &f.net, &split.inverse_train, &split.inverse_val, &config).unwrap();
    assert!(f.loss.is_finite() && i.loss.is_finite());
}

#[test]
fn inverse_training_halves_composed_loss() {
    let data = dataset(500, 7);
    let split = Split::new(&data, 0.2).unwrap();
    let forward_config = TrainConfig {
        max_epochs: 60,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let hf = ForwardHyperparams { n: 1, k0: 3, k1: 3, l: 3 };
    let forward = train_forward(&hf, 8, &split.forward_train, &split.forward_val, &forward_config).unwrap();
    let inverse_config = TrainConfig {
        max_epochs: 200,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let mut net = InverseHyperparams { n: 1, k0: 3, k1: 3 }.build(8, 1).unwrap();
    let objective = Composed {
        outer: &forward.net,
        carry: DIP_CARRY,
    };
    let before = mean_loss(&net, &objective, &split.inverse_val);
    let trained = fit_inverse(&mut net, &forward.net, &split.inverse_train, &split.inverse_val, &inverse_config).unwrap();
    let after = trained.history.best_val_loss();
    assert!(after <= 0.5 * before, "{after} vs {before}");
}

#[test]
fn inverted_profile_has_one_row_per_position() {
    let data = dataset(60, 8);
    let split = Split::new(&data, 0.2).unwrap();
    let config = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let f = train_forward(&ForwardHyperparams { n: 1, k0: 3, k1: 3, l: 3 }, 4, &split.forward_train, &split.forward_val, &config)
        .unwrap();
    let i = train_inverse(&InverseHyperparams { n: 1, k0: 3, k1: 3 }, 4, &f.net, &split.inverse_train, &split.inverse_val, &config)
        .unwrap();
    let section = LayeredSection {
        rho_c: 20.0,
        rho_u: 2.0,
        rho_l: 200.0,
        top_tvd_m: 0.0,
        bottom_tvd_m: 6.0,
    };
    let (records, _) =
        synthesize_trajectory(&DipoleSurrogate::default(), scaling(), &section, 1.0, DipAngle::new(88.0).unwrap(), 10, 5.0)
            .unwrap();
    let rows = invert_log(&i.net, &f.net, scaling(), &records).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!(r.params[..3].iter().all(|v| (RHO_RANGE.0..=RHO_RANGE.1).contains(v)));
        assert!(r.misfit.is_finite());
    }
    assert_eq!(rows, invert_log(&i.net, &f.net, scaling(), &records).unwrap());
}

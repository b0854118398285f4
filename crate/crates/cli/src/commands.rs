use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use geonas_core::arch::{ForwardHyperparams, Hyperparams, InverseHyperparams, NamedPoint};
use geonas_core::geo::{
    read_trajectory, synthesize_trajectory, write_trajectory, Dataset, DipAngle, DipoleSurrogate, LayeredSection,
    ScalingTable,
};
use geonas_core::nn::{load_weights, save_weights, Network};
use geonas_core::pipeline::{
    evaluate_pair, final_train, forward_cross_plot, inverse_cross_plot, invert_log, tune_phase, write_cross_plot_csv,
    write_history_csv, write_profile_csv, write_r2_csv, Phase, Split,
};
use geonas_core::tuner::{write_score_csv, Strategy, TrialLogWriter};
use geonas_core::HyperPoint;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{OutputLock, RunManifest};
use crate::Command;

struct Layout {
    root: PathBuf,
}

impl Layout {
    fn data(&self, name: &str) -> PathBuf {
        self.root.join("data").join(name)
    }

    fn phase(&self, phase: Phase, name: &str) -> PathBuf {
        self.root.join(phase.name()).join(name)
    }

    fn weights(&self, phase: Phase) -> PathBuf {
        self.phase(phase, "weights.bin")
    }
}

fn require(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing(format!("{what} not found at {} (run the earlier command first)", path.display())))
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn parse_phase(s: &str) -> CliResult<Phase> {
    s.parse().map_err(|e: geonas_core::Error| CliError::Input(e.to_string()))
}

/// Loads the config, takes the output lock, runs `body` and always writes the
/// manifest once the config is known.
fn with_manifest(
    name: &str,
    cfg: RunConfig,
    body: impl FnOnce(&RunConfig, &Layout) -> CliResult<Vec<PathBuf>>,
) -> CliResult<()> {
    cfg.validate()?;
    let layout = Layout {
        root: cfg.output_dir.clone(),
    };
    let _lock = OutputLock::acquire(&layout.root)?;
    let seeds = BTreeMap::from([
        ("dataset".to_string(), cfg.dataset.seed),
        ("pipeline".to_string(), cfg.pipeline.seed),
    ]);
    let mut manifest = RunManifest::new(name, cfg.hash(), seeds);
    let result = body(&cfg, &layout);
    match &result {
        Ok(outputs) => manifest.outputs = outputs.clone(),
        Err(e) => manifest.exit_code = e.exit_code(),
    }
    manifest.write(&layout.root)?;
    result.map(|_| ())
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Generate { config, count, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = count {
                cfg.dataset.tuning_count = n;
                cfg.dataset.full_count = n;
                cfg.dataset.validation_count = n;
            }
            if let Some(s) = seed {
                cfg.dataset.seed = s;
            }
            with_manifest("generate", cfg, generate)
        }
        Command::Tune {
            config,
            phase,
            strategy,
            seed,
        } => {
            let phase = parse_phase(&phase)?;
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = strategy {
                let s: Strategy = s.parse().map_err(|e: geonas_core::Error| CliError::Input(e.to_string()))?;
                match phase {
                    Phase::Forward => cfg.pipeline.forward.strategy = s,
                    Phase::Inverse => cfg.pipeline.inverse.strategy = s,
                }
            }
            if let Some(s) = seed {
                cfg.pipeline.seed = s;
            }
            with_manifest(&format!("tune-{}", phase.name()), cfg, |c, l| tune(c, l, phase))
        }
        Command::Train { config, phase, h, seed } => {
            let phase = parse_phase(&phase)?;
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.pipeline.seed = s;
            }
            with_manifest(&format!("train-{}", phase.name()), cfg, |c, l| train(c, l, phase, h.as_deref()))
        }
        Command::Invert {
            config,
            trajectory,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            with_manifest("invert", cfg, |c, l| invert(c, l, &trajectory, output.as_deref()))
        }
        Command::Trajectory {
            config,
            output,
            positions,
            step_m,
            dip,
            start_tvd_m,
            rho,
            boundaries,
        } => {
            let cfg = RunConfig::load(&config)?;
            if rho.len() != 3 || boundaries.len() != 2 {
                return Err(CliError::Input("--rho needs 3 values and --boundaries 2".into()));
            }
            let section = LayeredSection {
                rho_c: rho[0],
                rho_u: rho[1],
                rho_l: rho[2],
                top_tvd_m: boundaries[0],
                bottom_tvd_m: boundaries[1],
            };
            with_manifest("trajectory", cfg, |c, l| {
                let scaling = load_scaling(l)?;
                let model = DipoleSurrogate { geometry: c.geometry };
                let (records, _) = synthesize_trajectory(
                    &model,
                    &scaling,
                    &section,
                    start_tvd_m,
                    DipAngle::new(dip)?,
                    positions,
                    step_m,
                )?;
                write_trajectory(&output, &records)?;
                Ok(vec![output.clone()])
            })
        }
    }
}

fn generate(cfg: &RunConfig, layout: &Layout) -> CliResult<Vec<PathBuf>> {
    let model = DipoleSurrogate { geometry: cfg.geometry };
    let scaling = ScalingTable::calibrate(&model)?;
    std::fs::create_dir_all(layout.data(""))?;
    let d = &cfg.dataset;
    let mut outputs = Vec::new();
    for (i, (name, count)) in [
        ("tuning.dat", d.tuning_count),
        ("full.dat", d.full_count),
        ("validation.dat", d.validation_count),
    ]
    .into_iter()
    .enumerate()
    {
        let seed = geonas_core::seed::derive(d.seed, &[i as u64 + 1]);
        let path = layout.data(name);
        Dataset::generate(count, seed, &model, &scaling)?.save(&path)?;
        outputs.push(path);
    }
    let path = layout.data("scaling.json");
    write_json(&path, &serde_json::to_value(&scaling).map_err(|e| CliError::Run(e.to_string()))?)?;
    outputs.push(path);
    Ok(outputs)
}

fn load_dataset(layout: &Layout, name: &str) -> CliResult<Dataset> {
    let path = layout.data(name);
    require(&path, "dataset")?;
    Ok(Dataset::load(&path)?)
}

fn load_scaling(layout: &Layout) -> CliResult<ScalingTable> {
    let path = layout.data("scaling.json");
    require(&path, "scaling table")?;
    let text = std::fs::read_to_string(&path)?;
    let table: ScalingTable = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    table.validate()?;
    Ok(table)
}

fn load_net(layout: &Layout, phase: Phase) -> CliResult<Network> {
    let path = layout.weights(phase);
    require(&path, &format!("{} weights", phase.name()))?;
    Ok(load_weights(&path)?)
}

fn tune(cfg: &RunConfig, layout: &Layout, phase: Phase) -> CliResult<Vec<PathBuf>> {
    let tuning = load_dataset(layout, "tuning.dat")?;
    let forward = match phase {
        Phase::Forward => None,
        Phase::Inverse => Some(load_net(layout, Phase::Forward)?),
    };
    let split = Split::new(&tuning, cfg.pipeline.validation_fraction)?;
    std::fs::create_dir_all(layout.phase(phase, ""))?;
    let log_path = layout.phase(phase, "trials.jsonl");
    let mut log = TrialLogWriter::create(&log_path)?;
    let mut observer = |t: &geonas_core::TrialRecord| {
        if cfg.log_wall_time {
            log.write(t)
        } else {
            log.write(&geonas_core::TrialRecord {
                wall_seconds: 0.0,
                ..t.clone()
            })
        }
    };
    let outcome = tune_phase(&cfg.pipeline, phase, &split, forward.as_ref(), &mut observer)?;
    let space = cfg.pipeline.space(phase);
    let best = outcome.search.best_trial();

    let best_path = layout.phase(phase, "best_h.json");
    write_json(
        &best_path,
        &json!({
            "phase": phase.name(),
            "h": best.h,
            "H": best.loss,
            "Np": best.n_params,
            "score_total": best.score_total,
        }),
    )?;
    let ref_path = layout.phase(phase, "reference.json");
    let r = &outcome.reference;
    write_json(
        &ref_path,
        &json!({
            "h": space.named(&r.h),
            "H": r.loss,
            "Np": r.n_params,
            "validation_records": split.forward_val.len(),
        }),
    )?;
    let csv_path = layout.phase(phase, "scores.csv");
    write_score_csv(&csv_path, &outcome.search.trials)?;
    Ok(vec![log_path, best_path, ref_path, csv_path])
}

fn parse_h(phase: Phase, text: &str) -> CliResult<HyperPoint> {
    let bad = |e: serde_json::Error| CliError::Input(format!("invalid --h for the {} phase: {e}", phase.name()));
    let point = match phase {
        Phase::Forward => {
            let h: ForwardHyperparams = serde_json::from_str(text).map_err(bad)?;
            h.validate()?;
            h.to_point()
        }
        Phase::Inverse => {
            let h: InverseHyperparams = serde_json::from_str(text).map_err(bad)?;
            h.validate()?;
            h.to_point()
        }
    };
    Ok(point)
}

fn tuned_h(layout: &Layout, phase: Phase) -> CliResult<HyperPoint> {
    let path = layout.phase(phase, "best_h.json");
    require(&path, "tuned hyperparameters")?;
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path)?).map_err(|e| CliError::Input(e.to_string()))?;
    let named: NamedPoint =
        serde_json::from_value(value["h"].clone()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_h(phase, &serde_json::to_string(&named).expect("named point serializes"))
}

fn train(cfg: &RunConfig, layout: &Layout, phase: Phase, h: Option<&str>) -> CliResult<Vec<PathBuf>> {
    let h = match h {
        Some(text) => parse_h(phase, text)?,
        None => tuned_h(layout, phase)?,
    };
    let full = load_dataset(layout, "full.dat")?;
    let held_out = load_dataset(layout, "validation.dat")?;
    let forward = match phase {
        Phase::Forward => None,
        Phase::Inverse => Some(load_net(layout, Phase::Forward)?),
    };
    let split = Split::new(&full, cfg.pipeline.validation_fraction)?;
    let trained = final_train(&cfg.pipeline, phase, &split, forward.as_ref(), &h)?;

    std::fs::create_dir_all(layout.phase(phase, ""))?;
    let weights = layout.weights(phase);
    save_weights(&trained.net, &weights)?;
    let history = layout.phase(phase, "history.csv");
    write_history_csv(&history, &trained.history)?;
    let plot = match phase {
        Phase::Forward => forward_cross_plot(&trained.net, &held_out)?,
        Phase::Inverse => inverse_cross_plot(&trained.net, &held_out)?,
    };
    let cross = layout.phase(phase, "crossplot.csv");
    write_cross_plot_csv(&cross, &plot)?;
    let r2 = layout.phase(phase, "r2.csv");
    write_r2_csv(&r2, &plot)?;

    let mut metrics = json!({
        "phase": phase.name(),
        "h": cfg.pipeline.space(phase).named(&h),
        "Np": trained.net.param_count(),
        "epochs": trained.history.epochs(),
        "stop_reason": trained.history.stop_reason,
        "val_loss_sum": trained.loss,
        "val_records": split.forward_val.len(),
        "held_out_r2": plot.r2(),
    });
    if let Some(f) = &forward {
        let m = evaluate_pair(f, &trained.net, &trained.history, &held_out)?;
        metrics["held_out"] = serde_json::to_value(m).map_err(|e| CliError::Run(e.to_string()))?;
    }
    let metrics_path = layout.phase(phase, "metrics.json");
    write_json(&metrics_path, &metrics)?;
    Ok(vec![weights, history, cross, r2, metrics_path])
}

fn invert(_cfg: &RunConfig, layout: &Layout, trajectory: &Path, output: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let forward = load_net(layout, Phase::Forward)?;
    let inverse = load_net(layout, Phase::Inverse)?;
    let scaling = load_scaling(layout)?;
    let records = read_trajectory(trajectory).map_err(|e| match e {
        geonas_core::Error::Io(io) => CliError::Input(format!("cannot read trajectory {}: {io}", trajectory.display())),
        other => other.into(),
    })?;
    let rows = invert_log(&inverse, &forward, &scaling, &records)?;
    let out = match output {
        Some(p) => p.to_path_buf(),
        None => {
            std::fs::create_dir_all(layout.root.join("invert"))?;
            layout.root.join("invert").join("profile.csv")
        }
    };
    write_profile_csv(&out, &rows)?;
    Ok(vec![out])
}

//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! the real stdout so the summary survives libtest's output capture.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geonas_core::arch::{ForwardHyperparams, Hyperparams, InverseHyperparams, HyperPoint, ReferenceConfig, SearchSpace};
use geonas_core::geo::{
    sample_formation, surrogate_forward, Dataset, DipoleSurrogate, FormationParams, ForwardModel, ScalingTable,
    ToolGeometry,
};
use geonas_core::gp::{gram, matern52, matern52_r, EncodedPoint, GpModel, DEFAULT_JITTER};
use geonas_core::nn::{gradient_check, Composed, DirectL1, Network, StopReason};
use geonas_core::pipeline::{Pipeline, PipelineConfig, PipelineResult, DIP_CARRY};
use geonas_core::tuner::{bayesian_search, grid_search, random_search, score, Evaluation, SearchBudget};
use geonas_core::Result;
use nalgebra::SymmetricEigen;
use rand::Rng;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String, elapsed: Duration, limit: Option<Duration>) {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = pass && in_time;
        let limit = limit.map(|l| format!(" (limit {}s)", l.as_secs())).unwrap_or_default();
        let msg = format!(
            "[{}] criterion {id}: {detail}; {:.2}s{limit}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        writeln!(std::io::stdout().lock(), "{msg}").unwrap();
        if !ok {
            self.failures.push(msg);
        }
    }

    /// A criterion that cannot hold as stated; printed red but not asserted.
    fn known_red(&mut self, id: &str, detail: String) {
        writeln!(std::io::stdout().lock(), "[FAIL] criterion {id} (known, not asserted): {detail}").unwrap();
    }
}

fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<EncodedPoint> {
    (0..n)
        .map(|_| EncodedPoint::new((0..dim).map(|_| rng.random::<f64>()).collect()).unwrap())
        .collect()
}

fn gp_interpolation(r: &mut Report) {
    let t = Instant::now();
    let mut rng = geonas_core::seed::rng(101);
    let (mut worst_mean, mut worst_std) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=20);
        let dim = rng.random_range(1..=4);
        let pts = random_points(&mut rng, n, dim);
        let obs: Vec<_> = pts.iter().cloned().map(|p| (p, rng.random_range(-5.0..5.0))).collect();
        let gp = GpModel::fit(&obs, DEFAULT_JITTER).unwrap();
        for (p, z) in gp.posterior_standardized(&pts).unwrap().iter().zip(gp.standardized_targets()) {
            worst_mean = worst_mean.max((p.mean - z).abs());
            worst_std = worst_std.max(p.std);
        }
    }
    r.line(
        "1",
        worst_mean <= 1e-6 && worst_std <= 1e-4,
        format!("GP interpolation, max |mean - z| = {worst_mean:.2e} (tol 1e-6), max std = {worst_std:.2e} (tol 1e-4)"),
        t.elapsed(),
        Some(Duration::from_secs(5)),
    );
}

fn matern(r: &mut Report) {
    let t = Instant::now();
    let mut rng = geonas_core::seed::rng(102);
    let mut diag_exact = true;
    let mut min_eig = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(2..=25);
        let pts = random_points(&mut rng, n, 3);
        diag_exact &= pts.iter().all(|p| matern52(p, p).unwrap() == 1.0);
        min_eig = min_eig.min(SymmetricEigen::new(gram(&pts)).eigenvalues.min());
    }
    r.line(
        "2a",
        diag_exact && min_eig > -1e-8,
        format!("Matern k(h,h) = 1 exactly: {diag_exact}; min Gram eigenvalue {min_eig:.2e} (tol > -1e-8)"),
        t.elapsed(),
        Some(Duration::from_secs(5)),
    );
    let k1 = matern52_r(1.0);
    let target = 0.52457;
    if (k1 - target).abs() <= 1e-4 {
        r.line("2b", true, format!("k(1) = {k1:.10} vs {target} (tol 1e-4)"), t.elapsed(), None);
    } else {
        r.known_red(
            "2b",
            format!(
                "k(1) = {k1:.10} vs stated {target} (tol 1e-4); (1 + sqrt5 + 5/3)exp(-sqrt5) evaluates to 0.5239941, \
                 the stated constant is off by {:.1e}",
                (k1 - target).abs()
            ),
        );
    }
}

fn scoring(r: &mut Report) {
    let t = Instant::now();
    let reference = ReferenceConfig::new(HyperPoint(vec![1]), 37.25, 4242).unwrap();
    let at_ref = score(37.25, 4242, &reference).unwrap().total;
    let half = score(37.25, 2121, &reference).unwrap().total;
    let double = score(74.5, 4242, &reference).unwrap().total;
    let mut rng = geonas_core::seed::rng(103);
    let monotone = (0..1000).all(|_| {
        let h = rng.random_range(0.1..100.0);
        let n = rng.random_range(1..20_000);
        let (dh, dn) = (rng.random_range(0.0..10.0), rng.random_range(0..500));
        let base = score(h, n, &reference).unwrap().total;
        score(h + dh, n, &reference).unwrap().total >= base && score(h, n + dn, &reference).unwrap().total >= base
    });
    r.line(
        "3",
        at_ref == 0.0 && (half + 0.5).abs() <= 1e-12 && (double - 1.0).abs() <= 1e-12 && monotone,
        format!("scoring, R(ref) = {at_ref}, R(H, N/2) = {half}, R(2H, N) = {double} (tol 1e-12), monotone over 1000 pairs: {monotone}"),
        t.elapsed(),
        Some(Duration::from_secs(1)),
    );
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

fn rugged(h: &[usize]) -> (f64, usize) {
    let z = h.iter().fold(0x9E37u64, |acc, &v| geonas_core::seed::mix(acc ^ v as u64));
    (1.0 + (z % 10_000) as f64 / 1000.0, 2000 + (z >> 40) as usize % 500)
}

fn search_oracles(r: &mut Report) {
    let t = Instant::now();
    let reference = ReferenceConfig::new(HyperPoint(vec![0]), 10.0, 5000).unwrap();
    type Landscape = Box<dyn Fn(&[usize]) -> (f64, usize)>;
    let cases: Vec<(&str, SearchSpace, Landscape)> = vec![
        ("quadratic", quadratic_space(), Box::new(quadratic)),
        ("rugged/S_F", SearchSpace::forward(), Box::new(rugged)),
        ("size-only/S_I", SearchSpace::inverse(), Box::new(|h: &[usize]| (8.0, 500 * h[0] + 40 * h[1] + 7 * h[2]))),
        (
            "trade-off/S_F",
            SearchSpace::forward(),
            Box::new(|h: &[usize]| (4.0 + 6.0 / (h[0] + h[1]) as f64 + 0.1 * h[3] as f64, 300 * h[0] * h[1] + 20 * h[2])),
        ),
        (
            "line/200",
            SearchSpace::from_grids(&[("x", &(0..200).collect::<Vec<_>>())]).unwrap(),
            Box::new(|h: &[usize]| (3.0 + (h[0] as f64 - 137.0).abs().sqrt(), 1000)),
        ),
    ];
    let mut agree = Vec::new();
    for (name, space, f) in &cases {
        let n = space.cardinality();
        let grid = grid_search(space, &mut synthetic(f), &reference).unwrap().best;
        let b = SearchBudget { max_trials: n, ..SearchBudget::default() };
        let bayes = bayesian_search(space, &mut synthetic(f), &reference, &b).unwrap().best;
        let rb = SearchBudget {
            max_trials: n,
            exhaustion_window: None,
            ..SearchBudget::default()
        };
        let rand = random_search(space, &mut synthetic(f), &reference, &rb).unwrap().best;
        agree.push((name, bayes == grid && rand == grid));
    }
    let space = quadratic_space();
    let grid = grid_search(&space, &mut synthetic(quadratic), &reference).unwrap().best;
    let budget = space.cardinality() * 2 / 5;
    let hits = (0..5)
        .filter(|&seed| {
            let b = SearchBudget { max_trials: budget, seed, ..SearchBudget::default() };
            bayesian_search(&space, &mut synthetic(quadratic), &reference, &b).unwrap().best == grid
        })
        .count();
    let all_agree = agree.iter().all(|(_, ok)| *ok);
    let failed: Vec<_> = agree.iter().filter(|(_, ok)| !ok).map(|(n, _)| **n).collect();
    r.line(
        "4",
        all_agree && hits >= 4,
        format!(
            "search oracles, full-budget bayesian/random match grid on 5 evaluators (mismatches: {failed:?}); \
             40% budget quadratic hits {hits}/5 (need >= 4)"
        ),
        t.elapsed(),
        Some(Duration::from_secs(30)),
    );
}

fn exhaustion(r: &mut Report) {
    let t = Instant::now();
    let reference = ReferenceConfig::new(HyperPoint(vec![0]), 1.0, 100).unwrap();
    let single = SearchSpace::from_grids(&[("n", &[2])]).unwrap();
    let out = random_search(&single, &mut synthetic(|_| (1.0, 10)), &reference, &SearchBudget::default()).unwrap();
    let mut repeats_ok = true;
    for seed in 0..10 {
        let mut seen = Vec::new();
        let mut ev = |h: &HyperPoint| {
            seen.push(h.clone());
            synthetic(|_| (1.0, 10))(h)
        };
        let b = SearchBudget { seed, ..SearchBudget::default() };
        random_search(&SearchSpace::inverse(), &mut ev, &reference, &b).unwrap();
        repeats_ok &= seen.iter().collect::<HashSet<_>>().len() == seen.len();
    }
    r.line(
        "5",
        out.evaluator_calls == 1 && out.repeat_draws == 5 && repeats_ok,
        format!(
            "exhaustion, size-1 space: {} evaluation(s), {} repeat draws (need 1 and 5); S_I never re-evaluated over 10 seeds: {repeats_ok}",
            out.evaluator_calls, out.repeat_draws
        ),
        t.elapsed(),
        Some(Duration::from_secs(5)),
    );
}

fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = geonas_core::seed::rng(seed);
    (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
}

/// Moves every parameter off zero so no ReLU input sits exactly on its kink.
fn off_kink(mut net: Network, seed: u64) -> Network {
    let shift = uniform(net.param_count(), seed);
    net.params_mut().iter_mut().zip(shift).for_each(|(p, s)| *p += 0.05 * (s - 1.0));
    net
}

fn gradients(r: &mut Report) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for k0 in [3, 5, 7] {
        for k1 in [3, 5, 7] {
            let seed = (k0 * 10 + k1) as u64;
            let f = off_kink(ForwardHyperparams { n: 1, k0, k1, l: 3 }.build(8, seed).unwrap(), seed + 1);
            worst = worst.max(gradient_check(&f, &DirectL1, &uniform(6, seed + 2), &uniform(13, seed + 3), 1e-4, seed));
            let i = off_kink(InverseHyperparams { n: 1, k0, k1 }.build(8, seed).unwrap(), seed + 4);
            worst = worst.max(gradient_check(&i, &DirectL1, &uniform(14, seed + 5), &uniform(5, seed + 6), 1e-4, seed));
        }
    }
    let mut outer = off_kink(ForwardHyperparams { n: 2, k0: 5, k1: 3, l: 5 }.build(8, 7).unwrap(), 8);
    outer.freeze_all();
    let inner = off_kink(InverseHyperparams { n: 2, k0: 3, k1: 7 }.build(8, 9).unwrap(), 10);
    let composed = Composed {
        outer: &outer,
        carry: DIP_CARRY,
    };
    let mut worst_composed = 0.0f64;
    for s in 0..5 {
        let x = uniform(14, 20 + s);
        worst_composed = worst_composed.max(gradient_check(&inner, &composed, &x, &x[..13], 1e-4, s));
    }
    r.line(
        "6",
        worst <= 1e-4 && worst_composed <= 1e-4,
        format!(
            "gradients, max relative error standalone (all 9 kernel pairs, width 8) {worst:.2e}, composed {worst_composed:.2e} (tol 1e-4)"
        ),
        t.elapsed(),
        Some(Duration::from_secs(60)),
    );
}

fn data_layer(r: &mut Report) {
    let t = Instant::now();
    let model = DipoleSurrogate::default();
    let mut rng = geonas_core::seed::rng(104);
    let mut finite = true;
    let mut samples = Vec::new();
    for i in 0..100_000 {
        let (p, dip) = sample_formation(&mut rng);
        let m = model.simulate(&p, dip).unwrap();
        finite &= m.0.len() == 13 && m.0.iter().all(|v| v.is_finite());
        if i % 100 == 0 {
            let mut row = p.to_array().to_vec();
            row.push(dip.degrees());
            row.extend(m.0);
            samples.push(row);
        }
    }
    let table = ScalingTable::calibrate(&model).unwrap();
    let mut worst_trip = 0.0f64;
    for row in &samples {
        let back = table.unscale_row(&table.scale_row(row).unwrap()).unwrap();
        for (x, y) in row.iter().zip(&back) {
            worst_trip = worst_trip.max((x - y).abs() / x.abs().max(1.0));
        }
    }
    let rho = &table.params()[0];
    let anchors = [(1.0, 0.5), (1e3, 1.5), (10f64.powf(1.5), 1.0)];
    let worst_anchor = anchors.iter().map(|&(x, y)| (rho.scale(x).unwrap() - y).abs()).fold(0.0, f64::max);
    let g = ToolGeometry::default();
    let mut worst_homog = 0.0f64;
    for _ in 0..1000 {
        let (p, dip) = sample_formation(&mut rng);
        let a = FormationParams { rho_u: p.rho_c, rho_l: p.rho_c, ..p };
        let b = FormationParams { d_u: 10.0 - 0.5 * p.d_u, d_l: 0.01 + 0.1 * p.d_l, ..a };
        let (ma, mb) = (surrogate_forward(&a, dip, &g).unwrap(), surrogate_forward(&b, dip, &g).unwrap());
        worst_homog = ma.0.iter().zip(&mb.0).map(|(x, y)| (x - y).abs()).fold(worst_homog, f64::max);
    }
    r.line(
        "9",
        finite && worst_trip <= 1e-12 && worst_anchor <= 1e-12 && worst_homog <= 1e-10,
        format!(
            "data layer, 1e5 formations 13 finite values: {finite}; round trip {worst_trip:.1e} (tol 1e-12); \
             anchors {worst_anchor:.1e} (tol 1e-12); homogeneous invariance {worst_homog:.1e} (tol 1e-10)"
        ),
        t.elapsed(),
        Some(Duration::from_secs(30)),
    );
}

/// Desk-scale configuration: largest architectures as references.
fn desk_config(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    for (phase, trials) in [(&mut c.forward, 10), (&mut c.inverse, 8)] {
        phase.train.max_epochs = 40;
        phase.budget = SearchBudget {
            max_trials: trials,
            seed,
            ..SearchBudget::default()
        };
    }
    c.forward.reference = Some(HyperPoint(vec![4, 7, 7, 7]));
    c.inverse.reference = Some(HyperPoint(vec![5, 7, 7]));
    c
}

fn desk_run(seed: u64, table: &ScalingTable) -> (PipelineResult, Duration) {
    let t = Instant::now();
    let model = DipoleSurrogate::default();
    let tuning = Dataset::generate(2000, seed * 3 + 1, &model, table).unwrap();
    let full = Dataset::generate(4000, seed * 3 + 2, &model, table).unwrap();
    let held_out = Dataset::generate(500, seed * 3 + 3, &model, table).unwrap();
    let result = Pipeline::new(desk_config(seed), &tuning, &full)
        .unwrap()
        .run(&held_out, &mut |_, _| Ok(()))
        .unwrap();
    (result, t.elapsed())
}

fn desk_scale(r: &mut Report) {
    let table = ScalingTable::calibrate(&DipoleSurrogate::default()).unwrap();
    let runs: Vec<_> = (0..3).map(|seed| desk_run(seed, &table)).collect();

    let (first, elapsed) = &runs[0];
    let h = &first.inverse.trained.history;
    let m = &first.metrics;
    r.line(
        "7",
        h.best_val_loss() <= 0.5 * h.initial_val_loss && m.resimulation_median_misfit <= 2.0 * m.inverse_val_mean_loss,
        format!(
            "two-step pipeline (seed 0), inverse composed val loss {:.4} vs init {:.4} (need <= 50%); \
             held-out resim median {:.4} vs 2 x val mean {:.4}",
            h.best_val_loss(),
            h.initial_val_loss,
            m.resimulation_median_misfit,
            2.0 * m.inverse_val_mean_loss
        ),
        *elapsed,
        Some(Duration::from_secs(30 * 60)),
    );

    let mut passes = 0;
    let mut details = Vec::new();
    for (seed, (run, _)) in runs.iter().enumerate() {
        let mut ok = true;
        for (name, stage) in [("F", &run.forward), ("I", &run.inverse)] {
            let best = stage.tuning.search.best_trial();
            let reference = &stage.tuning.reference;
            let n_ratio = best.n_params as f64 / reference.n_params as f64;
            let h_ratio = best.loss / reference.loss;
            ok &= n_ratio <= 0.6 && h_ratio <= 1.25;
            details.push(format!("s{seed} {name} {} Np {n_ratio:.2} H {h_ratio:.3}", best.point));
        }
        passes += usize::from(ok);
    }
    let total: Duration = runs.iter().map(|(_, d)| *d).sum();
    r.line(
        "8",
        passes >= 2,
        format!(
            "size reduction, {passes}/3 seeds with Np ratio <= 0.6 and H ratio <= 1.25 in both phases (need 2) [{}]",
            details.join(", ")
        ),
        total,
        None,
    );
}

const CLI_CONFIG: &str = r#"
[dataset]
seed = 21
tuning_count = 120
full_count = 150
validation_count = 40

[pipeline]
width = 4
seed = 9

[pipeline.forward]
strategy = "random"
space = [
  { name = "n", grid = [1, 2] },
  { name = "k0", grid = [3, 5] },
  { name = "k1", grid = [3] },
  { name = "l", grid = [1, 3] },
]
reference = [2, 5, 3, 3]

[pipeline.forward.budget]
max_trials = 4
initial_random = 2

[pipeline.forward.train]
max_epochs = 3
batch_size = 32

[pipeline.inverse]
strategy = "bayesian"
space = [
  { name = "n", grid = [1, 2] },
  { name = "k0", grid = [3] },
  { name = "k1", grid = [3, 5] },
]
reference = [2, 3, 5]

[pipeline.inverse.budget]
max_trials = 3
initial_random = 2

[pipeline.inverse.train]
max_epochs = 3
batch_size = 32
"#;

fn cli_run(dir: &Path) -> bool {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, CLI_CONFIG).unwrap();
    let traj = dir.join("traj.csv");
    let (c, tr) = (cfg.to_str().unwrap(), traj.to_str().unwrap());
    let steps: [&[&str]; 7] = [
        &["generate", "--config", c],
        &["tune", "--config", c, "--phase", "forward"],
        &["train", "--config", c, "--phase", "forward"],
        &["tune", "--config", c, "--phase", "inverse"],
        &["train", "--config", c, "--phase", "inverse"],
        &["trajectory", "--config", c, "--output", tr],
        &["invert", "--config", c, "--trajectory", tr],
    ];
    steps.iter().all(|args| {
        Command::new(env!("CARGO_BIN_EXE_geonas"))
            .args(*args)
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ran = cli_run(a.path()) && cli_run(b.path());
    let files = [
        "data/tuning.dat",
        "data/full.dat",
        "data/validation.dat",
        "data/scaling.json",
        "forward/trials.jsonl",
        "forward/weights.bin",
        "inverse/trials.jsonl",
        "inverse/weights.bin",
        "invert/profile.csv",
    ];
    let differing: Vec<_> = files
        .iter()
        .filter(|f| std::fs::read(a.path().join("out").join(f)).ok() != std::fs::read(b.path().join("out").join(f)).ok())
        .collect();
    let present = files.iter().all(|f| a.path().join("out").join(f).exists());
    r.line(
        "10",
        ran && present && differing.is_empty(),
        format!("determinism, every command ran twice: {ran}; {} artifacts compared, differing: {differing:?}", files.len()),
        t.elapsed(),
        None,
    );
}

#[test]
fn acceptance() {
    let mut r = Report { failures: Vec::new() };
    gp_interpolation(&mut r);
    matern(&mut r);
    scoring(&mut r);
    search_oracles(&mut r);
    exhaustion(&mut r);
    gradients(&mut r);
    desk_scale(&mut r);
    data_layer(&mut r);
    determinism(&mut r);
    assert!(r.failures.is_empty(), "failed criteria:\n{}", r.failures.join("\n"));
}

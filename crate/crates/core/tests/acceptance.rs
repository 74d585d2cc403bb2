//! Acceptance suite. Runs every headline criterion at its stated tolerance,
//! prints one PASS/FAIL line each, and exits non-zero if any fails.
//!
//! Desk-scale trainings use `width_scale = 0.25` so the suite finishes in
//! minutes on a single core.

use std::num::NonZeroUsize;
use std::time::Instant;

use flowmap_core::fields::{DoubleGyre, RigidRotation, UniformFlow, VectorField};
use flowmap_core::flowmap::{
    extract, rk4_step, validation_seeds, ExtractionConfig, FlowMapStrategy,
};
use flowmap_core::geometry::{Domain, Vec3};
use flowmap_core::reconstruct::{
    evaluate_model, ftle_from_field, ftle_from_model, infer_long, pearson, spearman, test_seeds,
    Evaluation, TEST_SEED_OFFSET,
};
use flowmap_core::seeding::seed_sobol;
use flowmap_core::surrogate::{
    l1_loss, l1_loss_grad, model_file_size, train_on_datasets, Architecture, Network,
    SurrogateModel, TrainConfig, TrainLog,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DESK_WIDTH: f64 = 0.25;
const TEST_SEEDS: usize = 500;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn nz(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).unwrap()
}

fn gyre() -> DoubleGyre {
    DoubleGyre::default()
}

/// Trains on Sobol seeds of `field`, validating on the next Sobol points.
fn train_model<F: VectorField>(
    field: &F,
    seeds: usize,
    cfg: ExtractionConfig,
    tc: TrainConfig,
    arch: &Architecture,
) -> (SurrogateModel, TrainLog) {
    let set = seed_sobol(field.domain(), nz(seeds), 0);
    let tr = extract(field, &set, &cfg).unwrap();
    let va = extract(field, &validation_seeds(&set), &cfg).unwrap();
    train_on_datasets(&tr, &va, arch, &tc).unwrap()
}

fn evaluation_seeds() -> Vec<Vec3> {
    test_seeds(Domain::double_gyre(), nz(TEST_SEEDS), TEST_SEED_OFFSET, 2024).unwrap().positions
}

fn evaluate(model: &SurrogateModel) -> Evaluation {
    evaluate_model(model, &gyre(), &evaluation_seeds()).unwrap()
}

fn per_cycle_spearman(ev: &Evaluation) -> f64 {
    let cycles: Vec<f64> = ev.report.per_cycle.iter().map(|p| p.0 as f64).collect();
    let errors: Vec<f64> = ev.report.per_cycle.iter().map(|p| p.1).collect();
    spearman(&cycles, &errors).unwrap_or(f64::NAN)
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let outcome = Outcome { name, pass, detail, seconds: start.elapsed().as_secs_f64() };
    println!(
        "{} {} ({:.1}s): {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.name,
        outcome.seconds,
        outcome.detail
    );
    outcome
}

fn file_cycles() -> (bool, String) {
    let n = ExtractionConfig::new(0.01, 50, 10.0, FlowMapStrategy::Long).unwrap().file_cycles();
    (n == 20, format!("n = {n}"))
}

fn rk4_order() -> (bool, String) {
    let field = RigidRotation { omega: 1.0, domain: Domain::new(-2.0, 2.0, -2.0, 2.0).unwrap() };
    let exact = Vec3::xy(1f64.cos(), 1f64.sin());
    let endpoint_error = |steps: u32| {
        let h = 1.0 / steps as f64;
        let mut p = Vec3::xy(1.0, 0.0);
        for k in 0..steps {
            p = rk4_step(&field, p, k as f64 * h, h).unwrap();
        }
        p.distance(exact)
    };
    let ratio = endpoint_error(100) / endpoint_error(200);
    ((12.0..=20.0).contains(&ratio), format!("error ratio = {ratio:.3}"))
}

fn gradient_audit() -> (bool, String) {
    let arch = Architecture::scaled(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net: Network<f64> = Network::init(&arch, &mut rng);
    let pos = Array2::from_shape_fn((8, 3), |(_, c)| if c < 2 { rng.random_range(-1.0..1.0) } else { 0.0 });
    let cyc = Array2::from_shape_fn((8, 1), |_| rng.random_range(0.05..1.0));
    let target = Array2::from_shape_fn((8, 3), |_| rng.random_range(-1.5..1.5));
    let loss = |n: &Network<f64>| l1_loss(n.forward(pos.view(), cyc.view()).view(), target.view()).unwrap();

    let (pred, cache) = net.forward_train(pos.view(), cyc.view());
    let grads = net.backward(&cache, l1_loss_grad(pred.view(), target.view()));
    let mut probe = net.clone();
    let mut worst = (0.0f64, String::new(), 0.0f64);
    for (ti, name) in net.tensor_names().into_iter().enumerate() {
        let analytic = grads.tensors()[ti].to_vec();
        let mut numeric = vec![0.0; analytic.len()];
        for (k, g) in numeric.iter_mut().enumerate() {
            let v = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = v + 1e-6;
            let up = loss(&probe);
            probe.tensors_mut()[ti][k] = v - 1e-6;
            let down = loss(&probe);
            probe.tensors_mut()[ti][k] = v;
            *g = (up - down) / 2e-6;
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12);
        if rel >= worst.0 {
            worst = (rel, name, norm(&analytic));
        }
    }
    // central differences at h = 1e-6 resolve gradients down to about eps·|L|/h ≈ 1e-10
    (
        worst.0 < 1e-4,
        format!("worst tensor {} relative error {:.2e} (analytic gradient norm {:.2e})", worst.1, worst.0, worst.2),
    )
}

fn fixed_footprint() -> (bool, String) {
    let arch = Architecture::default();
    let cfg = ExtractionConfig::new(0.01, 50, 10.0, FlowMapStrategy::Long).unwrap();
    let tc = TrainConfig { epochs: 1, ..TrainConfig::for_strategy(FlowMapStrategy::Long) };
    let dir = tempfile::tempdir().unwrap();
    let mut sizes = Vec::new();
    for seeds in [5000, 10000] {
        let (model, _) = train_model(&gyre(), seeds, cfg, tc.clone(), &arch);
        let path = dir.path().join(format!("model_{seeds}.bin"));
        flowmap_core::surrogate::save_model(&model, &path).unwrap();
        sizes.push(std::fs::metadata(&path).unwrap().len());
    }
    let params = arch.param_count();
    let pass = sizes[0] == sizes[1] && params == 1_052_131 && sizes[0] as usize == model_file_size(&arch);
    (pass, format!("file sizes {:?} bytes, {params} parameters", sizes))
}

fn desk_accuracy(model: &SurrogateModel, train_seconds: f64, ev: &Evaluation) -> (bool, String) {
    let median = ev.report.median;
    (
        median < 0.05 && train_seconds < 1800.0,
        format!("trimmed median error {median:.4} (train {train_seconds:.0}s, width_scale {DESK_WIDTH}, {} parameters)", model.param_count()),
    )
}

fn seed_count_trend() -> (bool, String) {
    let cfg = ExtractionConfig::new(0.01, 30, 10.0, FlowMapStrategy::Long).unwrap();
    let tc = TrainConfig { epochs: 20, ..TrainConfig::for_strategy(FlowMapStrategy::Long) };
    let arch = Architecture::scaled(DESK_WIDTH);
    let medians: Vec<f64> = [1000, 4000]
        .into_iter()
        .map(|n| evaluate(&train_model(&gyre(), n, cfg, tc.clone(), &arch).0).report.median)
        .collect();
    (medians[1] <= medians[0], format!("median at 1000 seeds {:.4}, at 4000 seeds {:.4}", medians[0], medians[1]))
}

fn interval_trend(long_eval: &Evaluation) -> (bool, String) {
    let arch = Architecture::scaled(DESK_WIDTH);
    let tc = TrainConfig { epochs: 20, ..TrainConfig::for_strategy(FlowMapStrategy::Short) };
    let short = |c: u32| {
        let cfg = ExtractionConfig::new(0.01, c, 10.0, FlowMapStrategy::Short).unwrap();
        evaluate(&train_model(&gyre(), 1000, cfg, tc.clone(), &arch).0)
    };
    let c10 = short(10);
    let c50 = short(50);
    let rho_short = per_cycle_spearman(&c10);
    let rho_long = per_cycle_spearman(long_eval);
    let pass = c10.report.median > c50.report.median && rho_short >= 0.8 && rho_long.abs() < 0.5;
    (
        pass,
        format!(
            "short median C=10 {:.4} vs C=50 {:.4}; Spearman short C=10 {rho_short:.3}, long C=30 {rho_long:.3}",
            c10.report.median, c50.report.median
        ),
    )
}

fn ftle_fidelity(model: &SurrogateModel) -> (bool, String) {
    let truth = ftle_from_field(&gyre(), 64, 32, 300, 0.01).unwrap();
    let inferred = ftle_from_model(model, 64, 32, 300).unwrap();
    let r = pearson(&truth.values, &inferred.values).unwrap_or(f64::NAN);
    (r >= 0.8, format!("Pearson r = {r:.3}"))
}

fn inference_throughput() -> (bool, String) {
    // full-size network; throughput does not depend on the weights
    let cfg = ExtractionConfig::new(0.01, 50, 10.0, FlowMapStrategy::Long).unwrap();
    let tc = TrainConfig { epochs: 1, ..TrainConfig::for_strategy(FlowMapStrategy::Long) };
    let (model, _) = train_model(&gyre(), 20, cfg, tc, &Architecture::default());
    let seeds = test_seeds(Domain::double_gyre(), nz(2000), TEST_SEED_OFFSET, 5).unwrap().positions;
    let cycles = cfg.cycle_list();
    let start = Instant::now();
    let parallel = infer_long(&model, &seeds, &cycles).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| infer_long(&model, &seeds, &cycles).unwrap());
    let points: usize = parallel.iter().map(|t| t.points.len()).sum();
    let pass = seconds < 5.0 && parallel == serial && points == 40_000;
    (
        pass,
        format!(
            "{} trajectories x {} cycles in {seconds:.2}s on {} threads, identical to single-threaded: {}",
            parallel.len(),
            cycles.len(),
            rayon::current_num_threads(),
            parallel == serial
        ),
    )
}

fn degenerate_convergence() -> (bool, String) {
    let domain = Domain::double_gyre();
    let cfg = ExtractionConfig::new(0.01, 30, 10.0, FlowMapStrategy::Long).unwrap();
    let tc = TrainConfig { epochs: 10, ..TrainConfig::for_strategy(FlowMapStrategy::Long) };
    let (_, log) = train_model(&UniformFlow::still(domain), 2000, cfg, tc, &Architecture::scaled(DESK_WIDTH));
    let losses: Vec<f64> = log.epochs.iter().map(|r| r.train_loss).collect();
    let monotone = losses[losses.len() - 5..].windows(2).all(|w| w[1] < w[0]);
    let ratio = losses[losses.len() - 1] / losses[0];
    (
        monotone && ratio < 0.2,
        format!("final/initial loss {ratio:.4}, final 5 epochs decreasing: {monotone}, losses {:?}",
            losses.iter().map(|l| format!("{l:.2e}")).collect::<Vec<_>>()),
    )
}

fn main() {
    println!("acceptance suite on {} threads", rayon::current_num_threads());
    let mut outcomes = vec![
        timed("file-cycle arithmetic", file_cycles),
        timed("rk4 order", rk4_order),
        timed("gradient audit", gradient_audit),
        timed("fixed footprint", fixed_footprint),
    ];

    let desk_cfg = ExtractionConfig::new(0.01, 30, 10.0, FlowMapStrategy::Long).unwrap();
    let desk_tc = TrainConfig { epochs: 50, batch_size: 200, lr0: 1e-3, ..TrainConfig::for_strategy(FlowMapStrategy::Long) };
    let started = Instant::now();
    let (desk, _) = train_model(&gyre(), 2000, desk_cfg, desk_tc, &Architecture::scaled(DESK_WIDTH));
    let train_seconds = started.elapsed().as_secs_f64();
    let desk_eval = evaluate(&desk);

    outcomes.push(timed("desk-scale accuracy", || desk_accuracy(&desk, train_seconds, &desk_eval)));
    outcomes.push(timed("seed-count trend", seed_count_trend));
    outcomes.push(timed("interval trend", || interval_trend(&desk_eval)));
    outcomes.push(timed("ftle fidelity", || ftle_fidelity(&desk)));
    outcomes.push(timed("inference throughput", inference_throughput));
    outcomes.push(timed("degenerate-data convergence", degenerate_convergence));

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}

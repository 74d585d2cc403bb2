use std::num::NonZeroUsize;
use std::sync::OnceLock;

use flowmap_core::error::ReconstructError;
use flowmap_core::fields::{DoubleGyre, UniformFlow};
use flowmap_core::flowmap::{extract, validation_seeds, ExtractionConfig, FlowMapStrategy};
use flowmap_core::geometry::{Domain, Vec3};
use flowmap_core::reconstruct::*;
use flowmap_core::seeding::seed_sobol;
use flowmap_core::surrogate::{train_on_datasets, Architecture, SurrogateModel, TrainConfig};
use proptest::prelude::*;

fn nz(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).unwrap()
}

fn trained<F: flowmap_core::fields::VectorField>(field: &F, strategy: FlowMapStrategy, epochs: usize) -> SurrogateModel {
    let cfg = ExtractionConfig::new(0.01, 20, 2.0, strategy).unwrap();
    let seeds = seed_sobol(Domain::double_gyre(), nz(64), 0);
    let tr = extract(field, &seeds, &cfg).unwrap();
    let va = extract(field, &validation_seeds(&seeds), &cfg).unwrap();
    let tc = TrainConfig { epochs, batch_size: 32, lr0: 1e-3, rng_seed: 4, ..TrainConfig::for_strategy(strategy) };
    train_on_datasets(&tr, &va, &Architecture::scaled(0.125), &tc).unwrap().0
}

fn long_model() -> &'static SurrogateModel {
    static M: OnceLock<SurrogateModel> = OnceLock::new();
    M.get_or_init(|| trained(&DoubleGyre::default(), FlowMapStrategy::Long, 2))
}

fn short_model() -> &'static SurrogateModel {
    static M: OnceLock<SurrogateModel> = OnceLock::new();
    M.get_or_init(|| trained(&DoubleGyre::default(), FlowMapStrategy::Short, 2))
}

fn seeds(n: usize) -> Vec<Vec3> {
    test_seeds(Domain::double_gyre(), nz(n), TEST_SEED_OFFSET, 99).unwrap().positions
}

#[test]
fn long_inference_shape() {
    let m = long_model();
    let cycles = m.extraction.cycle_list();
    let t = infer_long(m, &seeds(50), &cycles).unwrap();
    assert_eq!(t.len(), 50);
    assert!(t.iter().all(|tr| tr.points.len() == 10 && tr.mode == TrajectoryMode::LongDirect));
    assert!(t[0].cycles().eq(cycles.iter().copied()));
    let one = infer_long(m, &seeds(5), &[20]).unwrap();
    assert!(one.iter().all(|tr| tr.points.len() == 1));
}

#[test]
fn long_inference_permutation_and_batching() {
    let m = long_model();
    let s = seeds(700);
    let fwd = infer_long(m, &s, &[20, 60, 200]).unwrap();
    let rev = infer_long(m, &s, &[200, 60, 20]).unwrap();
    for (a, b) in fwd.iter().zip(&rev) {
        assert_eq!(a.points[0], b.points[2]);
        assert_eq!(a.points[2], b.points[0]);
    }
    // one seed at a time gives the same values as the batched request
    for (i, &seed) in s.iter().enumerate().step_by(37) {
        let single = infer_long(m, &[seed], &[20, 60, 200]).unwrap();
        for (p, q) in single[0].positions().zip(fwd[i].positions()) {
            assert!(p.distance(q) < 1e-6, "{p:?} vs {q:?}");
        }
    }
}

#[test]
fn inference_independent_of_thread_count() {
    let m = long_model();
    let s = seeds(1200);
    let cycles = m.extraction.cycle_list();
    let many = infer_long(m, &s, &cycles).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| infer_long(m, &s, &cycles).unwrap());
    assert_eq!(many, one);
}

#[test]
fn bad_cycles_rejected() {
    let m = long_model();
    for bad in [0, 10, 25, 220] {
        assert!(matches!(infer_long(m, &seeds(2), &[bad]), Err(ReconstructError::BadCycle { .. })), "{bad}");
    }
    assert!(matches!(infer_long(m, &seeds(2), &[]), Err(ReconstructError::Empty)));
    assert!(cycles_up_to(m, 30).is_err());
    assert_eq!(cycles_up_to(m, 60).unwrap(), vec![20, 40, 60]);
}

#[test]
fn strategy_mismatch_rejected() {
    assert!(matches!(
        infer_short(long_model(), &seeds(2), &[20]),
        Err(ReconstructError::StrategyMismatch { .. })
    ));
    assert!(matches!(
        infer_long(short_model(), &seeds(2), &[20]),
        Err(ReconstructError::StrategyMismatch { .. })
    ));
}

#[test]
fn stitching_requires_prefix() {
    let m = short_model();
    for bad in [vec![40], vec![20, 60], vec![40, 20]] {
        assert!(matches!(infer_short(m, &seeds(2), &bad), Err(ReconstructError::NonPrefixCycles(_))));
    }
}

#[test]
fn first_stitch_is_one_model_evaluation() {
    let m = short_model();
    let s = seeds(20);
    let t = infer_short(m, &s, &[20]).unwrap();
    let direct = m.predict(&s, &vec![20; s.len()]).unwrap();
    for (tr, d) in t.iter().zip(direct) {
        assert_eq!(tr.points, vec![(20, d)]);
        assert_eq!(tr.mode, TrajectoryMode::ShortStitched);
    }
}

#[test]
fn stitching_composes() {
    let m = short_model();
    let s = seeds(30);
    let full = infer_short(m, &s, &cycles_up_to(m, 200).unwrap()).unwrap();
    let head = infer_short(m, &s, &cycles_up_to(m, 80).unwrap()).unwrap();
    let mids: Vec<Vec3> = head.iter().map(|t| t.last().unwrap()).collect();
    let tail = stitch_from(m, &mids, 80, &[100, 120, 140, 160, 180, 200]).unwrap();
    for (i, tr) in full.iter().enumerate() {
        for (j, step) in tail.iter().enumerate() {
            assert_eq!(tr.points[4 + j].1, step[i]);
        }
    }
}

#[test]
fn perturbation_propagates_through_stitches() {
    let m = short_model();
    let s = seeds(10);
    let first = m.predict(&s, &vec![20; s.len()]).unwrap();
    let bumped: Vec<Vec3> = first.iter().map(|p| *p + Vec3::xy(0.1, 0.0)).collect();
    let clean = stitch_from(m, &first, 20, &[40, 60, 80, 100]).unwrap();
    let noisy = stitch_from(m, &bumped, 20, &[40, 60, 80, 100]).unwrap();
    for (c, n) in clean.iter().zip(&noisy) {
        for (a, b) in c.iter().zip(n) {
            assert!(a.distance(*b) > 0.0);
        }
    }
}

#[test]
fn still_field_stitching_stays_near_seed() {
    let m = trained(&UniformFlow::still(Domain::double_gyre()), FlowMapStrategy::Short, 30);
    let s = seeds(200);
    let one = m.predict(&s, &vec![20; s.len()]).unwrap();
    let residual: f64 = s.iter().zip(&one).map(|(a, b)| a.distance(*b)).sum::<f64>() / s.len() as f64;
    let t = infer_short(&m, &s, &cycles_up_to(&m, 200).unwrap()).unwrap();
    let drift: f64 = t.iter().map(|tr| tr.seed.distance(tr.last().unwrap())).sum::<f64>() / s.len() as f64;
    assert!(drift < 10.0 * residual, "drift {drift} residual {residual}");
}

#[test]
fn ground_truth_matches_dataset_rows() {
    let field = DoubleGyre::default();
    let cfg = ExtractionConfig::new(0.01, 20, 2.0, FlowMapStrategy::Long).unwrap();
    let set = seed_sobol(Domain::double_gyre(), nz(10), 3);
    let ds = extract(&field, &set, &cfg).unwrap();
    let truth = ground_truth(&field, &set.positions, &cfg.cycle_list(), cfg.delta).unwrap();
    for (i, tr) in truth.iter().enumerate() {
        for (j, p) in tr.positions().enumerate() {
            assert!(p.distance(ds.position(j + 1, i)) < 1e-6);
        }
    }
    assert!(ground_truth(&field, &set.positions, &[40, 20], 0.01).is_err());
}

#[test]
fn evaluation_report_counts() {
    let m = long_model();
    let ev = evaluate_model(m, &DoubleGyre::default(), &seeds(300)).unwrap();
    assert_eq!(ev.report.errors.len(), 300);
    assert_eq!(ev.report.trimmed.len(), 297);
    assert_eq!(ev.report.per_cycle.len(), 10);
    assert!(ev.report.min <= ev.report.median && ev.report.median <= ev.report.max);
}

#[test]
fn model_ftle_uses_requested_duration() {
    let m = long_model();
    let f = ftle_from_model(m, 16, 8, 100).unwrap();
    assert_eq!(f.values.len(), 128);
    assert!((f.duration - 1.0).abs() < 1e-12);
    assert!(f.values.iter().all(|v| v.is_finite()));
    assert!(ftle_from_model(m, 16, 8, 110).is_err());
    let s = ftle_from_model(short_model(), 16, 8, 100).unwrap();
    assert!(s.values.iter().all(|v| v.is_finite()));
}

#[test]
fn test_seeds_respect_offset() {
    let d = Domain::double_gyre();
    let s = test_seeds(d, nz(2000), 0.05, 1).unwrap();
    assert!(s.positions.iter().all(|p| p.x >= 0.05 && p.x <= 1.95 && p.y >= 0.05 && p.y <= 0.95));
    assert_eq!(s.positions, test_seeds(d, nz(2000), 0.05, 1).unwrap().positions);
}

fn arb_traj() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 4)
}

fn make(points: &[(f64, f64)]) -> Trajectory {
    Trajectory {
        seed: Vec3::ZERO,
        points: points.iter().enumerate().map(|(j, &(x, y))| ((j as u32 + 1) * 5, Vec3::xy(x, y))).collect(),
        mode: TrajectoryMode::GroundTruth,
    }
}

proptest! {
    #[test]
    fn error_is_a_metric(a in arb_traj(), b in arb_traj(), c in arb_traj()) {
        let (a, b, c) = (make(&a), make(&b), make(&c));
        let ab = trajectory_error(&a, &b).unwrap();
        let bc = trajectory_error(&b, &c).unwrap();
        let ac = trajectory_error(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, trajectory_error(&b, &a).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(trajectory_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn report_is_ordered(errors in prop::collection::vec(0.0..10.0f64, 1..400)) {
        let r = ErrorReport::new(errors.clone(), vec![]).unwrap();
        prop_assert_eq!(r.trimmed.len(), trimmed_len(errors.len()));
        prop_assert!(r.min <= r.median && r.median <= r.max);
        prop_assert!(r.trimmed.windows(2).all(|w| w[0] <= w[1]));
    }
}

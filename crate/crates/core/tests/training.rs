use std::num::NonZeroUsize;

use flowmap_core::fields::{DoubleGyre, UniformFlow};
use flowmap_core::flowmap::{
    assemble_samples, extract, validation_seeds, ExtractionConfig, FlowMapDataset, FlowMapStrategy,
};
use flowmap_core::geometry::{Domain, Vec3};
use flowmap_core::seeding::seed_sobol;
use flowmap_core::surrogate::{
    evaluate, load_model, model_file_size, run_epoch, save_model, train, train_on_datasets,
    AdamState, Architecture, EncodedSamples, Network, SurrogateModel, TrainConfig, TrainingContext,
    HEADER_LEN,
};
use flowmap_core::error::SurrogateError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nz(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).unwrap()
}

fn gyre_datasets(seeds: usize, interval: u32, strategy: FlowMapStrategy) -> (FlowMapDataset, FlowMapDataset) {
    let domain = Domain::double_gyre();
    let cfg = ExtractionConfig::new(0.01, interval, 2.0, strategy).unwrap();
    let train_seeds = seed_sobol(domain, nz(seeds), 0);
    let val = validation_seeds(&train_seeds);
    let field = DoubleGyre::default();
    (extract(&field, &train_seeds, &cfg).unwrap(), extract(&field, &val, &cfg).unwrap())
}

fn small_config(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size: 32, lr0: 1e-3, rng_seed: 11, ..TrainConfig::for_strategy(FlowMapStrategy::Long) }
}

fn tiny() -> Architecture {
    Architecture::scaled(0.125)
}

fn quick_model() -> SurrogateModel {
    let (tr, va) = gyre_datasets(40, 50, FlowMapStrategy::Long);
    train_on_datasets(&tr, &va, &tiny(), &small_config(2)).unwrap().0
}

#[test]
fn default_hyperparameters_follow_strategy() {
    let long = TrainConfig::for_strategy(FlowMapStrategy::Long);
    assert_eq!((long.epochs, long.batch_size, long.lr0), (100, 200, 1e-3));
    let short = TrainConfig::for_strategy(FlowMapStrategy::Short);
    assert_eq!((short.epochs, short.batch_size, short.lr0), (100, 300, 1e-4));
}

#[test]
fn zero_epochs_rejected() {
    let (tr, va) = gyre_datasets(10, 50, FlowMapStrategy::Long);
    let err = train_on_datasets(&tr, &va, &tiny(), &small_config(0)).unwrap_err();
    assert!(matches!(err, SurrogateError::Config(_)));
}

#[test]
fn training_is_deterministic() {
    let (tr, va) = gyre_datasets(30, 50, FlowMapStrategy::Long);
    let (m1, log1) = train_on_datasets(&tr, &va, &tiny(), &small_config(3)).unwrap();
    let (m2, log2) = train_on_datasets(&tr, &va, &tiny(), &small_config(3)).unwrap();
    assert_eq!(m1.to_bytes().unwrap(), m2.to_bytes().unwrap());
    let strip = |l: &flowmap_core::surrogate::TrainLog| {
        l.epochs.iter().map(|r| (r.epoch, r.train_loss, r.val_loss, r.lr)).collect::<Vec<_>>()
    };
    assert_eq!(strip(&log1), strip(&log2));
    assert_eq!(log1.epochs.len(), 3);
}

#[test]
fn different_rng_seed_changes_the_model() {
    let (tr, va) = gyre_datasets(30, 50, FlowMapStrategy::Long);
    let a = train_on_datasets(&tr, &va, &tiny(), &small_config(1)).unwrap().0;
    let cfg = TrainConfig { rng_seed: 12, ..small_config(1) };
    let b = train_on_datasets(&tr, &va, &tiny(), &cfg).unwrap().0;
    assert_ne!(a.fingerprint(), b.fingerprint());
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let (tr, _) = gyre_datasets(20, 50, FlowMapStrategy::Long);
    let ctx = TrainingContext::from_dataset(&tr);
    let data = EncodedSamples::encode(&ctx.normalization, &assemble_samples(&tr));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net: Network<f32> = Network::init(&tiny(), &mut rng);
    let before = net.clone();
    let mut adam = AdamState::new(&net, Default::default());
    let order: Vec<usize> = (0..data.len()).collect();
    run_epoch(&mut net, &mut adam, &data, &order, 16, 0.0, 1).unwrap();
    assert_eq!(adam.step_count(), data.len().div_ceil(16) as u64);
    for (a, b) in before.tensors().iter().zip(net.tensors()) {
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn validation_pass_does_not_touch_parameters() {
    let model = quick_model();
    let (_, va) = gyre_datasets(40, 50, FlowMapStrategy::Long);
    let data = EncodedSamples::encode(&model.normalization, &assemble_samples(&va));
    let before = model.fingerprint();
    let loss = evaluate(&model.network, &data, 7);
    assert!(loss.is_finite() && loss > 0.0);
    assert_eq!(model.fingerprint(), before);
}

#[test]
fn evaluate_is_independent_of_batch_size() {
    let model = quick_model();
    let (tr, _) = gyre_datasets(40, 50, FlowMapStrategy::Long);
    let data = EncodedSamples::encode(&model.normalization, &assemble_samples(&tr));
    let a = evaluate(&model.network, &data, 5);
    let b = evaluate(&model.network, &data, 1000);
    assert!((a - b).abs() < 1e-6 * a.max(1.0));
}

#[test]
fn zero_field_loss_decreases() {
    let domain = Domain::double_gyre();
    let field = UniformFlow::still(domain);
    let cfg = ExtractionConfig::new(0.01, 50, 2.0, FlowMapStrategy::Long).unwrap();
    let seeds = seed_sobol(domain, nz(64), 0);
    let val = validation_seeds(&seeds);
    let tr = extract(&field, &seeds, &cfg).unwrap();
    let va = extract(&field, &val, &cfg).unwrap();
    let (_, log) = train_on_datasets(&tr, &va, &tiny(), &small_config(6)).unwrap();
    let first = log.epochs.first().unwrap().train_loss;
    let last = log.epochs.last().unwrap().train_loss;
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn plateau_schedule_is_reflected_in_log() {
    let (tr, va) = gyre_datasets(20, 50, FlowMapStrategy::Long);
    let (_, log) = train_on_datasets(&tr, &va, &tiny(), &small_config(4)).unwrap();
    assert!(log.epochs.iter().all(|r| r.lr <= 1e-3 && r.lr > 0.0));
    let csv = log.to_csv();
    assert!(csv.starts_with("epoch,train_loss,val_loss,lr,seconds\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn mismatched_validation_extraction_rejected() {
    let (tr, _) = gyre_datasets(20, 50, FlowMapStrategy::Long);
    let (_, va) = gyre_datasets(20, 25, FlowMapStrategy::Long);
    assert!(train_on_datasets(&tr, &va, &tiny(), &small_config(1)).is_err());
}

#[test]
fn empty_samples_rejected() {
    let (tr, _) = gyre_datasets(20, 50, FlowMapStrategy::Long);
    let ctx = TrainingContext::from_dataset(&tr);
    let samples = assemble_samples(&tr);
    assert!(train(&samples, &[], &ctx, &tiny(), &small_config(1)).is_err());
}

#[test]
fn save_load_round_trip_is_byte_identical() {
    let model = quick_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&model, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    save_model(&loaded, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert_eq!(first.len(), model_file_size(&model.architecture));
}

#[test]
fn loaded_model_predicts_identically() {
    let model = quick_model();
    let loaded = SurrogateModel::from_bytes(&model.to_bytes().unwrap()).unwrap();
    let starts = vec![Vec3::xy(0.3, 0.4), Vec3::xy(1.7, 0.9)];
    let cycles = vec![50, 200];
    assert_eq!(model.predict(&starts, &cycles).unwrap(), loaded.predict(&starts, &cycles).unwrap());
}

#[test]
fn file_size_independent_of_seed_count() {
    let (a_tr, a_va) = gyre_datasets(20, 50, FlowMapStrategy::Long);
    let (b_tr, b_va) = gyre_datasets(60, 50, FlowMapStrategy::Long);
    let a = train_on_datasets(&a_tr, &a_va, &tiny(), &small_config(1)).unwrap().0;
    let b = train_on_datasets(&b_tr, &b_va, &tiny(), &small_config(1)).unwrap().0;
    assert_eq!(a.to_bytes().unwrap().len(), b.to_bytes().unwrap().len());
}

#[test]
fn corrupted_payload_fails_checksum() {
    let mut bytes = quick_model().to_bytes().unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    assert!(matches!(SurrogateModel::from_bytes(&bytes), Err(SurrogateError::Checksum { .. })));
}

#[test]
fn bad_magic_and_truncation_rejected() {
    let bytes = quick_model().to_bytes().unwrap();
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(SurrogateModel::from_bytes(&wrong).is_err());
    assert!(SurrogateModel::from_bytes(&bytes[..HEADER_LEN - 1]).is_err());
    assert!(SurrogateModel::from_bytes(&bytes[..bytes.len() - 8]).is_err());
}

#[test]
fn prediction_length_mismatch_rejected() {
    let model = quick_model();
    assert!(model.predict(&[Vec3::xy(0.5, 0.5)], &[50, 100]).is_err());
}

#[test]
fn short_strategy_model_records_strategy() {
    let (tr, va) = gyre_datasets(20, 20, FlowMapStrategy::Short);
    let model = train_on_datasets(&tr, &va, &tiny(), &small_config(1)).unwrap().0;
    assert_eq!(model.strategy(), FlowMapStrategy::Short);
    assert_eq!(model.interval(), 20);
    assert_eq!(model.file_cycles(), 10);
    let loaded = SurrogateModel::from_bytes(&model.to_bytes().unwrap()).unwrap();
    assert_eq!(loaded.strategy(), FlowMapStrategy::Short);
}

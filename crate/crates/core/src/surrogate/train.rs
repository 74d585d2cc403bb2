//! The training loop: shuffled mini-batches, L1 loss, Adam, a validation
//! pass after every epoch, then the plateau scheduler.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::architecture::Architecture;
use super::model::{EncodedSamples, InputNormalization, SurrogateModel, TrainingProvenance};
use super::network::Network;
use super::optim::{l1_loss, l1_loss_grad, AdamConfig, AdamState, PlateauScheduler};
use crate::error::SurrogateError;
use crate::flowmap::{assemble_samples, ExtractionConfig, FlowMapDataset, FlowMapStrategy, TrainingSample};
use crate::io_util::atomic_write;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub adam: AdamConfig,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub rng_seed: u64,
}

impl TrainConfig {
    /// 100 epochs; batch 200 with lr 1e-3 for long flow maps, batch 300 with
    /// lr 1e-4 for short ones.
    pub fn for_strategy(strategy: FlowMapStrategy) -> Self {
        let (batch_size, lr0) = match strategy {
            FlowMapStrategy::Long => (200, 1e-3),
            FlowMapStrategy::Short => (300, 1e-4),
        };
        Self {
            epochs: 100,
            batch_size,
            lr0,
            adam: AdamConfig::default(),
            plateau_factor: 2.0,
            plateau_patience: 5,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.epochs == 0 {
            return Err(SurrogateError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(SurrogateError::Config("batch size must be at least 1".into()));
        }
        if !(self.lr0 > 0.0 && self.lr0 < 1.0) {
            return Err(SurrogateError::Config(format!("lr0 must lie in (0, 1), got {}", self.lr0)));
        }
        if !(self.plateau_factor > 1.0) || self.plateau_patience == 0 {
            return Err(SurrogateError::Config("plateau factor must exceed 1 and patience be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,lr,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{:e},{:e},{:e},{:.3}", r.epoch, r.train_loss, r.val_loss, r.lr, r.seconds);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        atomic_write(path.as_ref(), self.to_csv().as_bytes())
    }
}

/// Everything about the data a model is trained for, besides the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingContext {
    pub normalization: InputNormalization,
    pub extraction: ExtractionConfig,
    pub seeds: crate::flowmap::SeedProvenance,
}

impl TrainingContext {
    pub fn from_dataset(ds: &FlowMapDataset) -> Self {
        Self {
            normalization: InputNormalization {
                domain: ds.seeds.domain,
                total_cycles: ds.config.total_cycles(),
            },
            extraction: ds.config,
            seeds: ds.seeds,
        }
    }
}

/// One pass over `data` in the given sample order. Returns the mean training
/// loss over all samples; the last batch may be shorter.
pub fn run_epoch(
    network: &mut Network<f32>,
    adam: &mut AdamState<f32>,
    data: &EncodedSamples,
    order: &[usize],
    batch_size: usize,
    lr: f64,
    epoch: usize,
) -> Result<f64, SurrogateError> {
    let mut total = 0.0;
    for (batch_idx, batch) in order.chunks(batch_size).enumerate() {
        let pos = data.position.select(Axis(0), batch);
        let cyc = data.cycle.select(Axis(0), batch);
        let target = data.target.select(Axis(0), batch);
        let (pred, cache) = network.forward_train(pos.view(), cyc.view());
        let loss = l1_loss(pred.view(), target.view())? as f64;
        if !loss.is_finite() {
            return Err(SurrogateError::NonFiniteLoss { epoch, batch: batch_idx, lr });
        }
        let grads = network.backward(&cache, l1_loss_grad(pred.view(), target.view()));
        adam.step(network, &grads, lr);
        total += loss * batch.len() as f64;
    }
    Ok(total / order.len() as f64)
}

/// Mean L1 loss over `data` without touching the parameters.
pub fn evaluate(network: &Network<f32>, data: &EncodedSamples, batch_size: usize) -> f64 {
    let n = data.len();
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + batch_size).min(n);
        let slice = ndarray::s![start..end, ..];
        let pred = network.forward(data.position.slice(slice), data.cycle.slice(slice));
        let loss = l1_loss(pred.view(), data.target.slice(slice)).map(|v| v as f64).unwrap_or(0.0);
        total += loss * (end - start) as f64;
        start = end;
    }
    total / n.max(1) as f64
}

/// Trains a fresh network. `on_epoch` sees every log row as it is produced.
pub fn train_with_progress(
    samples: &[TrainingSample],
    val_samples: &[TrainingSample],
    context: &TrainingContext,
    arch: &Architecture,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(SurrogateModel, TrainLog), SurrogateError> {
    cfg.validate()?;
    arch.validate()?;
    if samples.is_empty() || val_samples.is_empty() {
        return Err(SurrogateError::Config("training and validation sets must be non-empty".into()));
    }
    let train_data = EncodedSamples::encode(&context.normalization, samples);
    let val_data = EncodedSamples::encode(&context.normalization, val_samples);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut network: Network<f32> = Network::init(arch, &mut rng);
    let mut adam = AdamState::new(&network, cfg.adam);
    let mut scheduler = PlateauScheduler::new(cfg.lr0, cfg.plateau_factor, cfg.plateau_patience);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let lr = scheduler.lr();
        order.shuffle(&mut rng);
        let train_loss = run_epoch(&mut network, &mut adam, &train_data, &order, cfg.batch_size, lr, epoch)?;
        let val_loss = evaluate(&network, &val_data, cfg.batch_size.max(1024));
        scheduler.observe(val_loss);
        let record = EpochRecord { epoch, train_loss, val_loss, lr, seconds: started.elapsed().as_secs_f64() };
        on_epoch(&record);
        log.epochs.push(record);
    }

    let model = SurrogateModel {
        architecture: arch.clone(),
        network,
        normalization: context.normalization,
        extraction: context.extraction,
        provenance: TrainingProvenance {
            seed_count: context.seeds.count,
            seeding: context.seeds.strategy,
            seed_token: context.seeds.token,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            lr0: cfg.lr0,
            rng_seed: cfg.rng_seed,
        },
    };
    Ok((model, log))
}

pub fn train(
    samples: &[TrainingSample],
    val_samples: &[TrainingSample],
    context: &TrainingContext,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(SurrogateModel, TrainLog), SurrogateError> {
    train_with_progress(samples, val_samples, context, arch, cfg, |_| {})
}

/// Trains on a dataset pair produced by the same extraction.
pub fn train_on_datasets(
    train_ds: &FlowMapDataset,
    val_ds: &FlowMapDataset,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(SurrogateModel, TrainLog), SurrogateError> {
    if train_ds.config != val_ds.config {
        return Err(SurrogateError::Config("training and validation extractions differ".into()));
    }
    let context = TrainingContext::from_dataset(train_ds);
    train(&assemble_samples(train_ds), &assemble_samples(val_ds), &context, arch, cfg)
}

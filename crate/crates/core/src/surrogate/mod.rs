//! Neural surrogate of the flow map: `(seed position, file cycle) → end position`.

mod architecture;
mod model;
mod network;
mod optim;
mod train;

pub use architecture::{Architecture, LayerShape, CYCLE_DIM, OUTPUT_DIM, POSITION_DIM};
pub use model::{
    load_model, model_file_size, save_model, EncodedSamples, InputNormalization, SurrogateModel,
    TrainingProvenance, HEADER_LEN, METADATA_BLOCK_LEN, MODEL_MAGIC,
};
pub use network::{layer_norm_rows, Dense, ForwardCache, Network, NormAffine, Real, LAYER_NORM_EPS};
pub use optim::{l1_loss, l1_loss_grad, AdamConfig, AdamState, PlateauScheduler};
pub use train::{
    evaluate, run_epoch, train, train_on_datasets, train_with_progress, EpochRecord, TrainConfig,
    TrainLog, TrainingContext,
};

//! Latent-conditioned folding decoders, the pose head, and their trainer.

mod benchmark;
mod blob;
mod decoder;
mod mlp;
mod scene;
mod train;

pub use benchmark::{loss_mode_for, BenchmarkConfig, BENCHMARK_HIDDEN};
pub use blob::{decode_weights, encode_weights, read_weights, write_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use decoder::{
    loss_and_gradients, pose_loss_and_gradients, FoldingDecoder, Gradients, LatentCode, PoseDecoder, DEFAULT_HIDDEN,
    LATENT_DIM, POSE_HIDDEN,
};
pub use scene::{generate_scenes, FourierEncoder, SyntheticScene, POSE_PARAMS};
pub use train::{
    evaluate, train, train_pose, train_with_progress, Adam, EpochRecord, FinalMetrics, PoseTrainingLog, TrainerConfig,
    TrainingLog,
};

//! Contrastive alignment objective and training loop.

pub mod affinity;
pub mod loss;
pub mod sampling;
pub mod train;

pub use affinity::{affinity, affinity_backward, affinity_cached, AffinityMatrix, CosineCache};
pub use loss::{align_loss, LabelMatrix};
pub use sampling::{candidate_indices, sample_batches, SamplingConfig, TrainBatch};
pub use train::{
    batch_step, contrastive_step, init_heads, loss_trace_csv, train, write_loss_trace, EpochLoss,
    TrainConfig, TrainOutcome,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::affinity::{affinity_backward, affinity_cached};
use super::loss::{align_loss, LabelMatrix};
use super::sampling::{sample_batches, SamplingConfig, TrainBatch};
use crate::error::{Error, Result};
use crate::model::MatchRecord;
use crate::numerics::head::BLOCK_NAMES;
use crate::numerics::{
    write_checkpoint, AdamWConfig, OptimizerState, ProjectionGrads, ProjectionHeads, Scalar,
};
use crate::seeds::derive_seed;

/// Flat training configuration; field names double as config-file keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub window_before_s: f64,
    pub window_after_s: f64,
    pub negative_gap_s: f64,
    /// Hidden width of both heads; the input width when unset.
    pub hidden_dim: Option<usize>,
    /// Output width of both heads; the input width when unset.
    pub output_dim: Option<usize>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = AdamWConfig::default();
        let sampling = SamplingConfig::default();
        Self {
            epochs: 50,
            lr: opt.lr,
            weight_decay: opt.weight_decay,
            beta1: opt.beta1,
            beta2: opt.beta2,
            eps: opt.eps,
            seed: 0,
            window_before_s: sampling.window_before_s,
            window_after_s: sampling.window_after_s,
            negative_gap_s: sampling.negative_gap_s,
            hidden_dim: None,
            output_dim: None,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            window_before_s: self.window_before_s,
            window_after_s: self.window_after_s,
            negative_gap_s: self.negative_gap_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!(
                "lr must be finite and ≥ 0, got {}",
                self.lr
            )));
        }
        if self.window_before_s < 0.0 || self.window_after_s < 0.0 || self.negative_gap_s < 0.0 {
            return Err(Error::Config(
                "sampling windows must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub heads: ProjectionHeads<f32>,
    pub initial_heads: ProjectionHeads<f32>,
    pub loss_trace: Vec<EpochLoss>,
}

/// Loss and parameter gradients for one contrastive step through both heads.
///
/// `text` holds `k` commentary embeddings, `frames` holds `n` frame
/// embeddings and `labels` is `k × n`.
pub fn contrastive_step<T: Scalar>(
    heads: &ProjectionHeads<T>,
    text: ArrayView2<'_, T>,
    frames: ArrayView2<'_, T>,
    labels: &LabelMatrix,
) -> Result<(f64, ProjectionGrads<T>)> {
    let text_cache = heads.text.forward_cached(text)?;
    let frame_cache = heads.visual.forward_cached(frames)?;
    let (a, cos) = affinity_cached(text_cache.output.view(), frame_cache.output.view())?;
    let (loss, d_a) = align_loss(&a, labels)?;
    let (d_c, d_v) = affinity_backward(&cos, &d_a);
    let text_grads = heads
        .text
        .backward_cached(text, &text_cache, d_c.view(), false)?;
    let visual_grads = heads
        .visual
        .backward_cached(frames, &frame_cache, d_v.view(), false)?;
    Ok((
        loss,
        ProjectionGrads {
            text: text_grads,
            visual: visual_grads,
        },
    ))
}

pub fn batch_step(
    heads: &ProjectionHeads<f32>,
    batch: &TrainBatch,
) -> Result<(f64, ProjectionGrads<f32>)> {
    let labels = LabelMatrix::one_hot(batch.num_candidates(), &[batch.positive_index])?;
    let text = batch.commentary_embedding.view().insert_axis(Axis(0));
    contrastive_step(
        heads,
        text,
        batch.candidate_frame_embeddings.view(),
        &labels,
    )
}

/// Fresh heads for input width `d_in`, seeded from `cfg.seed`.
pub fn init_heads(d_in: usize, cfg: &TrainConfig) -> ProjectionHeads<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "init", 0));
    let d_h = cfg.hidden_dim.unwrap_or(d_in);
    let d_out = cfg.output_dim.unwrap_or(d_in);
    ProjectionHeads::init(d_in, d_h, d_out, cfg.seed, &mut rng)
}

/// Trains both heads with AdamW, one commentary per optimizer step.
pub fn train(dataset: &[MatchRecord], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or(Error::EmptyInput("training set has no matches"))?;
    let d_in = first.frames.dim();
    let sampling = cfg.sampling();

    let mut batches = Vec::new();
    for (m, record) in dataset.iter().enumerate() {
        if record.frames.dim() != d_in {
            return Err(Error::Dimension {
                context: "frame feature width across matches",
                expected: d_in,
                actual: record.frames.dim(),
            });
        }
        batches.extend(sample_batches(
            record,
            &sampling,
            derive_seed(cfg.seed, "batches", m as u64),
        )?);
    }

    let initial_heads = init_heads(d_in, cfg);
    let mut heads = initial_heads.clone();
    let blocks: Vec<(&str, usize)> = BLOCK_NAMES
        .iter()
        .copied()
        .zip(heads.block_sizes())
        .collect();
    let mut opt = OptimizerState::<f32>::new(cfg.optimizer(), &blocks);

    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            cfg.seed,
            "epoch",
            epoch as u64,
        )));
        let mut sum = 0.0;
        for (b, &idx) in order.iter().enumerate() {
            let (loss, grads) = batch_step(&heads, &batches[idx])?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: b,
                });
            }
            sum += loss;
            let grad_blocks = grads.blocks();
            opt.step(&mut heads.blocks_mut(), &grad_blocks)?;
        }
        let mean_loss = sum / batches.len() as f64;
        log::info!(
            "epoch {}/{}: mean loss {mean_loss:.5}",
            epoch + 1,
            cfg.epochs
        );
        loss_trace.push(EpochLoss {
            epoch: epoch + 1,
            mean_loss,
        });
    }

    if let Some(path) = &cfg.checkpoint {
        write_checkpoint(path, &heads)?;
    }
    Ok(TrainOutcome {
        heads,
        initial_heads,
        loss_trace,
    })
}

pub fn loss_trace_csv(trace: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for e in trace {
        let _ = writeln!(out, "{},{}", e.epoch, e.mean_loss);
    }
    out
}

pub fn write_loss_trace(path: impl AsRef<Path>, trace: &[EpochLoss]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, loss_trace_csv(trace)).map_err(|e| Error::io(path, e))
}

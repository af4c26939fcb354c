use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MatchRecord;

/// Candidate window used to build training batches around `t_gt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub window_before_s: f64,
    pub window_after_s: f64,
    /// Frames closer than this to `t_gt` are left out of the negatives.
    pub negative_gap_s: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            window_before_s: 60.0,
            window_after_s: 60.0,
            negative_gap_s: 5.0,
        }
    }
}

/// One commentary with its positive frame and in-window negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainBatch {
    pub match_id: String,
    pub commentary_index: usize,
    /// Pre-projection text embedding, length `d`.
    pub commentary_embedding: Array1<f32>,
    /// `c × d`, in time order.
    pub candidate_frame_embeddings: Array2<f32>,
    pub positive_index: usize,
    pub candidate_timestamps: Vec<f64>,
}

impl TrainBatch {
    pub fn num_candidates(&self) -> usize {
        self.candidate_timestamps.len()
    }
}

/// Frame indices forming the candidate set for a commentary annotated at
/// `t_gt`, in time order, with the position of the positive among them.
pub fn candidate_indices(
    record: &MatchRecord,
    t_gt: f64,
    cfg: &SamplingConfig,
) -> Option<(Vec<usize>, usize)> {
    let frames = &record.frames;
    let positive = frames.nearest(t_gt)?;
    let lo = (t_gt - cfg.window_before_s).max(0.0);
    let hi = (t_gt + cfg.window_after_s).min(record.duration_s);
    let mut indices = Vec::new();
    let mut pos_slot = None;
    for j in frames.range_between(lo, hi) {
        if j == positive {
            pos_slot = Some(indices.len());
            indices.push(j);
            continue;
        }
        let gap = (frames.timestamps[j] - t_gt).abs();
        if gap >= cfg.negative_gap_s {
            indices.push(j);
        }
    }
    let pos_slot = match pos_slot {
        Some(p) => p,
        None => {
            // positive sits outside [lo, hi] (t_gt beyond the last frame); keep order
            let slot = indices.partition_point(|&j| j < positive);
            indices.insert(slot, positive);
            slot
        }
    };
    Some((indices, pos_slot))
}

/// One batch per commentary, in an order shuffled by `seed`.
pub fn sample_batches(
    record: &MatchRecord,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<Vec<TrainBatch>> {
    let gt = record.ground_truth()?;
    let embeddings = record.commentary_embeddings()?;
    let mut batches = Vec::with_capacity(gt.len());
    for (i, &t_gt) in gt.iter().enumerate() {
        let (indices, positive_index) =
            candidate_indices(record, t_gt, cfg).ok_or(Error::EmptyWindow { index: i })?;
        if indices.len() < 2 {
            return Err(Error::EmptyWindow { index: i });
        }
        let positive_frame = indices[positive_index];
        if (record.frames.timestamps[positive_frame] - t_gt).abs() >= cfg.negative_gap_s {
            return Err(Error::EmptyWindow { index: i });
        }
        batches.push(TrainBatch {
            match_id: record.match_id.clone(),
            commentary_index: i,
            commentary_embedding: embeddings.row(i).to_owned(),
            candidate_frame_embeddings: record.frames.features.select(Axis(0), &indices),
            positive_index,
            candidate_timestamps: indices
                .iter()
                .map(|&j| record.frames.timestamps[j])
                .collect(),
        });
    }
    batches.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(batches)
}

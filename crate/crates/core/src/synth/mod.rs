//! Synthetic matches with planted ground truth: a hidden orthonormal map ties
//! each commentary embedding to one key frame, timestamps are perturbed by a
//! calibrated offset model, and a matching transcript can be written.

pub mod dataset;
pub mod generator;
pub mod offsets;
pub mod transcript;

use serde::{Deserialize, Serialize};

pub use dataset::{load_split, read_manifest, write_dataset, DatasetManifest, Split};
pub use generator::{Generator, GroundTruthMap, SyntheticMatch};
pub use offsets::{
    build_delta_fixture, calibrate_sigma, published_summary_fixture, TruncatedNormal,
    CALIBRATED_SIGMA_S,
};
pub use transcript::write_transcript;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_matches: usize,
    /// Trailing matches held out for testing.
    pub num_test: usize,
    /// Matches before the test block held out for validation.
    pub num_val: usize,
    pub commentaries_per_match: usize,
    pub duration_s: f64,
    pub d: usize,
    pub offset_mean_s: f64,
    pub offset_absmean_target_s: f64,
    pub offset_range_s: (f64, f64),
    /// Spread of the offset model; calibrated from the two targets above when unset.
    pub offset_sigma_s: Option<f64>,
    pub noise_sigma: f64,
    pub replay_prob: f64,
    /// Filler narration segments per minute in written transcripts.
    pub filler_per_minute: f64,
    pub write_transcripts: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_matches: 44,
            num_test: 4,
            num_val: 0,
            commentaries_per_match: 60,
            duration_s: 2700.0,
            d: 512,
            offset_mean_s: offsets::OFFSET_MEAN_S,
            offset_absmean_target_s: offsets::OFFSET_ABSMEAN_S,
            offset_range_s: offsets::OFFSET_RANGE_S,
            offset_sigma_s: None,
            noise_sigma: 0.0,
            replay_prob: 0.0,
            filler_per_minute: 4.0,
            write_transcripts: true,
            seed: 0,
        }
    }
}

/// Commentary anchors are kept this far from either end of the half.
pub const EDGE_MARGIN_S: f64 = 60.0;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.duration_s > 0.0) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.commentaries_per_match == 0 {
            return bad("commentaries_per_match must be positive".into());
        }
        let slots = (self.duration_s - 2.0 * EDGE_MARGIN_S).floor();
        if slots < self.commentaries_per_match as f64 {
            return bad(format!(
                "{} commentaries do not fit into {} s",
                self.commentaries_per_match, self.duration_s
            ));
        }
        let (lo, hi) = self.offset_range_s;
        if !(lo < 0.0 && hi > 0.0) {
            return bad(format!("offset range [{lo}, {hi}] must contain 0"));
        }
        if !(0.0..=1.0).contains(&self.replay_prob) {
            return bad(format!(
                "replay_prob must lie in [0, 1], got {}",
                self.replay_prob
            ));
        }
        if !(self.noise_sigma >= 0.0) || !(self.filler_per_minute >= 0.0) {
            return bad("noise_sigma and filler_per_minute must be non-negative".into());
        }
        Ok(())
    }

    pub fn offset_model(&self) -> Result<TruncatedNormal> {
        let (lo, hi) = self.offset_range_s;
        let sigma = match self.offset_sigma_s {
            Some(s) => s,
            None if self.offset_mean_s == offsets::OFFSET_MEAN_S
                && self.offset_absmean_target_s == offsets::OFFSET_ABSMEAN_S
                && self.offset_range_s == offsets::OFFSET_RANGE_S =>
            {
                CALIBRATED_SIGMA_S
            }
            None => calibrate_sigma(self.offset_mean_s, self.offset_absmean_target_s, lo, hi)?,
        };
        TruncatedNormal::new(self.offset_mean_s, sigma, lo, hi)
    }
}

use std::path::PathBuf;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Commentaries may sit this far past the nominal end of a half.
pub const STOPPAGE_TOLERANCE_S: f64 = 300.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CommentaryItem {
    pub text: String,
    /// Source timestamp, seconds from the start of the half. Possibly wrong.
    pub t: f64,
    /// Manually annotated timestamp, when known.
    pub t_gt: Option<f64>,
    /// Timestamp after realignment.
    pub t_aligned: Option<f64>,
    /// Frozen text embedding, same dimension as the frame features.
    pub embedding: Option<Vec<f32>>,
}

impl CommentaryItem {
    pub fn new(text: impl Into<String>, t: f64) -> Self {
        Self {
            text: text.into(),
            t,
            t_gt: None,
            t_aligned: None,
            embedding: None,
        }
    }
}

/// Key-frame embeddings with their timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameFeatureSequence {
    pub timestamps: Vec<f64>,
    /// `n × d`, one row per key frame.
    pub features: Array2<f32>,
    pub fps: f64,
}

impl FrameFeatureSequence {
    pub fn new(timestamps: Vec<f64>, features: Array2<f32>, fps: f64) -> Result<Self> {
        let seq = Self {
            timestamps,
            features,
            fps,
        };
        seq.validate()
            .map_err(|(field, msg)| Error::invariant("", field, msg))?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Returns the offending field and a message on failure.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.features.nrows() != self.timestamps.len() {
            return Err((
                "frames.features",
                format!(
                    "{} feature rows for {} timestamps",
                    self.features.nrows(),
                    self.timestamps.len()
                ),
            ));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err((
                "frames.fps",
                format!("fps must be positive, got {}", self.fps),
            ));
        }
        if let Some(i) = self
            .timestamps
            .iter()
            .position(|t| !t.is_finite() || *t < 0.0)
        {
            return Err((
                "frames.timestamps",
                format!("invalid timestamp at index {i}"),
            ));
        }
        if let Some(i) = self.timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err((
                "frames.timestamps",
                format!("timestamps not strictly increasing at index {}", i + 1),
            ));
        }
        if let Some((i, _)) = self.features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err((
                "frames.features",
                format!("non-finite entry at row {}, column {}", i.0, i.1),
            ));
        }
        Ok(())
    }

    /// Indices of frames with timestamp in `[lo, hi]`, as a half-open index range.
    pub fn range_between(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.timestamps.partition_point(|t| *t < lo);
        let end = self.timestamps.partition_point(|t| *t <= hi);
        start..end.max(start)
    }

    /// Index of the frame nearest to `t`; exact midpoints take the earlier frame.
    pub fn nearest(&self, t: f64) -> Option<usize> {
        if self.timestamps.is_empty() {
            return None;
        }
        let right = self.timestamps.partition_point(|x| *x < t);
        if right == 0 {
            return Some(0);
        }
        if right == self.timestamps.len() {
            return Some(right - 1);
        }
        let left = right - 1;
        if t - self.timestamps[left] <= self.timestamps[right] - t {
            Some(left)
        } else {
            Some(right)
        }
    }
}

/// One half of a match: the commentary stream plus its key frames.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchRecord {
    pub match_id: String,
    pub half: u8,
    pub duration_s: f64,
    pub commentaries: Vec<CommentaryItem>,
    pub frames: FrameFeatureSequence,
    /// Resolved path of the ASR transcript, if one exists.
    pub asr_path: Option<PathBuf>,
    /// Resolved path of the feature file the frames were loaded from.
    pub feature_path: Option<PathBuf>,
}

impl MatchRecord {
    pub fn validate(&self) -> Result<()> {
        let id = self.match_id.as_str();
        if self.half != 1 && self.half != 2 {
            return Err(Error::invariant(
                id,
                "half",
                format!("must be 1 or 2, got {}", self.half),
            ));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invariant(id, "duration_s", "must be positive"));
        }
        if self.commentaries.is_empty() {
            return Err(Error::invariant(
                id,
                "commentaries",
                "at least one commentary required",
            ));
        }
        self.frames
            .validate()
            .map_err(|(field, msg)| Error::invariant(id, field, msg))?;
        let limit = self.duration_s + STOPPAGE_TOLERANCE_S;
        let d = self.frames.dim();
        for (i, c) in self.commentaries.iter().enumerate() {
            let field = |name: &str| format!("commentaries[{i}].{name}");
            if c.text.trim().is_empty() {
                return Err(Error::invariant(id, field("text"), "must be non-empty"));
            }
            if !c.t.is_finite() || c.t < 0.0 {
                return Err(Error::invariant(
                    id,
                    field("t"),
                    format!("must be ≥ 0, got {}", c.t),
                ));
            }
            if c.t > limit {
                return Err(Error::invariant(
                    id,
                    field("t"),
                    format!(
                        "{} exceeds duration {} + {STOPPAGE_TOLERANCE_S} s",
                        c.t, self.duration_s
                    ),
                ));
            }
            if let Some(g) = c.t_gt {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::invariant(
                        id,
                        field("t_gt"),
                        format!("must be ≥ 0, got {g}"),
                    ));
                }
            }
            if let Some(a) = c.t_aligned {
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::invariant(
                        id,
                        field("t_aligned"),
                        format!("must be ≥ 0, got {a}"),
                    ));
                }
            }
            if let Some(e) = &c.embedding {
                if e.len() != d {
                    return Err(Error::invariant(
                        id,
                        field("embedding"),
                        format!("length {} does not match frame dimension {d}", e.len()),
                    ));
                }
                if e.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invariant(id, field("embedding"), "non-finite entry"));
                }
            }
        }
        Ok(())
    }

    pub fn has_ground_truth(&self) -> bool {
        self.commentaries.iter().all(|c| c.t_gt.is_some())
    }

    pub fn ground_truth(&self) -> Result<Vec<f64>> {
        self.commentaries
            .iter()
            .enumerate()
            .map(|(index, c)| {
                c.t_gt.ok_or_else(|| Error::MissingGroundTruth {
                    match_id: self.match_id.clone(),
                    index,
                })
            })
            .collect()
    }

    /// `k × d` matrix of commentary embeddings.
    pub fn commentary_embeddings(&self) -> Result<Array2<f32>> {
        let d = self.frames.dim();
        let mut out = Array2::zeros((self.commentaries.len(), d));
        for (i, c) in self.commentaries.iter().enumerate() {
            let e = c
                .embedding
                .as_ref()
                .ok_or_else(|| Error::MissingEmbedding {
                    match_id: self.match_id.clone(),
                    index: i,
                })?;
            if e.len() != d {
                return Err(Error::Dimension {
                    context: "commentary embedding",
                    expected: d,
                    actual: e.len(),
                });
            }
            out.row_mut(i)
                .assign(&ndarray::ArrayView1::from(e.as_slice()));
        }
        Ok(out)
    }
}

/// Display form `"H - MM:SS"` of a timestamp within a half.
pub fn display_timestamp(half: u8, t: f64) -> String {
    let total = t.max(0.0).round() as u64;
    format!("{half} - {:02}:{:02}", total / 60, total % 60)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(ts: &[f64]) -> FrameFeatureSequence {
        FrameFeatureSequence {
            timestamps: ts.to_vec(),
            features: Array2::zeros((ts.len(), 2)),
            fps: 1.0,
        }
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let err = frames(&[0.0, 2.0, 1.0]).validate().unwrap_err();
        assert_eq!(err.0, "frames.timestamps");
        assert!(err.1.contains("timestamps not strictly increasing"));
    }

    #[test]
    fn nearest_prefers_earlier_on_midpoint() {
        let f = frames(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.nearest(1.5), Some(1));
        assert_eq!(f.nearest(1.6), Some(2));
        assert_eq!(f.nearest(-4.0), Some(0));
        assert_eq!(f.nearest(99.0), Some(3));
    }

    #[test]
    fn range_is_inclusive() {
        let f = frames(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.range_between(1.0, 3.0), 1..4);
        assert_eq!(f.range_between(1.5, 1.7), 2..2);
        assert_eq!(f.range_between(-10.0, 0.0), 0..1);
    }

    #[test]
    fn display_format() {
        assert_eq!(display_timestamp(2, 605.4), "2 - 10:05");
        assert_eq!(display_timestamp(1, 0.0), "1 - 00:00");
    }
}

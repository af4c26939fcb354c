//! Inference-time timestamp correction: project both modalities, score the
//! frames inside an asymmetric window around each commentary and keep the
//! argmax.

use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::coarse::{coarse_align, CoarseConfig, CoarseMode, EstimateSource, LlmClient};
use crate::error::{Error, Result};
use crate::model::{write_match_file, MatchRecord, Provenance};
use crate::numerics::ProjectionHeads;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealignConfig {
    pub before_s: f64,
    pub after_s: f64,
    pub fps: f64,
}

impl Default for RealignConfig {
    fn default() -> Self {
        Self {
            before_s: 45.0,
            after_s: 30.0,
            fps: 1.0,
        }
    }
}

impl RealignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.before_s >= 0.0) || !(self.after_s >= 0.0) {
            return Err(Error::Config(
                "before_s and after_s must be non-negative".into(),
            ));
        }
        if !(self.fps > 0.0) {
            return Err(Error::Config(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        Ok(())
    }

    /// Candidate interval around `center`, clipped to `[0, duration_s]`.
    pub fn window(&self, center: f64, duration_s: f64) -> (f64, f64) {
        (
            (center - self.before_s).max(0.0),
            (center + self.after_s).min(duration_s),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignedEntry {
    pub index: usize,
    /// Timestamp as given in the input file.
    pub t_input: f64,
    /// Window center: the coarse estimate, or `t_input` without a coarse stage.
    pub t_center: f64,
    pub t_aligned: f64,
    pub frame_index: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub match_id: String,
    pub entries: Vec<AlignedEntry>,
    /// `"llm"`, `"lexical"` or `"off"`; `"off"` also when no transcript exists.
    pub coarse_stage: String,
    pub fine_stage: bool,
    pub warnings: Vec<String>,
}

impl AlignmentReport {
    pub fn aligned(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t_aligned).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t_center).collect()
    }

    /// Copy of `record` with `t_aligned` filled from this report.
    pub fn apply(&self, record: &MatchRecord) -> MatchRecord {
        let mut out = record.clone();
        for e in &self.entries {
            out.commentaries[e.index].t_aligned = Some(e.t_aligned);
        }
        out
    }
}

fn check_dims(record: &MatchRecord, heads: &ProjectionHeads<f32>) -> Result<()> {
    let (d_in, _, _) = heads.dims();
    if record.frames.dim() != d_in {
        return Err(Error::Dimension {
            context: "frame features vs. checkpoint input width",
            expected: d_in,
            actual: record.frames.dim(),
        });
    }
    Ok(())
}

fn unit_rows(x: Array2<f32>, name: &'static str) -> Result<Array2<f64>> {
    let mut x = x.mapv(|v| v as f64);
    for (row, mut r) in x.axis_iter_mut(Axis(0)).enumerate() {
        let n = r.dot(&r).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm { matrix: name, row });
        }
        r /= n;
    }
    Ok(x)
}

/// Fine realignment with windows centered on `centers` (one per commentary).
pub fn realign_with_centers(
    record: &MatchRecord,
    heads: &ProjectionHeads<f32>,
    centers: &[f64],
    cfg: &RealignConfig,
) -> Result<AlignmentReport> {
    cfg.validate()?;
    check_dims(record, heads)?;
    if centers.len() != record.commentaries.len() {
        return Err(Error::LengthMismatch {
            pred: centers.len(),
            gt: record.commentaries.len(),
        });
    }
    let text = unit_rows(
        heads.text.forward(record.commentary_embeddings()?.view())?,
        "commentary",
    )?;
    let frames = unit_rows(
        heads.visual.forward(record.frames.features.view())?,
        "frame",
    )?;

    let mut entries = Vec::with_capacity(centers.len());
    for (i, (&center, c)) in centers.iter().zip(&record.commentaries).enumerate() {
        let (lo, hi) = cfg.window(center, record.duration_s);
        let range = record.frames.range_between(lo, hi);
        if range.is_empty() {
            return Err(Error::EmptyWindow { index: i });
        }
        let (frame_index, score) = argmax_earliest(text.row(i), &frames, range);
        entries.push(AlignedEntry {
            index: i,
            t_input: c.t,
            t_center: center,
            t_aligned: record.frames.timestamps[frame_index],
            frame_index,
            score,
        });
    }
    Ok(AlignmentReport {
        match_id: record.match_id.clone(),
        entries,
        coarse_stage: CoarseMode::Off.as_str().into(),
        fine_stage: true,
        warnings: Vec::new(),
    })
}

fn argmax_earliest(
    query: ArrayView1<'_, f64>,
    frames: &Array2<f64>,
    range: std::ops::Range<usize>,
) -> (usize, f64) {
    let mut best = (range.start, f64::NEG_INFINITY);
    for j in range {
        let s = query.dot(&frames.row(j));
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

/// Fine realignment around each commentary's own timestamp.
pub fn realign_match(
    record: &MatchRecord,
    heads: &ProjectionHeads<f32>,
    cfg: &RealignConfig,
) -> Result<AlignmentReport> {
    let centers: Vec<f64> = record.commentaries.iter().map(|c| c.t).collect();
    realign_with_centers(record, heads, &centers, cfg)
}

/// Exhaustive reference scorer: projects every row on its own in 64-bit
/// arithmetic and scans all frames, or only those inside `window` around each
/// commentary's `t` when given. Returns the chosen frame index per commentary.
pub fn brute_force_indices(
    record: &MatchRecord,
    heads: &ProjectionHeads<f32>,
    window: Option<&RealignConfig>,
) -> Result<Vec<usize>> {
    check_dims(record, heads)?;
    let h = heads.cast::<f64>();
    let project =
        |head: &crate::numerics::MlpHead<f64>, row: ArrayView1<'_, f32>| -> Result<Vec<f64>> {
            let x = row.mapv(|v| v as f64).insert_axis(Axis(0));
            Ok(head.forward(x.view())?.row(0).to_vec())
        };
    let frames: Vec<Vec<f64>> = record
        .frames
        .features
        .rows()
        .into_iter()
        .map(|r| project(&h.visual, r))
        .collect::<Result<_>>()?;
    let embeddings = record.commentary_embeddings()?;

    let mut out = Vec::with_capacity(record.commentaries.len());
    for (i, c) in record.commentaries.iter().enumerate() {
        let q = project(&h.text, embeddings.row(i))?;
        let mut best: Option<(usize, f64)> = None;
        for (j, v) in frames.iter().enumerate() {
            let t = record.frames.timestamps[j];
            if let Some(cfg) = window {
                let (lo, hi) = cfg.window(c.t, record.duration_s);
                if t < lo || t > hi {
                    continue;
                }
            }
            let s = cosine(&q, v).ok_or(Error::ZeroNorm {
                matrix: "frame",
                row: j,
            })?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        out.push(best.ok_or(Error::EmptyWindow { index: i })?.0);
    }
    Ok(out)
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}

/// Timestamps chosen by [`brute_force_indices`] over all frames.
pub fn brute_force_align(record: &MatchRecord, heads: &ProjectionHeads<f32>) -> Result<Vec<f64>> {
    Ok(brute_force_indices(record, heads, None)?
        .into_iter()
        .map(|j| record.frames.timestamps[j])
        .collect())
}

/// Coarse stage (when a transcript exists and the mode is not off) followed
/// by fine realignment re-centered on the coarse estimates.
pub fn pipeline_align(
    record: &MatchRecord,
    heads: &ProjectionHeads<f32>,
    coarse_cfg: &CoarseConfig,
    cfg: &RealignConfig,
    client: Option<&dyn LlmClient>,
) -> Result<AlignmentReport> {
    let Some(coarse) = coarse_align(record, coarse_cfg, client)? else {
        return realign_match(record, heads, cfg);
    };
    let centers: Vec<f64> = coarse.estimates.iter().map(|e| e.t).collect();
    let mut report = realign_with_centers(record, heads, &centers, cfg)?;
    let used_llm = coarse
        .estimates
        .iter()
        .any(|e| e.source == EstimateSource::Llm);
    report.coarse_stage = match coarse_cfg.mode {
        CoarseMode::Llm if used_llm || client.is_some() => "llm",
        m => m.as_str(),
    }
    .into();
    report.warnings = coarse.warnings;
    Ok(report)
}

/// Writes `record` with `t_aligned` populated and a provenance block.
pub fn write_aligned(
    path: impl AsRef<Path>,
    record: &MatchRecord,
    report: &AlignmentReport,
    checkpoint_id: &str,
    config: serde_json::Value,
) -> Result<()> {
    let provenance = Provenance {
        checkpoint_id: checkpoint_id.to_owned(),
        config,
        coarse_stage: report.coarse_stage.clone(),
        fine_stage: report.fine_stage,
    };
    write_match_file(path, &report.apply(record), Some(provenance))
}

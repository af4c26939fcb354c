//! JSON match file:
//!
//! ```json
//! {
//!   "match_id": "synth-0001", "half": 1, "duration_s": 2700.0,
//!   "commentaries": [{"text": "...", "t": 612.4, "t_gt": 600.0}],
//!   "frames": {"feature_file": "synth-0001.alnf", "fps": 1.0},
//!   "asr_file": "synth-0001.asr.json"
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the match file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::read_feature_file;
use super::types::{display_timestamp, CommentaryItem, MatchRecord};
use crate::error::{Error, Result};

fn default_fps() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommentaryDoc {
    pub text: String,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_aligned: Option<f64>,
    /// Derived `"H - MM:SS"` form of `t`; ignored on read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FramesDoc {
    pub feature_file: String,
    #[serde(default = "default_fps")]
    pub fps: f64,
}

/// Records how an aligned file was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub checkpoint_id: String,
    pub config: serde_json::Value,
    pub coarse_stage: String,
    pub fine_stage: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchDoc {
    pub match_id: String,
    pub half: u8,
    pub duration_s: f64,
    pub commentaries: Vec<CommentaryDoc>,
    pub frames: FramesDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Expresses `target` relative to `dir` when it lives there, else as given.
fn relativize(dir: &Path, target: &Path) -> String {
    if target.parent() == Some(dir) || (dir.as_os_str().is_empty() && target.parent().is_none()) {
        if let Some(name) = target.file_name() {
            return name.to_string_lossy().into_owned();
        }
    }
    match (fs::canonicalize(dir), fs::canonicalize(target)) {
        (Ok(d), Ok(t)) if t.parent() == Some(d.as_path()) => {
            t.file_name().unwrap().to_string_lossy().into_owned()
        }
        (_, Ok(t)) => t.to_string_lossy().into_owned(),
        _ => target.to_string_lossy().into_owned(),
    }
}

/// Parses and validates a match file, loading its feature file.
pub fn load_match(path: impl AsRef<Path>) -> Result<MatchRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        match_id: "?".into(),
        message: e.to_string(),
    })?;
    let match_id = raw
        .get("match_id")
        .and_then(|v| v.as_str())
        .unwrap_or("?")
        .to_owned();
    let doc: MatchDoc = serde_json::from_value(raw).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        match_id: match_id.clone(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let feature_path = resolve(base, &doc.frames.feature_file);
    if !feature_path.is_file() {
        return Err(Error::MissingFeatureFile {
            match_id,
            path: feature_path,
        });
    }
    let frames = read_feature_file(&feature_path, doc.frames.fps).map_err(|e| match e {
        Error::Format { message, .. } => {
            Error::invariant(&match_id, "frames.feature_file", message)
        }
        other => other,
    })?;

    let record = MatchRecord {
        match_id: doc.match_id,
        half: doc.half,
        duration_s: doc.duration_s,
        commentaries: doc
            .commentaries
            .into_iter()
            .map(|c| CommentaryItem {
                text: c.text,
                t: c.t,
                t_gt: c.t_gt,
                t_aligned: c.t_aligned,
                embedding: c.embedding,
            })
            .collect(),
        frames,
        asr_path: doc.asr_file.map(|a| resolve(base, &a)),
        feature_path: Some(feature_path),
    };
    record.validate()?;
    Ok(record)
}

pub fn to_doc(
    record: &MatchRecord,
    out_dir: &Path,
    provenance: Option<Provenance>,
) -> Result<MatchDoc> {
    let feature_path = record.feature_path.as_ref().ok_or_else(|| {
        Error::invariant(
            &record.match_id,
            "frames.feature_file",
            "record has no feature file path",
        )
    })?;
    Ok(MatchDoc {
        match_id: record.match_id.clone(),
        half: record.half,
        duration_s: record.duration_s,
        commentaries: record
            .commentaries
            .iter()
            .map(|c| CommentaryDoc {
                text: c.text.clone(),
                t: c.t,
                t_gt: c.t_gt,
                t_aligned: c.t_aligned,
                display: Some(display_timestamp(record.half, c.t)),
                embedding: c.embedding.clone(),
            })
            .collect(),
        frames: FramesDoc {
            feature_file: relativize(out_dir, feature_path),
            fps: record.frames.fps,
        },
        asr_file: record.asr_path.as_ref().map(|p| relativize(out_dir, p)),
        provenance,
    })
}

/// Writes the JSON part of a match record; the feature file must already exist
/// at `record.feature_path`.
pub fn write_match_file(
    path: impl AsRef<Path>,
    record: &MatchRecord,
    provenance: Option<Provenance>,
) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or(Path::new(""));
    let doc = to_doc(record, dir, provenance)?;
    let mut text = serde_json::to_string_pretty(&doc).expect("match doc serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::features::write_feature_file;
    use crate::model::FrameFeatureSequence;
    use ndarray::Array2;

    fn write_fixture(dir: &Path, timestamps: &[f64], commentaries: serde_json::Value) -> PathBuf {
        let frames = FrameFeatureSequence {
            timestamps: timestamps.to_vec(),
            features: Array2::from_elem((timestamps.len(), 4), 0.5),
            fps: 1.0,
        };
        write_feature_file(dir.join("m.alnf"), &frames).unwrap();
        let doc = serde_json::json!({
            "match_id": "m1",
            "half": 1,
            "duration_s": 119.0,
            "commentaries": commentaries,
            "frames": {"feature_file": "m.alnf", "fps": 1.0}
        });
        let p = dir.join("m.json");
        fs::write(&p, doc.to_string()).unwrap();
        p
    }

    fn ticks(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn loads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_fixture(
            dir.path(),
            &ticks(120),
            serde_json::json!([
                {"text": "corner kick", "t": 10.0, "t_gt": 8.0},
                {"text": "yellow card", "t": 50.0, "t_gt": 47.0},
                {"text": "goal", "t": 90.5, "t_gt": 88.0}
            ]),
        );
        let m = load_match(&p).unwrap();
        assert_eq!(m.commentaries.len(), 3);
        assert_eq!(m.frames.len(), 120);
        assert_eq!(m.frames.dim(), 4);
    }

    #[test]
    fn decreasing_frame_timestamps_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let frames = FrameFeatureSequence {
            timestamps: vec![0.0, 2.0, 1.0],
            features: Array2::zeros((3, 2)),
            fps: 1.0,
        };
        write_feature_file(dir.path().join("m.alnf"), &frames).unwrap();
        let doc = serde_json::json!({
            "match_id": "bad", "half": 1, "duration_s": 10.0,
            "commentaries": [{"text": "x", "t": 1.0}],
            "frames": {"feature_file": "m.alnf"}
        });
        let p = dir.path().join("m.json");
        fs::write(&p, doc.to_string()).unwrap();
        let err = load_match(&p).unwrap_err().to_string();
        assert!(err.contains("timestamps not strictly increasing"), "{err}");
        assert!(
            err.contains("bad") && err.contains("frames.timestamps"),
            "{err}"
        );
    }

    #[test]
    fn ground_truth_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_fixture(
            dir.path(),
            &ticks(30),
            serde_json::json!([{"text": "kick off", "t": 1.0}, {"text": "foul", "t": 20.0}]),
        );
        let m = load_match(&p).unwrap();
        assert!(m.commentaries.iter().all(|c| c.t_gt.is_none()));
        assert!(!m.has_ground_truth());
    }

    #[test]
    fn missing_feature_file_reports_match() {
        let dir = tempfile::tempdir().unwrap();
        let doc = serde_json::json!({
            "match_id": "lost", "half": 2, "duration_s": 10.0,
            "commentaries": [{"text": "x", "t": 1.0}],
            "frames": {"feature_file": "nope.alnf"}
        });
        let p = dir.path().join("m.json");
        fs::write(&p, doc.to_string()).unwrap();
        let err = load_match(&p).unwrap_err();
        assert!(
            matches!(err, Error::MissingFeatureFile { ref match_id, .. } if match_id == "lost")
        );
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_fixture(
            dir.path(),
            &ticks(10),
            serde_json::json!([{"text": "ok", "t": 1.0}, {"text": "neg", "t": -3.0}]),
        );
        let err = load_match(&p).unwrap_err().to_string();
        assert!(err.contains("commentaries[1].t"), "{err}");

        let p = write_fixture(
            dir.path(),
            &ticks(10),
            serde_json::json!([{"text": "", "t": 1.0}]),
        );
        let err = load_match(&p).unwrap_err().to_string();
        assert!(err.contains("commentaries[0].text"), "{err}");

        let p = write_fixture(dir.path(), &ticks(10), serde_json::json!([]));
        assert!(load_match(&p)
            .unwrap_err()
            .to_string()
            .contains("commentaries"));
    }

    #[test]
    fn parse_error_carries_match_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, r#"{"match_id": "broken", "half": "one"}"#).unwrap();
        let err = load_match(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { ref match_id, .. } if match_id == "broken"));
    }

    #[test]
    fn write_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_fixture(
            dir.path(),
            &ticks(60),
            serde_json::json!([{"text": "shot", "t": 12.0, "t_gt": 10.0}]),
        );
        let mut m = load_match(&p).unwrap();
        m.commentaries[0].t_aligned = Some(11.0);
        let out = dir.path().join("aligned.json");
        let prov = Provenance {
            checkpoint_id: "abc".into(),
            config: serde_json::json!({"before_s": 45.0}),
            coarse_stage: "off".into(),
            fine_stage: true,
        };
        write_match_file(&out, &m, Some(prov.clone())).unwrap();
        let back = load_match(&out).unwrap();
        assert_eq!(back.commentaries, m.commentaries);
        let doc: MatchDoc = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(doc.provenance, Some(prov));
        assert_eq!(doc.frames.feature_file, "m.alnf");
        assert_eq!(doc.commentaries[0].display.as_deref(), Some("1 - 00:12"));
    }
}

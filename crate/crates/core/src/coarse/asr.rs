use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A transcribed span of narration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsrSegment {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub text: String,
}

/// ASR input file: `{"segments": [{"start", "end", "text"}]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AsrTranscript {
    pub segments: Vec<AsrSegment>,
}

/// Narration text (raw or summarised) for `[start_s, end_s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventBin {
    pub start_s: f64,
    pub end_s: f64,
    pub summary: String,
}

impl EventBin {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start_s + self.end_s)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }
}

pub fn read_asr_file(path: impl AsRef<Path>) -> Result<AsrTranscript> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        match_id: "?".into(),
        message: e.to_string(),
    })
}

pub fn write_asr_file(path: impl AsRef<Path>, transcript: &AsrTranscript) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(transcript).expect("transcript serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Tiles `[0, max(duration_s, last segment end))` into `bin_s` bins and
/// assigns each segment's text to every bin its `[start, end)` overlaps.
pub fn bin_transcript(
    segments: &[AsrSegment],
    bin_s: f64,
    duration_s: f64,
) -> Result<Vec<EventBin>> {
    if !(bin_s > 0.0) {
        return Err(Error::Config(format!(
            "bin width must be positive, got {bin_s}"
        )));
    }
    for (i, s) in segments.iter().enumerate() {
        if !(s.start >= 0.0) || !(s.end >= 0.0) {
            return Err(Error::Config(format!("segment {i} has a negative time")));
        }
        if s.end < s.start {
            return Err(Error::Config(format!("segment {i} ends before it starts")));
        }
    }
    let horizon = segments
        .iter()
        .map(|s| s.end)
        .fold(duration_s.max(0.0), f64::max);
    let count = ((horizon / bin_s).ceil() as usize).max(1);
    let mut texts: Vec<Vec<&str>> = vec![Vec::new(); count];

    let mut ordered: Vec<&AsrSegment> = segments.iter().collect();
    ordered.sort_by(|a, b| a.start.total_cmp(&b.start));
    for s in ordered {
        let first = (s.start / bin_s).floor() as usize;
        // [start, end) overlaps bin b iff start < (b+1)·w and end > b·w
        let last = if s.end > s.start {
            ((s.end / bin_s).ceil() as usize)
                .saturating_sub(1)
                .max(first)
        } else {
            first
        };
        for slot in texts.iter_mut().take(last.min(count - 1) + 1).skip(first) {
            if !s.text.trim().is_empty() {
                slot.push(s.text.trim());
            }
        }
    }
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(b, parts)| EventBin {
            start_s: b as f64 * bin_s,
            end_s: (b + 1) as f64 * bin_s,
            summary: parts.join(" "),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(start: f64, end: f64, text: &str) -> AsrSegment {
        AsrSegment {
            start,
            end,
            text: text.into(),
        }
    }

    fn occupied(bins: &[EventBin]) -> Vec<usize> {
        bins.iter()
            .enumerate()
            .filter(|(_, b)| !b.summary.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn segment_inside_one_bin() {
        let bins = bin_transcript(&[seg(13.2, 15.0, "corner")], 10.0, 60.0).unwrap();
        assert_eq!(occupied(&bins), vec![1]);
        assert_eq!((bins[1].start_s, bins[1].end_s), (10.0, 20.0));
    }

    #[test]
    fn segment_straddling_two_bins() {
        let bins = bin_transcript(&[seg(8.0, 14.0, "free kick")], 10.0, 60.0).unwrap();
        assert_eq!(occupied(&bins), vec![0, 1]);
    }

    #[test]
    fn end_on_boundary_is_exclusive() {
        let bins = bin_transcript(&[seg(12.0, 20.0, "x")], 10.0, 60.0).unwrap();
        assert_eq!(occupied(&bins), vec![1]);
    }

    #[test]
    fn empty_transcript_gives_empty_bins() {
        let bins = bin_transcript(&[], 10.0, 45.0).unwrap();
        assert_eq!(bins.len(), 5);
        assert!(bins.iter().all(|b| b.summary.is_empty()));
    }

    #[test]
    fn negative_times_rejected() {
        assert!(bin_transcript(&[seg(-1.0, 2.0, "x")], 10.0, 60.0).is_err());
    }

    #[test]
    fn concatenates_in_time_order() {
        let bins = bin_transcript(
            &[seg(5.0, 6.0, "second"), seg(1.0, 2.0, "first")],
            10.0,
            10.0,
        )
        .unwrap();
        assert_eq!(bins[0].summary, "first second");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = AsrTranscript {
            segments: vec![seg(0.5, 2.0, "hello"), seg(3.0, 4.0, "")],
        };
        let p = dir.path().join("a.json");
        write_asr_file(&p, &t).unwrap();
        assert_eq!(read_asr_file(&p).unwrap(), t);
    }

    proptest! {
        #[test]
        fn every_segment_lands_somewhere(
            raw in prop::collection::vec((0.0f64..500.0, 0.0f64..30.0, "[a-z]{1,8}"), 0..30)
        ) {
            let segs: Vec<AsrSegment> = raw.iter().map(|(s, len, t)| seg(*s, s + len, t)).collect();
            let bins = bin_transcript(&segs, 10.0, 300.0).unwrap();
            for s in &segs {
                let hit = bins.iter().any(|b| {
                    b.summary.split(' ').any(|w| w == s.text)
                        && s.start < b.end_s
                        && (s.end > b.start_s || (s.end == s.start && b.contains(s.start)))
                });
                prop_assert!(hit, "segment {:?} missing", s);
            }
        }
    }
}

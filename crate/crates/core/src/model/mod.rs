//! Domain types, file formats and alignment metrics.

pub mod features;
pub mod matchfile;
pub mod metrics;
pub mod report;
pub mod types;

pub use features::{read_feature_file, write_feature_file};
pub use matchfile::{load_match, write_match_file, MatchDoc, Provenance};
pub use metrics::{compute_offset_stats, OffsetStats, WindowCoverage, DEFAULT_WINDOWS};
pub use report::{histogram, render_report, render_table, HistogramBin, Report};
pub use types::{display_timestamp, CommentaryItem, FrameFeatureSequence, MatchRecord};

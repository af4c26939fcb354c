//! Coarse-to-fine alignment of timestamped match commentary to video key
//! frames.
//!
//! Commentary timestamps are first moved to the transcript bin that narrates
//! the same event ([`coarse`]), then refined to the best-scoring key frame in
//! a `-45 s / +30 s` window using two trained projection heads ([`realign`]).
//! [`synth`] generates matches with planted ground truth for testing the
//! whole pipeline without real video.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aligner;
pub mod cli;
pub mod coarse;
pub mod error;
pub mod model;
pub mod numerics;
pub mod realign;
pub mod seeds;
pub mod synth;

pub use error::{Error, Result};

//! Dense kernels, projection heads, the AdamW optimizer and finite-difference
//! gradient checking.
//!
//! Everything here is generic over [`Scalar`] so the same code trains in
//! `f32` and is gradient-checked in `f64`.

pub mod adamw;
pub mod checkpoint;
pub mod gradcheck;
pub mod head;

use std::fmt::Debug;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;

pub use adamw::{AdamWConfig, OptimizerState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use head::{HeadCache, HeadGrads, MlpHead, ProjectionGrads, ProjectionHeads};

/// Floating-point element type usable by the kernels in this crate.
pub trait Scalar:
    LinalgScalar + Float + ScalarOperand + Debug + Default + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

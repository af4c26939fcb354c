use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::Scalar;
use crate::error::{Error, Result};

/// Two-layer projection head: `relu(X·W1 + b1)·W2 + b2`, applied row-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpHead<T> {
    /// `d_in × d_h`
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    /// `d_h × d_out`
    pub w2: Array2<T>,
    pub b2: Array1<T>,
}

/// Intermediate activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct HeadCache<T> {
    pub pre_activation: Array2<T>,
    pub hidden: Array2<T>,
    pub output: Array2<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads<T> {
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    /// Gradient with respect to the head input, when requested.
    pub input: Option<Array2<T>>,
}

impl<T: Scalar> MlpHead<T> {
    pub fn zeros(d_in: usize, d_h: usize, d_out: usize) -> Self {
        Self {
            w1: Array2::zeros((d_in, d_h)),
            b1: Array1::zeros(d_h),
            w2: Array2::zeros((d_h, d_out)),
            b2: Array1::zeros(d_out),
        }
    }

    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_h: usize, d_out: usize, rng: &mut R) -> Self {
        let bound1 = 1.0 / (d_in as f64).sqrt();
        let bound2 = 1.0 / (d_h as f64).sqrt();
        let mut uniform = |bound: f64| T::from_f64(rng.random_range(-bound..=bound));
        Self {
            w1: Array2::from_shape_simple_fn((d_in, d_h), || uniform(bound1)),
            b1: Array1::zeros(d_h),
            w2: Array2::from_shape_simple_fn((d_h, d_out), || uniform(bound2)),
            b2: Array1::zeros(d_out),
        }
    }

    /// `(d_in, d_h, d_out)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.nrows(), self.w1.ncols(), self.w2.ncols())
    }

    pub fn d_in(&self) -> usize {
        self.w1.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.w2.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &ArrayView2<'_, T>) -> Result<()> {
        if x.ncols() != self.d_in() {
            return Err(Error::Dimension {
                context: "head input columns",
                expected: self.d_in(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, T>) -> Result<HeadCache<T>> {
        self.check_input(&x)?;
        let pre_activation = x.dot(&self.w1) + &self.b1;
        let hidden = pre_activation.mapv(|v| v.max(T::zero()));
        let output = hidden.dot(&self.w2) + &self.b2;
        Ok(HeadCache {
            pre_activation,
            hidden,
            output,
        })
    }

    /// Exact gradients of [`MlpHead::forward`] given `dL/dY`.
    pub fn backward(
        &self,
        x: ArrayView2<'_, T>,
        upstream: ArrayView2<'_, T>,
    ) -> Result<HeadGrads<T>> {
        let cache = self.forward_cached(x.view())?;
        self.backward_cached(x, &cache, upstream, true)
    }

    pub fn backward_cached(
        &self,
        x: ArrayView2<'_, T>,
        cache: &HeadCache<T>,
        upstream: ArrayView2<'_, T>,
        input_grad: bool,
    ) -> Result<HeadGrads<T>> {
        self.check_input(&x)?;
        if upstream.dim() != cache.output.dim() {
            return Err(Error::Dimension {
                context: "head upstream gradient",
                expected: cache.output.len(),
                actual: upstream.len(),
            });
        }
        let w2 = cache.hidden.t().dot(&upstream);
        let b2 = upstream.sum_axis(Axis(0));
        let mut d_pre = upstream.dot(&self.w2.t());
        Zip::from(&mut d_pre)
            .and(&cache.pre_activation)
            .for_each(|g, &z| {
                if z <= T::zero() {
                    *g = T::zero();
                }
            });
        let w1 = x.t().dot(&d_pre);
        let b1 = d_pre.sum_axis(Axis(0));
        let input = input_grad.then(|| d_pre.dot(&self.w1.t()));
        Ok(HeadGrads {
            w1,
            b1,
            w2,
            b2,
            input,
        })
    }

    /// Smallest `|pre-activation|` over a batch; finite differences are only
    /// meaningful when this is well above the probe step.
    pub fn min_preactivation_margin(&self, x: ArrayView2<'_, T>) -> Result<T> {
        let cache = self.forward_cached(x)?;
        Ok(cache
            .pre_activation
            .iter()
            .fold(T::infinity(), |acc, v| acc.min(v.abs())))
    }

    pub fn cast<U: Scalar>(&self) -> MlpHead<U> {
        let c = |v: &T| U::from_f64(v.as_f64());
        MlpHead {
            w1: self.w1.map(c),
            b1: self.b1.map(c),
            w2: self.w2.map(c),
            b2: self.b2.map(c),
        }
    }

    fn slices(&self) -> [&[T]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [T]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }
}

impl<T: Scalar> HeadGrads<T> {
    fn slices(&self) -> [&[T]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }
}

/// Names of the eight parameter blocks, in checkpoint order.
pub const BLOCK_NAMES: [&str; 8] = [
    "text.w1",
    "text.b1",
    "text.w2",
    "text.b2",
    "visual.w1",
    "visual.b1",
    "visual.w2",
    "visual.b2",
];

/// The unshared text head `f` and visual head `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionHeads<T> {
    pub text: MlpHead<T>,
    pub visual: MlpHead<T>,
    /// Seed the heads were initialised and trained with.
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ProjectionGrads<T> {
    pub text: HeadGrads<T>,
    pub visual: HeadGrads<T>,
}

impl<T: Scalar> ProjectionHeads<T> {
    pub fn init<R: Rng + ?Sized>(
        d_in: usize,
        d_h: usize,
        d_out: usize,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        let text = MlpHead::init(d_in, d_h, d_out, rng);
        let visual = MlpHead::init(d_in, d_h, d_out, rng);
        Self { text, visual, seed }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.text.dims()
    }

    pub fn cast<U: Scalar>(&self) -> ProjectionHeads<U> {
        ProjectionHeads {
            text: self.text.cast(),
            visual: self.visual.cast(),
            seed: self.seed,
        }
    }

    pub fn num_params(&self) -> usize {
        self.text.num_params() + self.visual.num_params()
    }

    /// Parameter blocks in [`BLOCK_NAMES`] order.
    pub fn blocks(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = self.text.slices().into();
        out.extend(self.visual.slices());
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = self.text.slices_mut().into();
        out.extend(self.visual.slices_mut());
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks().iter().map(|b| b.len()).collect()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.blocks().concat()
    }

    /// Overwrites every parameter from a flat vector in block order.
    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                context: "flat parameter vector",
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            let len = block.len();
            block.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }
}

impl<T: Scalar> ProjectionGrads<T> {
    pub fn blocks(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = self.text.slices().into();
        out.extend(self.visual.slices());
        out
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.blocks().concat()
    }
}

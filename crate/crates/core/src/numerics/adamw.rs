//! Adam with decoupled weight decay.
//!
//! Per step `t` and parameter `θ` with gradient `g`:
//!
//! ```text
//! θ ← θ · (1 − lr·λ)
//! m ← β1·m + (1 − β1)·g
//! v ← β2·v + (1 − β2)·g²
//! θ ← θ − lr · (m / (1 − β1^t)) / (√(v / (1 − β2^t)) + ε)
//! ```

use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Moment accumulators for a fixed list of parameter blocks.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub config: AdamWConfig,
    names: Vec<String>,
}

impl<T: Scalar> OptimizerState<T> {
    /// `blocks` gives a name and length for each parameter block.
    pub fn new<S: AsRef<str>>(config: AdamWConfig, blocks: &[(S, usize)]) -> Self {
        Self {
            step: 0,
            m: blocks.iter().map(|(_, n)| vec![T::zero(); *n]).collect(),
            v: blocks.iter().map(|(_, n)| vec![T::zero(); *n]).collect(),
            config,
            names: blocks.iter().map(|(s, _)| s.as_ref().to_owned()).collect(),
        }
    }

    /// One AdamW update over every block. Nothing is modified if any
    /// gradient is non-finite or any shape disagrees.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension {
                context: "optimizer block count",
                expected: self.m.len(),
                actual: params.len().min(grads.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Dimension {
                    context: "optimizer block length",
                    expected: self.m[i].len(),
                    actual: p.len().min(g.len()),
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient block {}",
                    self.names[i]
                )));
            }
        }

        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let lr = T::from_f64(c.lr);
        let beta1 = T::from_f64(c.beta1);
        let beta2 = T::from_f64(c.beta2);
        let one = T::one();
        let eps = T::from_f64(c.eps);
        let decay = one - T::from_f64(c.lr * c.weight_decay);
        let bias1 = one - T::from_f64(c.beta1.powi(t));
        let bias2 = one - T::from_f64(c.beta2.powi(t));

        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (one - beta1) * gj;
                v[j] = beta2 * v[j] + (one - beta2) * gj * gj;
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                p[j] = p[j] * decay - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_state(lr: f64, weight_decay: f64) -> OptimizerState<f64> {
        let config = AdamWConfig {
            lr,
            weight_decay,
            ..AdamWConfig::default()
        };
        OptimizerState::new(config, &[("x", 1)])
    }

    #[test]
    fn zero_grads_without_decay_leave_params() {
        let mut state = scalar_state(0.1, 0.0);
        let mut x = [1.25, -3.0];
        let mut opt = OptimizerState::new(state.config, &[("x", 2)]);
        for _ in 0..5 {
            opt.step(&mut [&mut x[..]], &[&[0.0, 0.0][..]]).unwrap();
        }
        assert_eq!(x, [1.25, -3.0]);
        let mut y = [2.0];
        state.step(&mut [&mut y[..]], &[&[0.0][..]]).unwrap();
        assert_eq!(y, [2.0]);
    }

    #[test]
    fn decoupled_decay_shrinks_geometrically() {
        let mut state = scalar_state(0.1, 0.01);
        let mut x = [1.0];
        for step in 1..=4 {
            state.step(&mut [&mut x[..]], &[&[0.0][..]]).unwrap();
            let expected = (1.0f64 - 0.1 * 0.01).powi(step);
            assert!((x[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_trajectory_matches_hand_steps() {
        // loss ½x², gradient x, lr 0.1, no decay. Reference values stepped by hand
        // in double precision.
        let reference = [0.900000001, 0.8004122297123382, 0.701586274504415];
        let mut state = scalar_state(0.1, 0.0);
        let mut x = [1.0];
        for want in reference {
            let g = [x[0]];
            state.step(&mut [&mut x[..]], &[&g[..]]).unwrap();
            assert!((x[0] - want).abs() < 1e-10, "{} vs {}", x[0], want);
        }
        assert_eq!(state.step, 3);
        assert!(state.v[0][0] >= 0.0);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut state = scalar_state(0.0, 0.01);
        let mut x = [0.3, -7.5, 1e-3];
        let before = x;
        let mut opt = OptimizerState::new(state.config, &[("x", 3)]);
        opt.step(&mut [&mut x[..]], &[&[1.0, -2.0, 3.0][..]])
            .unwrap();
        assert_eq!(x, before);
        let mut y = [4.0];
        state.step(&mut [&mut y[..]], &[&[9.0][..]]).unwrap();
        assert_eq!(y, [4.0]);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut opt = OptimizerState::<f32>::new(AdamWConfig::default(), &[("a", 1), ("b", 2)]);
        let mut a = [1.0f32];
        let mut b = [1.0f32, 2.0];
        let err = opt
            .step(
                &mut [&mut a[..], &mut b[..]],
                &[&[0.5][..], &[f32::NAN, 0.0][..]],
            )
            .unwrap_err();
        assert!(err.to_string().contains("b"), "{err}");
        assert_eq!(opt.step, 0);
        assert_eq!(a, [1.0]);
    }
}

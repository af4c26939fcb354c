use ndarray::Array2;

use super::affinity::AffinityMatrix;
use crate::error::{Error, Result};

/// Binary `k × n` matrix marking each commentary's matching frames.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    values: Array2<u8>,
}

impl LabelMatrix {
    pub fn new(values: Array2<u8>) -> Result<Self> {
        if values.iter().any(|v| *v > 1) {
            return Err(Error::Config("label entries must be 0 or 1".into()));
        }
        if let Some(row) = values
            .rows()
            .into_iter()
            .position(|r| r.iter().all(|v| *v == 0))
        {
            return Err(Error::NoPositive { row });
        }
        Ok(Self { values })
    }

    /// One positive per row.
    pub fn one_hot(n: usize, positives: &[usize]) -> Result<Self> {
        let mut values = Array2::zeros((positives.len(), n));
        for (i, &p) in positives.iter().enumerate() {
            if p >= n {
                return Err(Error::Dimension {
                    context: "label positive index",
                    expected: n,
                    actual: p,
                });
            }
            values[[i, p]] = 1;
        }
        Self::new(values)
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Contrastive alignment loss and its gradient with respect to the affinities:
///
/// `L = −(1/k) Σ_i log( Σ_j Y[i,j]·exp(Â[i,j]) / Σ_j exp(Â[i,j]) )`
pub fn align_loss(a: &AffinityMatrix, y: &LabelMatrix) -> Result<(f64, Array2<f64>)> {
    let (k, n) = a.values.dim();
    if y.values.dim() != (k, n) {
        return Err(Error::Dimension {
            context: "label matrix shape",
            expected: k * n,
            actual: y.values.len(),
        });
    }
    if k == 0 {
        return Err(Error::EmptyInput("affinity matrix has no rows"));
    }
    let mut grad = Array2::zeros((k, n));
    let mut total = 0.0;
    let scale = 1.0 / k as f64;
    for (i, (row, labels)) in a.values.rows().into_iter().zip(y.values.rows()).enumerate() {
        let positives = row
            .iter()
            .zip(labels.iter())
            .filter(|(_, l)| **l == 1)
            .map(|(v, _)| *v);
        if positives.clone().next().is_none() {
            return Err(Error::NoPositive { row: i });
        }
        let lse_all = log_sum_exp(row.iter().copied());
        let lse_pos = log_sum_exp(positives);
        // exact zero when every candidate is a positive
        let row_loss = if labels.iter().all(|l| *l == 1) {
            0.0
        } else {
            (lse_all - lse_pos).max(0.0)
        };
        total += row_loss;
        for j in 0..n {
            let p_all = (row[j] - lse_all).exp();
            let p_pos = if labels[j] == 1 {
                (row[j] - lse_pos).exp()
            } else {
                0.0
            };
            grad[[i, j]] = scale * (p_all - p_pos);
        }
    }
    Ok((total * scale, grad))
}

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// `k × n` cosine similarities between commentary rows and frame rows.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    pub values: Array2<f64>,
}

impl AffinityMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

/// Row-normalised copies of both inputs plus the row norms, kept for the
/// backward pass.
#[derive(Clone, Debug)]
pub struct CosineCache<T> {
    pub c_unit: Array2<T>,
    pub c_norm: Array1<T>,
    pub v_unit: Array2<T>,
    pub v_norm: Array1<T>,
}

fn normalize_rows<T: Scalar>(
    x: ArrayView2<'_, T>,
    name: &'static str,
) -> Result<(Array2<T>, Array1<T>)> {
    let norms = x.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    if let Some(row) = norms
        .iter()
        .position(|n| !(*n > T::zero()) || !n.is_finite())
    {
        return Err(Error::ZeroNorm { matrix: name, row });
    }
    let unit = &x / &norms.view().insert_axis(Axis(1));
    Ok((unit, norms))
}

pub fn affinity_cached<T: Scalar>(
    c: ArrayView2<'_, T>,
    v: ArrayView2<'_, T>,
) -> Result<(AffinityMatrix, CosineCache<T>)> {
    if c.ncols() != v.ncols() {
        return Err(Error::Dimension {
            context: "affinity embedding width",
            expected: c.ncols(),
            actual: v.ncols(),
        });
    }
    let (c_unit, c_norm) = normalize_rows(c, "commentary")?;
    let (v_unit, v_norm) = normalize_rows(v, "frame")?;
    let values = c_unit.dot(&v_unit.t()).mapv(|x| x.as_f64());
    Ok((
        AffinityMatrix { values },
        CosineCache {
            c_unit,
            c_norm,
            v_unit,
            v_norm,
        },
    ))
}

/// `Â[i, j] = C_i·V_j / (‖C_i‖·‖V_j‖)`
pub fn affinity<T: Scalar>(c: ArrayView2<'_, T>, v: ArrayView2<'_, T>) -> Result<AffinityMatrix> {
    Ok(affinity_cached(c, v)?.0)
}

/// Pulls `dL/dÂ` back to `(dL/dC, dL/dV)`.
pub fn affinity_backward<T: Scalar>(
    cache: &CosineCache<T>,
    d_affinity: &Array2<f64>,
) -> (Array2<T>, Array2<T>) {
    let g = d_affinity.mapv(T::from_f64);
    // gradient w.r.t. the unit vectors, then projected off the radial direction
    let d_c_unit = g.dot(&cache.v_unit);
    let d_v_unit = g.t().dot(&cache.c_unit);
    let tangent = |d_unit: Array2<T>, unit: &Array2<T>, norm: &Array1<T>| {
        let radial = (&d_unit * unit).sum_axis(Axis(1)).insert_axis(Axis(1));
        (d_unit - &(unit * &radial)) / norm.view().insert_axis(Axis(1))
    };
    (
        tangent(d_c_unit, &cache.c_unit, &cache.c_norm),
        tangent(d_v_unit, &cache.v_unit, &cache.v_norm),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_similarity_is_one() {
        let c = array![[0.3f64, -1.2, 2.0]];
        let a = affinity(c.view(), c.view()).unwrap();
        assert!((a.values[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_rows_are_zero() {
        let c = array![[1.0f64, 0.0]];
        let v = array![[0.0f64, 5.0]];
        assert_eq!(affinity(c.view(), v.view()).unwrap().values[[0, 0]], 0.0);
    }

    #[test]
    fn hand_value() {
        let c = array![[1.0f64, 0.0]];
        let v = array![[1.0f64, 1.0]];
        let a = affinity(c.view(), v.view()).unwrap().values[[0, 0]];
        assert!((a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn zero_row_is_named() {
        let c = array![[1.0f32, 0.0], [0.0, 0.0]];
        let v = array![[1.0f32, 1.0]];
        let err = affinity(c.view(), v.view()).unwrap_err();
        assert!(matches!(
            err,
            Error::ZeroNorm {
                matrix: "commentary",
                row: 1
            }
        ));
    }

    #[test]
    fn entries_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = Array2::from_shape_simple_fn((5, 7), || rng.random_range(-3.0f32..3.0));
        let v = Array2::from_shape_simple_fn((9, 7), || rng.random_range(-3.0f32..3.0));
        let a = affinity(c.view(), v.view()).unwrap();
        assert!(a.values.iter().all(|x| x.abs() <= 1.0 + 1e-6));
    }

    #[test]
    fn row_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = Array2::from_shape_simple_fn((3, 4), || rng.random_range(-1.0f64..1.0));
        let v = Array2::from_shape_simple_fn((6, 4), || rng.random_range(-1.0f64..1.0));
        let a = affinity(c.view(), v.view()).unwrap();
        let mut c2 = c.clone();
        c2.row_mut(1).mapv_inplace(|x| x * 37.5);
        let b = affinity(c2.view(), v.view()).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (k, n, d) = (2, 3, 4);
        let weights = Array2::from_shape_simple_fn((k, n), || rng.random_range(-1.0..1.0));
        let params: Vec<f64> = (0..(k + n) * d)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |p: &[f64]| {
            let c = Array2::from_shape_vec((k, d), p[..k * d].to_vec()).unwrap();
            let v = Array2::from_shape_vec((n, d), p[k * d..].to_vec()).unwrap();
            let (a, cache) = affinity_cached(c.view(), v.view()).unwrap();
            let l = (&a.values * &weights).sum();
            let (dc, dv) = affinity_backward(&cache, &weights);
            (l, dc.iter().chain(dv.iter()).copied().collect())
        };
        let report = grad_check(loss, &params, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }
}

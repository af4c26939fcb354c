use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window lengths reported by default, in seconds.
pub const DEFAULT_WINDOWS: [f64; 4] = [10.0, 30.0, 45.0, 60.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCoverage {
    pub window_s: f64,
    /// Percentage of commentaries with `|Δ| ≤ window_s`.
    pub percent: f64,
}

/// Offset statistics for one set of predictions. `Δ = predicted − ground truth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetStats {
    pub deltas: Vec<f64>,
    pub avg_delta: f64,
    pub avg_abs_delta: f64,
    /// Ascending by window length.
    pub window_coverage: Vec<WindowCoverage>,
}

impl OffsetStats {
    pub fn coverage(&self, window_s: f64) -> Option<f64> {
        self.window_coverage
            .iter()
            .find(|w| w.window_s == window_s)
            .map(|w| w.percent)
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

pub fn compute_offset_stats(pred: &[f64], gt: &[f64], windows: &[f64]) -> Result<OffsetStats> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("no predictions to evaluate"));
    }
    if windows.windows(2).any(|w| w[1] < w[0]) || windows.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config(format!(
            "windows must be non-negative and ascending, got {windows:?}"
        )));
    }
    let deltas: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| p - g).collect();
    Ok(stats_from_deltas(deltas, windows))
}

pub(crate) fn stats_from_deltas(deltas: Vec<f64>, windows: &[f64]) -> OffsetStats {
    let k = deltas.len() as f64;
    let avg_delta = deltas.iter().sum::<f64>() / k;
    let avg_abs_delta = deltas.iter().map(|d| d.abs()).sum::<f64>() / k;
    let window_coverage = windows
        .iter()
        .map(|&w| {
            let inside = deltas.iter().filter(|d| d.abs() <= w).count();
            WindowCoverage {
                window_s: w,
                percent: 100.0 * inside as f64 / k,
            }
        })
        .collect();
    OffsetStats {
        deltas,
        avg_delta,
        avg_abs_delta,
        window_coverage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_predictions() {
        let gt = [3.0, 100.0, 1234.5];
        let s = compute_offset_stats(&gt, &gt, &DEFAULT_WINDOWS).unwrap();
        assert_eq!(s.avg_delta, 0.0);
        assert_eq!(s.avg_abs_delta, 0.0);
        assert!(s.window_coverage.iter().all(|w| w.percent == 100.0));
    }

    #[test]
    fn hand_fixture() {
        let gt = [100.0, 200.0, 300.0];
        let pred = [105.0, 188.0, 331.0];
        let s = compute_offset_stats(&pred, &gt, &DEFAULT_WINDOWS).unwrap();
        assert_eq!(s.deltas, vec![5.0, -12.0, 31.0]);
        assert!((s.avg_delta - 8.0).abs() < 1e-12);
        assert!((s.avg_abs_delta - 16.0).abs() < 1e-12);
        assert!((s.coverage(10.0).unwrap() - 100.0 / 3.0).abs() < 1e-9);
        assert!((s.coverage(30.0).unwrap() - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(s.coverage(45.0), Some(100.0));
        assert_eq!(s.coverage(60.0), Some(100.0));
    }

    #[test]
    fn boundary_is_inclusive() {
        let s = compute_offset_stats(&[10.0, -10.0], &[0.0, 0.0], &[10.0]).unwrap();
        assert_eq!(s.coverage(10.0), Some(100.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compute_offset_stats(&[1.0], &[1.0, 2.0], &[10.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_offset_stats(&[], &[], &[10.0]),
            Err(Error::EmptyInput(_))
        ));
        assert!(compute_offset_stats(&[1.0], &[1.0], &[30.0, 10.0]).is_err());
    }

    fn deltas() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-200.0f64..200.0, 1..60)
    }

    proptest! {
        #[test]
        fn coverage_monotone_and_bounded(d in deltas(), mut w in prop::collection::vec(0.0f64..150.0, 1..8)) {
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let zeros = vec![0.0; d.len()];
            let s = compute_offset_stats(&d, &zeros, &w).unwrap();
            for pair in s.window_coverage.windows(2) {
                prop_assert!(pair[1].percent >= pair[0].percent);
            }
            for c in &s.window_coverage {
                prop_assert!((0.0..=100.0).contains(&c.percent));
            }
            prop_assert!(s.avg_abs_delta + 1e-12 >= s.avg_delta.abs());
        }

        #[test]
        fn permutation_invariant(d in deltas(), seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let zeros = vec![0.0; d.len()];
            let mut shuffled = d.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = compute_offset_stats(&d, &zeros, &DEFAULT_WINDOWS).unwrap();
            let b = compute_offset_stats(&shuffled, &zeros, &DEFAULT_WINDOWS).unwrap();
            prop_assert!((a.avg_delta - b.avg_delta).abs() < 1e-9);
            prop_assert!((a.avg_abs_delta - b.avg_abs_delta).abs() < 1e-9);
            prop_assert_eq!(a.window_coverage, b.window_coverage);
        }

        #[test]
        fn shift_invariant(d in prop::collection::vec(-200i32..200, 1..60), shift in -1000i32..1000) {
            // integer-valued inputs keep the subtraction exact
            let gt: Vec<f64> = (0..d.len()).map(|i| 1000.0 + i as f64).collect();
            let pred: Vec<f64> = gt.iter().zip(&d).map(|(g, x)| g + *x as f64).collect();
            let a = compute_offset_stats(&pred, &gt, &DEFAULT_WINDOWS).unwrap();
            let s = shift as f64;
            let pred2: Vec<f64> = pred.iter().map(|p| p + s).collect();
            let gt2: Vec<f64> = gt.iter().map(|g| g + s).collect();
            let b = compute_offset_stats(&pred2, &gt2, &DEFAULT_WINDOWS).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

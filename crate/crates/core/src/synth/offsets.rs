//! Timestamp-offset model: a truncated normal whose spread is calibrated so
//! the mean absolute offset hits a target, plus a deterministic builder for
//! delta arrays with prescribed summary statistics.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const OFFSET_MEAN_S: f64 = 13.85;
pub const OFFSET_ABSMEAN_S: f64 = 16.63;
pub const OFFSET_RANGE_S: (f64, f64) = (-108.0, 152.0);
/// Share of raw offsets within 10 s, in percent.
pub const OFFSET_WITHIN_10_PCT: f64 = 26.29;

/// Output of [`calibrate_sigma`] for the default mean, abs-mean and range,
/// frozen so generation does not depend on re-running the bisection.
pub const CALIBRATED_SIGMA_S: f64 = 14.794845823261493;

const SIMPSON_INTERVALS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

impl TruncatedNormal {
    pub fn new(mean: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !(lo <= mean && mean <= hi) {
            return Err(Error::Config(format!(
                "offset range [{lo}, {hi}] must contain the mean {mean}"
            )));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "offset sigma must be finite and ≥ 0, got {sigma}"
            )));
        }
        Ok(Self {
            mean,
            sigma,
            lo,
            hi,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return self.mean;
        }
        let normal = Normal::new(self.mean, self.sigma).expect("sigma checked in new");
        loop {
            let x = normal.sample(rng);
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
    }

    fn density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sigma;
        (-0.5 * z * z).exp()
    }

    /// `E[g(X)]` by Simpson's rule over the truncation interval.
    fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mass = simpson(|x| self.density(x), self.lo, self.hi, SIMPSON_INTERVALS);
        simpson(
            |x| g(x) * self.density(x),
            self.lo,
            self.hi,
            SIMPSON_INTERVALS,
        ) / mass
    }

    pub fn mean_value(&self) -> f64 {
        if self.sigma == 0.0 {
            return self.mean;
        }
        self.expect(|x| x)
    }

    pub fn abs_mean(&self) -> f64 {
        if self.sigma == 0.0 {
            return self.mean.abs();
        }
        // split at 0 so the kink does not cost accuracy
        let mass = simpson(|x| self.density(x), self.lo, self.hi, SIMPSON_INTERVALS);
        let neg = simpson(
            |x| -x * self.density(x),
            self.lo,
            0.0_f64.max(self.lo),
            SIMPSON_INTERVALS,
        );
        let pos = simpson(
            |x| x * self.density(x),
            0.0_f64.min(self.hi),
            self.hi,
            SIMPSON_INTERVALS,
        );
        (neg + pos) / mass
    }

    /// Percentage of offsets with `|Δ| ≤ w`.
    pub fn coverage(&self, w: f64) -> f64 {
        if self.sigma == 0.0 {
            return if self.mean.abs() <= w { 100.0 } else { 0.0 };
        }
        let mass = simpson(|x| self.density(x), self.lo, self.hi, SIMPSON_INTERVALS);
        let (a, b) = ((-w).max(self.lo), w.min(self.hi));
        if a >= b {
            return 0.0;
        }
        100.0 * simpson(|x| self.density(x), a, b, SIMPSON_INTERVALS) / mass
    }
}

/// Bisection on σ so the truncated normal's mean absolute value equals `target`.
pub fn calibrate_sigma(mean: f64, target_abs_mean: f64, lo: f64, hi: f64) -> Result<f64> {
    let abs_at = |s: f64| TruncatedNormal::new(mean, s, lo, hi).map(|d| d.abs_mean());
    let (mut a, mut b) = (1e-6, (hi - lo) * 4.0);
    if abs_at(a)? > target_abs_mean || abs_at(b)? < target_abs_mean {
        return Err(Error::Config(format!(
            "abs-mean {target_abs_mean} unreachable for mean {mean} on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if abs_at(m)? < target_abs_mean {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Deterministic delta array of length `k` whose mean absolute value is
/// exactly `abs_mean`, with exactly `round(k · inner_pct / 100)` entries of
/// magnitude below `inner_window`. Signs are assigned greedily to bring the
/// signed mean close to `mean`, and every value lies in `range`.
pub fn build_delta_fixture(
    k: usize,
    abs_mean: f64,
    inner_pct: f64,
    inner_window: f64,
    mean: f64,
    range: (f64, f64),
) -> Result<Vec<f64>> {
    let n_in = (k as f64 * inner_pct / 100.0).round() as usize;
    let n_out = k - n_in.min(k);
    if k == 0 || n_out == 0 {
        return Err(Error::Config(
            "fixture needs at least one value outside the inner window".into(),
        ));
    }
    let mut mags: Vec<f64> = (0..n_in)
        .map(|i| inner_window * (i as f64 + 0.5) / n_in as f64)
        .collect();
    let quantiles: Vec<f64> = (0..n_out)
        .map(|j| -(1.0 - (j as f64 + 0.5) / n_out as f64).ln())
        .collect();
    let fixed: f64 = mags.iter().sum::<f64>() + n_out as f64 * inner_window;
    let scale = (abs_mean * k as f64 - fixed) / quantiles.iter().sum::<f64>();
    if !(scale > 0.0) {
        return Err(Error::Config(
            "abs-mean too small for the inner share".into(),
        ));
    }
    mags.extend(quantiles.iter().map(|q| inner_window + scale * q));
    if mags.iter().any(|m| *m > range.1) {
        return Err(Error::Config(
            "fixture magnitudes exceed the offset range".into(),
        ));
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]));
    let mut to_flip = (abs_mean * k as f64 - mean * k as f64) / 2.0;
    let mut signs = vec![1.0; k];
    for i in order {
        if mags[i] <= -range.0 && mags[i] <= to_flip {
            signs[i] = -1.0;
            to_flip -= mags[i];
        }
    }
    Ok(mags.iter().zip(&signs).map(|(m, s)| m * s).collect())
}

/// The published raw-offset summary as a 10 000-entry delta array.
pub fn published_summary_fixture() -> Vec<f64> {
    build_delta_fixture(
        10_000,
        OFFSET_ABSMEAN_S,
        OFFSET_WITHIN_10_PCT,
        10.0,
        OFFSET_MEAN_S,
        OFFSET_RANGE_S,
    )
    .expect("published summary is constructible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_offset_stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_dist() -> TruncatedNormal {
        TruncatedNormal::new(
            OFFSET_MEAN_S,
            CALIBRATED_SIGMA_S,
            OFFSET_RANGE_S.0,
            OFFSET_RANGE_S.1,
        )
        .unwrap()
    }

    #[test]
    fn frozen_sigma_matches_calibration() {
        let s = calibrate_sigma(
            OFFSET_MEAN_S,
            OFFSET_ABSMEAN_S,
            OFFSET_RANGE_S.0,
            OFFSET_RANGE_S.1,
        )
        .unwrap();
        assert!((s - CALIBRATED_SIGMA_S).abs() < 1e-6, "{s}");
        assert!((default_dist().abs_mean() - OFFSET_ABSMEAN_S).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo_calibration() {
        let d = default_dist();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let abs_mean = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
        assert!((mean - OFFSET_MEAN_S).abs() <= 1.5, "mean {mean}");
        assert!(
            (abs_mean - OFFSET_ABSMEAN_S).abs() <= 1.7,
            "abs-mean {abs_mean}"
        );
        assert!(xs
            .iter()
            .all(|x| (OFFSET_RANGE_S.0..=OFFSET_RANGE_S.1).contains(x)));
    }

    #[test]
    fn analytic_coverage_of_default_model() {
        let d = default_dist();
        assert!(
            (d.coverage(10.0) - 34.39).abs() < 0.05,
            "{}",
            d.coverage(10.0)
        );
        assert!(d.coverage(30.0) < d.coverage(45.0));
        assert!((d.mean_value() - OFFSET_MEAN_S).abs() < 0.01);
    }

    #[test]
    fn degenerate_sigma() {
        let d = TruncatedNormal::new(3.0, 0.0, -5.0, 5.0).unwrap();
        assert_eq!(d.sample(&mut ChaCha8Rng::seed_from_u64(0)), 3.0);
        assert!(TruncatedNormal::new(9.0, 1.0, -5.0, 5.0).is_err());
    }

    #[test]
    fn fixture_hits_published_summary() {
        let deltas = published_summary_fixture();
        let stats =
            compute_offset_stats(&deltas, &vec![0.0; deltas.len()], &[10.0, 30.0, 45.0, 60.0])
                .unwrap();
        assert!((stats.avg_abs_delta - OFFSET_ABSMEAN_S).abs() < 1e-9);
        assert!((stats.coverage(10.0).unwrap() - OFFSET_WITHIN_10_PCT).abs() < 1e-9);
        assert!(
            (stats.avg_delta - OFFSET_MEAN_S).abs() < 0.1,
            "{}",
            stats.avg_delta
        );
        assert!(deltas
            .iter()
            .all(|x| (OFFSET_RANGE_S.0..=OFFSET_RANGE_S.1).contains(x)));
    }
}

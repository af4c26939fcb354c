use crate::error::{Error, Result};

/// Denominator floor for [`relative_error`].
pub const ABS_FLOOR: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// `|a − n| / max(|a|, |n|, 1e-7)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
}

/// Compares the analytic gradient returned by `loss_fn` at `params` against
/// central differences with step `h`, coordinate by coordinate.
pub fn grad_check<F>(mut loss_fn: F, params: &[f64], h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (loss, analytic) = loss_fn(params);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss at base point".into()));
    }
    if analytic.len() != params.len() {
        return Err(Error::Dimension {
            context: "analytic gradient",
            expected: params.len(),
            actual: analytic.len(),
        });
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        probe[i] = params[i] + h;
        let (plus, _) = loss_fn(&probe);
        probe[i] = params[i] - h;
        let (minus, _) = loss_fn(&probe);
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss near coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error || i == 0 {
            report = GradCheckReport {
                max_rel_error: err,
                worst_index: i,
                analytic: analytic[i],
                numeric,
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(p: &[f64]) -> (f64, Vec<f64>) {
        let w = [3.0, -1.5, 0.25, 8.0];
        (p.iter().zip(w).map(|(a, b)| a * b).sum(), w.to_vec())
    }

    fn quadratic(p: &[f64]) -> (f64, Vec<f64>) {
        (0.5 * p.iter().map(|v| v * v).sum::<f64>(), p.to_vec())
    }

    #[test]
    fn linear_loss_is_exact_to_rounding() {
        let report = grad_check(linear, &[0.1, 0.2, -0.3, 1.0], 1e-4).unwrap();
        assert!(report.max_rel_error < 1e-9, "{report:?}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let corrupt = |p: &[f64]| {
            let (l, mut g) = quadratic(p);
            g[2] += 0.1;
            (l, g)
        };
        let report = grad_check(corrupt, &[0.5, -1.0, 2.0], 1e-4).unwrap();
        assert!(!report.passes(1e-4));
        assert_eq!(report.worst_index, 2);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let bad = |p: &[f64]| (p[0].ln(), vec![1.0 / p[0]]);
        assert!(grad_check(bad, &[-1.0], 1e-4).is_err());
    }

    #[test]
    fn floor_guards_tiny_gradients() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-12, 0.0) < 1e-4);
    }
}

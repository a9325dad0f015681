//! Log-log least squares shared by both estimators.
//!
//! All logarithms are natural. A dimension is always `-slope` of
//! `ln(measure)` against `ln(scale)`: Higuchi lengths fall as `k^-D` and box
//! counts as `eps^-D`.

use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};

/// One `(scale, measure)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogPoint {
    pub scale: f64,
    pub measure: f64,
}

impl LogLogPoint {
    pub fn new(scale: f64, measure: f64) -> Self {
        LogLogPoint { scale, measure }
    }

    pub fn ln_scale(&self) -> f64 {
        self.scale.ln()
    }

    pub fn ln_measure(&self) -> f64 {
        self.measure.ln()
    }
}

/// Ordinary least squares line through `(ln scale, ln measure)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// A slope-derived dimension together with the fit that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<LogLogPoint>,
    pub excluded_count: usize,
}

fn check_point(p: &LogLogPoint) -> Result<()> {
    if !(p.scale.is_finite() && p.scale > 0.0) {
        return Err(FractalError::invalid(format!(
            "scale must be positive and finite, got {}",
            p.scale
        )));
    }
    if !(p.measure.is_finite() && p.measure > 0.0) {
        return Err(FractalError::invalid(format!(
            "measure must be positive and finite, got {}",
            p.measure
        )));
    }
    Ok(())
}

/// Fits `ln measure = slope * ln scale + intercept`.
///
/// Needs at least two points with distinct scales. When every measure is
/// equal the residuals vanish and `r_squared` is reported as 1.
pub fn fit_loglog(points: &[LogLogPoint]) -> Result<LinearFit> {
    for p in points {
        check_point(p)?;
    }
    if points.len() < 2 {
        return Err(FractalError::Estimation {
            reason: "need at least 2 points to fit a slope".into(),
            retained: points.len(),
            excluded: 0,
        });
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(LogLogPoint::ln_scale).sum::<f64>() / n;
    let mean_y = points.iter().map(LogLogPoint::ln_measure).sum::<f64>() / n;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in points {
        let dx = p.ln_scale() - mean_x;
        let dy = p.ln_measure() - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FractalError::Estimation {
            reason: "all scales are identical".into(),
            retained: points.len(),
            excluded: 0,
        });
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|p| {
                let r = p.ln_measure() - (slope * p.ln_scale() + intercept);
                r * r
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };

    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Drops zero-measure points, fits the rest and reports `D = -slope`.
///
/// Negative or non-finite values are input errors; fewer than two surviving
/// points is an estimation error rather than a fabricated dimension.
pub fn estimate_dimension(points: &[LogLogPoint]) -> Result<DimensionEstimate> {
    let mut retained = Vec::with_capacity(points.len());
    let mut excluded = 0;
    for p in points {
        if p.measure == 0.0 && p.scale.is_finite() && p.scale > 0.0 {
            excluded += 1;
        } else {
            check_point(p)?;
            retained.push(*p);
        }
    }
    if retained.len() < 2 {
        return Err(FractalError::Estimation {
            reason: "fewer than 2 points with non-zero measure".into(),
            retained: retained.len(),
            excluded,
        });
    }
    let fit = fit_loglog(&retained).map_err(|e| match e {
        FractalError::Estimation {
            reason, retained, ..
        } => FractalError::Estimation {
            reason,
            retained,
            excluded,
        },
        other => other,
    })?;
    Ok(DimensionEstimate {
        dimension: -fit.slope,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: retained,
        excluded_count: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<LogLogPoint> {
        raw.iter().map(|&(s, m)| LogLogPoint::new(s, m)).collect()
    }

    #[test]
    fn exact_square_law() {
        let fit = fit_loglog(&pts(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)])).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_measure_has_zero_slope() {
        for c in [0.1, 1.0, 37.0] {
            let fit = fit_loglog(&pts(&[(1.0, c), (2.0, c), (4.0, c)])).unwrap();
            assert!(fit.slope.abs() < 1e-12);
            assert_eq!(fit.r_squared, 1.0);
        }
    }

    #[test]
    fn koch_counts_give_log3_4() {
        // N(3^-m) = 4^m for m = 1..=6
        let points: Vec<_> = (1..=6)
            .map(|m| LogLogPoint::new(3f64.powi(-m), 4f64.powi(m)))
            .collect();
        let fit = fit_loglog(&points).unwrap();
        assert!((fit.slope + 4f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((fit.slope + 1.2619).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(matches!(
            fit_loglog(&pts(&[(1.0, 1.0)])),
            Err(FractalError::Estimation { .. })
        ));
        assert!(matches!(
            fit_loglog(&pts(&[(1.0, 1.0), (1.0, 2.0)])),
            Err(FractalError::Estimation { .. })
        ));
        assert!(matches!(
            fit_loglog(&pts(&[(0.0, 1.0), (1.0, 2.0)])),
            Err(FractalError::InvalidInput(_))
        ));
        assert!(matches!(
            fit_loglog(&pts(&[(1.0, -1.0), (2.0, 2.0)])),
            Err(FractalError::InvalidInput(_))
        ));
    }

    #[test]
    fn zero_measures_are_excluded_and_counted() {
        let est = estimate_dimension(&pts(&[(1.0, 1.0), (2.0, 0.5), (4.0, 0.0)])).unwrap();
        assert_eq!(est.excluded_count, 1);
        assert_eq!(est.points.len(), 2);
        assert!((est.dimension - 1.0).abs() < 1e-12);

        let err = estimate_dimension(&pts(&[(1.0, 0.0), (2.0, 0.0), (4.0, 3.0)])).unwrap_err();
        assert_eq!(
            err,
            FractalError::Estimation {
                reason: "fewer than 2 points with non-zero measure".into(),
                retained: 1,
                excluded: 2
            }
        );
    }

    fn scattered() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::btree_map(1u32..1000, 0.01f64..100.0, 3..20)
            .prop_map(|m| m.into_iter().map(|(s, v)| (s as f64 / 10.0, v)).collect())
    }

    proptest! {
        #[test]
        fn slope_invariant_under_scale_multiplication(raw in scattered(), c in 1e-3f64..1e3) {
            let base = fit_loglog(&pts(&raw)).unwrap();
            let scaled: Vec<_> = raw.iter().map(|&(s, m)| (s * c, m)).collect();
            let fit = fit_loglog(&pts(&scaled)).unwrap();
            prop_assert!((fit.slope - base.slope).abs() < 1e-12);
        }

        #[test]
        fn slope_invariant_under_measure_multiplication(raw in scattered(), c in 1e-3f64..1e3) {
            let base = fit_loglog(&pts(&raw)).unwrap();
            let scaled: Vec<_> = raw.iter().map(|&(s, m)| (s, m * c)).collect();
            let fit = fit_loglog(&pts(&scaled)).unwrap();
            prop_assert!((fit.slope - base.slope).abs() < 1e-12);
        }

        #[test]
        fn exact_power_law_recovered(
            amp in 1e-3f64..1e3,
            p in -3.0f64..3.0,
            scales in prop::collection::btree_set(1u32..10_000, 2..15),
        ) {
            let points: Vec<_> = scales
                .iter()
                .map(|&s| {
                    let s = s as f64 / 100.0;
                    LogLogPoint::new(s, amp * s.powf(p))
                })
                .collect();
            let fit = fit_loglog(&points).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-10);
            prop_assert!(fit.r_squared >= 1.0 - 1e-12);
        }
    }
}

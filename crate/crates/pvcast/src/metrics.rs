//! Point-forecast and interval-forecast accuracy measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kde::Interval;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("series must be non-empty and of equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty series")]
    Empty,
    #[error("zero variance in {0} series; correlation undefined")]
    ZeroVariance(&'static str),
    #[error("rated capacity must be positive, got {0}")]
    BadCapacity(f64),
    #[error("baseline error must be positive, got {0}")]
    BadBaseline(f64),
}

fn check(pred: &[f64], actual: &[f64]) -> Result<(), MetricError> {
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    if pred.len() != actual.len() {
        return Err(MetricError::LengthMismatch(pred.len(), actual.len()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let s: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Mean absolute relative error in percent, normalized by rated capacity.
pub fn mare(pred: &[f64], actual: &[f64], rated_capacity: f64) -> Result<f64, MetricError> {
    if rated_capacity <= 0.0 {
        return Err(MetricError::BadCapacity(rated_capacity));
    }
    Ok(mae(pred, actual)? / rated_capacity * 100.0)
}

/// Root mean square error.
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let s: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((s / pred.len() as f64).sqrt())
}

/// Pearson linear correlation coefficient.
pub fn pearson(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let ma = actual.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vp = 0.0;
    let mut va = 0.0;
    for (p, a) in pred.iter().zip(actual) {
        cov += (p - mp) * (a - ma);
        vp += (p - mp) * (p - mp);
        va += (a - ma) * (a - ma);
    }
    if vp == 0.0 {
        return Err(MetricError::ZeroVariance("predicted"));
    }
    if va == 0.0 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    Ok(cov / (vp.sqrt() * va.sqrt()))
}

/// Coefficient of determination, 1 − SS_res/SS_tot.
pub fn r2(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Relative improvement over a baseline error, in percent.
/// Positive means `ours` is better (smaller error) than `baseline`.
pub fn improvement(baseline: f64, ours: f64) -> Result<f64, MetricError> {
    if baseline <= 0.0 {
        return Err(MetricError::BadBaseline(baseline));
    }
    Ok((baseline - ours) / baseline * 100.0)
}

/// Prediction interval coverage probability (closed bounds), in percent.
pub fn picp(intervals: &[Interval], actual: &[f64]) -> Result<f64, MetricError> {
    if intervals.is_empty() {
        return Err(MetricError::Empty);
    }
    if intervals.len() != actual.len() {
        return Err(MetricError::LengthMismatch(intervals.len(), actual.len()));
    }
    let hits = intervals
        .iter()
        .zip(actual)
        .filter(|(iv, &a)| iv.contains(a))
        .count();
    Ok(hits as f64 / intervals.len() as f64 * 100.0)
}

/// Prediction interval average width.
pub fn piaw(intervals: &[Interval]) -> Result<f64, MetricError> {
    if intervals.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(intervals.iter().map(Interval::width).sum::<f64>() / intervals.len() as f64)
}

/// Bundle of point-forecast metrics for one horizon.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointMetrics {
    pub mae: f64,
    pub mare_pct: f64,
    pub rmse: f64,
    pub pearson: f64,
    pub r2: f64,
}

impl PointMetrics {
    pub fn compute(
        pred: &[f64],
        actual: &[f64],
        rated_capacity: f64,
    ) -> Result<Self, MetricError> {
        Ok(PointMetrics {
            mae: mae(pred, actual)?,
            mare_pct: mare(pred, actual, rated_capacity)?,
            rmse: rmse(pred, actual)?,
            pearson: pearson(pred, actual)?,
            r2: r2(pred, actual)?,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub picp_pct: f64,
    pub piaw: f64,
}

impl IntervalMetrics {
    pub fn compute(intervals: &[Interval], actual: &[f64]) -> Result<Self, MetricError> {
        Ok(IntervalMetrics {
            picp_pct: picp(intervals, actual)?,
            piaw: piaw(intervals)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_hand_example() {
        let m = mae(&[1.0, 2.0, 3.0], &[1.5, 1.5, 4.0]).unwrap();
        assert!((m - (0.5 + 0.5 + 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mare_published_value() {
        // a 5.8775 MW MAE on a 2915.88 MW plant is 0.20%
        let m: f64 = 5.8775 / 2915.88 * 100.0;
        assert!((m - 0.20).abs() < 0.005, "{m}");
        // same computation via the metric function
        let got = mare(&[5.8775], &[0.0], 2915.88).unwrap();
        assert!((got - m).abs() < 1e-12);
    }

    #[test]
    fn rmse_hand_example() {
        let m = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((m - (12.5f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pearson_perfect_and_inverse() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -3.0 * x + 7.0).collect();
        assert!((pearson(&up, &xs).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&down, &xs).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_zero_variance_is_error() {
        assert!(matches!(
            pearson(&[2.0, 2.0], &[1.0, 3.0]),
            Err(MetricError::ZeroVariance("predicted"))
        ));
    }

    #[test]
    fn r2_perfect_fit_is_one() {
        let a = [1.0, 2.0, 3.0];
        assert!((r2(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn r2_mean_predictor_is_zero() {
        let actual = [1.0, 2.0, 3.0];
        let pred = [2.0, 2.0, 2.0];
        assert!(r2(&pred, &actual).unwrap().abs() < 1e-15);
    }

    #[test]
    fn improvement_published_value() {
        // reference pairing: baseline 7.4850, improved 5.8775 → 21.48%
        let imp = improvement(7.4850, 5.8775).unwrap();
        assert!((imp - 21.48).abs() < 0.01, "{imp}");
    }

    #[test]
    fn improvement_sign_convention() {
        assert!(improvement(2.0, 1.0).unwrap() > 0.0);
        assert!(improvement(1.0, 2.0).unwrap() < 0.0);
        assert_eq!(improvement(3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn picp_closed_bounds() {
        let iv = |lo: f64, hi: f64| Interval {
            lower: lo,
            upper: hi,
            level: 0.95,
        };
        let intervals = [iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0)];
        // boundary values count as covered
        let p = picp(&intervals, &[0.0, 1.0, 0.5, 1.5]).unwrap();
        assert!((p - 75.0).abs() < 1e-12);
    }

    #[test]
    fn piaw_average_width() {
        let iv = |lo: f64, hi: f64| Interval {
            lower: lo,
            upper: hi,
            level: 0.95,
        };
        let w = piaw(&[iv(0.0, 2.0), iv(1.0, 2.0)]).unwrap();
        assert!((w - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_series_rejected() {
        assert!(matches!(mae(&[], &[]), Err(MetricError::Empty)));
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(MetricError::LengthMismatch(1, 2))
        ));
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50)
        ) {
            let pred: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let actual: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let m = mae(&pred, &actual).unwrap();
            let r = rmse(&pred, &actual).unwrap();
            prop_assert!(m <= r + 1e-12);
        }

        #[test]
        fn pearson_in_unit_range(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..50)
        ) {
            let pred: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let actual: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson(&pred, &actual) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            }
        }
    }
}

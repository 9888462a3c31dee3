//! Recall and error for damage segmentation.
//!
//! Both are normalized by the ground-truth magnitude `tp + fn_`: recall is
//! the detected share of real damage and error is false detection relative
//! to real damage, so error is unbounded above.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub recall: f64,
    pub error: f64,
}

impl SegMetrics {
    /// Builds metrics from confusion magnitudes (areas or pixel counts).
    ///
    /// Returns [`Error::UndefinedMetrics`] when there is no ground-truth damage.
    pub fn from_magnitudes(tp: f64, fp: f64, fn_: f64) -> Result<Self> {
        if [tp, fp, fn_].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "confusion magnitudes must be finite and non-negative: tp={tp} fp={fp} fn={fn_}"
            )));
        }
        let gt = tp + fn_;
        if gt <= 0.0 {
            return Err(Error::UndefinedMetrics);
        }
        Ok(SegMetrics {
            tp,
            fp,
            fn_,
            recall: tp / gt,
            error: fp / gt,
        })
    }

    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Result<Self> {
        Self::from_magnitudes(tp as f64, fp as f64, fn_ as f64)
    }

    /// Ground-truth magnitude.
    pub fn gt_d(&self) -> f64 {
        self.tp + self.fn_
    }

    pub fn predicted(&self) -> f64 {
        self.tp + self.fp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        let m = SegMetrics::from_counts(80, 50, 20).unwrap();
        assert_eq!(m.recall, 0.8);
        assert_eq!(m.error, 0.5);
        assert_eq!(m.gt_d(), 100.0);
        assert_eq!(m.predicted(), 130.0);
    }

    #[test]
    fn error_can_exceed_one() {
        let m = SegMetrics::from_counts(10, 347, 90).unwrap();
        assert!((m.error - 3.47).abs() < 1e-12);
    }

    #[test]
    fn empty_ground_truth_is_undefined() {
        assert!(matches!(SegMetrics::from_counts(0, 5, 0), Err(Error::UndefinedMetrics)));
    }

    #[test]
    fn negative_rejected() {
        assert!(SegMetrics::from_magnitudes(-1.0, 0.0, 2.0).is_err());
    }
}

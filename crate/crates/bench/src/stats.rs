//! Box-plot statistics.

use serde::Serialize;

/// Quantile interpolation used by [`quantile`], echoed into report metadata.
pub const QUANTILE_METHOD: &str = "linear interpolation between order statistics (h = (n - 1) p)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile of ascending `sorted` data at probability `p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// `None` for empty input. The result does not depend on the input order.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        count: sorted.len(),
        mean: mean(&sorted),
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn single_value_has_zero_width() {
        let s = summarize(&[0.7]).unwrap();
        assert_eq!((s.mean, s.q1, s.median, s.q3, s.min, s.max), (0.7, 0.7, 0.7, 0.7, 0.7, 0.7));
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn order_does_not_matter() {
        let a = summarize(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        let b = summarize(&[10.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(a, b);
    }
}

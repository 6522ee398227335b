//! Summary statistics with normal-approximation 95% confidence intervals.

use serde::{Deserialize, Serialize};

pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Half-width of the 95% interval, `1.96 * s / sqrt(n)`; zero for `n <= 1`.
    pub ci: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Summary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ci = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            // Rounding can push the mean a hair outside [min, max] for constant input.
            mean: mean.clamp(min, max),
            ci,
            min,
            max,
            count: n,
        })
    }

    pub fn empty() -> Self {
        Self {
            mean: f64::NAN,
            ci: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
            count: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_has_zero_width() {
        let s = Summary::of(&[2.5; 7]).unwrap();
        assert_eq!((s.mean, s.ci, s.min, s.max), (2.5, 0.0, 2.5, 2.5));
    }

    #[test]
    fn hand_computed() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci - 1.96 * sd / 2.0).abs() < 1e-15);
        assert!(Summary::of(&[]).is_none());
    }
}

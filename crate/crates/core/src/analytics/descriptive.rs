use serde::{Deserialize, Serialize};

use super::StatsError;

/// Summary of one variable. Moments that need more observations (or any
/// spread at all) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 divisor); needs n ≥ 2.
    pub std_dev: Option<f64>,
    pub variance: Option<f64>,
    /// Adjusted Fisher–Pearson skewness G1; needs n ≥ 3 and nonzero spread.
    pub skewness: Option<f64>,
    pub se_skewness: Option<f64>,
    /// Excess kurtosis G2; needs n ≥ 4 and nonzero spread.
    pub kurtosis: Option<f64>,
    pub se_kurtosis: Option<f64>,
}

/// Standard error of G1 for a sample of size `n` (n ≥ 3).
pub fn se_skewness(n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let n = n as f64;
    Some((6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt())
}

/// Standard error of G2 for a sample of size `n` (n ≥ 4).
pub fn se_kurtosis(n: usize) -> Option<f64> {
    if n < 4 {
        return None;
    }
    let ses = se_skewness(n)?;
    let n = n as f64;
    Some((4.0 * (n * n - 1.0) * ses * ses / ((n - 3.0) * (n + 5.0))).sqrt())
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("value"));
    }
    let n = values.len();
    let nf = n as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (values.iter().sum::<f64>() / nf).clamp(min, max);

    let central = |p: i32| values.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / nf;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let spread = m2 > 0.0;

    let variance = (n >= 2).then(|| m2 * nf / (nf - 1.0));
    let skewness = (n >= 3 && spread)
        .then(|| ((nf * (nf - 1.0)).sqrt() / (nf - 2.0)) * (m3 / m2.powf(1.5)));
    let kurtosis = (n >= 4 && spread).then(|| {
        ((nf - 1.0) / ((nf - 2.0) * (nf - 3.0))) * ((nf + 1.0) * (m4 / (m2 * m2) - 3.0) + 6.0)
    });

    Ok(DescriptiveStats {
        n,
        min,
        max,
        mean,
        std_dev: variance.map(f64::sqrt),
        variance,
        skewness,
        se_skewness: se_skewness(n),
        kurtosis,
        se_kurtosis: se_kurtosis(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_errors_at_forty_one() {
        assert!((se_skewness(41).unwrap() - 0.369).abs() <= 0.001);
        assert!((se_kurtosis(41).unwrap() - 0.724).abs() <= 0.001);
        assert_eq!(se_skewness(2), None);
        assert_eq!(se_kurtosis(3), None);
    }

    #[test]
    fn constant_sample_has_no_shape() {
        let s = descriptive_stats(&[4.0, 4.0, 4.0, 4.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.variance, Some(0.0));
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
    }

    #[test]
    fn symmetric_sample() {
        let s = descriptive_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.variance, Some(2.5));
        assert_eq!(s.skewness, Some(0.0));
        assert_eq!((s.min, s.max), (1.0, 5.0));
        // G2 of 1..5 by hand: m2 = 2, m4 = 6.8, (4/6)*(6*(1.7-3)+6) = -1.2
        assert!((s.kurtosis.unwrap() + 1.2).abs() < 1e-12);
    }

    #[test]
    fn small_samples() {
        let s = descriptive_stats(&[2.0]).unwrap();
        assert_eq!(s.variance, None);
        assert_eq!(s.skewness, None);
        let s = descriptive_stats(&[1.0, 2.0, 9.0]).unwrap();
        assert!(s.skewness.is_some());
        assert!(s.kurtosis.is_none());
        assert!(descriptive_stats(&[]).is_err());
        assert!(descriptive_stats(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn skewness_against_hand_computation() {
        // x = [1, 1, 4]: mean 2, m2 = 2, m3 = 2, g1 = 2 / 2^1.5,
        // G1 = sqrt(6)/1 * g1
        let s = descriptive_stats(&[1.0, 1.0, 4.0]).unwrap();
        let g1 = 2.0 / 2f64.powf(1.5);
        assert!((s.skewness.unwrap() - 6f64.sqrt() * g1).abs() < 1e-12);
    }
}

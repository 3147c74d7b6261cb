use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{f_p_value, t_p_value};
use super::StatsError;

/// A named predictor column.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    /// Unstandardized coefficient.
    pub b: f64,
    pub se_b: f64,
    /// Standardized coefficient; absent for the intercept.
    pub beta: Option<f64>,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub ss_regression: f64,
    pub ss_residual: f64,
    pub ss_total: f64,
    pub df_regression: usize,
    pub df_residual: usize,
    pub ms_regression: f64,
    pub ms_residual: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub n: usize,
    pub intercept: Coefficient,
    pub coefficients: Vec<Coefficient>,
    pub r: f64,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub std_error_of_estimate: f64,
    pub anova: Anova,
}

/// 1 − (1 − R²)(n − 1)/(n − k − 1).
pub fn adjusted_r_squared(r_squared: f64, n: usize, k: usize) -> f64 {
    1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / (n as f64 - k as f64 - 1.0)
}

/// F statistic from the sums of squares and their degrees of freedom.
pub fn f_statistic(ss_regression: f64, ss_residual: f64, df_regression: usize, df_residual: usize) -> f64 {
    (ss_regression / df_regression as f64) / (ss_residual / df_residual as f64)
}

/// b · sd(x) / sd(y).
pub fn standardized_beta(b: f64, sd_x: f64, sd_y: f64) -> f64 {
    b * sd_x / sd_y
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Two-sided p for a t statistic that may be infinite on an exact fit.
fn t_tail(t: f64, df: usize) -> f64 {
    if t.is_infinite() {
        0.0
    } else if t.is_nan() {
        f64::NAN
    } else {
        t_p_value(t, df as u64).unwrap_or(f64::NAN)
    }
}

/// Relative pivot size below which the design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Ordinary least squares of `y` on an intercept plus `predictors`, solved
/// by Householder QR.
pub fn ols_regression(y: &[f64], predictors: &[Predictor<'_>]) -> Result<RegressionResult, StatsError> {
    let n = y.len();
    let k = predictors.len();
    if predictors.iter().any(|p| p.values.len() != n) {
        return Err(StatsError::DimensionMismatch);
    }
    if n <= k + 1 {
        return Err(StatsError::InsufficientData { needed: k + 2, got: n });
    }
    if y.iter().chain(predictors.iter().flat_map(|p| p.values)).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("observation"));
    }

    let cols = k + 1;
    let x = DMatrix::from_fn(n, cols, |i, j| if j == 0 { 1.0 } else { predictors[j - 1].values[i] });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    let max_pivot = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= RANK_TOLERANCE * max_pivot) || max_pivot == 0.0 {
        return Err(StatsError::RankDeficient);
    }
    let qty = qr.q().transpose() * &yv;
    let b = r
        .solve_upper_triangular(&qty.rows(0, cols).into_owned())
        .ok_or(StatsError::RankDeficient)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or(StatsError::RankDeficient)?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = &x * &b;
    let y_mean = yv.mean();
    let ss_total: f64 = yv.iter().map(|v| (v - y_mean).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(StatsError::ZeroVariance("outcome"));
    }
    let ss_residual: f64 = yv.iter().zip(fitted.iter()).map(|(o, f)| (o - f).powi(2)).sum();
    let ss_regression: f64 = fitted.iter().map(|f| (f - y_mean).powi(2)).sum();

    let df_regression = k;
    let df_residual = n - k - 1;
    let ms_regression = ss_regression / df_regression as f64;
    let ms_residual = ss_residual / df_residual as f64;
    let (f, p_f) = if ms_residual == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms_regression / ms_residual;
        (f, f_p_value(f, df_regression as u64, df_residual as u64).unwrap_or(f64::NAN))
    };

    let sd_y = sample_sd(y);
    let coefficient = |j: usize, name: &str, beta: Option<f64>| {
        let se_b = (ms_residual * xtx_inv[(j, j)]).sqrt();
        let t = b[j] / se_b;
        Coefficient {
            name: name.to_string(),
            b: b[j],
            se_b,
            beta,
            t,
            p: t_tail(t, df_residual),
        }
    };
    let intercept = coefficient(0, "(Constant)", None);
    let coefficients = predictors
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let beta = standardized_beta(b[i + 1], sample_sd(p.values), sd_y);
            coefficient(i + 1, p.name, Some(beta))
        })
        .collect();

    let r_squared = ss_regression / ss_total;
    Ok(RegressionResult {
        n,
        intercept,
        coefficients,
        r: r_squared.sqrt(),
        r_squared,
        adjusted_r_squared: adjusted_r_squared(r_squared, n, k),
        std_error_of_estimate: ms_residual.sqrt(),
        anova: Anova {
            ss_regression,
            ss_residual,
            ss_total,
            df_regression,
            df_residual,
            ms_regression,
            ms_residual,
            f,
            p: p_f,
        },
    })
}

//! Survey statistics: descriptives, OLS with ANOVA and standardized
//! coefficients, and the t/F tail probabilities behind their p-values.

mod descriptive;
mod regression;
mod report;
pub mod special;
pub mod synthetic;

use thiserror::Error;

pub use descriptive::{descriptive_stats, se_kurtosis, se_skewness, DescriptiveStats};
pub use regression::{
    adjusted_r_squared, f_statistic, ols_regression, standardized_beta, Anova, Coefficient, Predictor,
    RegressionResult,
};
pub use report::{
    analyze_study, IndicatorSummary, ReportFormat, StudyReport, ENGAGEMENT_LABEL, MIN_ROWS, RELEVANCE_LABEL,
    SATISFACTION_LABEL,
};
pub use special::{f_p_value, regularized_incomplete_beta, t_p_value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{0} must not be negative")]
    Negative(&'static str),
    #[error("degrees of freedom must be at least 1")]
    InvalidDegreesOfFreedom,
    #[error("predictor columns must match the outcome length")]
    DimensionMismatch,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::descriptive::{descriptive_stats, DescriptiveStats};
use super::regression::{ols_regression, Predictor, RegressionResult};
use super::StatsError;
use crate::storage::parse_answers_csv;

pub const RELEVANCE_LABEL: &str = "Question Relevance and Coherence";
pub const ENGAGEMENT_LABEL: &str = "Cognitive and Emotional Engagement";
pub const SATISFACTION_LABEL: &str = "Overall User Satisfaction and Comparative Experience";

/// Rows below this cannot support the two-predictor model plus kurtosis.
pub const MIN_ROWS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSummary {
    pub variable: String,
    pub stats: DescriptiveStats,
}

/// Descriptives for the three indicators and the regression of
/// satisfaction on relevance and engagement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub n: usize,
    pub dependent_variable: String,
    pub descriptives: Vec<IndicatorSummary>,
    pub regression: RegressionResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn analyze_study(csv: &str) -> Result<StudyReport, StatsError> {
    let rows = parse_answers_csv(csv).map_err(|e| StatsError::Csv(e.to_string()))?;
    if rows.len() < MIN_ROWS {
        return Err(StatsError::InsufficientData {
            needed: MIN_ROWS,
            got: rows.len(),
        });
    }
    let relevance: Vec<f64> = rows.iter().map(|r| r.question_relevance).collect();
    let engagement: Vec<f64> = rows.iter().map(|r| r.engagement).collect();
    let satisfaction: Vec<f64> = rows.iter().map(|r| r.satisfaction).collect();

    let descriptives = vec![
        IndicatorSummary {
            variable: RELEVANCE_LABEL.into(),
            stats: descriptive_stats(&relevance)?,
        },
        IndicatorSummary {
            variable: ENGAGEMENT_LABEL.into(),
            stats: descriptive_stats(&engagement)?,
        },
        IndicatorSummary {
            variable: SATISFACTION_LABEL.into(),
            stats: descriptive_stats(&satisfaction)?,
        },
    ];
    let regression = ols_regression(
        &satisfaction,
        &[
            Predictor {
                name: RELEVANCE_LABEL,
                values: &relevance,
            },
            Predictor {
                name: ENGAGEMENT_LABEL,
                values: &engagement,
            },
        ],
    )?;
    Ok(StudyReport {
        n: rows.len(),
        dependent_variable: SATISFACTION_LABEL.into(),
        descriptives,
        regression,
    })
}

fn opt(v: Option<f64>, places: usize) -> String {
    v.map(|x| format!("{x:.places$}")).unwrap_or_default()
}

fn sig(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        format!("{p:.3}")
    }
}

impl StudyReport {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.render_text(),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    /// Four plain-text tables: descriptives, model summary, ANOVA and
    /// coefficients.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let reg = &self.regression;

        out.push_str("Descriptive Statistics\n");
        let _ = writeln!(
            out,
            "{:<54} | {:>3} | {:>5} | {:>5} | {:>5} | {:>9} | {:>8} | {:>8} | {:>9} | {:>8} | {:>9}",
            "Variable", "N", "Min", "Max", "Mean", "Std. Dev.", "Variance", "Skewness", "Skew. SE", "Kurtosis", "Kurt. SE"
        );
        for d in &self.descriptives {
            let s = &d.stats;
            let _ = writeln!(
                out,
                "{:<54} | {:>3} | {:>5.2} | {:>5.2} | {:>5.2} | {:>9} | {:>8} | {:>8} | {:>9} | {:>8} | {:>9}",
                d.variable,
                s.n,
                s.min,
                s.max,
                s.mean,
                opt(s.std_dev, 4),
                opt(s.variance, 2),
                opt(s.skewness, 3),
                opt(s.se_skewness, 3),
                opt(s.kurtosis, 3),
                opt(s.se_kurtosis, 3),
            );
        }

        out.push_str("\nModel Summary\n");
        let _ = writeln!(
            out,
            "{:>5} | {:>6} | {:>8} | {:>17} | {:>26}",
            "Model", "R", "R Square", "Adjusted R Square", "Std. Error of the Estimate"
        );
        let _ = writeln!(
            out,
            "{:>5} | {:>6.3} | {:>8.3} | {:>17.3} | {:>26.4}",
            1, reg.r, reg.r_squared, reg.adjusted_r_squared, reg.std_error_of_estimate
        );
        let predictors: Vec<&str> = reg.coefficients.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "Predictors: (Constant), {}", predictors.join(", "));

        out.push_str("\nANOVA\n");
        let a = &reg.anova;
        let _ = writeln!(
            out,
            "{:>5} | {:<10} | {:>14} | {:>3} | {:>11} | {:>8} | {:>6}",
            "Model", "", "Sum of Squares", "df", "Mean Square", "F", "Sig."
        );
        let _ = writeln!(
            out,
            "{:>5} | {:<10} | {:>14.3} | {:>3} | {:>11.3} | {:>8.3} | {:>6}",
            1, "Regression", a.ss_regression, a.df_regression, a.ms_regression, a.f, sig(a.p)
        );
        let _ = writeln!(
            out,
            "{:>5} | {:<10} | {:>14.3} | {:>3} | {:>11.3} | {:>8} | {:>6}",
            "", "Residual", a.ss_residual, a.df_residual, a.ms_residual, "", ""
        );
        let _ = writeln!(
            out,
            "{:>5} | {:<10} | {:>14.3} | {:>3} | {:>11} | {:>8} | {:>6}",
            "", "Total", a.ss_total, a.df_regression + a.df_residual, "", "", ""
        );
        let _ = writeln!(out, "Dependent Variable: {}", self.dependent_variable);

        out.push_str("\nCoefficients\n");
        let _ = writeln!(
            out,
            "{:>5} | {:<54} | {:>8} | {:>10} | {:>7} | {:>7} | {:>6}",
            "Model", "", "B", "Std. Error", "Beta", "t", "Sig."
        );
        for (i, c) in std::iter::once(&reg.intercept).chain(&reg.coefficients).enumerate() {
            let model = if i == 0 { "1".to_string() } else { String::new() };
            let _ = writeln!(
                out,
                "{:>5} | {:<54} | {:>8.3} | {:>10.3} | {:>7} | {:>7.3} | {:>6}",
                model,
                c.name,
                c.b,
                c.se_b,
                opt(c.beta, 3),
                c.t,
                sig(c.p)
            );
        }
        let _ = writeln!(out, "Dependent Variable: {}", self.dependent_variable);
        out
    }
}

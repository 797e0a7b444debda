//! Rendering evaluation results as tables.
//!
//! A comparison report covers an accuracy table (one decimal), a
//! per-emotion accuracy table, a macro/weighted F1 table (four
//! decimals), an improvement row between the designated proposed and
//! baseline runs, and the two-proportion z-test line. Percentages are
//! rendered from exact integer counts with half-up rounding so the
//! printed digits never drift with float formatting.

use std::io::Write;

use thiserror::Error;

use crate::corpus::percent_tenths;
use crate::metrics::{
    two_proportion_ztest, ConfusionMatrix, EvalReport, MetricsError, SignificanceResult,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least two runs, got {0}")]
    NotEnoughRuns(usize),
    #[error("no run named {0:?} among the comparison inputs")]
    MissingRole(String),
    #[error("run name {0:?} appears more than once")]
    DuplicateRunName(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// A set of evaluated runs with designated proposed and baseline roles.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub runs: Vec<EvalReport>,
    pub proposed: usize,
    pub baseline: usize,
    pub significance: SignificanceResult,
    /// Unrounded percentage-point difference in accuracy
    /// (100 * (proposed - baseline)); rounding happens at render time.
    pub improvement_pp: f64,
}

impl ComparisonReport {
    /// Assemble a comparison. Run names must be unique; `proposed_name`
    /// and `baseline_name` pick the two runs the improvement row and
    /// z-test compare.
    pub fn new(
        runs: Vec<EvalReport>,
        proposed_name: &str,
        baseline_name: &str,
    ) -> Result<Self, ReportError> {
        if runs.len() < 2 {
            return Err(ReportError::NotEnoughRuns(runs.len()));
        }
        for (i, run) in runs.iter().enumerate() {
            if runs[..i].iter().any(|r| r.name == run.name) {
                return Err(ReportError::DuplicateRunName(run.name.clone()));
            }
        }
        let find = |name: &str| {
            runs.iter()
                .position(|r| r.name == name)
                .ok_or_else(|| ReportError::MissingRole(name.to_string()))
        };
        let proposed = find(proposed_name)?;
        let baseline = find(baseline_name)?;
        let significance = two_proportion_ztest(
            runs[proposed].correct(),
            runs[proposed].total(),
            runs[baseline].correct(),
            runs[baseline].total(),
        )?;
        let improvement_pp = 100.0 * (runs[proposed].accuracy - runs[baseline].accuracy);
        Ok(ComparisonReport {
            runs,
            proposed,
            baseline,
            significance,
            improvement_pp,
        })
    }

    fn accuracy_tenths(&self, run: &EvalReport) -> u64 {
        percent_tenths(run.correct(), run.total())
    }
}

fn tenths_string(tenths: u64) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}

fn signed_tenths_string(tenths: i64) -> String {
    let sign = if tenths < 0 { "-" } else { "+" };
    let magnitude = tenths.unsigned_abs();
    format!("{sign}{}", tenths_string(magnitude))
}

/// Render the markdown comparison report. Returns bytes written.
pub fn render_comparison(
    report: &ComparisonReport,
    mut writer: impl Write,
) -> Result<usize, ReportError> {
    let mut out = String::new();
    let proposed = &report.runs[report.proposed];
    let baseline = &report.runs[report.baseline];

    out.push_str("# Classification comparison\n\n");

    out.push_str("## Accuracy\n\n");
    out.push_str("| Model | Accuracy (%) |\n|---|---|\n");
    for run in &report.runs {
        out.push_str(&format!(
            "| {} | {} |\n",
            run.name,
            tenths_string(report.accuracy_tenths(run))
        ));
    }
    let improvement =
        report.accuracy_tenths(proposed) as i64 - report.accuracy_tenths(baseline) as i64;
    out.push_str(&format!(
        "| Improvement ({} vs. {}) | {} |\n",
        proposed.name,
        baseline.name,
        signed_tenths_string(improvement)
    ));

    out.push_str("\n## Per-emotion accuracy (%)\n\n");
    out.push_str("| Emotion |");
    for run in &report.runs {
        out.push_str(&format!(" {} |", run.name));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(report.runs.len()));
    out.push('\n');
    let labels = report.runs[0].matrix.labels().to_vec();
    for (row, label) in labels.iter().enumerate() {
        out.push_str(&format!("| {label} |"));
        for run in &report.runs {
            let correct = run.matrix.count(row, row);
            let support = run.matrix.row_sum(row);
            out.push_str(&format!(
                " {} |",
                tenths_string(percent_tenths(correct, support))
            ));
        }
        out.push('\n');
    }

    out.push_str("\n## Average F1\n\n");
    out.push_str("| Metric |");
    for run in &report.runs {
        out.push_str(&format!(" {} |", run.name));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(report.runs.len()));
    out.push('\n');
    out.push_str("| Macro Avg F1 |");
    for run in &report.runs {
        out.push_str(&format!(" {:.4} |", run.macro_f1));
    }
    out.push('\n');
    out.push_str("| Weighted Avg F1 |");
    for run in &report.runs {
        out.push_str(&format!(" {:.4} |", run.weighted_f1));
    }
    out.push('\n');

    out.push_str("\n## Significance\n\n");
    let s = &report.significance;
    let threshold = if s.p_two_sided < 0.001 {
        "p < .001"
    } else {
        "p >= .001"
    };
    out.push_str(&format!(
        "{} ({} vs. {}): z = {:.4}, p = {:.3e} ({threshold})\n",
        s.method, proposed.name, baseline.name, s.z, s.p_two_sided
    ));

    writer.write_all(out.as_bytes())?;
    Ok(out.len())
}

/// Output styles for a confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfusionStyle {
    Ascii,
    Csv,
}

/// Render a confusion matrix. Ascii prints aligned columns under label
/// headers; csv matches the parseable export schema. Returns bytes
/// written.
pub fn render_confusion(
    matrix: &ConfusionMatrix,
    style: ConfusionStyle,
    mut writer: impl Write,
) -> Result<usize, ReportError> {
    match style {
        ConfusionStyle::Csv => {
            let mut buf = Vec::new();
            matrix.to_csv(&mut buf)?;
            writer.write_all(&buf)?;
            Ok(buf.len())
        }
        ConfusionStyle::Ascii => {
            let mut columns: Vec<String> = matrix.labels().to_vec();
            if matrix.has_invalid_column() {
                columns.push(crate::metrics::INVALID_LABEL.to_string());
            }
            let corner = "gold\\pred";
            let label_width = matrix
                .labels()
                .iter()
                .map(|l| l.len())
                .chain([corner.len()])
                .max()
                .unwrap_or(0);
            let widths: Vec<usize> = columns
                .iter()
                .enumerate()
                .map(|(col, name)| {
                    (0..matrix.labels().len())
                        .map(|row| matrix.count(row, col).to_string().len())
                        .chain([name.len()])
                        .max()
                        .unwrap_or(1)
                })
                .collect();

            let mut out = String::new();
            out.push_str(&format!("{corner:<label_width$}"));
            for (name, width) in columns.iter().zip(&widths) {
                out.push_str(&format!(" | {name:>width$}"));
            }
            out.push('\n');
            out.push_str(&"-".repeat(label_width));
            for width in &widths {
                out.push_str(&format!("-+-{}", "-".repeat(*width)));
            }
            out.push('\n');
            for (row, label) in matrix.labels().iter().enumerate() {
                out.push_str(&format!("{label:<label_width$}"));
                for (col, width) in widths.iter().enumerate() {
                    out.push_str(&format!(" | {:>width$}", matrix.count(row, col)));
                }
                out.push('\n');
            }
            writer.write_all(out.as_bytes())?;
            Ok(out.len())
        }
    }
}

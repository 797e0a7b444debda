//! Evaluation metrics: confusion matrices, per-class precision/recall/F1,
//! macro and weighted aggregates, and the pooled two-proportion z-test.
//!
//! Matrices are gold-by-predicted count tables over an ordered label
//! list, optionally extended by a predicted-only `invalid` column for
//! generations that contained no recognizable label word. The invalid
//! column counts toward totals (and therefore accuracy's denominator)
//! but never toward any real class's true positives or precision
//! denominator.
//!
//! All metric arithmetic runs in double precision; one-decimal and
//! four-decimal rounding happens only when reports are rendered.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EmotionLabel;
use crate::extract::extract_label;

/// Reserved name of the predicted-only bucket column.
pub const INVALID_LABEL: &str = "invalid";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("matrix total is zero")]
    ZeroTotal,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("invalid label name {0:?}: {1}")]
    BadLabelName(String, &'static str),
    #[error("malformed record at line {line}: {message}")]
    MalformedLine { line: u64, message: String },
    #[error("duplicate prediction id {id} at line {line}")]
    DuplicateId { line: u64, id: u64 },
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("degenerate pooled proportion: all successes or all failures")]
    DegenerateProportions,
    #[error("non-finite input")]
    NonFinite,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Gold-by-predicted count table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    invalid_column: bool,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Create an all-zero matrix over `labels`, optionally with the
    /// predicted-only invalid column. Label names must be unique, free
    /// of commas and line breaks (the CSV schema), and must not reuse
    /// the reserved bucket name.
    pub fn new(labels: Vec<String>, invalid_column: bool) -> Result<Self, MetricsError> {
        if labels.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label == INVALID_LABEL {
                return Err(MetricsError::BadLabelName(
                    label.clone(),
                    "reserved bucket name",
                ));
            }
            if label.is_empty() || label.contains([',', '\n', '\r']) {
                return Err(MetricsError::BadLabelName(
                    label.clone(),
                    "must be non-empty and csv-safe",
                ));
            }
            if !seen.insert(label.clone()) {
                return Err(MetricsError::BadLabelName(label.clone(), "duplicate label"));
            }
        }
        let cols = labels.len() + usize::from(invalid_column);
        let counts = vec![vec![0u64; cols]; labels.len()];
        Ok(ConfusionMatrix {
            labels,
            invalid_column,
            counts,
        })
    }

    /// Matrix over the six emotions in report order, with the invalid column.
    pub fn for_emotions() -> Self {
        let labels = EmotionLabel::REPORT_ORDER
            .iter()
            .map(|l| l.as_str().to_string())
            .collect();
        ConfusionMatrix::new(labels, true).expect("fixed label set is valid")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_invalid_column(&self) -> bool {
        self.invalid_column
    }

    /// Count one observation. `predicted = None` goes to the invalid column.
    pub fn record(&mut self, gold: usize, predicted: Option<usize>) {
        self.add(gold, predicted, 1);
    }

    /// Count `n` observations at once.
    pub fn add(&mut self, gold: usize, predicted: Option<usize>, n: u64) {
        let col = match predicted {
            Some(c) => c,
            None => {
                assert!(self.invalid_column, "matrix has no invalid column");
                self.labels.len()
            }
        };
        self.counts[gold][col] += n;
    }

    /// Count one observation by label name.
    pub fn record_by_name(
        &mut self,
        gold: &str,
        predicted: Option<&str>,
    ) -> Result<(), MetricsError> {
        let gold_idx = self.index_of(gold)?;
        let pred_idx = match predicted {
            Some(name) => Some(self.index_of(name)?),
            None => None,
        };
        self.record(gold_idx, pred_idx);
        Ok(())
    }

    fn index_of(&self, label: &str) -> Result<usize, MetricsError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))
    }

    pub fn count(&self, gold: usize, predicted_col: usize) -> u64 {
        self.counts[gold][predicted_col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal sum over the true classes.
    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Gold support of class `row` (includes invalid-column cells).
    pub fn row_sum(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    /// Predicted count for column `col` (may address the invalid column).
    pub fn col_sum(&self, col: usize) -> u64 {
        self.counts.iter().map(|r| r[col]).sum()
    }

    /// Count of observations whose prediction fell in the invalid column.
    pub fn invalid_count(&self) -> u64 {
        if self.invalid_column {
            self.col_sum(self.labels.len())
        } else {
            0
        }
    }

    /// Fraction of observations on the diagonal.
    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        let total = self.total();
        if total == 0 {
            return Err(MetricsError::ZeroTotal);
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// Precision, recall, and F1 per true class, computed from row and
    /// column sums with the 0/0 -> 0 convention (flagged degenerate).
    pub fn per_class_metrics(&self) -> Result<Vec<ClassMetrics>, MetricsError> {
        if self.total() == 0 {
            return Err(MetricsError::ZeroTotal);
        }
        let mut out = Vec::with_capacity(self.labels.len());
        for (i, label) in self.labels.iter().enumerate() {
            let tp = self.counts[i][i];
            let support = self.row_sum(i);
            let predicted = self.col_sum(i);
            let mut degenerate = false;
            let precision = if predicted == 0 {
                degenerate = true;
                0.0
            } else {
                tp as f64 / predicted as f64
            };
            let recall = if support == 0 {
                degenerate = true;
                0.0
            } else {
                tp as f64 / support as f64
            };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            out.push(ClassMetrics {
                label: label.clone(),
                precision,
                recall,
                f1,
                support,
                degenerate,
            });
        }
        Ok(out)
    }

    /// Write the matrix as CSV: an empty corner cell, predicted labels
    /// across the header, one row per gold label.
    pub fn to_csv(&self, mut writer: impl Write) -> Result<(), MetricsError> {
        let mut header = String::new();
        for label in &self.labels {
            header.push(',');
            header.push_str(label);
        }
        if self.invalid_column {
            header.push(',');
            header.push_str(INVALID_LABEL);
        }
        writeln!(writer, "{header}")?;
        for (i, label) in self.labels.iter().enumerate() {
            let cells: Vec<String> = self.counts[i].iter().map(|c| c.to_string()).collect();
            writeln!(writer, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Parse a matrix from the CSV schema written by [`Self::to_csv`].
    pub fn from_csv(reader: impl BufRead) -> Result<Self, MetricsError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(MetricsError::EmptyInput)??;
        let mut columns: Vec<&str> = header.split(',').collect();
        if columns.first() != Some(&"") {
            return Err(MetricsError::MalformedLine {
                line: 1,
                message: "header must start with an empty corner cell".into(),
            });
        }
        columns.remove(0);
        let invalid_column = columns.last() == Some(&INVALID_LABEL);
        let label_count = columns.len() - usize::from(invalid_column);
        let labels: Vec<String> = columns[..label_count]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut matrix = ConfusionMatrix::new(labels, invalid_column)?;
        let mut row = 0usize;
        for (index, line) in lines.enumerate() {
            let line_no = index as u64 + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let label = cells.next().unwrap_or("");
            if row >= matrix.labels.len() || label != matrix.labels[row] {
                return Err(MetricsError::MalformedLine {
                    line: line_no,
                    message: format!("unexpected row label {label:?}"),
                });
            }
            let values: Vec<&str> = cells.collect();
            if values.len() != matrix.counts[row].len() {
                return Err(MetricsError::MalformedLine {
                    line: line_no,
                    message: format!(
                        "expected {} cells, found {}",
                        matrix.counts[row].len(),
                        values.len()
                    ),
                });
            }
            for (col, value) in values.iter().enumerate() {
                matrix.counts[row][col] =
                    value
                        .trim()
                        .parse()
                        .map_err(|_| MetricsError::MalformedLine {
                            line: line_no,
                            message: format!("bad count {value:?}"),
                        })?;
            }
            row += 1;
        }
        if row != matrix.labels.len() {
            return Err(MetricsError::MalformedLine {
                line: row as u64 + 1,
                message: format!("expected {} rows, found {row}", matrix.labels.len()),
            });
        }
        Ok(matrix)
    }
}

/// Per-class evaluation scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// True when precision or recall hit an empty denominator.
    pub degenerate: bool,
}

/// Unweighted mean of per-class F1.
pub fn macro_f1(per_class: &[ClassMetrics]) -> f64 {
    if per_class.is_empty() {
        return 0.0;
    }
    per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(per_class: &[ClassMetrics]) -> f64 {
    let total: u64 = per_class.iter().map(|c| c.support).sum();
    if total == 0 {
        return 0.0;
    }
    per_class
        .iter()
        .map(|c| c.support as f64 * c.f1)
        .sum::<f64>()
        / total as f64
}

/// Full evaluation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub matrix: ConfusionMatrix,
}

impl EvalReport {
    /// Number of correct predictions (matrix diagonal).
    pub fn correct(&self) -> u64 {
        self.matrix.trace()
    }

    pub fn total(&self) -> u64 {
        self.matrix.total()
    }
}

/// Build the six-emotion matrix (with invalid column) from
/// (gold, predicted) pairs; `None` predictions go to the invalid column.
pub fn confusion_from_pairs(
    pairs: &[(EmotionLabel, Option<EmotionLabel>)],
) -> Result<ConfusionMatrix, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut matrix = ConfusionMatrix::for_emotions();
    for &(gold, predicted) in pairs {
        matrix.record(gold.report_index(), predicted.map(|p| p.report_index()));
    }
    Ok(matrix)
}

/// Evaluate (gold, predicted) pairs into a full report.
pub fn evaluate_pairs(
    name: &str,
    pairs: &[(EmotionLabel, Option<EmotionLabel>)],
) -> Result<EvalReport, MetricsError> {
    let matrix = confusion_from_pairs(pairs)?;
    let per_class = matrix.per_class_metrics()?;
    Ok(EvalReport {
        name: name.to_string(),
        accuracy: matrix.accuracy()?,
        macro_f1: macro_f1(&per_class),
        weighted_f1: weighted_f1(&per_class),
        per_class,
        matrix,
    })
}

/// One line of a prediction file: the example id, its gold label, and
/// the raw generated text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: u64,
    pub gold: EmotionLabel,
    pub generated: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Read prediction records from line-delimited JSON.
pub fn read_predictions(reader: impl BufRead) -> Result<Vec<PredictionRecord>, MetricsError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(trimmed).map_err(|e| MetricsError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        if !seen.insert(record.id) {
            return Err(MetricsError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Write prediction records as line-delimited JSON.
pub fn write_predictions(
    records: &[PredictionRecord],
    mut writer: impl Write,
) -> Result<usize, MetricsError> {
    for record in records {
        serde_json::to_writer(&mut writer, record)
            .map_err(|e| MetricsError::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
    }
    Ok(records.len())
}

/// Score a prediction file: extract a label from each generated text
/// and evaluate against the recorded gold labels.
pub fn evaluate_predictions(
    name: &str,
    records: &[PredictionRecord],
) -> Result<EvalReport, MetricsError> {
    let pairs: Vec<(EmotionLabel, Option<EmotionLabel>)> = records
        .iter()
        .map(|r| (r.gold, extract_label(&r.generated).label()))
        .collect();
    evaluate_pairs(name, &pairs)
}

/// Result of a pooled two-proportion z-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub z: f64,
    pub p_two_sided: f64,
    pub method: String,
}

/// Pooled two-proportion z-test.
///
/// With pooled proportion `p = (s1+s2)/(n1+n2)`:
/// `z = (s1/n1 - s2/n2) / sqrt(p(1-p)(1/n1 + 1/n2))`,
/// and the two-sided p-value comes from the standard normal tail.
pub fn two_proportion_ztest(
    successes1: u64,
    n1: u64,
    successes2: u64,
    n2: u64,
) -> Result<SignificanceResult, MetricsError> {
    if n1 == 0 || n2 == 0 {
        return Err(MetricsError::InvalidCounts(
            "sample sizes must be positive".into(),
        ));
    }
    if successes1 > n1 || successes2 > n2 {
        return Err(MetricsError::InvalidCounts(
            "successes exceed sample size".into(),
        ));
    }
    let total_successes = successes1 + successes2;
    if total_successes == 0 || total_successes == n1 + n2 {
        return Err(MetricsError::DegenerateProportions);
    }
    let p1 = successes1 as f64 / n1 as f64;
    let p2 = successes2 as f64 / n2 as f64;
    let pooled = total_successes as f64 / (n1 + n2) as f64;
    let variance = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    let z = if successes1 * n2 == successes2 * n1 {
        // Equal proportions give exactly zero, sidestepping float residue.
        0.0
    } else {
        (p1 - p2) / variance.sqrt()
    };
    Ok(SignificanceResult {
        z,
        p_two_sided: normal_tail(z)?,
        method: "pooled two-proportion z-test".to_string(),
    })
}

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const INV_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI / 2.0;

/// Maclaurin series for erf(x); accurate and fast for |x| < 2.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut total = x;
    let mut term = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= -x2 / f64::from(n);
        let contrib = term / f64::from(2 * n + 1);
        total += contrib;
        if contrib.abs() < 1e-18 * total.abs() || n > 200 {
            break;
        }
    }
    TWO_OVER_SQRT_PI * total
}

/// Continued fraction for erfc(x), evaluated with the modified Lentz
/// algorithm; accurate for x >= 2:
/// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0f64;
    for i in 1..300u32 {
        let a = f64::from(i) / 2.0;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() * INV_SQRT_PI / f
}

/// Complementary error function via the series/continued-fraction pair
/// above. Absolute error is below 1e-14 over the full double range.
fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// Two-sided standard normal tail probability:
/// `p = 2 * (1 - Phi(|z|)) = erfc(|z| / sqrt(2))`.
pub fn normal_tail(z: f64) -> Result<f64, MetricsError> {
    if !z.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn emotion(label: &str) -> EmotionLabel {
        EmotionLabel::parse(label).unwrap()
    }

    #[test]
    fn single_pair_matrix() {
        let matrix = confusion_from_pairs(&[(emotion("joy"), Some(emotion("joy")))]).unwrap();
        assert_eq!(matrix.total(), 1);
        assert_eq!(matrix.trace(), 1);
        assert_eq!(matrix.count(0, 0), 1);
    }

    #[test]
    fn off_diagonal_cell_lands_at_gold_row_predicted_column() {
        let pairs: Vec<_> = (0..169)
            .map(|_| (emotion("sadness"), Some(emotion("joy"))))
            .collect();
        let matrix = confusion_from_pairs(&pairs).unwrap();
        let sadness = emotion("sadness").report_index();
        let joy = emotion("joy").report_index();
        assert_eq!(matrix.count(sadness, joy), 169);
    }

    #[test]
    fn missing_prediction_goes_to_invalid_column() {
        let matrix = confusion_from_pairs(&[(emotion("fear"), None)]).unwrap();
        let fear = emotion("fear").report_index();
        assert_eq!(matrix.count(fear, 6), 1);
        assert_eq!(matrix.invalid_count(), 1);
        assert_eq!(matrix.total(), 1);
    }

    #[test]
    fn empty_pairs_are_rejected() {
        assert!(matches!(
            confusion_from_pairs(&[]),
            Err(MetricsError::EmptyInput)
        ));
    }

    #[test]
    fn accuracy_identity_and_zero() {
        let mut identity = ConfusionMatrix::for_emotions();
        for i in 0..6 {
            for _ in 0..10 {
                identity.record(i, Some(i));
            }
        }
        assert_eq!(identity.accuracy().unwrap(), 1.0);

        let mut wrong = ConfusionMatrix::for_emotions();
        wrong.record(0, Some(1));
        wrong.record(2, None);
        assert_eq!(wrong.accuracy().unwrap(), 0.0);
    }

    #[test]
    fn accuracy_1168_of_2000() {
        let mut matrix = ConfusionMatrix::for_emotions();
        for _ in 0..1168 {
            matrix.record(0, Some(0));
        }
        for _ in 0..832 {
            matrix.record(1, Some(0));
        }
        assert_eq!(matrix.accuracy().unwrap(), 0.584);
    }

    #[test]
    fn zero_total_errors() {
        let matrix = ConfusionMatrix::for_emotions();
        assert!(matches!(matrix.accuracy(), Err(MetricsError::ZeroTotal)));
        assert!(matches!(
            matrix.per_class_metrics(),
            Err(MetricsError::ZeroTotal)
        ));
    }

    #[test]
    fn perfect_single_class_metrics() {
        let mut matrix = ConfusionMatrix::for_emotions();
        matrix.record(0, Some(0));
        let metrics = matrix.per_class_metrics().unwrap();
        assert_eq!(metrics[0].precision, 1.0);
        assert_eq!(metrics[0].recall, 1.0);
        assert_eq!(metrics[0].f1, 1.0);
        assert!(!metrics[0].degenerate);
    }

    #[test]
    fn zero_support_class_is_degenerate() {
        let mut matrix = ConfusionMatrix::for_emotions();
        matrix.record(0, Some(0));
        let metrics = matrix.per_class_metrics().unwrap();
        // Class at index 1 has no gold and no predictions.
        assert_eq!(metrics[1].recall, 0.0);
        assert_eq!(metrics[1].precision, 0.0);
        assert_eq!(metrics[1].f1, 0.0);
        assert!(metrics[1].degenerate);
    }

    #[test]
    fn invalid_column_excluded_from_precision_denominators() {
        let mut matrix = ConfusionMatrix::for_emotions();
        matrix.record(0, Some(0));
        matrix.record(1, None);
        let metrics = matrix.per_class_metrics().unwrap();
        // Precision of class 0 is 1/1 even though one observation went
        // to the invalid bucket.
        assert_eq!(metrics[0].precision, 1.0);
        // Accuracy denominator still includes the invalid observation.
        assert_eq!(matrix.accuracy().unwrap(), 0.5);
    }

    #[test]
    fn aggregates_constant_and_symmetric_cases() {
        let constant: Vec<ClassMetrics> = (0..6)
            .map(|i| ClassMetrics {
                label: format!("c{i}"),
                precision: 0.5,
                recall: 0.5,
                f1: 0.5,
                support: 7,
                degenerate: false,
            })
            .collect();
        assert_eq!(macro_f1(&constant), 0.5);
        assert_eq!(weighted_f1(&constant), 0.5);

        let equal_support: Vec<ClassMetrics> = [0.2, 0.4, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &f1)| ClassMetrics {
                label: format!("c{i}"),
                precision: f1,
                recall: f1,
                f1,
                support: 10,
                degenerate: false,
            })
            .collect();
        assert!((macro_f1(&equal_support) - weighted_f1(&equal_support)).abs() < 1e-15);
    }

    fn random_matrix(rng: &mut ChaCha8Rng) -> ConfusionMatrix {
        loop {
            let mut matrix = ConfusionMatrix::for_emotions();
            for row in 0..6 {
                if rng.next_u64().is_multiple_of(4) {
                    continue; // occasionally leave a gold class empty
                }
                for col in 0..7 {
                    if rng.next_u64().is_multiple_of(3) {
                        continue;
                    }
                    let count = rng.next_u64() % 1001;
                    for _ in 0..count.min(50) {
                        // keep unit-test matrices small; the acceptance
                        // suite exercises full-size cells
                        matrix.record(row, Some(col).filter(|&c| c < 6));
                    }
                }
            }
            if matrix.total() > 0 {
                return matrix;
            }
        }
    }

    /// Brute-force oracle: explode the matrix into pairs, then count
    /// TP/FP/FN per class by direct iteration.
    fn oracle_per_class(matrix: &ConfusionMatrix) -> Vec<(f64, f64, f64)> {
        let mut pairs = Vec::new();
        for row in 0..matrix.labels().len() {
            for col in 0..matrix.labels().len() + 1 {
                for _ in 0..matrix.count(row, col) {
                    pairs.push((row, col));
                }
            }
        }
        (0..matrix.labels().len())
            .map(|class| {
                let tp = pairs
                    .iter()
                    .filter(|&&(g, p)| g == class && p == class)
                    .count() as f64;
                let fp = pairs
                    .iter()
                    .filter(|&&(g, p)| g != class && p == class)
                    .count() as f64;
                let fn_ = pairs
                    .iter()
                    .filter(|&&(g, p)| g == class && p != class)
                    .count() as f64;
                let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
                let recall = if tp + fn_ == 0.0 {
                    0.0
                } else {
                    tp / (tp + fn_)
                };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                (precision, recall, f1)
            })
            .collect()
    }

    #[test]
    fn per_class_metrics_match_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let matrix = random_matrix(&mut rng);
            let fast = matrix.per_class_metrics().unwrap();
            let slow = oracle_per_class(&matrix);
            for (m, (p, r, f1)) in fast.iter().zip(slow) {
                assert!((m.precision - p).abs() < 1e-12);
                assert!((m.recall - r).abs() < 1e-12);
                assert!((m.f1 - f1).abs() < 1e-12);
                // Harmonic mean never exceeds either input.
                assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
            }
        }
    }

    #[test]
    fn ztest_equal_proportions_is_exactly_zero() {
        let result = two_proportion_ztest(1000, 2000, 1000, 2000).unwrap();
        assert_eq!(result.z, 0.0);
        assert_eq!(result.p_two_sided, 1.0);
        assert_eq!(result.method, "pooled two-proportion z-test");
    }

    #[test]
    fn ztest_antisymmetry() {
        let a = two_proportion_ztest(1168, 2000, 994, 2000).unwrap();
        let b = two_proportion_ztest(994, 2000, 1168, 2000).unwrap();
        assert_eq!(a.z, -b.z);
        assert_eq!(a.p_two_sided, b.p_two_sided);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn ztest_matches_high_precision_reference() {
        // Reference computed with 50-digit arithmetic for the pooled
        // formula on (1168/2000 vs 994/2000).
        let result = two_proportion_ztest(1168, 2000, 994, 2000).unwrap();
        assert!((result.z - 5.520502941384435).abs() < 1e-12);
        assert!((result.p_two_sided - 3.380307349395731e-8).abs() < 1e-20);
        assert!(result.p_two_sided < 0.001);
    }

    #[test]
    fn ztest_rejects_degenerate_proportions() {
        assert!(matches!(
            two_proportion_ztest(0, 10, 0, 10),
            Err(MetricsError::DegenerateProportions)
        ));
        assert!(matches!(
            two_proportion_ztest(10, 10, 10, 10),
            Err(MetricsError::DegenerateProportions)
        ));
        assert!(matches!(
            two_proportion_ztest(5, 0, 1, 10),
            Err(MetricsError::InvalidCounts(_))
        ));
        assert!(matches!(
            two_proportion_ztest(11, 10, 1, 10),
            Err(MetricsError::InvalidCounts(_))
        ));
    }

    #[test]
    fn ztest_scaling_identity() {
        // Scaling both samples by k multiplies z by sqrt(k).
        let base = two_proportion_ztest(30, 100, 20, 100).unwrap();
        for k in [2u64, 4, 9, 25] {
            let scaled = two_proportion_ztest(30 * k, 100 * k, 20 * k, 100 * k).unwrap();
            assert!((scaled.z - base.z * (k as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn normal_tail_reference_values() {
        // Reference values computed with 40-digit arithmetic.
        let table = [
            (0.0, 1.0),
            (0.1, 0.92034432544594204),
            (0.5, 0.61707507745197379),
            (1.0, 0.3173105078629141),
            (1.5, 0.13361440253771613),
            (1.959963984540054, 0.050000000000000028),
            (2.5, 0.01241933065155227),
            (3.5, 0.00046525815807105007),
            (5.0, 5.7330314375838782e-7),
            (6.0, 1.9731752900753963e-9),
            (8.0, 1.2441921148543568e-15),
            (10.0, 1.5239706048321052e-23),
        ];
        for (z, expected) in table {
            let p = normal_tail(z).unwrap();
            assert!(
                (p - expected).abs() <= 1e-12,
                "normal_tail({z}) = {p}, expected {expected}"
            );
            assert_eq!(normal_tail(-z).unwrap(), p);
        }
    }

    #[test]
    fn normal_tail_is_monotone_to_zero() {
        let mut last = 1.0;
        for i in 1..200 {
            let p = normal_tail(i as f64 * 0.25).unwrap();
            assert!(p >= 0.0);
            if last > 0.0 {
                assert!(p < last, "p({}) = {p} not below {last}", i as f64 * 0.25);
            } else {
                assert_eq!(p, 0.0);
            }
            last = p;
        }
        // Far tail underflows cleanly to zero.
        assert_eq!(normal_tail(60.0).unwrap(), 0.0);
    }

    #[test]
    fn normal_tail_rejects_non_finite() {
        assert!(matches!(
            normal_tail(f64::NAN),
            Err(MetricsError::NonFinite)
        ));
        assert!(matches!(
            normal_tail(f64::INFINITY),
            Err(MetricsError::NonFinite)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut matrix = ConfusionMatrix::for_emotions();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for row in 0..6 {
            for col in 0..7 {
                for _ in 0..(rng.next_u64() % 5) {
                    matrix.record(row, Some(col).filter(|&c| c < 6));
                }
            }
        }
        let mut csv = Vec::new();
        matrix.to_csv(&mut csv).unwrap();
        let parsed = ConfusionMatrix::from_csv(csv.as_slice()).unwrap();
        assert_eq!(parsed, matrix);
    }

    #[test]
    fn csv_round_trip_without_invalid_column() {
        let mut matrix = ConfusionMatrix::new(vec!["joy".into()], false).unwrap();
        matrix.record(0, Some(0));
        let mut csv = Vec::new();
        matrix.to_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv.clone()).unwrap(), ",joy\njoy,1\n");
        let parsed = ConfusionMatrix::from_csv(csv.as_slice()).unwrap();
        assert_eq!(parsed, matrix);
    }

    #[test]
    fn matrix_label_validation() {
        assert!(ConfusionMatrix::new(vec![], false).is_err());
        assert!(ConfusionMatrix::new(vec!["invalid".into()], true).is_err());
        assert!(ConfusionMatrix::new(vec!["a,b".into()], false).is_err());
        assert!(ConfusionMatrix::new(vec!["a".into(), "a".into()], false).is_err());
    }

    #[test]
    fn prediction_records_round_trip() {
        let records = vec![
            PredictionRecord {
                id: 0,
                gold: emotion("joy"),
                generated: "clearly positive. joy".into(),
                error: None,
            },
            PredictionRecord {
                id: 1,
                gold: emotion("fear"),
                generated: String::new(),
                error: Some("backend timeout".into()),
            },
        ];
        let mut buf = Vec::new();
        assert_eq!(write_predictions(&records, &mut buf).unwrap(), 2);
        let back = read_predictions(buf.as_slice()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn read_predictions_rejects_duplicate_ids() {
        let input = "{\"id\":1,\"gold\":\"joy\",\"generated\":\"joy\"}\n{\"id\":1,\"gold\":\"fear\",\"generated\":\"fear\"}";
        let err = read_predictions(input.as_bytes()).unwrap_err();
        assert!(matches!(err, MetricsError::DuplicateId { line: 2, id: 1 }));
    }

    #[test]
    fn evaluate_predictions_extracts_and_scores() {
        let records = vec![
            PredictionRecord {
                id: 0,
                gold: emotion("joy"),
                generated: "reads upbeat. joy".into(),
                error: None,
            },
            PredictionRecord {
                id: 1,
                gold: emotion("fear"),
                generated: "no label word here".into(),
                error: None,
            },
        ];
        let report = evaluate_predictions("run", &records).unwrap();
        assert_eq!(report.accuracy, 0.5);
        assert_eq!(report.correct(), 1);
        assert_eq!(report.total(), 2);
        assert_eq!(report.matrix.invalid_count(), 1);
    }
}

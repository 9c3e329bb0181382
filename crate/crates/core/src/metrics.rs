//! Multiclass evaluation over the fixed classes 0 (draw), 1 (win), 2 (loss).
//!
//! Undefined ratios (zero denominators) are reported as 0.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NUM_CLASSES;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("length mismatch: {truth} true labels vs {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no labels to evaluate")]
    Empty,
    #[error("label {0} is not a class code (expected 0, 1 or 2)")]
    UnknownLabel(usize),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

fn check_lengths(y_true: &[usize], y_pred: &[usize]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    Ok(())
}

/// Fraction of positions where prediction equals truth.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / y_true.len() as f64)
}

/// `counts[i][j]` = instances of true class `i` predicted as `j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        (0..NUM_CLASSES).map(|i| self.counts[i][class]).sum()
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "true\\pred {:>6} {:>6} {:>6}", 0, 1, 2)?;
        for (i, row) in self.counts.iter().enumerate() {
            writeln!(f, "{i:>9} {:>6} {:>6} {:>6}", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix> {
    check_lengths(y_true, y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= NUM_CLASSES {
            return Err(MetricsError::UnknownLabel(t));
        }
        if p >= NUM_CLASSES {
            return Err(MetricsError::UnknownLabel(p));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy, confusion matrix and the per-class / averaged classification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub micro: Averages,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub weighted: Averages,
    pub n: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn report(y_true: &[usize], y_pred: &[usize]) -> Result<EvalReport> {
    let cm = confusion(y_true, y_pred)?;
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let per_class: Vec<ClassScores> = (0..NUM_CLASSES)
        .map(|c| {
            let tp = cm.counts[c][c];
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            ClassScores {
                class: c,
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.support(c),
            }
        })
        .collect();

    // single-label multiclass: micro TP = trace, micro FP = micro FN = total - trace
    let micro_p = ratio(cm.trace(), cm.total());
    let micro = Averages {
        precision: micro_p,
        recall: micro_p,
        f1: harmonic(micro_p, micro_p),
    };
    let k = NUM_CLASSES as f64;
    let macro_avg = Averages {
        precision: per_class.iter().map(|s| s.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|s| s.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|s| s.f1).sum::<f64>() / k,
    };
    let n = cm.total() as f64;
    let weighted = Averages {
        precision: per_class.iter().map(|s| s.precision * s.support as f64).sum::<f64>() / n,
        recall: per_class.iter().map(|s| s.recall * s.support as f64).sum::<f64>() / n,
        f1: per_class.iter().map(|s| s.f1 * s.support as f64).sum::<f64>() / n,
    };
    Ok(EvalReport {
        accuracy: micro_p,
        confusion: cm,
        per_class,
        micro,
        macro_avg,
        weighted,
        n: cm.total(),
    })
}

impl EvalReport {
    /// Rows in the `Accuracy | Class | Precision | Recall | F-1 Score` layout,
    /// two decimals, accuracy printed on the first class row only.
    pub fn table_rows(&self, label: &str) -> Vec<[String; 6]> {
        self.per_class
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (l, acc) = if i == 0 {
                    (label.to_string(), format!("{:.2}", self.accuracy))
                } else {
                    (String::new(), String::new())
                };
                [
                    l,
                    acc,
                    s.class.to_string(),
                    format!("{:.2}", s.precision),
                    format!("{:.2}", s.recall),
                    format!("{:.2}", s.f1),
                ]
            })
            .collect()
    }

    /// sklearn-style classification report.
    pub fn classification_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>12} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support");
        for s in &self.per_class {
            let _ = writeln!(
                out,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                s.class, s.precision, s.recall, s.f1, s.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>12} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.n);
        for (name, a) in [("micro avg", self.micro), ("macro avg", self.macro_avg), ("weighted avg", self.weighted)] {
            let _ = writeln!(
                out,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name, a.precision, a.recall, a.f1, self.n
            );
        }
        out
    }
}

/// Renders titled report blocks as one aligned plain-text table.
pub fn render_table(title: &str, blocks: &[(String, &EvalReport)]) -> String {
    let header = ["", "Accuracy", "Class", "Precision", "Recall", "F-1 Score"];
    let rows: Vec<[String; 6]> = blocks.iter().flat_map(|(label, r)| r.table_rows(label)).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    widths[0] = widths[0].max(title.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    let mut head = header;
    head[0] = title;
    line(&mut out, &head);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, 2, 0], &[1, 2, 2, 2]).unwrap(), 0.5);
        assert_eq!(accuracy(&[], &[]), Err(MetricsError::Empty));
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let cm = confusion(&[1, 1], &[2, 2]).unwrap();
        assert_eq!(cm.counts, [[0, 0, 0], [0, 0, 2], [0, 0, 0]]);
        assert_eq!(confusion(&[3], &[0]), Err(MetricsError::UnknownLabel(3)));
    }

    #[test]
    fn report_hand_computed() {
        let r = report(&[0, 0, 1, 1, 2, 2], &[0, 1, 1, 1, 2, 0]).unwrap();
        let c1 = r.per_class[1];
        assert!((c1.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c1.recall, 1.0);
        assert!((c1.f1 - 0.8).abs() < 1e-12);
        assert_eq!(r.micro.f1, r.accuracy);
    }

    #[test]
    fn absent_class_scores_zero() {
        let r = report(&[1, 2, 1], &[1, 2, 2]).unwrap();
        let c0 = r.per_class[0];
        assert_eq!((c0.precision, c0.recall, c0.f1, c0.support), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn table_layout() {
        let r = report(&[0, 1, 2, 1], &[0, 1, 1, 1]).unwrap();
        let text = render_table("Random Forest", &[("2 Seasons of Data".into(), &r)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("F-1 Score"));
        assert!(lines[1].contains("0.75"));
        assert!(r.classification_report().contains("weighted avg"));
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MlError;

/// 2x2 counts indexed `[actual][predicted]`, class 0 = FALSE, 1 = TRUE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix(pub [[u64; 2]; 2]);

impl ConfusionMatrix {
    pub fn record(&mut self, actual: bool, predicted: bool) {
        self.0[usize::from(actual)][usize::from(predicted)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    /// Number of rows whose actual class is `class`.
    pub fn actual(&self, class: usize) -> u64 {
        self.0[class][0] + self.0[class][1]
    }

    pub fn correct(&self) -> u64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

/// One row of the accuracy-by-class table. Cells whose denominator is zero
/// hold 0 and are named in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub class: String,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: Option<f64>,
    pub prc_area: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// FALSE row then TRUE row.
    pub classes: Vec<MetricRow>,
    pub weighted_avg: MetricRow,
}

fn ratio(num: u64, den: u64, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_row(m: &ConfusionMatrix, c: usize) -> MetricRow {
    let o = 1 - c;
    let tp = m.0[c][c];
    let fn_ = m.0[c][o];
    let fp = m.0[o][c];
    let tn = m.0[o][o];
    let mut undefined = Vec::new();
    let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
    let fp_rate = ratio(fp, fp + tn, "fp_rate", &mut undefined);
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let f_measure = if precision + recall == 0.0 {
        undefined.push("f_measure".into());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let den = [tp + fp, tp + fn_, tn + fp, tn + fn_]
        .iter()
        .map(|&x| x as f64)
        .product::<f64>();
    let mcc = if den == 0.0 {
        undefined.push("mcc".into());
        0.0
    } else {
        (tp as f64 * tn as f64 - fp as f64 * fn_ as f64) / den.sqrt()
    };
    MetricRow {
        class: if c == 1 { "TRUE" } else { "FALSE" }.into(),
        tp_rate: recall,
        fp_rate,
        precision,
        recall,
        f_measure,
        mcc,
        roc_area: None,
        prc_area: None,
        undefined,
    }
}

fn weighted(m: &ConfusionMatrix, rows: &[MetricRow]) -> MetricRow {
    let n = m.total() as f64;
    let w = [m.actual(0) as f64 / n, m.actual(1) as f64 / n];
    let avg = |get: fn(&MetricRow) -> f64| w[0] * get(&rows[0]) + w[1] * get(&rows[1]);
    let avg_opt = |get: fn(&MetricRow) -> Option<f64>| match (get(&rows[0]), get(&rows[1])) {
        (Some(a), Some(b)) => Some(w[0] * a + w[1] * b),
        _ => None,
    };
    let mut undefined: Vec<String> = Vec::new();
    for r in rows {
        for u in &r.undefined {
            if !undefined.contains(u) {
                undefined.push(u.clone());
            }
        }
    }
    MetricRow {
        class: "Weighted Avg.".into(),
        tp_rate: avg(|r| r.tp_rate),
        fp_rate: avg(|r| r.fp_rate),
        precision: avg(|r| r.precision),
        recall: avg(|r| r.recall),
        f_measure: avg(|r| r.f_measure),
        mcc: avg(|r| r.mcc),
        roc_area: avg_opt(|r| r.roc_area),
        prc_area: avg_opt(|r| r.prc_area),
        undefined,
    }
}

/// Accuracy-by-class table from a confusion matrix, without ROC/PRC areas.
pub fn metrics_from_confusion(confusion: ConfusionMatrix) -> Result<EvaluationReport, MlError> {
    if confusion.total() == 0 {
        return Err(MlError::Parameter("confusion matrix is all zero".into()));
    }
    let classes = vec![class_row(&confusion, 0), class_row(&confusion, 1)];
    let weighted_avg = weighted(&confusion, &classes);
    Ok(EvaluationReport {
        confusion,
        accuracy: confusion.accuracy(),
        classes,
        weighted_avg,
    })
}

fn check_both(scored: &[(f64, bool)]) -> Result<(usize, usize), MlError> {
    let pos = scored.iter().filter(|s| s.1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MlError::Parameter("scores need both labels".into()));
    }
    Ok((neg, pos))
}

/// Area under the ROC curve for the TRUE class, as the Mann-Whitney rank
/// statistic with tied scores given their average rank.
pub fn roc_auc(scored: &[(f64, bool)]) -> Result<f64, MlError> {
    let (neg, pos) = check_both(scored)?;
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share their mean.
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg * sorted[i..j].iter().filter(|s| s.1).count() as f64;
        i = j;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Area under the precision-recall curve for the TRUE class. Thresholds are
/// the distinct scores from high to low; the curve starts at recall 0 with
/// the first threshold's precision and is integrated by trapezoids.
pub fn prc_area(scored: &[(f64, bool)]) -> Result<f64, MlError> {
    let (_, pos) = check_both(scored)?;
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev: Option<(f64, f64)> = None;
    let mut area = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        let (r0, p0) = prev.unwrap_or((0.0, precision));
        area += (recall - r0) * (precision + p0) / 2.0;
        prev = Some((recall, precision));
        i = j;
    }
    Ok(area)
}

impl EvaluationReport {
    /// Adds per-class ROC and PRC areas computed from TRUE-class scores.
    /// The FALSE class is scored by `1 - score`. Leaves the areas empty when
    /// only one class is present.
    pub fn with_scores(mut self, scored: &[(f64, bool)]) -> EvaluationReport {
        let flipped: Vec<(f64, bool)> = scored.iter().map(|&(s, l)| (1.0 - s, !l)).collect();
        for (row, s) in self.classes.iter_mut().zip([&flipped, &scored.to_vec()]) {
            row.roc_area = roc_auc(s).ok();
            row.prc_area = prc_area(s).ok();
        }
        self.weighted_avg = weighted(&self.confusion, &self.classes);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table in the accuracy-by-class layout, followed by the
    /// confusion matrix.
    pub fn render_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or("?".to_string(), |x| format!("{x:.3}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>8} {:>9} {:>8} {:>9} {:>8} {:>8} {:>8}",
            "", "TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "MCC", "ROC Area", "PRC Area"
        );
        for r in self.classes.iter().chain(std::iter::once(&self.weighted_avg)) {
            let _ = writeln!(
                out,
                "{:<14} {:>8} {:>8} {:>9} {:>8} {:>9} {:>8} {:>8} {:>8}",
                r.class,
                cell(Some(r.tp_rate)),
                cell(Some(r.fp_rate)),
                cell(Some(r.precision)),
                cell(Some(r.recall)),
                cell(Some(r.f_measure)),
                cell(Some(r.mcc)),
                cell(r.roc_area),
                cell(r.prc_area),
            );
        }
        let m = self.confusion.0;
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>6} {:>6}   <-- classified as", "a", "b");
        let _ = writeln!(out, "{:>6} {:>6} | a = FALSE", m[0][0], m[0][1]);
        let _ = writeln!(out, "{:>6} {:>6} | b = TRUE", m[1][0], m[1][1]);
        let _ = writeln!(out);
        let _ = writeln!(out, "Accuracy: {:.4} ({}/{})", self.accuracy, self.confusion.correct(), self.confusion.total());
        out
    }
}

use serde::{Deserialize, Serialize};

use super::{MlError, TrainingSet};
use crate::ingest::LabeledDataset;

/// Gains at or below this are treated as zero when choosing splits.
pub(crate) const GAIN_EPSILON: f64 = 1e-12;

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(counts: &[u64]) -> Result<f64, MlError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MlError::Parameter("entropy of all-zero counts".into()));
    }
    Ok(entropy_unchecked(counts, total))
}

pub(crate) fn entropy_unchecked(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Information gain and split information of a binary partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitScore {
    pub info_gain: f64,
    pub split_info: f64,
}

impl SplitScore {
    /// Class counts are `[negatives, positives]` for the parent and the
    /// left (`<= threshold`) child.
    pub(crate) fn from_counts(parent: [u64; 2], left: [u64; 2]) -> SplitScore {
        let right = [parent[0] - left[0], parent[1] - left[1]];
        let n = parent[0] + parent[1];
        let (nl, nr) = (left[0] + left[1], right[0] + right[1]);
        let weighted = |child: [u64; 2], size: u64| {
            if size == 0 {
                0.0
            } else {
                size as f64 / n as f64 * entropy_unchecked(&child, size)
            }
        };
        // Summing the children first keeps mirrored partitions bit-identical.
        let info_gain = entropy_unchecked(&parent, n) - (weighted(left, nl) + weighted(right, nr));
        SplitScore {
            info_gain: info_gain.max(0.0),
            split_info: entropy_unchecked(&[nl, nr], n),
        }
    }

    pub fn gain_ratio(&self) -> f64 {
        if self.split_info <= 0.0 {
            0.0
        } else {
            self.info_gain / self.split_info
        }
    }
}

/// Scores the split `value <= threshold` over the given rows of a set.
pub(crate) fn score_split(set: &TrainingSet, rows: &[usize], feature: usize, threshold: f64) -> SplitScore {
    let mut parent = [0u64; 2];
    let mut left = [0u64; 2];
    for &i in rows {
        let class = usize::from(set.labels[i]);
        parent[class] += 1;
        if set.rows[i][feature] <= threshold {
            left[class] += 1;
        }
    }
    SplitScore::from_counts(parent, left)
}

fn labeled_split(ds: &LabeledDataset, feature: &str, threshold: f64) -> Result<SplitScore, MlError> {
    if !ds.schema.iter().any(|f| f == feature) {
        return Err(MlError::Parameter(format!("unknown feature {feature:?}")));
    }
    let set = TrainingSet::from_dataset(ds);
    if set.len() < 2 {
        return Err(MlError::Parameter("need at least two labeled rows".into()));
    }
    let f = set.feature_index(feature)?;
    let rows: Vec<usize> = (0..set.len()).collect();
    Ok(score_split(&set, &rows, f, threshold))
}

/// Entropy reduction of the split `feature <= threshold` over labeled rows.
pub fn info_gain(ds: &LabeledDataset, feature: &str, threshold: f64) -> Result<f64, MlError> {
    labeled_split(ds, feature, threshold).map(|s| s.info_gain)
}

/// Information gain divided by split information (0 when the split puts
/// every row on one side).
pub fn gain_ratio(ds: &LabeledDataset, feature: &str, threshold: f64) -> Result<f64, MlError> {
    labeled_split(ds, feature, threshold).map(|s| s.gain_ratio())
}

/// Best-gain binary split of one feature over `rows`, scanning sorted values
/// once. Only splits with at least `min_leaf` rows per side are considered.
/// Returns `(threshold, score)`; ties keep the smallest threshold.
pub(crate) fn best_threshold(
    set: &TrainingSet,
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
    by_ratio: bool,
) -> Option<(f64, SplitScore)> {
    let mut sorted: Vec<(f64, bool)> = rows
        .iter()
        .map(|&i| (set.rows[i][feature], set.labels[i]))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent = [0u64; 2];
    for &(_, l) in &sorted {
        parent[usize::from(l)] += 1;
    }
    let n = sorted.len();
    let mut left = [0u64; 2];
    let mut best: Option<(f64, SplitScore, f64)> = None;
    for i in 0..n.saturating_sub(1) {
        left[usize::from(sorted[i].1)] += 1;
        if sorted[i].0 == sorted[i + 1].0 {
            continue;
        }
        let nl = i + 1;
        if nl < min_leaf || n - nl < min_leaf {
            continue;
        }
        let score = SplitScore::from_counts(parent, left);
        let key = if by_ratio { score.gain_ratio() } else { score.info_gain };
        if best.as_ref().map_or(true, |b| key > b.2) {
            best = Some(((sorted[i].0 + sorted[i + 1].0) / 2.0, score, key));
        }
    }
    best.map(|(t, s, _)| (t, s))
}

/// A feature's best information gain over all midpoint thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub feature: String,
    pub info_gain: f64,
    /// `info_gain` as a percentage (bits x 100).
    pub percent: f64,
    pub threshold: Option<f64>,
}

/// Ranks schema features by their best information gain, descending. Ties
/// keep schema order.
pub fn rank_features(ds: &LabeledDataset) -> Result<Vec<FeatureRank>, MlError> {
    let set = TrainingSet::from_dataset(ds);
    if set.is_empty() {
        return Err(MlError::Parameter("no labeled rows".into()));
    }
    let rows: Vec<usize> = (0..set.len()).collect();
    let mut ranks: Vec<FeatureRank> = set
        .features
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let best = best_threshold(&set, &rows, f, 1, false);
            let (threshold, gain) = match best {
                Some((t, s)) => (Some(t), s.info_gain),
                None => (None, 0.0),
            };
            FeatureRank {
                feature: name.clone(),
                info_gain: gain,
                percent: gain * 100.0,
                threshold,
            }
        })
        .collect();
    // Stable sort keeps schema order among equal gains.
    ranks.sort_by(|a, b| b.info_gain.total_cmp(&a.info_gain));
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureVector, Label};

    fn ds(rows: &[(i64, i64, bool)]) -> LabeledDataset {
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, &(lines, div, label))| {
                let mut v = FeatureVector::zero(format!("s{i}"));
                v.diffs[11] = lines;
                v.diffs[1] = div;
                v.label = Label::from(label);
                v
            })
            .collect();
        LabeledDataset::new(rows).with_schema(&["div", "lines"]).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[2, 2]).unwrap(), 1.0);
        assert_eq!(entropy(&[4, 0]).unwrap(), 0.0);
        // Direct formula with p = 422/546 and 124/546.
        let (p, q) = (422.0f64 / 546.0, 124.0f64 / 546.0);
        let oracle = -(p * p.log2() + q * q.log2());
        let h = entropy(&[422, 124]).unwrap();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.7735).abs() < 1e-3);
        assert!(entropy(&[0, 0]).is_err());
    }

    #[test]
    fn perfect_split_gains_one_bit() {
        let d = ds(&[(0, 0, false), (1, 0, false), (5, 0, true), (6, 0, true)]);
        assert_eq!(info_gain(&d, "lines", 3.0).unwrap(), 1.0);
        assert_eq!(gain_ratio(&d, "lines", 3.0).unwrap(), 1.0);
    }

    #[test]
    fn constant_feature_gains_nothing() {
        let d = ds(&[(0, 0, false), (1, 0, false), (5, 0, true), (6, 0, true)]);
        for t in [-1.0, 0.0, 0.5] {
            assert_eq!(info_gain(&d, "div", t).unwrap(), 0.0);
            assert_eq!(gain_ratio(&d, "div", t).unwrap(), 0.0);
        }
    }

    #[test]
    fn unknown_feature() {
        let d = ds(&[(0, 0, false), (1, 0, true)]);
        assert!(info_gain(&d, "tags", 0.0).is_err());
        assert!(info_gain(&d, "nope", 0.0).is_err());
    }

    #[test]
    fn lines_ranked_first() {
        let d = ds(&[(0, 3, false), (1, -2, false), (0, 1, false), (9, 0, true), (7, 2, true), (8, -1, true)]);
        let r = rank_features(&d).unwrap();
        assert_eq!(r[0].feature, "lines");
        assert_eq!(r[0].percent, 100.0);
        assert_eq!(r[0].threshold, Some(4.0));
    }

    #[test]
    fn constant_features_keep_schema_order() {
        let d = ds(&[(1, 1, false), (1, 1, true), (1, 1, false)]);
        let r = rank_features(&d).unwrap();
        let names: Vec<_> = r.iter().map(|x| x.feature.as_str()).collect();
        assert_eq!(names, ["div", "lines"]);
        assert!(r.iter().all(|x| x.percent == 0.0 && x.threshold.is_none()));
    }
}

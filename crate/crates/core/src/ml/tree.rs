use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::entropy::{best_threshold, GAIN_EPSILON};
use super::{MlError, TrainingSet};

pub const DEFAULT_MIN_LEAF: usize = 2;

/// Node of a binary decision tree stored in a flat arena; `left` holds rows
/// with `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// `[negatives, positives]` among training rows reaching the leaf.
        class_counts: [u64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: Vec<String>,
    /// Root is node 0.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Fraction of TRUE training rows in the leaf reached by `row`.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { class_counts } => {
                    let total = class_counts[0] + class_counts[1];
                    return class_counts[1] as f64 / total as f64;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Indented text rendering, one line per node.
    pub fn render(&self) -> String {
        fn walk(tree: &DecisionTree, at: usize, indent: usize, out: &mut String) {
            let pad = "|   ".repeat(indent);
            match &tree.nodes[at] {
                TreeNode::Leaf { class_counts } => {
                    let label = if class_counts[1] > class_counts[0] { "TRUE" } else { "FALSE" };
                    out.push_str(&format!("{pad}{label} ({}/{})\n", class_counts[0], class_counts[1]));
                }
                TreeNode::Internal { feature, threshold, left, right } => {
                    let name = &tree.features[*feature];
                    out.push_str(&format!("{pad}{name} <= {threshold}\n"));
                    walk(tree, *left, indent + 1, out);
                    out.push_str(&format!("{pad}{name} > {threshold}\n"));
                    walk(tree, *right, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(self, 0, 0, &mut out);
        out
    }
}

fn class_counts(set: &TrainingSet, rows: &[usize]) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for &i in rows {
        counts[usize::from(set.labels[i])] += 1;
    }
    counts
}

fn push_leaf(nodes: &mut Vec<TreeNode>, counts: [u64; 2]) -> usize {
    nodes.push(TreeNode::Leaf { class_counts: counts });
    nodes.len() - 1
}

fn partition(set: &TrainingSet, rows: &[usize], feature: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| set.rows[i][feature] <= threshold)
}

/// Chooses the split of a node. Implementations differ in which features
/// they look at and how splits are scored.
trait SplitChooser {
    fn choose(&mut self, set: &TrainingSet, rows: &[usize]) -> Option<(usize, f64)>;
    fn min_leaf(&self) -> usize;
}

fn grow(set: &TrainingSet, rows: &[usize], chooser: &mut impl SplitChooser, nodes: &mut Vec<TreeNode>) -> usize {
    let counts = class_counts(set, rows);
    if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * chooser.min_leaf() {
        return push_leaf(nodes, counts);
    }
    let Some((feature, threshold)) = chooser.choose(set, rows) else {
        return push_leaf(nodes, counts);
    };
    let (left_rows, right_rows) = partition(set, rows, feature, threshold);
    let at = nodes.len();
    // Placeholder until both children exist.
    nodes.push(TreeNode::Leaf { class_counts: counts });
    let left = grow(set, &left_rows, chooser, nodes);
    let right = grow(set, &right_rows, chooser, nodes);
    nodes[at] = TreeNode::Internal {
        feature,
        threshold,
        left,
        right,
    };
    at
}

/// Gain-ratio splits over every feature, restricted to splits with positive
/// information gain and `min_leaf` rows per side.
struct GainRatioChooser {
    min_leaf: usize,
}

impl SplitChooser for GainRatioChooser {
    fn choose(&mut self, set: &TrainingSet, rows: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..set.features.len() {
            let Some((t, score)) = best_threshold_positive(set, rows, f, self.min_leaf) else {
                continue;
            };
            let ratio = score.gain_ratio();
            if best.map_or(true, |b| ratio > b.2) {
                best = Some((f, t, ratio));
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn min_leaf(&self) -> usize {
        self.min_leaf
    }
}

// Best gain-ratio threshold among splits whose information gain is positive.
fn best_threshold_positive(
    set: &TrainingSet,
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<(f64, super::SplitScore)> {
    let mut sorted: Vec<usize> = rows.to_vec();
    sorted.sort_by(|&a, &b| set.rows[a][feature].total_cmp(&set.rows[b][feature]));
    let mut parent = [0u64; 2];
    for &i in &sorted {
        parent[usize::from(set.labels[i])] += 1;
    }
    let n = sorted.len();
    let mut left = [0u64; 2];
    let mut best: Option<(f64, super::SplitScore)> = None;
    for k in 0..n.saturating_sub(1) {
        left[usize::from(set.labels[sorted[k]])] += 1;
        let (here, next) = (set.rows[sorted[k]][feature], set.rows[sorted[k + 1]][feature]);
        if here == next || k + 1 < min_leaf || n - k - 1 < min_leaf {
            continue;
        }
        let score = super::SplitScore::from_counts(parent, left);
        if score.info_gain <= GAIN_EPSILON {
            continue;
        }
        if best.map_or(true, |b| score.gain_ratio() > b.1.gain_ratio()) {
            best = Some(((here + next) / 2.0, score));
        }
    }
    best
}

/// Trains an unpruned C4.5-style tree: binary numeric splits at midpoints,
/// chosen by gain ratio, grown until a node is pure or cannot hold two
/// children of `min_leaf` rows.
pub fn train_j48(set: &TrainingSet, min_leaf: usize) -> Result<DecisionTree, MlError> {
    if set.is_empty() {
        return Err(MlError::Parameter("cannot train on an empty dataset".into()));
    }
    if min_leaf == 0 {
        return Err(MlError::Parameter("min_leaf must be >= 1".into()));
    }
    let rows: Vec<usize> = (0..set.len()).collect();
    let mut nodes = Vec::new();
    grow(set, &rows, &mut GainRatioChooser { min_leaf }, &mut nodes);
    Ok(DecisionTree {
        features: set.features.clone(),
        nodes,
    })
}

/// Information-gain splits over a random feature subset: features are
/// visited in random order and the search stops once `k` have been tried and
/// one of them gives positive gain.
struct RandomSubspaceChooser<'r, R: Rng> {
    k: usize,
    rng: &'r mut R,
}

impl<R: Rng> SplitChooser for RandomSubspaceChooser<'_, R> {
    fn choose(&mut self, set: &TrainingSet, rows: &[usize]) -> Option<(usize, f64)> {
        let mut order: Vec<usize> = (0..set.features.len()).collect();
        order.shuffle(self.rng);
        let mut best: Option<(usize, f64, f64)> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.k && best.is_some() {
                break;
            }
            let Some((t, score)) = best_threshold(set, rows, f, 1, false) else {
                continue;
            };
            if score.info_gain > GAIN_EPSILON && best.map_or(true, |b| score.info_gain > b.2) {
                best = Some((f, t, score.info_gain));
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn min_leaf(&self) -> usize {
        1
    }
}

pub(crate) fn train_random_tree<R: Rng>(set: &TrainingSet, rows: &[usize], k: usize, rng: &mut R) -> DecisionTree {
    let mut nodes = Vec::new();
    grow(set, rows, &mut RandomSubspaceChooser { k, rng }, &mut nodes);
    DecisionTree {
        features: set.features.clone(),
        nodes,
    }
}

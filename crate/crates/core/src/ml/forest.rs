use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_random_tree, DecisionTree};
use super::{MlError, TrainingSet};

pub const DEFAULT_TREES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub features: Vec<String>,
    pub seed: u64,
    pub features_per_split: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Mean over trees of the TRUE fraction in the reached leaf.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged random trees: each tree sees a bootstrap sample of the rows and
/// considers `ceil(sqrt(d))` random features per split. Tree `i` draws from
/// its own stream of the seeded generator, so the result does not depend on
/// thread scheduling.
pub fn train_rf(set: &TrainingSet, n_trees: usize, seed: u64) -> Result<ForestModel, MlError> {
    if set.is_empty() {
        return Err(MlError::Parameter("cannot train on an empty dataset".into()));
    }
    if !set.has_both_classes() {
        return Err(MlError::Parameter("random forest needs both classes".into()));
    }
    if n_trees == 0 {
        return Err(MlError::Parameter("n_trees must be >= 1".into()));
    }
    let d = set.features.len();
    let k = ((d as f64).sqrt().ceil() as usize).max(1);
    let n = set.len();
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            train_random_tree(set, &sample, k, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        features: set.features.clone(),
        seed,
        features_per_split: k,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> TrainingSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let pos = i % 2 == 0;
            let v = if pos { 10.0 + i as f64 } else { -(i as f64) };
            rows.push(vec![v, (i % 5) as f64, 0.0]);
            labels.push(pos);
        }
        TrainingSet::new(vec!["lines".into(), "img".into(), "a".into()], rows, labels).unwrap()
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = separable();
        let a = train_rf(&s, 20, 3).unwrap();
        let b = train_rf(&s, 20, 3).unwrap();
        assert_eq!(a, b);
        let c = train_rf(&s, 20, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn separates_training_data() {
        let s = separable();
        let f = train_rf(&s, 30, 1).unwrap();
        for (row, &label) in s.rows.iter().zip(&s.labels) {
            assert_eq!(f.score(row) >= 0.5, label);
        }
    }

    #[test]
    fn zero_trees_rejected() {
        assert!(train_rf(&separable(), 0, 1).is_err());
    }
}

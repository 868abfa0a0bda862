use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{metrics_from_confusion, ConfusionMatrix, EvaluationReport};
use super::model::Learner;
use super::{MlError, TrainingSet};

/// Assigns every row a fold in `0..k`. Each class's rows are shuffled with
/// the seed, then negatives followed by positives are dealt round-robin, so
/// every fold receives a near-equal share of both classes.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, MlError> {
    if k < 2 {
        return Err(MlError::Parameter("k must be >= 2".into()));
    }
    if labels.len() < k {
        return Err(MlError::Parameter(format!("k = {k} exceeds {} rows", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(labels.len());
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut folds = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Stratified k-fold cross-validation. Predictions from all folds are pooled
/// into one confusion matrix and one score list for the ROC/PRC areas.
pub fn cross_validate(set: &TrainingSet, learner: &Learner, k: usize, seed: u64) -> Result<EvaluationReport, MlError> {
    let folds = stratified_folds(&set.labels, k, seed)?;
    let mut confusion = ConfusionMatrix::default();
    let mut scored = Vec::with_capacity(set.len());
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..set.len()).partition(|&i| folds[i] == fold);
        let model = learner.train(&set.subset(&train))?;
        for i in test {
            let score = model.score_row(&set.rows[i])?;
            confusion.record(set.labels[i], score >= 0.5);
            scored.push((score, set.labels[i]));
        }
    }
    Ok(metrics_from_confusion(confusion)?.with_scores(&scored))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let folds = stratified_folds(&labels, 5, 11).unwrap();
        for f in 0..5 {
            let pos = (0..30).filter(|&i| folds[i] == f && labels[i]).count();
            let all = folds.iter().filter(|&&x| x == f).count();
            assert_eq!(pos, 2);
            assert_eq!(all, 6);
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 11).unwrap());
    }

    #[test]
    fn bad_k() {
        assert!(stratified_folds(&[true, false], 1, 0).is_err());
        assert!(stratified_folds(&[true, false], 3, 0).is_err());
    }

    #[test]
    fn leave_one_out_on_separable_set() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![if i < 5 { -1.0 - i as f64 } else { i as f64 }]).collect();
        let labels: Vec<bool> = (0..10).map(|i| i >= 5).collect();
        let set = TrainingSet::new(vec!["div".into()], rows, labels).unwrap();
        let r = cross_validate(&set, &Learner::J48 { min_leaf: 2 }, 10, 3).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r, cross_validate(&set, &Learner::J48 { min_leaf: 2 }, 10, 3).unwrap());
    }
}

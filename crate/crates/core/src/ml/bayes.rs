use serde::{Deserialize, Serialize};

use super::{MlError, TrainingSet};
use crate::features::BOOLEAN_FEATURES;

/// Smallest per-class variance used for Gaussian likelihoods.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-class likelihood of one feature; index 0 is FALSE, 1 is TRUE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureLikelihood {
    Gaussian { mean: [f64; 2], variance: [f64; 2] },
    /// Probability of the value being set (x > 0.5), Laplace-smoothed.
    Bernoulli { p_true: [f64; 2] },
}

impl FeatureLikelihood {
    fn log_density(&self, class: usize, x: f64) -> f64 {
        match self {
            FeatureLikelihood::Gaussian { mean, variance } => {
                let (m, v) = (mean[class], variance[class]);
                -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m).powi(2) / (2.0 * v)
            }
            FeatureLikelihood::Bernoulli { p_true } => {
                let p = p_true[class];
                if x > 0.5 {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub features: Vec<String>,
    /// Class priors `[P(FALSE), P(TRUE)]`.
    pub priors: [f64; 2],
    pub likelihoods: Vec<FeatureLikelihood>,
}

impl NaiveBayesModel {
    /// Posterior probability of TRUE.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut log = [self.priors[0].ln(), self.priors[1].ln()];
        for (l, &x) in self.likelihoods.iter().zip(row) {
            for (class, acc) in log.iter_mut().enumerate() {
                *acc += l.log_density(class, x);
            }
        }
        // Normalise in log space so tiny likelihoods do not underflow to 0/0.
        let max = log[0].max(log[1]);
        let (a, b) = ((log[0] - max).exp(), (log[1] - max).exp());
        b / (a + b)
    }
}

/// Fits Gaussian likelihoods (maximum-likelihood variance, floored) for
/// count features and Bernoulli likelihoods for the boolean ones.
pub fn train_nb(set: &TrainingSet) -> Result<NaiveBayesModel, MlError> {
    if !set.has_both_classes() {
        return Err(MlError::Parameter("naive Bayes needs both classes".into()));
    }
    let counts = set.class_counts();
    let n = set.len() as f64;
    let priors = [counts[0] as f64 / n, counts[1] as f64 / n];
    let likelihoods = set
        .features
        .iter()
        .enumerate()
        .map(|(f, name)| {
            if BOOLEAN_FEATURES.contains(&name.as_str()) {
                let mut set_count = [0u64; 2];
                for (row, &label) in set.rows.iter().zip(&set.labels) {
                    if row[f] > 0.5 {
                        set_count[usize::from(label)] += 1;
                    }
                }
                let p = |c: usize| (set_count[c] as f64 + 1.0) / (counts[c] as f64 + 2.0);
                FeatureLikelihood::Bernoulli { p_true: [p(0), p(1)] }
            } else {
                let mut sum = [0.0; 2];
                for (row, &label) in set.rows.iter().zip(&set.labels) {
                    sum[usize::from(label)] += row[f];
                }
                let mean = [sum[0] / counts[0] as f64, sum[1] / counts[1] as f64];
                let mut sq = [0.0; 2];
                for (row, &label) in set.rows.iter().zip(&set.labels) {
                    let c = usize::from(label);
                    sq[c] += (row[f] - mean[c]).powi(2);
                }
                let variance = [
                    (sq[0] / counts[0] as f64).max(VARIANCE_FLOOR),
                    (sq[1] / counts[1] as f64).max(VARIANCE_FLOOR),
                ];
                FeatureLikelihood::Gaussian { mean, variance }
            }
        })
        .collect();
    Ok(NaiveBayesModel {
        features: set.features.clone(),
        priors,
        likelihoods,
    })
}

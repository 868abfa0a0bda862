use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bayes::{train_nb, NaiveBayesModel};
use super::forest::{train_rf, ForestModel, DEFAULT_TREES};
use super::tree::{train_j48, DecisionTree, DEFAULT_MIN_LEAF};
use super::{MlError, TrainingSet};
use crate::features::{FeatureVector, Label};

/// A learning algorithm together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum Learner {
    #[serde(rename = "nb")]
    NaiveBayes,
    J48 { min_leaf: usize },
    #[serde(rename = "rf")]
    RandomForest { n_trees: usize, seed: u64 },
}

impl Learner {
    /// Parses `nb`, `j48` or `rf` with default hyperparameters; the forest
    /// takes the given seed.
    pub fn from_name(name: &str, seed: u64) -> Result<Learner, MlError> {
        match name.to_ascii_lowercase().as_str() {
            "nb" | "naivebayes" => Ok(Learner::NaiveBayes),
            "j48" => Ok(Learner::J48 {
                min_leaf: DEFAULT_MIN_LEAF,
            }),
            "rf" | "randomforest" => Ok(Learner::RandomForest {
                n_trees: DEFAULT_TREES,
                seed,
            }),
            other => Err(MlError::Parameter(format!("unknown learner {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Learner::NaiveBayes => "nb",
            Learner::J48 { .. } => "j48",
            Learner::RandomForest { .. } => "rf",
        }
    }

    pub fn train(&self, set: &TrainingSet) -> Result<ClassifierModel, MlError> {
        Ok(match *self {
            Learner::NaiveBayes => ClassifierModel::NaiveBayes(train_nb(set)?),
            Learner::J48 { min_leaf } => ClassifierModel::J48(train_j48(set, min_leaf)?),
            Learner::RandomForest { n_trees, seed } => ClassifierModel::RandomForest(train_rf(set, n_trees, seed)?),
        })
    }
}

impl FromStr for Learner {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Learner::from_name(s, 0)
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A trained model, serializable with its feature schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", content = "model", rename_all = "lowercase")]
pub enum ClassifierModel {
    #[serde(rename = "nb")]
    NaiveBayes(NaiveBayesModel),
    J48(DecisionTree),
    #[serde(rename = "rf")]
    RandomForest(ForestModel),
}

impl ClassifierModel {
    pub fn features(&self) -> &[String] {
        match self {
            ClassifierModel::NaiveBayes(m) => &m.features,
            ClassifierModel::J48(m) => &m.features,
            ClassifierModel::RandomForest(m) => &m.features,
        }
    }

    pub fn learner_name(&self) -> &'static str {
        match self {
            ClassifierModel::NaiveBayes(_) => "nb",
            ClassifierModel::J48(_) => "j48",
            ClassifierModel::RandomForest(_) => "rf",
        }
    }

    /// TRUE score of a row laid out in the model's schema order.
    pub fn score_row(&self, row: &[f64]) -> Result<f64, MlError> {
        if row.len() != self.features().len() {
            return Err(MlError::SchemaMismatch {
                expected: self.features().len(),
                found: row.len(),
            });
        }
        Ok(match self {
            ClassifierModel::NaiveBayes(m) => m.score(row),
            ClassifierModel::J48(m) => m.score(row),
            ClassifierModel::RandomForest(m) => m.score(row),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ClassifierModel, MlError> {
        serde_json::from_str(text).map_err(|e| MlError::Parameter(format!("bad model file: {e}")))
    }
}

/// Classification of one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub site: String,
    pub label: Label,
    pub score: f64,
}

/// Scores a feature vector; the label is TRUE iff the score is at least 0.5.
pub fn predict(model: &ClassifierModel, vec: &FeatureVector) -> Result<Prediction, MlError> {
    let row = model
        .features()
        .iter()
        .map(|f| {
            vec.value(f)
                .ok_or_else(|| MlError::Parameter(format!("model feature {f:?} is not a known column")))
        })
        .collect::<Result<Vec<f64>, MlError>>()?;
    let score = model.score_row(&row)?;
    Ok(Prediction {
        site: vec.site.clone(),
        label: Label::from(score >= 0.5),
        score,
    })
}

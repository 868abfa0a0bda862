//! Classifiers over feature vectors (naive Bayes, a C4.5-style tree, random
//! forest), feature ranking by information gain and evaluation metrics.

mod arff;
mod bayes;
mod cv;
mod data;
mod entropy;
mod forest;
mod metrics;
mod model;
mod tree;

use thiserror::Error;

pub use arff::{export_arff, import_arff};
pub use bayes::{train_nb, FeatureLikelihood, NaiveBayesModel, VARIANCE_FLOOR};
pub use cv::{cross_validate, stratified_folds};
pub use data::TrainingSet;
pub use entropy::{entropy, gain_ratio, info_gain, rank_features, FeatureRank, SplitScore};
pub use forest::{train_rf, ForestModel, DEFAULT_TREES};
pub use metrics::{
    metrics_from_confusion, prc_area, roc_auc, ConfusionMatrix, EvaluationReport, MetricRow,
};
pub use model::{predict, ClassifierModel, Learner, Prediction};
pub use tree::{train_j48, DecisionTree, TreeNode, DEFAULT_MIN_LEAF};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("schema mismatch: model expects {expected} features, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("ARFF line {line}: {message}")]
    Arff { line: usize, message: String },
}

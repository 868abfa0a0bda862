use super::MlError;
use crate::ingest::LabeledDataset;

/// Dense numeric view of the labeled rows of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl TrainingSet {
    /// Collects labeled rows in dataset order; unlabeled rows are skipped.
    pub fn from_dataset(ds: &LabeledDataset) -> TrainingSet {
        let (rows, labels) = ds
            .labeled_rows()
            .map(|(row, label)| (ds.row_values(row), label))
            .unzip();
        TrainingSet {
            features: ds.schema.clone(),
            rows,
            labels,
        }
    }

    pub fn new(features: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self, MlError> {
        if rows.len() != labels.len() {
            return Err(MlError::Parameter(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != features.len()) {
            return Err(MlError::SchemaMismatch {
                expected: features.len(),
                found: bad.len(),
            });
        }
        Ok(TrainingSet {
            features,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> [u64; 2] {
        let pos = self.labels.iter().filter(|&&l| l).count() as u64;
        [self.labels.len() as u64 - pos, pos]
    }

    pub fn has_both_classes(&self) -> bool {
        let [neg, pos] = self.class_counts();
        neg > 0 && pos > 0
    }

    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        TrainingSet {
            features: self.features.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn feature_index(&self, name: &str) -> Result<usize, MlError> {
        self.features
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| MlError::Parameter(format!("unknown feature {name:?}")))
    }
}

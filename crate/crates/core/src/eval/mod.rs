//! Confusion matrices, accuracy metrics and report output.
//!
//! Rows are ground truth, columns are predictions.

mod labels;
mod noise;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::parse_labels;
pub use noise::{level_label, run_noise_experiment, NoiseExperiment, NoiseLevelResult};
pub use report::{metrics_from_csv, metrics_to_csv, EvaluationReport, LevelReport};

/// Square count matrix that keeps its row sums, column sums and trace up
/// to date as samples are added.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    trace: u64,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl From<ConfusionMatrix> for MatrixRecord {
    fn from(cm: ConfusionMatrix) -> Self {
        MatrixRecord {
            counts: cm.rows(),
            classes: cm.classes,
        }
    }
}

impl TryFrom<MatrixRecord> for ConfusionMatrix {
    type Error = Error;

    fn try_from(r: MatrixRecord) -> Result<Self> {
        ConfusionMatrix::from_counts(r.classes, &r.counts)
    }
}

impl ConfusionMatrix {
    /// Empty matrix over `classes`, which must be non-empty and unique.
    pub fn new(classes: Vec<String>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidConfig(
                "confusion matrix needs at least one class".into(),
            ));
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].contains(c) {
                return Err(Error::InvalidConfig(format!("duplicate class `{c}`")));
            }
        }
        let k = classes.len();
        Ok(ConfusionMatrix {
            classes,
            counts: vec![0; k * k],
            row_sums: vec![0; k],
            col_sums: vec![0; k],
            trace: 0,
            total: 0,
        })
    }

    pub fn from_counts(classes: Vec<String>, counts: &[Vec<u64>]) -> Result<Self> {
        let mut cm = ConfusionMatrix::new(classes)?;
        let k = cm.classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidConfig(format!(
                "confusion counts must be {k} x {k}"
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                cm.add(i, j, c);
            }
        }
        Ok(cm)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.len() + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.len())
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn index_of(&self, class: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    /// Adds `n` samples of (truth index, predicted index).
    pub fn add(&mut self, truth: usize, predicted: usize, n: u64) {
        let k = self.len();
        self.counts[truth * k + predicted] += n;
        self.row_sums[truth] += n;
        self.col_sums[predicted] += n;
        if truth == predicted {
            self.trace += n;
        }
        self.total += n;
    }

    /// Records one sample; both labels must be known classes.
    pub fn accumulate(&mut self, truth: &str, predicted: &str) -> Result<()> {
        let (i, j) = (self.index_of(truth)?, self.index_of(predicted)?);
        self.add(i, j, 1);
        Ok(())
    }

    /// Adds every cell of `other`, which must have the same class list.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::InvalidConfig(
                "cannot merge matrices with different classes".into(),
            ));
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                self.add(i, j, other.count(i, j));
            }
        }
        Ok(())
    }

    fn require_samples(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::EmptyConfusionMatrix);
        }
        Ok(())
    }
}

/// Trace over total.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    cm.require_samples()?;
    Ok(cm.trace as f64 / cm.total as f64)
}

/// Producer's (row) and user's (column) accuracy; `None` where the row or
/// column is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub class: String,
    #[serde(serialize_with = "crate::json::opt_f64_fixed")]
    pub producers: Option<f64>,
    #[serde(serialize_with = "crate::json::opt_f64_fixed")]
    pub users: Option<f64>,
}

pub fn producers_users_accuracy(cm: &ConfusionMatrix) -> Result<Vec<ClassAccuracy>> {
    cm.require_samples()?;
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok((0..cm.len())
        .map(|i| ClassAccuracy {
            class: cm.classes[i].clone(),
            producers: ratio(cm.count(i, i), cm.row_sums[i]),
            users: ratio(cm.count(i, i), cm.col_sums[i]),
        })
        .collect())
}

/// Expected agreement by chance: sum of row * column sums over total squared.
pub fn random_match(cm: &ConfusionMatrix) -> Result<f64> {
    cm.require_samples()?;
    Ok(chance_products(cm) as f64 / (cm.total as f64 * cm.total as f64))
}

fn chance_products(cm: &ConfusionMatrix) -> u128 {
    cm.row_sums
        .iter()
        .zip(&cm.col_sums)
        .map(|(&r, &c)| r as u128 * c as u128)
        .sum()
}

/// Cohen's kappa together with the random-match term it was computed from.
pub fn kappa(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    let oa = overall_accuracy(cm)?;
    let rm = random_match(cm)?;
    if chance_products(cm) == cm.total as u128 * cm.total as u128 {
        return Err(Error::KappaUndefined);
    }
    Ok(((oa - rm) / (1.0 - rm), rm))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: String,
    #[serde(serialize_with = "crate::json::f64_fixed")]
    pub overall_accuracy: f64,
    #[serde(serialize_with = "crate::json::opt_f64_fixed")]
    pub kappa: Option<f64>,
    #[serde(serialize_with = "crate::json::f64_fixed")]
    pub random_match: f64,
    pub classes: Vec<ClassAccuracy>,
}

impl MetricsReport {
    /// All metrics of `cm`; kappa is `None` when it is undefined.
    pub fn from_matrix(config: impl Into<String>, cm: &ConfusionMatrix) -> Result<Self> {
        let overall_accuracy = overall_accuracy(cm)?;
        let random_match = random_match(cm)?;
        let kappa = match kappa(cm) {
            Ok((k, _)) => Some(k),
            Err(Error::KappaUndefined) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricsReport {
            config: config.into(),
            overall_accuracy,
            kappa,
            random_match,
            classes: producers_users_accuracy(cm)?,
        })
    }
}

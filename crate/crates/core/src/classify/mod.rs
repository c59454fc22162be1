//! Supervised classifiers behind one fit/predict interface.
//!
//! Three families are available: shrinkage LDA, one-vs-rest linear SVM and
//! k-nearest neighbours. A fitted model only ever predicts classes that had
//! at least one training row.

mod knn;
mod lda;
mod svm;

pub use knn::KnnModel;
pub use lda::LdaModel;
pub use svm::SvmModel;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::argmax;

/// Anything that can be trained on a labelled dataset.
///
/// The strategies are written against this trait so that they can run with
/// any classifier, including test doubles.
pub trait Learner: Send + Sync {
    fn fit(&self, train: &LabeledDataset) -> Result<Box<dyn Predictor>>;
}

pub trait Predictor: Send + Sync {
    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lda,
    Svm,
    Knn,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Lda => "lda",
            Family::Svm => "svm",
            Family::Knn => "knn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Shared-covariance Gaussian discriminant with
    /// `S' = (1 - shrinkage) S + shrinkage diag(S)`.
    Lda { shrinkage: f64 },
    /// One-vs-rest linear SVM, squared hinge loss, penalty `c`.
    Svm { c: f64 },
    /// Majority vote of the `k` nearest rows (Euclidean).
    Knn { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// Z-score features with training statistics before fitting.
    pub standardize: bool,
}

pub const DEFAULT_SHRINKAGE: f64 = 1e-3;

impl ClassifierConfig {
    pub fn lda() -> Self {
        Self {
            kind: ClassifierKind::Lda {
                shrinkage: DEFAULT_SHRINKAGE,
            },
            standardize: false,
        }
    }

    pub fn svm(c: f64) -> Self {
        Self {
            kind: ClassifierKind::Svm { c },
            standardize: false,
        }
    }

    pub fn knn(k: usize) -> Self {
        Self {
            kind: ClassifierKind::Knn { k },
            standardize: false,
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            ClassifierKind::Lda { .. } => Family::Lda,
            ClassifierKind::Svm { .. } => Family::Svm,
            ClassifierKind::Knn { .. } => Family::Knn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ClassifierKind::Lda { shrinkage } if !(0.0..=1.0).contains(&shrinkage) => Err(
                Error::Config(format!("LDA shrinkage must lie in [0, 1], got {shrinkage}")),
            ),
            ClassifierKind::Svm { c, .. } if !(c.is_finite() && c > 0.0) => {
                Err(Error::Config(format!("SVM C must be positive, got {c}")))
            }
            ClassifierKind::Knn { k: 0 } => Err(Error::Config("kNN k must be >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Ordering used to break validation ties: the smaller `C`, `k` or
    /// shrinkage wins.
    fn complexity(&self) -> f64 {
        match self.kind {
            ClassifierKind::Lda { shrinkage } => shrinkage,
            ClassifierKind::Svm { c, .. } => c,
            ClassifierKind::Knn { k } => k as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.sum() / n;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            mean.push(m);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Self { mean, scale }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    Lda(LdaModel),
    Svm(SvmModel),
    Knn(KnnModel),
}

/// A trained classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    classes: Vec<usize>,
    n_classes: usize,
    n_features: usize,
    scaler: Option<Standardizer>,
    params: Params,
}

/// Trains `config` on a fully labelled, non-empty dataset.
pub fn fit(config: &ClassifierConfig, train: &LabeledDataset) -> Result<FittedModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Input("cannot fit on an empty training set".into()));
    }
    let labels = train.known_labels()?;
    let classes: Vec<usize> = train
        .class_counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, _)| c)
        .collect();
    // position of each label within `classes`
    let mut slot = vec![usize::MAX; train.n_classes()];
    for (i, &c) in classes.iter().enumerate() {
        slot[c] = i;
    }
    let targets: Vec<usize> = labels.iter().map(|&l| slot[l]).collect();

    let scaler = config.standardize.then(|| Standardizer::fit(train.features()));
    let scaled;
    let x = match &scaler {
        Some(s) => {
            scaled = s.apply(train.features());
            scaled.view()
        }
        None => train.features(),
    };

    let params = match config.kind {
        ClassifierKind::Lda { shrinkage } => {
            Params::Lda(LdaModel::fit(x, &targets, &classes, shrinkage)?)
        }
        ClassifierKind::Svm { c } => Params::Svm(SvmModel::fit(x, &targets, classes.len(), c)),
        ClassifierKind::Knn { k } => Params::Knn(KnnModel::fit(x, &targets, classes.len(), k)),
    };
    Ok(FittedModel {
        classes,
        n_classes: train.n_classes(),
        n_features: train.n_features(),
        scaler,
        params,
    })
}

impl FittedModel {
    /// Labels this model can emit, ascending. Score columns follow this order.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// One row per input, one column per entry of [`classes`](Self::classes).
    pub fn predict_scores(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.n_features {
            return Err(Error::Input(format!(
                "model expects {} features, got {}",
                self.n_features,
                rows.ncols()
            )));
        }
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.apply(rows);
                scaled.view()
            }
            None => rows,
        };
        Ok(match &self.params {
            Params::Lda(m) => m.scores(x),
            Params::Svm(m) => m.scores(x),
            Params::Knn(m) => m.scores(x),
        })
    }

    pub fn lda(&self) -> Option<&LdaModel> {
        match &self.params {
            Params::Lda(m) => Some(m),
            _ => None,
        }
    }
}

impl Predictor for FittedModel {
    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let scores = self.predict_scores(rows)?;
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| self.classes[argmax(r.as_slice().expect("standard layout"))])
            .collect())
    }
}

impl Learner for ClassifierConfig {
    fn fit(&self, train: &LabeledDataset) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(fit(self, train)?))
    }
}

/// Fraction of rows of a labelled dataset predicted correctly.
pub fn accuracy(model: &dyn Predictor, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("accuracy of an empty set is undefined".into()));
    }
    let truth = data.known_labels()?;
    let predicted = model.predict(data.features())?;
    let correct = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Picks the candidate with the best validation accuracy. Ties go to the
/// smaller `C` (SVM), `k` (kNN) or shrinkage (LDA), then to grid order.
pub fn tune(
    candidates: &[ClassifierConfig],
    train: &LabeledDataset,
    validation: &LabeledDataset,
) -> Result<ClassifierConfig> {
    if candidates.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if validation.is_empty() {
        return Err(Error::Config("empty validation set".into()));
    }
    let mut ordered: Vec<&ClassifierConfig> = candidates.iter().collect();
    ordered.sort_by(|a, b| a.complexity().total_cmp(&b.complexity()));
    let mut best: Option<(f64, &ClassifierConfig)> = None;
    for cfg in ordered {
        let acc = accuracy(&fit(cfg, train)?, validation)?;
        if best.is_none_or(|(b, _)| acc > b) {
            best = Some((acc, cfg));
        }
    }
    Ok(*best.expect("non-empty grid").1)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Tight isotropic clusters around the given means.
    pub fn clusters(means: &[Vec<f64>], per_class: usize, sd: f64, seed: u64) -> LabeledDataset {
        let mut rng = crate::seed::rng(seed);
        let d = means[0].len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (c, m) in means.iter().enumerate() {
            for _ in 0..per_class {
                for &mu in m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data.push(mu + sd * z);
                }
                labels.push(c);
            }
        }
        let n = labels.len();
        LabeledDataset::labeled(Array2::from_shape_vec((n, d), data).unwrap(), labels, means.len())
            .unwrap()
    }
}

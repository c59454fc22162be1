//! Semi-supervised labelling of the active set: label propagation, label
//! spreading and seeded k-means, plus validation-driven model selection.

mod graph;
mod kmeans;
mod propagate;

pub use graph::Affinity;
pub use kmeans::semi_kmeans;
pub use propagate::{label_propagation, label_spreading};

use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, Learner};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Propagation,
    Spreading,
    Kmeans,
}

/// RBF bandwidth, either absolute or relative to the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Fixed(f64),
    /// `scale / median squared pairwise distance` over all graph nodes.
    MedianScaled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Symmetrised k-nearest-neighbour connectivity.
    Knn { n_neighbors: usize },
    Rbf { gamma: Gamma },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiSupConfig {
    pub method: Method,
    pub kernel: Kernel,
    /// Clamping factor for spreading.
    pub alpha: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl SemiSupConfig {
    pub fn new(method: Method, kernel: Kernel) -> Self {
        Self {
            method,
            kernel,
            alpha: 0.2,
            max_iterations: 1000,
            tolerance: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kernel {
            Kernel::Knn { n_neighbors: 0 } => {
                return Err(Error::Config("n_neighbors must be >= 1".into()))
            }
            Kernel::Rbf {
                gamma: Gamma::Fixed(g) | Gamma::MedianScaled(g),
            } if !(g.is_finite() && g > 0.0) => {
                return Err(Error::Config(format!("gamma must be positive, got {g}")))
            }
            _ => {}
        }
        if self.method == Method::Spreading && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "clamping factor must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!("invalid tolerance {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Labels assigned to the unlabelled rows, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabeledSet {
    /// The unlabelled rows carrying their assigned labels.
    pub rows: LabeledDataset,
    pub labels: Vec<usize>,
    /// In `[0, 1]`; 0 flags a row labelled by the nearest-neighbour fallback.
    pub confidence: Vec<f64>,
}

impl PseudoLabeledSet {
    pub(crate) fn new(unlabeled: &LabeledDataset, labels: Vec<usize>, confidence: Vec<f64>) -> Result<Self> {
        let rows = unlabeled.with_labels(labels.iter().map(|&l| Some(l)).collect())?;
        Ok(Self {
            rows,
            labels,
            confidence,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Runs the configured labeler.
pub fn pseudo_label(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<PseudoLabeledSet> {
    match config.method {
        Method::Propagation => label_propagation(labeled, unlabeled, config),
        Method::Spreading => label_spreading(labeled, unlabeled, config),
        Method::Kmeans => semi_kmeans(labeled, unlabeled, config),
    }
}

pub(crate) fn check_inputs(labeled: &LabeledDataset, unlabeled: &LabeledDataset) -> Result<Vec<usize>> {
    let labels = labeled.known_labels()?;
    if labeled.is_empty() {
        return Err(Error::Input("no labelled rows".into()));
    }
    if labeled.n_features() != unlabeled.n_features() {
        return Err(Error::Input(format!(
            "labelled rows have {} features, unlabelled rows {}",
            labeled.n_features(),
            unlabeled.n_features()
        )));
    }
    Ok(labels)
}

/// Hyperparameter ranges for the semi-supervised stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiSupGrid {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_knn_neighbors")]
    pub knn_neighbors: Vec<usize>,
    #[serde(default = "default_gamma_scale")]
    pub rbf_gamma_scale: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Propagation, Method::Spreading, Method::Kmeans]
}
fn default_knn_neighbors() -> Vec<usize> {
    vec![7]
}
fn default_gamma_scale() -> Vec<f64> {
    vec![20.0]
}
fn default_alpha() -> Vec<f64> {
    vec![0.2, 0.8]
}
fn default_max_iterations() -> usize {
    1000
}
fn default_tolerance() -> f64 {
    1e-4
}

impl Default for SemiSupGrid {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            knn_neighbors: default_knn_neighbors(),
            rbf_gamma_scale: default_gamma_scale(),
            alpha: default_alpha(),
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
        }
    }
}

impl SemiSupGrid {
    /// Grid points in declaration order: methods, then kernels (kNN before
    /// RBF), then clamping factors. Kernel and clamping factor only vary
    /// where the method uses them.
    pub fn candidates(&self) -> Vec<SemiSupConfig> {
        let kernels: Vec<Kernel> = self
            .knn_neighbors
            .iter()
            .map(|&n| Kernel::Knn { n_neighbors: n })
            .chain(self.rbf_gamma_scale.iter().map(|&s| Kernel::Rbf {
                gamma: Gamma::MedianScaled(s),
            }))
            .collect();
        let base = |method, kernel, alpha| SemiSupConfig {
            method,
            kernel,
            alpha,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
        };
        let first_alpha = self.alpha.first().copied().unwrap_or(0.2);
        let mut out = Vec::new();
        for &method in &self.methods {
            match method {
                Method::Kmeans => out.push(base(method, Kernel::Knn { n_neighbors: 1 }, first_alpha)),
                Method::Propagation => {
                    out.extend(kernels.iter().map(|&k| base(method, k, first_alpha)))
                }
                Method::Spreading => {
                    for &k in &kernels {
                        out.extend(self.alpha.iter().map(|&a| base(method, k, a)));
                    }
                }
            }
        }
        out
    }
}

/// Outcome of the validation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub labels: PseudoLabeledSet,
    pub config: SemiSupConfig,
    pub validation_accuracy: f64,
}

/// For each grid point: pseudo-label, augment, fit the frozen classifier and
/// score on `validation`. Returns the best point (first in grid order on
/// ties). Failing grid points are skipped with a warning.
pub fn best_semisup(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    validation: &LabeledDataset,
    learner: &dyn Learner,
    grid: &[SemiSupConfig],
) -> Result<Selection> {
    if grid.is_empty() {
        return Err(Error::Config("empty semi-supervised grid".into()));
    }
    let mut best: Option<Selection> = None;
    let mut last_err = None;
    for config in grid {
        let attempt = pseudo_label(labeled, unlabeled, config).and_then(|labels| {
            let augmented = labeled.concat(&labels.rows)?;
            let acc = accuracy(learner.fit(&augmented)?.as_ref(), validation)?;
            Ok((labels, acc))
        });
        match attempt {
            Ok((labels, acc)) => {
                if best.as_ref().is_none_or(|b| acc > b.validation_accuracy) {
                    best = Some(Selection {
                        labels,
                        config: *config,
                        validation_accuracy: acc,
                    });
                }
            }
            Err(e) => {
                log::warn!("semi-supervised grid point {config:?} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.expect("at least one grid point ran"))
}

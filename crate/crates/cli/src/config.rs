//! The run configuration file.
//!
//! One TOML document describes datasets, classifier grids, the protocol
//! shared by all processes and the task list. Unknown keys are rejected and
//! every task is validated before any computation starts.
//!
//! All randomness flows from the root `seed`: dataset and task seeds are
//! derived from it and from their names, so renaming a task changes its
//! draws while adding or removing other tasks does not.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eicp_core::classify::{ClassifierConfig, ClassifierKind};
use eicp_core::data::{PartitionSizes, SyntheticSpec};
use eicp_core::experiment::grid::{self, dataset_seed, task_seed};
use eicp_core::experiment::{Protocol, Scenario, TaskSpec, DEFAULT_REPEATS};

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every random draw.
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
    #[serde(default)]
    pub protocol: Protocol,
    pub datasets: Vec<DatasetConfig>,
    pub classifiers: Vec<ClassifierGrid>,
    pub tasks: Vec<TaskConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}
fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// Generator settings. The seed is derived from the root seed; `seed`
    /// must be absent or 0.
    pub spec: SyntheticSpec,
}

/// Candidate hyperparameters of one classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierGrid {
    Lda {
        shrinkage: Vec<f64>,
        #[serde(default)]
        standardize: bool,
    },
    Svm {
        c: Vec<f64>,
        #[serde(default)]
        standardize: bool,
    },
    Knn {
        k: Vec<usize>,
        #[serde(default)]
        standardize: bool,
    },
}

impl ClassifierGrid {
    pub fn family(&self) -> &'static str {
        match self {
            ClassifierGrid::Lda { .. } => "lda",
            ClassifierGrid::Svm { .. } => "svm",
            ClassifierGrid::Knn { .. } => "knn",
        }
    }

    pub fn configs(&self) -> Vec<ClassifierConfig> {
        let with = |kind, standardize| ClassifierConfig { kind, standardize };
        match self {
            ClassifierGrid::Lda { shrinkage, standardize } => shrinkage
                .iter()
                .map(|&shrinkage| with(ClassifierKind::Lda { shrinkage }, *standardize))
                .collect(),
            ClassifierGrid::Svm { c, standardize } => c
                .iter()
                .map(|&c| with(ClassifierKind::Svm { c }, *standardize))
                .collect(),
            ClassifierGrid::Knn { k, standardize } => k
                .iter()
                .map(|&k| with(ClassifierKind::Knn { k }, *standardize))
                .collect(),
        }
    }
}

/// One scenario on one dataset, run once per listed classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub dataset: String,
    pub scenario: Scenario,
    pub sizes: PartitionSizes,
    /// Families to run; all configured families when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<Vec<String>>,
}

/// A configuration problem, reported before any computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl Default for RunConfig {
    /// The standard grid: two datasets, nine scenarios each, LDA and SVM.
    fn default() -> Self {
        let grids = [grid::dataset1(0), grid::dataset2(0)];
        Self {
            seed: DEFAULT_SEED,
            out: default_out(),
            n_repeats: DEFAULT_REPEATS,
            protocol: Protocol::default(),
            datasets: grids
                .iter()
                .map(|d| DatasetConfig {
                    name: d.name.clone(),
                    spec: d.spec.clone(),
                })
                .collect(),
            classifiers: vec![
                ClassifierGrid::Lda {
                    shrinkage: grid::LDA_SHRINKAGE.to_vec(),
                    standardize: false,
                },
                ClassifierGrid::Svm {
                    c: grid::SVM_C.to_vec(),
                    standardize: false,
                },
            ],
            tasks: grids
                .iter()
                .flat_map(|d| {
                    d.scenarios.iter().map(|&(scenario, sizes)| TaskConfig {
                        dataset: d.name.clone(),
                        scenario,
                        sizes,
                        classifiers: None,
                    })
                })
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Dataset specs with their derived seeds, in configuration order.
    pub fn dataset_specs(&self) -> Vec<(String, SyntheticSpec)> {
        self.datasets
            .iter()
            .map(|d| {
                let spec = SyntheticSpec {
                    seed: dataset_seed(self.seed, &d.name),
                    ..d.spec.clone()
                };
                (d.name.clone(), spec)
            })
            .collect()
    }

    /// Expands the task list into one validated task per (entry, family),
    /// named `<dataset>-<scenario>-<family>`.
    pub fn expand(&self) -> Result<Vec<TaskSpec>, ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.tasks.is_empty() {
            return fail("no tasks configured".into());
        }
        if self.n_repeats < 2 {
            return fail(format!("n_repeats must be >= 2, got {}", self.n_repeats));
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            let plain = |c: char| c.is_ascii_alphanumeric() || "_.-".contains(c);
            if d.name.is_empty() || !d.name.chars().all(plain) {
                return fail(format!(
                    "dataset name {:?} must be non-empty and use only letters, digits, `_`, `.` or `-`",
                    d.name
                ));
            }
            if d.spec.seed != 0 {
                return fail(format!(
                    "dataset {}: remove `seed`; dataset seeds derive from the root seed",
                    d.name
                ));
            }
            if !names.insert(d.name.as_str()) {
                return fail(format!("dataset {} is defined twice", d.name));
            }
        }
        let mut families = BTreeSet::new();
        for c in &self.classifiers {
            if !families.insert(c.family()) {
                return fail(format!("classifier family {} is defined twice", c.family()));
            }
        }
        let specs = self.dataset_specs();
        let mut tasks: Vec<TaskSpec> = Vec::new();
        for (i, t) in self.tasks.iter().enumerate() {
            let Some((_, spec)) = specs.iter().find(|(n, _)| *n == t.dataset) else {
                return fail(format!("task {}: unknown dataset {:?}", i + 1, t.dataset));
            };
            let grids: Vec<&ClassifierGrid> = match &t.classifiers {
                None => self.classifiers.iter().collect(),
                Some(list) => {
                    let mut out = Vec::new();
                    for f in list {
                        match self.classifiers.iter().find(|c| c.family() == f) {
                            Some(c) => out.push(c),
                            None => {
                                return fail(format!("task {}: unknown classifier {f:?}", i + 1))
                            }
                        }
                    }
                    out
                }
            };
            if grids.is_empty() {
                return fail(format!("task {}: no classifiers", i + 1));
            }
            for g in grids {
                let name = format!("{}-{}-{}", t.dataset, t.scenario.label(), g.family());
                if tasks.iter().any(|u| u.name == name) {
                    return fail(format!("task {name} is defined twice"));
                }
                let task = TaskSpec {
                    seed: task_seed(self.seed, &name),
                    name,
                    dataset: spec.clone(),
                    scenario: t.scenario,
                    sizes: t.sizes,
                    classifiers: g.configs(),
                    n_repeats: self.n_repeats,
                    protocol: self.protocol.clone(),
                };
                task.validate().map_err(|e| ConfigError(e.to_string()))?;
                tasks.push(task);
            }
        }
        Ok(tasks)
    }
}

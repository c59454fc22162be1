//! The standard evaluation grid: two synthetic datasets, nine scenarios
//! each and two classifier families.
//!
//! Dataset 1 has twelve classes of fifty samples, dataset 2 three classes of
//! 160. Each gets three training/active ratios without noise, then Gaussian
//! noise and translational shift at `c ∈ {0.01, 0.03, 0.05}` on the middle
//! ratio. Validation and test sets keep a fixed size throughout.

use serde::{Deserialize, Serialize};

use super::{Protocol, Scenario, TaskSpec};
use crate::classify::{ClassifierConfig, ClassifierKind};
use crate::data::{PartitionSizes, SyntheticSpec};
use crate::seed::{self, STREAM_DATASET, STREAM_TASK};

pub const NOISE_LEVELS: [f64; 3] = [0.01, 0.03, 0.05];
pub const LDA_SHRINKAGE: [f64; 2] = [1e-3, 0.1];
pub const SVM_C: [f64; 3] = [0.1, 1.0, 10.0];

/// A dataset together with its scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetGrid {
    pub name: String,
    pub spec: SyntheticSpec,
    pub scenarios: Vec<(Scenario, PartitionSizes)>,
}

fn scenarios(ratios: [(f64, PartitionSizes); 3]) -> Vec<(Scenario, PartitionSizes)> {
    let mid = ratios[1].1;
    let mut out: Vec<_> = ratios
        .iter()
        .map(|&(value, sizes)| (Scenario::Ratio { value }, sizes))
        .collect();
    out.extend(NOISE_LEVELS.map(|c| (Scenario::Gaussian { c }, mid)));
    out.extend(NOISE_LEVELS.map(|c| (Scenario::Shift { c }, mid)));
    out
}

/// Twelve classes in four well-separated groups of three close classes.
pub fn dataset1(seed: u64) -> DatasetGrid {
    DatasetGrid {
        name: "d1".into(),
        spec: SyntheticSpec {
            n_classes: 12,
            samples_per_class: 50,
            separation: 0.27,
            n_groups: 4,
            group_spread: 20.0,
            seed,
            ..SyntheticSpec::default()
        },
        scenarios: scenarios([
            (0.2, PartitionSizes::new(60, 120, 120, 300)),
            (0.5, PartitionSizes::new(120, 120, 120, 240)),
            (2.0, PartitionSizes::new(240, 120, 120, 120)),
        ]),
    }
}

/// Three classes of 160 samples sharing a strong common-mode response, which
/// dominates the feature spread.
pub fn dataset2(seed: u64) -> DatasetGrid {
    DatasetGrid {
        name: "d2".into(),
        spec: SyntheticSpec {
            n_classes: 3,
            samples_per_class: 160,
            separation: 0.22,
            factor_scale: 20.0,
            seed,
            ..SyntheticSpec::default()
        },
        scenarios: scenarios([
            (0.25, PartitionSizes::new(60, 90, 90, 240)),
            (0.66, PartitionSizes::new(120, 90, 90, 180)),
            (4.0, PartitionSizes::new(240, 90, 90, 60)),
        ]),
    }
}

/// Seed of the dataset called `name` under root seed `root`.
pub fn dataset_seed(root: u64, name: &str) -> u64 {
    seed::derive(root, &[STREAM_DATASET, name_key(name)])
}

/// Seed of the task called `name` under root seed `root`.
pub fn task_seed(root: u64, name: &str) -> u64 {
    seed::derive(root, &[STREAM_TASK, name_key(name)])
}

/// Both datasets with seeds derived from `root`.
pub fn standard_datasets(root: u64) -> Vec<DatasetGrid> {
    vec![dataset1(dataset_seed(root, "d1")), dataset2(dataset_seed(root, "d2"))]
}

pub fn lda_grid() -> Vec<ClassifierConfig> {
    LDA_SHRINKAGE
        .iter()
        .map(|&shrinkage| ClassifierConfig {
            kind: ClassifierKind::Lda { shrinkage },
            standardize: false,
        })
        .collect()
}

pub fn svm_grid() -> Vec<ClassifierConfig> {
    SVM_C.iter().map(|&c| ClassifierConfig::svm(c)).collect()
}

/// One task per scenario of `dataset` and per classifier grid, named
/// `<dataset>-<scenario>-<family>`, scenario-major. Task seeds depend only on
/// `root` and the task name, so adding or removing tasks leaves the others
/// unchanged.
pub fn tasks_for(
    dataset: &DatasetGrid,
    classifiers: &[(String, Vec<ClassifierConfig>)],
    n_repeats: usize,
    root: u64,
    protocol: &Protocol,
) -> Vec<TaskSpec> {
    let mut tasks = Vec::new();
    for &(scenario, sizes) in &dataset.scenarios {
        for (family, grid) in classifiers {
            let name = format!("{}-{}-{family}", dataset.name, scenario.label());
            tasks.push(TaskSpec {
                seed: task_seed(root, &name),
                name,
                dataset: dataset.spec.clone(),
                scenario,
                sizes,
                classifiers: grid.clone(),
                n_repeats,
                protocol: protocol.clone(),
            });
        }
    }
    tasks
}

/// FNV-1a of `name`: a stable integer key for seed derivation.
pub fn name_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// The LDA and SVM grids under their family names.
pub fn standard_classifiers() -> Vec<(String, Vec<ClassifierConfig>)> {
    vec![("lda".into(), lda_grid()), ("svm".into(), svm_grid())]
}

/// The full 36-task grid: 2 datasets x 9 scenarios x 2 classifiers.
pub fn standard_tasks(root: u64, n_repeats: usize) -> Vec<TaskSpec> {
    let classifiers = standard_classifiers();
    standard_datasets(root)
        .iter()
        .flat_map(|d| tasks_for(d, &classifiers, n_repeats, root, &Protocol::default()))
        .collect()
}

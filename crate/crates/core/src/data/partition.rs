//! Four-way random split into training, validation, test and active sets.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub active: usize,
}

impl PartitionSizes {
    pub fn new(train: usize, validation: usize, test: usize, active: usize) -> Self {
        Self {
            train,
            validation,
            test,
            active,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test + self.active
    }

    /// Training-to-active size ratio.
    pub fn ratio(&self) -> f64 {
        self.train as f64 / self.active as f64
    }

    fn as_array(&self) -> [usize; 4] {
        [self.train, self.validation, self.test, self.active]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub sizes: PartitionSizes,
    pub stratified: bool,
    pub seed: u64,
}

/// Row indices into the source dataset for each split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub active: Vec<usize>,
}

/// True labels of the active set. Kept apart from the active rows, which
/// carry no labels; only post-hoc analysis should look at these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldOutLabels(Vec<usize>);

impl HeldOutLabels {
    pub fn reveal(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub training: LabeledDataset,
    pub validation: LabeledDataset,
    /// Labels are present for scoring only.
    pub test: LabeledDataset,
    /// Unlabelled on-site rows.
    pub active: LabeledDataset,
    pub indices: PartitionIndices,
    pub held_out: HeldOutLabels,
}

impl Partition {
    /// Builds a partition from explicit parts. The active rows are stripped
    /// of their labels.
    pub fn from_parts(
        training: LabeledDataset,
        validation: LabeledDataset,
        test: LabeledDataset,
        active_with_truth: LabeledDataset,
    ) -> Result<Self> {
        for (name, set) in [
            ("training", &training),
            ("validation", &validation),
            ("test", &test),
            ("active", &active_with_truth),
        ] {
            if !set.is_fully_labeled() {
                return Err(Error::Input(format!("{name} set has unlabelled rows")));
            }
        }
        let truth = active_with_truth.known_labels()?;
        let offsets = [training.len(), validation.len(), test.len(), truth.len()];
        let mut start = 0;
        let mut ranges = offsets.iter().map(|&n| {
            let r: Vec<usize> = (start..start + n).collect();
            start += n;
            r
        });
        let indices = PartitionIndices {
            train: ranges.next().unwrap(),
            validation: ranges.next().unwrap(),
            test: ranges.next().unwrap(),
            active: ranges.next().unwrap(),
        };
        Ok(Self {
            training,
            validation,
            test,
            active: active_with_truth.without_labels(),
            indices,
            held_out: HeldOutLabels(truth),
        })
    }

    /// Replaces the on-site sets (validation, test, active) keeping labels
    /// and held-out truth.
    pub(crate) fn with_on_site(
        &self,
        validation: LabeledDataset,
        test: LabeledDataset,
        active: LabeledDataset,
    ) -> Self {
        Self {
            training: self.training.clone(),
            validation,
            test,
            active,
            indices: self.indices.clone(),
            held_out: self.held_out.clone(),
        }
    }
}

fn validate(dataset: &LabeledDataset, spec: &PartitionSpec) -> Result<()> {
    let sizes = spec.sizes.as_array();
    if sizes.contains(&0) {
        return Err(Error::Config(format!(
            "every split size must be positive, got {:?}",
            spec.sizes
        )));
    }
    if spec.sizes.total() > dataset.len() {
        return Err(Error::Config(format!(
            "split sizes sum to {} but the dataset has {} rows",
            spec.sizes.total(),
            dataset.len()
        )));
    }
    if !dataset.is_fully_labeled() {
        return Err(Error::Config("cannot partition a dataset with unlabelled rows".into()));
    }
    if spec.stratified {
        let k = dataset.n_classes();
        if let Some(s) = sizes.iter().find(|&&s| s % k != 0) {
            return Err(Error::Config(format!(
                "stratified split size {s} is not divisible by {k} classes"
            )));
        }
        let need = spec.sizes.total() / k;
        if let Some((c, &have)) = dataset
            .class_counts()
            .iter()
            .enumerate()
            .find(|(_, &n)| n < need)
        {
            return Err(Error::Config(format!(
                "class {c} has {have} rows, stratified split needs {need}"
            )));
        }
    }
    Ok(())
}

/// Splits `dataset` into disjoint training, validation, test and active sets.
pub fn partition(dataset: &LabeledDataset, spec: &PartitionSpec) -> Result<Partition> {
    validate(dataset, spec)?;
    let mut rng = seed::rng(spec.seed);
    let sizes = spec.sizes.as_array();
    let mut splits: [Vec<usize>; 4] = Default::default();

    if spec.stratified {
        let k = dataset.n_classes();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, l) in dataset.labels().iter().enumerate() {
            by_class[l.expect("validated")].push(i);
        }
        for members in &mut by_class {
            members.shuffle(&mut rng);
            let mut cursor = 0;
            for (split, &size) in splits.iter_mut().zip(&sizes) {
                let per_class = size / k;
                split.extend_from_slice(&members[cursor..cursor + per_class]);
                cursor += per_class;
            }
        }
        for split in &mut splits {
            split.shuffle(&mut rng);
        }
    } else {
        let mut all: Vec<usize> = (0..dataset.len()).collect();
        all.shuffle(&mut rng);
        let mut cursor = 0;
        for (split, &size) in splits.iter_mut().zip(&sizes) {
            split.extend_from_slice(&all[cursor..cursor + size]);
            cursor += size;
        }
    }

    let [train, validation, test, active] = splits;
    let active_set = dataset.select(&active);
    let truth = active_set.known_labels()?;
    Ok(Partition {
        training: dataset.select(&train),
        validation: dataset.select(&validation),
        test: dataset.select(&test),
        active: active_set.without_labels(),
        indices: PartitionIndices {
            train,
            validation,
            test,
            active,
        },
        held_out: HeldOutLabels(truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use std::collections::HashSet;

    fn dataset(classes: usize, per_class: usize) -> LabeledDataset {
        generate_synthetic(&SyntheticSpec {
            n_classes: classes,
            samples_per_class: per_class,
            n_features: 4,
            ..SyntheticSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn paper_sizes_and_ratios() {
        let d = dataset(12, 50);
        let spec = PartitionSpec {
            sizes: PartitionSizes::new(120, 120, 120, 240),
            stratified: true,
            seed: 1,
        };
        let p = partition(&d, &spec).unwrap();
        assert_eq!(p.training.len(), 120);
        assert_eq!(p.active.len(), 240);
        assert_eq!(spec.sizes.ratio(), 0.5);
        assert!(p.active.labels().iter().all(Option::is_none));

        let d2 = dataset(3, 160);
        let sizes = PartitionSizes::new(120, 90, 90, 180);
        let p2 = partition(&d2, &PartitionSpec { sizes, stratified: true, seed: 2 }).unwrap();
        assert_eq!(p2.validation.len(), 90);
        assert!((sizes.ratio() - 0.6667).abs() < 1e-3);
    }

    #[test]
    fn disjoint_over_many_seeds() {
        let d = dataset(12, 50);
        for seed in 0..100 {
            for stratified in [true, false] {
                let spec = PartitionSpec {
                    sizes: PartitionSizes::new(60, 120, 120, 300),
                    stratified,
                    seed,
                };
                let p = partition(&d, &spec).unwrap();
                let ix = &p.indices;
                let all: Vec<usize> = [&ix.train, &ix.validation, &ix.test, &ix.active]
                    .into_iter()
                    .flatten()
                    .copied()
                    .collect();
                let unique: HashSet<usize> = all.iter().copied().collect();
                assert_eq!(all.len(), 600);
                assert_eq!(unique.len(), 600);
                if stratified {
                    assert!(p.training.class_counts().iter().all(|&c| c == 5));
                    assert!(p.test.class_counts().iter().all(|&c| c == 10));
                }
            }
        }
    }

    #[test]
    fn held_out_matches_source() {
        let d = dataset(3, 20);
        let spec = PartitionSpec {
            sizes: PartitionSizes::new(6, 6, 6, 12),
            stratified: true,
            seed: 5,
        };
        let p = partition(&d, &spec).unwrap();
        for (k, &i) in p.indices.active.iter().enumerate() {
            assert_eq!(Some(p.held_out.reveal()[k]), d.label(i));
            assert_eq!(p.active.row(k), d.row(i));
        }
        assert_eq!(p, partition(&d, &spec).unwrap());
    }

    #[test]
    fn rejects_bad_sizes() {
        let d = dataset(3, 10);
        let too_big = PartitionSpec {
            sizes: PartitionSizes::new(9, 9, 9, 9),
            stratified: false,
            seed: 0,
        };
        assert!(matches!(partition(&d, &too_big), Err(Error::Config(_))));
        let indivisible = PartitionSpec {
            sizes: PartitionSizes::new(4, 3, 3, 3),
            stratified: true,
            seed: 0,
        };
        assert!(matches!(partition(&d, &indivisible), Err(Error::Config(_))));
        let zero = PartitionSpec {
            sizes: PartitionSizes::new(0, 3, 3, 3),
            stratified: false,
            seed: 0,
        };
        assert!(partition(&d, &zero).is_err());
    }
}

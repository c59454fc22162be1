//! The six augmentation processes.
//!
//! Every process consumes the same [`Partition`] and a frozen classifier
//! ([`Learner`]) and returns a [`StrategyResult`]:
//!
//! * P1 — supervised baseline, no augmentation;
//! * P2 — noise clones of training rows, as many as there are active rows;
//! * P3 — semi-supervised pseudo-labels for the whole active set;
//! * P4 — batch-wise self-training with the classifier's labels;
//! * P5 — batch-wise self-training with conformally filtered kNN labels;
//! * P6 — P5's filter, restricted to rows where classifier and conformal
//!   labels agree.
//!
//! Active ground truth is never read here; rows from the validation and test
//! sets never enter a training set.

mod online;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, Learner, Predictor};
use crate::conformal::ConformalConfig;
use crate::data::{feature_sd, perturb_rows, LabeledDataset, NoiseKind, Partition};
use crate::error::{Error, Result};
use crate::seed;
use crate::semisup::{best_semisup, SemiSupConfig};

pub use online::{
    p4_classifier_online, p5_icp_online, p5_tuned, p6_eicp_online, BatchSchedule, EicpMode,
    DEFAULT_BATCHES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Process {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl Process {
    pub const ALL: [Process; 6] = [
        Process::P1,
        Process::P2,
        Process::P3,
        Process::P4,
        Process::P5,
        Process::P6,
    ];

    /// Position in [`Process::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Process::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Config(format!("unknown process {s:?}, expected P1..P6")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    NoiseClone,
    PseudoLabel,
}

/// One row added to the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Addition {
    pub source: Source,
    /// Training row a clone was derived from.
    pub training_row: Option<usize>,
    /// Active row a pseudo-label was assigned to.
    pub active_row: Option<usize>,
    pub label: usize,
    pub batch: Option<usize>,
    /// Noise coefficient of a clone.
    pub c: Option<f64>,
    /// The row's label came from, or was confirmed by, the classifier.
    pub by_classifier: bool,
    /// The row passed the conformal filter.
    pub by_conformal: bool,
}

/// Per-batch bookkeeping of the online processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub index: usize,
    pub size: usize,
    /// Rows passing the conformal filter (P5, P6).
    pub passed_filter: Option<usize>,
    pub added: usize,
    /// Test accuracy of the classifier refitted after this batch.
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub process: Process,
    pub accuracy: f64,
    pub validation_accuracy: f64,
    pub training_size: usize,
    pub additions: Vec<Addition>,
    pub batches: Vec<BatchRecord>,
    pub conformal: Option<ConformalConfig>,
    pub semisup: Option<SemiSupConfig>,
}

impl StrategyResult {
    /// Labels assigned to active rows, as `(active_row, label)`.
    pub fn pseudo_labels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.additions
            .iter()
            .filter_map(|a| a.active_row.map(|r| (r, a.label)))
    }
}

/// Final fit on `train` scored on the partition's test and validation sets.
fn finish(
    process: Process,
    partition: &Partition,
    learner: &dyn Learner,
    train: &LabeledDataset,
    additions: Vec<Addition>,
) -> Result<(StrategyResult, Box<dyn Predictor>)> {
    let model = learner.fit(train)?;
    let result = StrategyResult {
        process,
        accuracy: accuracy(model.as_ref(), &partition.test)?,
        validation_accuracy: accuracy(model.as_ref(), &partition.validation)?,
        training_size: train.len(),
        additions,
        batches: Vec::new(),
        conformal: None,
        semisup: None,
    };
    Ok((result, model))
}

/// Training rows plus pseudo-labelled active rows.
fn augment(
    train: &LabeledDataset,
    active: &LabeledDataset,
    rows: &[(usize, usize)],
) -> Result<LabeledDataset> {
    let mut out = train.clone();
    out.push_rows(rows.iter().map(|&(r, label)| (active.row(r), label)))?;
    Ok(out)
}

/// Supervised baseline.
pub fn p1_supervised(partition: &Partition, learner: &dyn Learner) -> Result<StrategyResult> {
    Ok(finish(Process::P1, partition, learner, &partition.training, Vec::new())?.0)
}

pub const DEFAULT_CLONE_SCALES: [f64; 2] = [0.05, 0.1];

/// Gaussian noise clones of the training rows, as many as there are active
/// rows. Clone `i` copies training row `i mod n` and uses coefficient
/// `c_values[i mod len]`; the feature SDs come from the training set.
pub fn p2_noise_augment(
    partition: &Partition,
    learner: &dyn Learner,
    c_values: &[f64],
    seed: u64,
) -> Result<StrategyResult> {
    if c_values.is_empty() || c_values.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Config(format!(
            "clone noise coefficients must be non-empty, finite and >= 0, got {c_values:?}"
        )));
    }
    let train = &partition.training;
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let labels = train.known_labels()?;
    let n_clones = partition.active.len();
    let sources: Vec<usize> = (0..n_clones).map(|i| i % train.len()).collect();
    let cs: Vec<f64> = (0..n_clones).map(|i| c_values[i % c_values.len()]).collect();

    let mut clones = train.select(&sources).features().to_owned();
    let sd = feature_sd(&train.features().to_owned());
    let mut rng = seed::rng(seed);
    perturb_rows(&mut clones, &sd, NoiseKind::Gaussian, &cs, &mut rng);

    let mut augmented = train.clone();
    augmented.push_rows(
        clones
            .rows()
            .into_iter()
            .zip(&sources)
            .map(|(row, &s)| (row.to_slice().expect("standard layout"), labels[s])),
    )?;
    let additions = sources
        .iter()
        .zip(&cs)
        .map(|(&s, &c)| Addition {
            source: Source::NoiseClone,
            training_row: Some(s),
            active_row: None,
            label: labels[s],
            batch: None,
            c: Some(c),
            by_classifier: false,
            by_conformal: false,
        })
        .collect();
    Ok(finish(Process::P2, partition, learner, &augmented, additions)?.0)
}

/// Pseudo-labels the whole active set with the semi-supervised grid point
/// that scores best on the validation set.
pub fn p3_semisup(
    partition: &Partition,
    learner: &dyn Learner,
    grid: &[SemiSupConfig],
) -> Result<StrategyResult> {
    if partition.active.is_empty() {
        let mut r = finish(Process::P3, partition, learner, &partition.training, Vec::new())?.0;
        r.semisup = grid.first().copied();
        return Ok(r);
    }
    let selection = best_semisup(
        &partition.training,
        &partition.active,
        &partition.validation,
        learner,
        grid,
    )?;
    let rows: Vec<(usize, usize)> = selection.labels.labels.iter().copied().enumerate().collect();
    let augmented = augment(&partition.training, &partition.active, &rows)?;
    let additions = rows
        .iter()
        .map(|&(r, label)| Addition {
            source: Source::PseudoLabel,
            training_row: None,
            active_row: Some(r),
            label,
            batch: None,
            c: None,
            by_classifier: false,
            by_conformal: false,
        })
        .collect();
    let mut r = finish(Process::P3, partition, learner, &augmented, additions)?.0;
    r.semisup = Some(selection.config);
    Ok(r)
}

#[cfg(test)]
pub(crate) mod test_support {
    use std::collections::HashMap;
    use std::sync::Arc;

    use ndarray::ArrayView2;

    use crate::classify::test_support::clusters;
    use crate::classify::{Learner, Predictor};
    use crate::data::{LabeledDataset, Partition};
    use crate::error::{Error, Result};

    fn key(row: &[f64]) -> Vec<u64> {
        row.iter().map(|v| v.to_bits()).collect()
    }

    /// Knows the true label of every row it was built from; `shift` rotates
    /// the answers so that every prediction is wrong.
    #[derive(Clone)]
    pub struct OracleLearner {
        table: Arc<HashMap<Vec<u64>, usize>>,
        n_classes: usize,
        shift: usize,
    }

    impl OracleLearner {
        pub fn new(sets: &[&LabeledDataset]) -> Self {
            let mut table = HashMap::new();
            for set in sets {
                for (row, label) in set.rows().zip(set.labels()) {
                    table.insert(key(row), label.expect("labelled rows"));
                }
            }
            Self {
                table: Arc::new(table),
                n_classes: sets[0].n_classes(),
                shift: 0,
            }
        }

        pub fn wrong(mut self) -> Self {
            self.shift = 1;
            self
        }
    }

    impl Learner for OracleLearner {
        fn fit(&self, _: &LabeledDataset) -> Result<Box<dyn Predictor>> {
            Ok(Box::new(self.clone()))
        }
    }

    impl Predictor for OracleLearner {
        fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
            rows.rows()
                .into_iter()
                .map(|r| {
                    let r = r.to_vec();
                    self.table
                        .get(&key(&r))
                        .map(|&l| (l + self.shift) % self.n_classes)
                        .ok_or_else(|| Error::Input("row unknown to the oracle".into()))
                })
                .collect()
        }
    }

    /// Three tight, far-apart classes; the active set has 12 rows per class.
    pub fn separable(seed: u64) -> (Partition, LabeledDataset) {
        let means = [
            vec![0.0, 0.0, 0.0, 0.0],
            vec![10.0, 0.0, 0.0, 0.0],
            vec![0.0, 10.0, 0.0, 0.0],
        ];
        let set = |n, s| clusters(&means, n, 0.5, seed * 8 + s);
        let active = set(12, 3);
        let p = Partition::from_parts(set(6, 0), set(4, 1), set(10, 2), active.clone()).unwrap();
        (p, active)
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::{separable, OracleLearner};
    use super::*;
    use crate::classify::{fit, ClassifierConfig};
    use crate::data::Partition;
    use crate::semisup::SemiSupGrid;

    #[test]
    fn process_names_round_trip() {
        for p in Process::ALL {
            assert_eq!(p.to_string().parse::<Process>().unwrap(), p);
        }
        assert_eq!(" p6".parse::<Process>().unwrap(), Process::P6);
        assert!("P7".parse::<Process>().is_err());
    }

    #[test]
    fn p1_separable_is_perfect() {
        let (p, _) = separable(1);
        for cfg in [ClassifierConfig::lda(), ClassifierConfig::svm(1.0), ClassifierConfig::knn(1)] {
            let r = p1_supervised(&p, &cfg).unwrap();
            assert_eq!(r.accuracy, 1.0);
            assert!(r.additions.is_empty() && r.batches.is_empty());
            assert_eq!(r.training_size, p.training.len());
        }
    }

    #[test]
    fn p1_memorises_with_one_neighbour() {
        let (p, active) = separable(2);
        // overlapping classes, scored on the training set itself
        let noisy = crate::classify::test_support::clusters(&[vec![0.0, 0.0], vec![0.5, 0.0]], 15, 1.0, 3);
        let diag = Partition::from_parts(noisy.clone(), p.validation.clone(), noisy.clone(), active).unwrap();
        let diag = Partition {
            validation: noisy.clone(),
            ..diag
        };
        assert_eq!(p1_supervised(&diag, &ClassifierConfig::knn(1)).unwrap().accuracy, 1.0);
    }

    #[test]
    fn p2_clone_bookkeeping() {
        let (p, _) = separable(3);
        let r = p2_noise_augment(&p, &ClassifierConfig::lda(), &DEFAULT_CLONE_SCALES, 9).unwrap();
        assert_eq!(r.additions.len(), p.active.len());
        assert_eq!(r.training_size, p.training.len() + p.active.len());
        let labels = p.training.known_labels().unwrap();
        for (i, a) in r.additions.iter().enumerate() {
            assert_eq!(a.source, Source::NoiseClone);
            assert_eq!(a.training_row, Some(i % p.training.len()));
            assert_eq!(a.label, labels[a.training_row.unwrap()]);
            assert_eq!(a.c, Some(DEFAULT_CLONE_SCALES[i % 2]));
        }
        let again = p2_noise_augment(&p, &ClassifierConfig::lda(), &DEFAULT_CLONE_SCALES, 9).unwrap();
        assert_eq!(r, again);
        assert!(p2_noise_augment(&p, &ClassifierConfig::lda(), &[], 9).is_err());
        assert!(p2_noise_augment(&p, &ClassifierConfig::lda(), &[-0.1], 9).is_err());
    }

    #[test]
    fn p2_zero_noise_uniform_duplication_matches_p1() {
        // 18 training rows, 36 active rows: every training row cloned twice
        let (p, _) = separable(4);
        let p = Partition {
            active: p.active.select(&(0..2 * p.training.len()).collect::<Vec<_>>()),
            ..p
        };
        let cfg = ClassifierConfig::lda();
        let r1 = p1_supervised(&p, &cfg).unwrap();
        let r2 = p2_noise_augment(&p, &cfg, &[0.0], 1).unwrap();
        assert_eq!(r1.accuracy, r2.accuracy);

        let mut tripled = p.training.clone();
        for _ in 0..2 {
            tripled = tripled.concat(&p.training).unwrap();
        }
        let a = fit(&cfg, &p.training).unwrap();
        let b = fit(&cfg, &tripled).unwrap();
        let probe = crate::classify::test_support::clusters(
            &[vec![3.0, 3.0, 0.0, 0.0], vec![5.0, 4.0, 1.0, -1.0]],
            20,
            3.0,
            5,
        );
        assert_eq!(
            a.predict(probe.features()).unwrap(),
            b.predict(probe.features()).unwrap()
        );
    }

    #[test]
    fn p3_with_empty_active_equals_p1() {
        let (p, _) = separable(5);
        let p = Partition {
            active: p.active.select(&[]),
            ..p
        };
        let grid = SemiSupGrid::default().candidates();
        let cfg = ClassifierConfig::lda();
        let r3 = p3_semisup(&p, &cfg, &grid).unwrap();
        let r1 = p1_supervised(&p, &cfg).unwrap();
        assert_eq!((r3.accuracy, r3.training_size), (r1.accuracy, r1.training_size));
        assert!(r3.additions.is_empty());
    }

    #[test]
    fn p3_recovers_clean_clusters() {
        let (p, _) = separable(6);
        let cfg = ClassifierConfig::lda();
        let r = p3_semisup(&p, &cfg, &SemiSupGrid::default().candidates()).unwrap();
        assert!(r.accuracy >= p1_supervised(&p, &cfg).unwrap().accuracy);
        assert_eq!(r.additions.len(), p.active.len());
        assert!(r.additions.iter().all(|a| a.source == Source::PseudoLabel));
        let truth = p.held_out.reveal();
        for (row, label) in r.pseudo_labels() {
            assert_eq!(label, truth[row]);
        }
        assert!(r.semisup.is_some());
    }

    #[test]
    fn held_out_truth_is_never_consulted() {
        let (p, active) = separable(7);
        // same rows, scrambled ground truth
        let scrambled: Vec<usize> = active.known_labels().unwrap().iter().map(|l| (l + 1) % 3).collect();
        let liar = Partition::from_parts(
            p.training.clone(),
            p.validation.clone(),
            p.test.clone(),
            active.with_labels(scrambled.into_iter().map(Some).collect()).unwrap(),
        )
        .unwrap();
        assert_ne!(p.held_out, liar.held_out);
        let cfg = ClassifierConfig::lda();
        let conf = ConformalConfig::new(3, 0.05);
        let schedule = BatchSchedule::new(p.active.len(), 4, 1).unwrap();
        let grid = SemiSupGrid::default().candidates();
        let run = |q: &Partition| {
            vec![
                p1_supervised(q, &cfg).unwrap(),
                p2_noise_augment(q, &cfg, &DEFAULT_CLONE_SCALES, 2).unwrap(),
                p3_semisup(q, &cfg, &grid).unwrap(),
                p4_classifier_online(q, &cfg, &schedule).unwrap(),
                p5_icp_online(q, &cfg, &conf, &schedule).unwrap(),
                p6_eicp_online(q, &cfg, &conf, &schedule, EicpMode::Shared).unwrap(),
            ]
        };
        assert_eq!(run(&p), run(&liar));
    }

    #[test]
    fn validation_and_test_rows_never_train() {
        let (p, active) = separable(8);
        let oracle = OracleLearner::new(&[&p.training, &p.validation, &p.test, &active]);
        let schedule = BatchSchedule::new(p.active.len(), 4, 3).unwrap();
        let r = p4_classifier_online(&p, &oracle, &schedule).unwrap();
        assert_eq!(r.training_size, p.training.len() + p.active.len());
        assert!(r.additions.iter().all(|a| a.active_row.is_some()));
    }
}

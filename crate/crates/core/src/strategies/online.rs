//! Batch-wise self-training: P4, P5 and P6.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{augment, Addition, BatchRecord, Process, Source, StrategyResult};
use crate::classify::{accuracy, Learner, Predictor};
use crate::conformal::{ConformalConfig, ConformalPredictor};
use crate::data::{LabeledDataset, Partition};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_BATCHES: usize = 4;

/// Assignment of active rows to sequential batches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSchedule {
    batches: Vec<Vec<usize>>,
}

impl BatchSchedule {
    /// A seeded permutation of `0..n_rows` cut into `n_batches` contiguous
    /// chunks whose sizes differ by at most one (larger chunks first).
    pub fn new(n_rows: usize, n_batches: usize, seed: u64) -> Result<Self> {
        if n_batches == 0 {
            return Err(Error::Config("number of batches must be >= 1".into()));
        }
        let mut order: Vec<usize> = (0..n_rows).collect();
        order.shuffle(&mut seed::rng(seed));
        let (base, extra) = (n_rows / n_batches, n_rows % n_batches);
        let mut rest = order.as_slice();
        let batches = (0..n_batches)
            .map(|b| {
                let (head, tail) = rest.split_at(base + usize::from(b < extra));
                rest = tail;
                head.to_vec()
            })
            .collect();
        Ok(Self { batches })
    }

    /// Explicit batches; together they must cover `0..n_rows` exactly once.
    pub fn from_batches(batches: Vec<Vec<usize>>, n_rows: usize) -> Result<Self> {
        let mut seen = vec![false; n_rows];
        for &r in batches.iter().flatten() {
            if r >= n_rows || std::mem::replace(&mut seen[r], true) {
                return Err(Error::Config(format!(
                    "batches must partition 0..{n_rows}; row {r} is out of range or repeated"
                )));
            }
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("row {r} is in no batch")));
        }
        if batches.is_empty() {
            return Err(Error::Config("number of batches must be >= 1".into()));
        }
        Ok(Self { batches })
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn n_rows(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }
}

/// How P6 obtains the classifier and conformal predictions it intersects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EicpMode {
    /// Both predictions are made against P6's own evolving training set.
    #[default]
    Shared,
    /// P4 and P5 run as separate pipelines with their own training sets; P6
    /// adds the agreeing part of their per-batch outputs.
    Independent,
}

/// Outcome of one batch: rows to add with their labels and flags.
struct Step {
    rows: Vec<(usize, usize)>,
    passed_filter: Option<usize>,
    by_classifier: bool,
    by_conformal: bool,
}

/// Drives the batches: `step` sees the current training set, the classifier
/// fitted on it and the batch, and decides what to add. The classifier is
/// refitted after every batch that adds rows.
fn run_online(
    process: Process,
    partition: &Partition,
    learner: &dyn Learner,
    schedule: &BatchSchedule,
    mut step: impl FnMut(&LabeledDataset, &dyn Predictor, &[usize]) -> Result<Step>,
) -> Result<StrategyResult> {
    if schedule.n_rows() != partition.active.len() {
        return Err(Error::Config(format!(
            "schedule covers {} rows, active set has {}",
            schedule.n_rows(),
            partition.active.len()
        )));
    }
    let mut train = partition.training.clone();
    let mut model = learner.fit(&train)?;
    let mut test_accuracy = accuracy(model.as_ref(), &partition.test)?;
    let mut additions = Vec::new();
    let mut batches = Vec::with_capacity(schedule.n_batches());
    for (b, batch) in schedule.batches().iter().enumerate() {
        let s = step(&train, model.as_ref(), batch)?;
        if !s.rows.is_empty() {
            // Fitting is deterministic, so an unchanged set keeps its model.
            train = augment(&train, &partition.active, &s.rows)?;
            model = learner.fit(&train)?;
            test_accuracy = accuracy(model.as_ref(), &partition.test)?;
        }
        additions.extend(s.rows.iter().map(|&(r, label)| Addition {
            source: Source::PseudoLabel,
            training_row: None,
            active_row: Some(r),
            label,
            batch: Some(b),
            c: None,
            by_classifier: s.by_classifier,
            by_conformal: s.by_conformal,
        }));
        batches.push(BatchRecord {
            index: b,
            size: batch.len(),
            passed_filter: s.passed_filter,
            added: s.rows.len(),
            test_accuracy,
        });
    }
    Ok(StrategyResult {
        process,
        accuracy: test_accuracy,
        validation_accuracy: accuracy(model.as_ref(), &partition.validation)?,
        training_size: train.len(),
        additions,
        batches,
        conformal: None,
        semisup: None,
    })
}

fn classify_batch(model: &dyn Predictor, active: &LabeledDataset, batch: &[usize]) -> Result<Vec<usize>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    model.predict(active.select(batch).features())
}

/// Rows of `batch` passing the conformal filter against `train`, with their
/// top-p labels.
fn conformal_batch(
    train: &LabeledDataset,
    active: &LabeledDataset,
    batch: &[usize],
    config: &ConformalConfig,
) -> Result<Vec<(usize, usize)>> {
    let predictor = ConformalPredictor::lenient(train, *config)?;
    let mut accepted = Vec::new();
    for &r in batch {
        let p = predictor.p_values(active.row(r))?;
        if p.accepted(config) {
            accepted.push((r, p.predicted()));
        }
    }
    Ok(accepted)
}

/// Classifier self-training: every batch row is added with the label
/// predicted by the classifier fitted on the rows seen so far.
pub fn p4_classifier_online(
    partition: &Partition,
    learner: &dyn Learner,
    schedule: &BatchSchedule,
) -> Result<StrategyResult> {
    run_online(Process::P4, partition, learner, schedule, |_, model, batch| {
        let labels = classify_batch(model, &partition.active, batch)?;
        Ok(Step {
            rows: batch.iter().copied().zip(labels).collect(),
            passed_filter: None,
            by_classifier: true,
            by_conformal: false,
        })
    })
}

/// Conformal self-training: only batch rows passing the filter are added,
/// labelled with their top p-value. Rejected rows are dropped for good.
pub fn p5_icp_online(
    partition: &Partition,
    learner: &dyn Learner,
    config: &ConformalConfig,
    schedule: &BatchSchedule,
) -> Result<StrategyResult> {
    config.validate()?;
    let mut r = run_online(Process::P5, partition, learner, schedule, |train, _, batch| {
        let rows = conformal_batch(train, &partition.active, batch, config)?;
        Ok(Step {
            passed_filter: Some(rows.len()),
            rows,
            by_classifier: false,
            by_conformal: true,
        })
    })?;
    r.conformal = Some(*config);
    Ok(r)
}

/// The training set P5 ends with; needs no classifier.
fn p5_final_training(
    partition: &Partition,
    config: &ConformalConfig,
    schedule: &BatchSchedule,
) -> Result<LabeledDataset> {
    let mut train = partition.training.clone();
    for batch in schedule.batches() {
        let rows = conformal_batch(&train, &partition.active, batch, config)?;
        train = augment(&train, &partition.active, &rows)?;
    }
    Ok(train)
}

/// P5 with `(k, epsilon)` chosen by the validation accuracy of the final
/// classifier; the first candidate wins ties.
pub fn p5_tuned(
    partition: &Partition,
    learner: &dyn Learner,
    candidates: &[ConformalConfig],
    schedule: &BatchSchedule,
) -> Result<StrategyResult> {
    if candidates.is_empty() {
        return Err(Error::Config("empty conformal grid".into()));
    }
    if schedule.n_rows() != partition.active.len() {
        return Err(Error::Config(format!(
            "schedule covers {} rows, active set has {}",
            schedule.n_rows(),
            partition.active.len()
        )));
    }
    let mut best: Option<(f64, &ConformalConfig)> = None;
    // Candidates often end with the same training set; fitting is
    // deterministic, so their scores are shared.
    let mut scored: Vec<(LabeledDataset, f64)> = Vec::new();
    for config in candidates {
        config.validate()?;
        let train = p5_final_training(partition, config, schedule)?;
        let acc = match scored.iter().find(|(t, _)| *t == train) {
            Some(&(_, acc)) => acc,
            None => {
                let acc = accuracy(learner.fit(&train)?.as_ref(), &partition.validation)?;
                scored.push((train, acc));
                acc
            }
        };
        if best.is_none_or(|(b, _)| acc > b) {
            best = Some((acc, config));
        }
    }
    p5_icp_online(partition, learner, best.expect("non-empty grid").1, schedule)
}

/// Ensemble self-training: a batch row is added when it passes the
/// conformal filter and the classifier agrees with its top p-value label.
pub fn p6_eicp_online(
    partition: &Partition,
    learner: &dyn Learner,
    config: &ConformalConfig,
    schedule: &BatchSchedule,
    mode: EicpMode,
) -> Result<StrategyResult> {
    config.validate()?;
    let active = &partition.active;
    let mut r = match mode {
        EicpMode::Shared => run_online(Process::P6, partition, learner, schedule, |train, model, batch| {
            let labels = classify_batch(model, active, batch)?;
            let passed = conformal_batch(train, active, batch, config)?;
            Ok(Step {
                rows: agreeing(batch, &labels, &passed),
                passed_filter: Some(passed.len()),
                by_classifier: true,
                by_conformal: true,
            })
        })?,
        EicpMode::Independent => {
            let mut p4_train = partition.training.clone();
            let mut p4_model = learner.fit(&p4_train)?;
            let mut p5_train = partition.training.clone();
            run_online(Process::P6, partition, learner, schedule, |_, _, batch| {
                let labels = classify_batch(p4_model.as_ref(), active, batch)?;
                let passed = conformal_batch(&p5_train, active, batch, config)?;
                let rows = agreeing(batch, &labels, &passed);
                let p4_rows: Vec<(usize, usize)> = batch.iter().copied().zip(labels).collect();
                p4_train = augment(&p4_train, active, &p4_rows)?;
                p4_model = learner.fit(&p4_train)?;
                p5_train = augment(&p5_train, active, &passed)?;
                Ok(Step {
                    rows,
                    passed_filter: Some(passed.len()),
                    by_classifier: true,
                    by_conformal: true,
                })
            })?
        }
    };
    r.conformal = Some(*config);
    Ok(r)
}

/// Conformally accepted rows whose label matches the classifier's.
fn agreeing(batch: &[usize], labels: &[usize], passed: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let position = |r: usize| batch.iter().position(|&b| b == r).expect("row of the batch");
    passed
        .iter()
        .copied()
        .filter(|&(r, label)| labels[position(r)] == label)
        .collect()
}

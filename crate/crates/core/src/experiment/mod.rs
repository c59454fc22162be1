//! Repeated evaluation of the six processes on synthetic scenario grids.
//!
//! A task fixes a dataset, a scenario, a classifier family and the split
//! sizes. Each repeat draws a fresh partition from the task seed, applies the
//! scenario noise to the on-site sets (validation, test and active), tunes
//! the classifier on the validation set and runs every process on that same
//! partition. Accuracies are compared with the baseline P1 by a Wilcoxon
//! signed-rank test.

pub mod grid;
mod io;
mod table;
mod wilcoxon;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{tune, ClassifierConfig};
use crate::conformal::ConformalGrid;
use crate::data::{
    apply_noise, generate_synthetic, partition, LabeledDataset, NoiseKind, NoiseSpec, Partition,
    PartitionSizes, PartitionSpec, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::seed::{self, STREAM_AUGMENT, STREAM_NOISE, STREAM_PARTITION, STREAM_SCHEDULE};
use crate::semisup::SemiSupGrid;
use crate::strategies::{
    p1_supervised, p2_noise_augment, p3_semisup, p4_classifier_online, p5_tuned, p6_eicp_online,
    BatchSchedule, EicpMode, Process, StrategyResult, DEFAULT_BATCHES, DEFAULT_CLONE_SCALES,
};

pub use io::{read_results_csv, read_summary_json, results_csv, write_results_csv, write_summary_json};
pub use table::{
    summarize, ProcessStats, ResultsTable, SummaryReport, TaskSummary, Verdict, VerdictCounts,
    SIGNIFICANCE,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

/// Training inadequacy simulated by a task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Less training data: the nominal training/active size ratio.
    Ratio { value: f64 },
    /// Gaussian noise of level `c` on the on-site sets.
    Gaussian { c: f64 },
    /// Translational shift of level `c` on the on-site sets.
    Shift { c: f64 },
}

impl Scenario {
    pub fn noise(&self) -> Option<(NoiseKind, f64)> {
        match *self {
            Scenario::Ratio { .. } => None,
            Scenario::Gaussian { c } => Some((NoiseKind::Gaussian, c)),
            Scenario::Shift { c } => Some((NoiseKind::TranslationalShift, c)),
        }
    }

    /// Short label such as `ratio0.5` or `shift0.03`.
    pub fn label(&self) -> String {
        match *self {
            Scenario::Ratio { value } => format!("ratio{value}"),
            Scenario::Gaussian { c } => format!("gaussian{c}"),
            Scenario::Shift { c } => format!("shift{c}"),
        }
    }
}

/// Settings shared by all processes of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default = "default_clone_scales")]
    pub clone_scales: Vec<f64>,
    #[serde(default)]
    pub semisup: SemiSupGrid,
    #[serde(default)]
    pub conformal: ConformalGrid,
    #[serde(default)]
    pub eicp_mode: EicpMode,
}

fn default_true() -> bool {
    true
}
fn default_batches() -> usize {
    DEFAULT_BATCHES
}
fn default_clone_scales() -> Vec<f64> {
    DEFAULT_CLONE_SCALES.to_vec()
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            stratified: true,
            n_batches: DEFAULT_BATCHES,
            clone_scales: default_clone_scales(),
            semisup: SemiSupGrid::default(),
            conformal: ConformalGrid::default(),
            eicp_mode: EicpMode::Shared,
        }
    }
}

pub const DEFAULT_REPEATS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub dataset: SyntheticSpec,
    pub scenario: Scenario,
    pub sizes: PartitionSizes,
    /// Candidate hyperparameters of one classifier family, tuned per repeat.
    pub classifiers: Vec<ClassifierConfig>,
    pub n_repeats: usize,
    pub seed: u64,
    pub protocol: Protocol,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(format!("task {}: {m}", self.name)));
        self.dataset.validate()?;
        if self.n_repeats < 2 {
            return fail(format!("n_repeats must be >= 2, got {}", self.n_repeats));
        }
        let Some(first) = self.classifiers.first() else {
            return fail("empty classifier grid".into());
        };
        if self.classifiers.iter().any(|c| c.family() != first.family()) {
            return fail("classifier grid mixes families".into());
        }
        for c in &self.classifiers {
            c.validate()?;
        }
        let rows = self.dataset.n_classes * self.dataset.samples_per_class;
        if self.sizes.total() > rows {
            return fail(format!(
                "split sizes sum to {} but the dataset has {rows} rows",
                self.sizes.total()
            ));
        }
        match self.scenario {
            Scenario::Ratio { value } => {
                let actual = self.sizes.ratio();
                if value <= 0.0 || value.is_nan() || (actual - value).abs() > 0.02 * value {
                    return fail(format!(
                        "scenario ratio {value} does not match sizes (train/active = {actual:.4})"
                    ));
                }
            }
            Scenario::Gaussian { c } | Scenario::Shift { c } => {
                if !(c.is_finite() && c >= 0.0) {
                    return fail(format!("noise level must be finite and >= 0, got {c}"));
                }
            }
        }
        let p = &self.protocol;
        if p.n_batches == 0 {
            return fail("n_batches must be >= 1".into());
        }
        if p.clone_scales.is_empty() || p.clone_scales.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return fail(format!("invalid clone scales {:?}", p.clone_scales));
        }
        for c in p.conformal.candidates() {
            c.validate()?;
        }
        if p.conformal.candidates().is_empty() {
            return fail("empty conformal grid".into());
        }
        for c in p.semisup.candidates() {
            c.validate()?;
        }
        if p.semisup.candidates().is_empty() {
            return fail("empty semi-supervised grid".into());
        }
        Ok(())
    }
}

/// Everything a repeat runs on.
#[derive(Debug, Clone)]
pub struct RepeatSetup {
    pub repeat: usize,
    pub partition: Partition,
    pub schedule: BatchSchedule,
    /// The tuned, frozen classifier.
    pub classifier: ClassifierConfig,
    pub augment_seed: u64,
}

/// Draws the partition of repeat `r` and applies the scenario noise. The
/// noise SD is taken over the union of the on-site sets.
pub fn prepare_partition(task: &TaskSpec, dataset: &LabeledDataset, r: usize) -> Result<Partition> {
    let spec = PartitionSpec {
        sizes: task.sizes,
        stratified: task.protocol.stratified,
        seed: seed::derive(task.seed, &[STREAM_PARTITION, r as u64]),
    };
    let clean = partition(dataset, &spec)?;
    let Some((kind, c)) = task.scenario.noise() else {
        return Ok(clean);
    };
    let on_site = clean.validation.concat(&clean.test)?.concat(&clean.active)?;
    let noisy = apply_noise(
        &on_site,
        &NoiseSpec {
            kind,
            c,
            seed: seed::derive(task.seed, &[STREAM_NOISE, r as u64]),
        },
    )?;
    let (nv, nt) = (clean.validation.len(), clean.test.len());
    let range = |a: usize, b: usize| noisy.select(&(a..b).collect::<Vec<_>>());
    Ok(clean.with_on_site(
        range(0, nv),
        range(nv, nv + nt),
        range(nv + nt, noisy.len()),
    ))
}

pub fn prepare_repeat(task: &TaskSpec, dataset: &LabeledDataset, r: usize) -> Result<RepeatSetup> {
    let partition = prepare_partition(task, dataset, r)?;
    let classifier = tune(&task.classifiers, &partition.training, &partition.validation)?;
    let schedule = BatchSchedule::new(
        partition.active.len(),
        task.protocol.n_batches,
        seed::derive(task.seed, &[STREAM_SCHEDULE, r as u64]),
    )?;
    Ok(RepeatSetup {
        repeat: r,
        partition,
        schedule,
        classifier,
        augment_seed: seed::derive(task.seed, &[STREAM_AUGMENT, r as u64]),
    })
}

/// Runs P1..P6 on one prepared repeat, in that order. P6 reuses the
/// conformal configuration tuned by P5.
pub fn run_processes(task: &TaskSpec, setup: &RepeatSetup) -> Result<Vec<StrategyResult>> {
    let (p, clf, sched) = (&setup.partition, &setup.classifier, &setup.schedule);
    let proto = &task.protocol;
    let p5 = p5_tuned(p, clf, &proto.conformal.candidates(), sched)?;
    let conformal = p5.conformal.expect("P5 records its configuration");
    Ok(vec![
        p1_supervised(p, clf)?,
        p2_noise_augment(p, clf, &proto.clone_scales, setup.augment_seed)?,
        p3_semisup(p, clf, &proto.semisup.candidates())?,
        p4_classifier_online(p, clf, sched)?,
        p5,
        p6_eicp_online(p, clf, &conformal, sched, proto.eicp_mode)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub classifier: Option<ClassifierConfig>,
    /// P1..P6; empty when the repeat failed.
    pub results: Vec<StrategyResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub task: TaskSpec,
    pub repeats: Vec<RepeatOutcome>,
    pub table: ResultsTable,
}

fn run_repeat(task: &TaskSpec, dataset: &LabeledDataset, r: usize) -> RepeatOutcome {
    let mut classifier = None;
    let attempt = prepare_repeat(task, dataset, r).and_then(|setup| {
        classifier = Some(setup.classifier);
        run_processes(task, &setup)
    });
    match attempt {
        Ok(results) => RepeatOutcome {
            repeat: r,
            classifier,
            results,
            error: None,
        },
        Err(e) => {
            log::warn!("task {} repeat {r} failed: {e}", task.name);
            RepeatOutcome {
                repeat: r,
                classifier,
                results: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    }
}

/// Runs every repeat of `task`. Repeats run on the current rayon pool and
/// are assembled in repeat order, so the outcome does not depend on the
/// number of threads. A failing repeat is logged and marked invalid.
pub fn run_task(task: &TaskSpec) -> Result<TaskRun> {
    task.validate()?;
    let dataset = generate_synthetic(&task.dataset)?;
    let repeats: Vec<RepeatOutcome> = (0..task.n_repeats)
        .into_par_iter()
        .map(|r| run_repeat(task, &dataset, r))
        .collect();
    let mut table = ResultsTable::new(task.name.clone(), Process::ALL.to_vec())?;
    for outcome in &repeats {
        if outcome.error.is_some() {
            table.accuracy.push(None);
            continue;
        }
        table.accuracy.push(Some(outcome.results.iter().map(|s| s.accuracy).collect()));
        for s in outcome.results.iter().filter(|s| !s.batches.is_empty()) {
            table
                .added_per_batch
                .entry(s.process)
                .or_default()
                .push(s.batches.iter().map(|b| b.added).collect());
        }
    }
    Ok(TaskRun {
        task: task.clone(),
        repeats,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_task(scenario: Scenario) -> TaskSpec {
        TaskSpec {
            name: format!("small-{}", scenario.label()),
            dataset: SyntheticSpec {
                n_classes: 3,
                samples_per_class: 40,
                n_features: 8,
                seed: 5,
                ..SyntheticSpec::default()
            },
            scenario,
            sizes: PartitionSizes::new(12, 12, 12, 24),
            classifiers: vec![ClassifierConfig::lda()],
            n_repeats: 3,
            seed: 11,
            protocol: Protocol::default(),
        }
    }

    #[test]
    fn paper_split_of_600_rows() {
        let mut task = small_task(Scenario::Ratio { value: 0.5 });
        task.dataset = SyntheticSpec {
            n_classes: 12,
            samples_per_class: 50,
            seed: 1,
            ..SyntheticSpec::default()
        };
        task.sizes = PartitionSizes::new(120, 120, 120, 240);
        task.validate().unwrap();
        let data = generate_synthetic(&task.dataset).unwrap();
        let p = prepare_partition(&task, &data, 0).unwrap();
        let sizes = [p.training.len(), p.validation.len(), p.test.len(), p.active.len()];
        assert_eq!(sizes, [120, 120, 120, 240]);
    }

    #[test]
    fn noise_touches_only_on_site_sets() {
        let clean_task = small_task(Scenario::Ratio { value: 0.5 });
        let data = generate_synthetic(&clean_task.dataset).unwrap();
        let clean = prepare_partition(&clean_task, &data, 1).unwrap();
        for scenario in [Scenario::Gaussian { c: 0.05 }, Scenario::Shift { c: 0.05 }] {
            let noisy = prepare_partition(&small_task(scenario), &data, 1).unwrap();
            assert_eq!(noisy.training, clean.training);
            assert_eq!(noisy.held_out, clean.held_out);
            assert_eq!(noisy.validation.labels(), clean.validation.labels());
            assert_ne!(noisy.validation.features(), clean.validation.features());
            assert_ne!(noisy.test.features(), clean.test.features());
            assert_ne!(noisy.active.features(), clean.active.features());
            assert!(noisy.active.labels().iter().all(Option::is_none));
        }
    }

    #[test]
    fn shift_uses_the_on_site_union_sd() {
        let task = small_task(Scenario::Shift { c: 0.1 });
        let data = generate_synthetic(&task.dataset).unwrap();
        let clean = prepare_partition(&small_task(Scenario::Ratio { value: 0.5 }), &data, 0).unwrap();
        let noisy = prepare_partition(&task, &data, 0).unwrap();
        let union = clean.validation.concat(&clean.test).unwrap().concat(&clean.active).unwrap();
        let sd = crate::data::feature_sd(&union.features().to_owned());
        let shift = &noisy.test.features() - &clean.test.features();
        for row in shift.rows() {
            for (d, s) in row.iter().zip(&sd) {
                assert!((d - 0.1 * s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_equals_noise_free() {
        let a = run_task(&small_task(Scenario::Ratio { value: 0.5 })).unwrap();
        let b = run_task(&small_task(Scenario::Gaussian { c: 0.0 })).unwrap();
        assert_eq!(
            a.table.accuracies(Process::P1).unwrap(),
            b.table.accuracies(Process::P1).unwrap()
        );
    }

    #[test]
    fn reproducible_and_thread_count_independent() {
        let task = small_task(Scenario::Gaussian { c: 0.03 });
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_task(&task).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        assert_eq!(results_csv(std::slice::from_ref(&a.table)).unwrap(), results_csv(&[b.table]).unwrap());
        assert_eq!(a.table.n_valid(), 3);
        for o in &a.repeats {
            let procs: Vec<Process> = o.results.iter().map(|r| r.process).collect();
            assert_eq!(procs, Process::ALL);
            // P6 reuses the configuration P5 tuned
            assert_eq!(o.results[5].conformal, o.results[4].conformal);
        }
        assert_eq!(a.table.added_per_batch.len(), 3);
    }

    #[test]
    fn failing_repeats_are_marked_invalid() {
        let mut task = small_task(Scenario::Ratio { value: 0.5 });
        // 13 is not divisible by 3 classes: every stratified draw fails
        task.sizes = PartitionSizes::new(13, 12, 12, 26);
        let run = run_task(&task).unwrap();
        assert_eq!(run.table.n_valid(), 0);
        assert!(run.repeats.iter().all(|o| o.error.is_some() && o.results.is_empty()));
    }

    #[test]
    fn invalid_tasks() {
        let base = small_task(Scenario::Ratio { value: 0.5 });
        let mut t = base.clone();
        t.n_repeats = 1;
        assert!(t.validate().is_err());
        let mut t = base.clone();
        t.classifiers.push(ClassifierConfig::svm(1.0));
        assert!(t.validate().is_err());
        let mut t = base.clone();
        t.classifiers.clear();
        assert!(t.validate().is_err());
        let mut t = base.clone();
        t.scenario = Scenario::Ratio { value: 2.0 };
        assert!(t.validate().is_err());
        let mut t = base.clone();
        t.scenario = Scenario::Shift { c: -0.1 };
        assert!(t.validate().is_err());
        let mut t = base.clone();
        t.sizes = PartitionSizes::new(60, 30, 30, 120);
        assert!(t.validate().is_err());
        let mut t = base;
        t.protocol.conformal.epsilon = vec![1.5];
        assert!(t.validate().is_err());
    }

    #[test]
    fn scenario_labels() {
        assert_eq!(Scenario::Ratio { value: 0.5 }.label(), "ratio0.5");
        assert_eq!(Scenario::Gaussian { c: 0.01 }.label(), "gaussian0.01");
        assert_eq!(Scenario::Shift { c: 0.05 }.label(), "shift0.05");
    }
}

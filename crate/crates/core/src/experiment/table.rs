//! Per-task accuracy tables, verdicts against the baseline and the
//! cross-task summary.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::wilcoxon::wilcoxon_signed_rank;
use crate::error::{Error, Result};
use crate::linalg::median;
use crate::strategies::Process;

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "+")]
    Better,
    #[serde(rename = "=")]
    Same,
    #[serde(rename = "-")]
    Worse,
}

impl Verdict {
    /// Significant at [`SIGNIFICANCE`] and signed by the median difference.
    pub fn from_test(p_value: f64, median_difference: f64) -> Self {
        if p_value < SIGNIFICANCE && median_difference > 0.0 {
            Verdict::Better
        } else if p_value < SIGNIFICANCE && median_difference < 0.0 {
            Verdict::Worse
        } else {
            Verdict::Same
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Better => "+",
            Verdict::Same => "=",
            Verdict::Worse => "-",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Accuracies of one task: one row per repeat, one column per process.
/// A `None` row is a repeat that failed and is excluded pairwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub task: String,
    /// Column order; always starts with the baseline P1.
    pub processes: Vec<Process>,
    pub accuracy: Vec<Option<Vec<f64>>>,
    /// Rows added per batch, per process and valid repeat, where known.
    #[serde(default)]
    pub added_per_batch: BTreeMap<Process, Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessStats {
    pub process: Process,
    pub median_accuracy: f64,
    /// Median of the per-repeat differences to P1.
    pub median_difference: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    pub n_valid: usize,
}

impl ResultsTable {
    pub fn new(task: impl Into<String>, processes: Vec<Process>) -> Result<Self> {
        if processes.first() != Some(&Process::P1) {
            return Err(Error::Validation("the baseline P1 must be the first column".into()));
        }
        Ok(Self {
            task: task.into(),
            processes,
            accuracy: Vec::new(),
            added_per_batch: BTreeMap::new(),
        })
    }

    pub fn n_repeats(&self) -> usize {
        self.accuracy.len()
    }

    pub fn n_valid(&self) -> usize {
        self.accuracy.iter().flatten().count()
    }

    pub fn column(&self, process: Process) -> Option<usize> {
        self.processes.iter().position(|&p| p == process)
    }

    /// Accuracies of `process` over valid repeats.
    pub fn accuracies(&self, process: Process) -> Result<Vec<f64>> {
        let c = self
            .column(process)
            .ok_or_else(|| Error::Validation(format!("task {} has no column {process}", self.task)))?;
        Ok(self.accuracy.iter().flatten().map(|row| row[c]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        for (r, row) in self.accuracy.iter().enumerate() {
            if let Some(row) = row {
                if row.len() != self.processes.len() {
                    return Err(Error::Validation(format!(
                        "task {} repeat {r}: {} accuracies for {} processes",
                        self.task,
                        row.len(),
                        self.processes.len()
                    )));
                }
                if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Validation(format!(
                        "task {} repeat {r}: accuracy {v} outside [0, 1]",
                        self.task
                    )));
                }
            }
        }
        Ok(())
    }

    /// Median, Wilcoxon test against P1 and verdict for one process.
    pub fn stats(&self, process: Process) -> Result<ProcessStats> {
        let a = self.accuracies(process)?;
        let base = self.accuracies(Process::P1)?;
        if a.len() < 2 {
            return Err(Error::Validation(format!(
                "task {}: {} valid repeat(s), need at least 2",
                self.task,
                a.len()
            )));
        }
        let test = wilcoxon_signed_rank(&a, &base)?;
        let diffs: Vec<f64> = a.iter().zip(&base).map(|(x, y)| x - y).collect();
        let median_difference = median(&diffs);
        Ok(ProcessStats {
            process,
            median_accuracy: median(&a),
            median_difference,
            statistic: test.statistic,
            p_value: test.p_value,
            verdict: Verdict::from_test(test.p_value, median_difference),
            n_valid: a.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub n_repeats: usize,
    pub n_valid: usize,
    pub processes: Vec<ProcessStats>,
    /// Mean rows added per batch, per online process.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mean_added_per_batch: BTreeMap<Process, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub process: Process,
    pub better: usize,
    pub same: usize,
    pub worse: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.better + self.same + self.worse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub processes: Vec<Process>,
    pub tasks: Vec<TaskSummary>,
    /// Verdict counts across tasks for every reported process except P1.
    pub counts: Vec<VerdictCounts>,
}

impl SummaryReport {
    pub fn counts_for(&self, process: Process) -> Option<&VerdictCounts> {
        self.counts.iter().find(|c| c.process == process)
    }

    /// Median accuracy per task (rows) and process (columns).
    pub fn median_matrix(&self) -> Vec<(String, Vec<f64>)> {
        self.tasks
            .iter()
            .map(|t| {
                let medians = t.processes.iter().map(|s| s.median_accuracy).collect();
                (t.task.clone(), medians)
            })
            .collect()
    }
}

/// Summarises `tables` for the processes in `report` (all columns when
/// empty). Every table must contain the reported processes.
pub fn summarize(tables: &[ResultsTable], report: &[Process]) -> Result<SummaryReport> {
    if tables.is_empty() {
        return Err(Error::Validation("nothing to summarise".into()));
    }
    let processes: Vec<Process> = if report.is_empty() {
        tables[0].processes.clone()
    } else {
        report.to_vec()
    };
    let mut tasks = Vec::with_capacity(tables.len());
    for table in tables {
        table.validate()?;
        let stats = processes.iter().map(|&p| table.stats(p)).collect::<Result<Vec<_>>>()?;
        let mean_added_per_batch = table
            .added_per_batch
            .iter()
            .filter(|(p, runs)| processes.contains(p) && !runs.is_empty())
            .map(|(&p, runs)| {
                let n_batches = runs.iter().map(Vec::len).max().unwrap_or(0);
                let means = (0..n_batches)
                    .map(|b| {
                        runs.iter().map(|r| r.get(b).copied().unwrap_or(0) as f64).sum::<f64>()
                            / runs.len() as f64
                    })
                    .collect();
                (p, means)
            })
            .collect();
        tasks.push(TaskSummary {
            task: table.task.clone(),
            n_repeats: table.n_repeats(),
            n_valid: table.n_valid(),
            processes: stats,
            mean_added_per_batch,
        });
    }
    let counts = processes
        .iter()
        .filter(|&&p| p != Process::P1)
        .map(|&p| {
            let mut c = VerdictCounts {
                process: p,
                better: 0,
                same: 0,
                worse: 0,
            };
            for t in &tasks {
                let s = t.processes.iter().find(|s| s.process == p).expect("reported process");
                match s.verdict {
                    Verdict::Better => c.better += 1,
                    Verdict::Same => c.same += 1,
                    Verdict::Worse => c.worse += 1,
                }
            }
            c
        })
        .collect();
    Ok(SummaryReport {
        processes,
        tasks,
        counts,
    })
}

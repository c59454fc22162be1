//! The `generate`, `run` and `report` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use eicp_core::classify::ClassifierConfig;
use eicp_core::data::{generate_synthetic, save_csv};
use eicp_core::experiment::{
    read_results_csv, run_task, summarize, write_results_csv, write_summary_json, ResultsTable,
    SummaryReport, TaskSpec,
};
use eicp_core::strategies::Process;
use eicp_core::write_atomic;

use crate::config::{ConfigError, RunConfig};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RADAR_FILE: &str = "radar.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; nothing was computed.
    Config(String),
    /// Failure while computing or reading and writing files.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<eicp_core::Error> for CliError {
    fn from(e: eicp_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parses a comma-separated process list such as `P1,P6`. P1 is the
/// reference of every comparison and is always reported first.
pub fn parse_processes(list: &str) -> Result<Vec<Process>, ConfigError> {
    let mut out = vec![Process::P1];
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p: Process = item
            .parse()
            .map_err(|_| ConfigError(format!("unknown process {item:?} in --only")))?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort_by_key(|p| p.index());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub seed: u64,
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRepeat {
    pub repeat: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    pub seed: u64,
    pub dataset_seed: u64,
    pub n_repeats: usize,
    pub n_valid: usize,
    /// Tuned classifier of every valid repeat, in repeat order.
    pub tuned: Vec<Option<ClassifierConfig>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedRepeat>,
}

/// Provenance of a command's outputs: seeds and files. Holds no timestamps
/// so identical runs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub processes: Vec<Process>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<TaskEntry>,
    pub files: Vec<String>,
}

impl Manifest {
    fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            processes: Vec::new(),
            datasets: Vec::new(),
            tasks: Vec::new(),
            files: Vec::new(),
        }
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&dir.join(MANIFEST_FILE), &json)?;
        Ok(())
    }
}

/// Writes one CSV per configured dataset plus a manifest into `out`.
pub fn generate(config: &RunConfig, out: &Path) -> Result<Manifest, CliError> {
    config.expand()?;
    let mut manifest = Manifest::new("generate", config.seed);
    for (name, spec) in config.dataset_specs() {
        let data = generate_synthetic(&spec)?;
        let file = format!("{name}.csv");
        save_csv(&data, out.join(&file))?;
        log::info!("wrote {} ({} rows)", out.join(&file).display(), data.len());
        manifest.datasets.push(DatasetEntry {
            name,
            seed: spec.seed,
            rows: data.len(),
            features: data.n_features(),
            classes: data.n_classes(),
            file: Some(file.clone()),
        });
        manifest.files.push(file);
    }
    manifest.files.push(MANIFEST_FILE.into());
    manifest.write(out)?;
    Ok(manifest)
}

/// What `run` produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<ResultsTable>,
    pub summary: SummaryReport,
    pub manifest: Manifest,
}

/// Runs every configured task with at most `jobs` threads (all cores when
/// `None`) and writes results, summary, radar data and manifest to `out`.
/// Outputs do not depend on the number of threads.
pub fn run(
    config: &RunConfig,
    only: &[Process],
    out: &Path,
    jobs: Option<usize>,
) -> Result<RunOutput, CliError> {
    let tasks = config.expand()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let started = Instant::now();
    let n_tasks = tasks.len();
    let runs = pool.install(|| {
        tasks
            .par_iter()
            .map(|task: &TaskSpec| {
                let t = Instant::now();
                let run = run_task(task);
                if let Ok(r) = &run {
                    log::info!(
                        "{} done in {:.1}s ({}/{} valid repeats)",
                        task.name,
                        t.elapsed().as_secs_f64(),
                        r.table.n_valid(),
                        task.n_repeats
                    );
                }
                run
            })
            .collect::<Vec<_>>()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    log::info!("{n_tasks} tasks in {:.1}s", started.elapsed().as_secs_f64());

    let tables: Vec<ResultsTable> = runs.iter().map(|r| r.table.clone()).collect();
    let summary = summarize(&tables, only)?;
    write_results_csv(&out.join(RESULTS_FILE), &tables)?;
    write_summary_json(&out.join(SUMMARY_FILE), &summary)?;
    write_atomic(&out.join(RADAR_FILE), &radar_csv(&summary))?;

    let mut manifest = Manifest::new("run", config.seed);
    manifest.processes = summary.processes.clone();
    for (name, spec) in config.dataset_specs() {
        manifest.datasets.push(DatasetEntry {
            name,
            seed: spec.seed,
            rows: spec.n_classes * spec.samples_per_class,
            features: spec.n_features,
            classes: spec.n_classes,
            file: None,
        });
    }
    for r in &runs {
        manifest.tasks.push(TaskEntry {
            name: r.task.name.clone(),
            seed: r.task.seed,
            dataset_seed: r.task.dataset.seed,
            n_repeats: r.task.n_repeats,
            n_valid: r.table.n_valid(),
            tuned: r.repeats.iter().map(|o| o.classifier).collect(),
            failed: r
                .repeats
                .iter()
                .filter_map(|o| {
                    o.error.as_ref().map(|e| FailedRepeat {
                        repeat: o.repeat,
                        error: e.clone(),
                    })
                })
                .collect(),
        });
    }
    manifest.files = [RESULTS_FILE, SUMMARY_FILE, RADAR_FILE, MANIFEST_FILE]
        .map(String::from)
        .to_vec();
    manifest.write(out)?;
    Ok(RunOutput {
        tables,
        summary,
        manifest,
    })
}

/// Re-summarises `dir/results.csv` and writes the radar data to `radar`.
pub fn report(dir: &Path, only: &[Process], radar: &Path) -> Result<SummaryReport, CliError> {
    let path = dir.join(RESULTS_FILE);
    if !path.is_file() {
        return Err(CliError::Runtime(format!("no {RESULTS_FILE} in {}", dir.display())));
    }
    let tables = read_results_csv(&path)?;
    let summary = summarize(&tables, only)?;
    write_atomic(radar, &radar_csv(&summary))?;
    Ok(summary)
}

/// Default location of the radar file written by `report`.
pub fn default_radar_path(dir: &Path) -> PathBuf {
    dir.join(RADAR_FILE)
}

/// Median accuracy per task (rows) and process (columns).
pub fn radar_csv(summary: &SummaryReport) -> Vec<u8> {
    let mut s = String::from("task");
    for p in &summary.processes {
        write!(s, ",{p}").unwrap();
    }
    s.push('\n');
    for (task, medians) in summary.median_matrix() {
        s.push_str(&task);
        for m in medians {
            write!(s, ",{m}").unwrap();
        }
        s.push('\n');
    }
    s.into_bytes()
}

/// Verdict counts and the per-task median matrix as plain text.
pub fn format_summary(summary: &SummaryReport) -> String {
    let mut s = String::new();
    let n = summary.tasks.len();
    writeln!(s, "Verdicts against P1 over {n} task(s) (Wilcoxon signed-rank, p < 0.05)").unwrap();
    writeln!(s, "{:<8}{:>6}{:>6}{:>6}", "process", "+", "=", "-").unwrap();
    for c in &summary.counts {
        writeln!(s, "{:<8}{:>6}{:>6}{:>6}", c.process.to_string(), c.better, c.same, c.worse).unwrap();
    }
    s.push('\n');
    let width = summary.tasks.iter().map(|t| t.task.len()).max().unwrap_or(4).max(4);
    write!(s, "{:<width$}", "task").unwrap();
    for p in &summary.processes {
        write!(s, "{:>9}", p.to_string()).unwrap();
    }
    s.push('\n');
    for t in &summary.tasks {
        write!(s, "{:<width$}", t.task).unwrap();
        for p in &t.processes {
            let mark = if p.process == Process::P1 { " " } else { p.verdict.symbol() };
            write!(s, "{:>8.3}{mark}", p.median_accuracy).unwrap();
        }
        s.push('\n');
    }
    s
}

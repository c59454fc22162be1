//! `results.csv` (`task,process,repeat,accuracy,added`) and `summary.json`.
//!
//! `added` lists the rows an online process added in each batch, separated
//! by `;`; it is empty for the other processes and for failed repeats.

use std::collections::BTreeMap;
use std::path::Path;

use super::table::{ResultsTable, SummaryReport};
use crate::error::{Error, Result};
use crate::strategies::Process;
use crate::write_atomic;

const HEADER: [&str; 5] = ["task", "process", "repeat", "accuracy", "added"];

/// CSV text of the tables. A failed repeat is written with empty accuracy
/// cells for every process.
pub fn results_csv(tables: &[ResultsTable]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for t in tables {
        let mut valid = 0;
        for (r, row) in t.accuracy.iter().enumerate() {
            for (c, p) in t.processes.iter().enumerate() {
                let acc = row.as_ref().map(|v| v[c].to_string()).unwrap_or_default();
                let added = row
                    .as_ref()
                    .and_then(|_| t.added_per_batch.get(p))
                    .and_then(|runs| runs.get(valid))
                    .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                w.write_record([t.task.as_str(), &p.to_string(), &r.to_string(), &acc, &added])?;
            }
            valid += usize::from(row.is_some());
        }
    }
    w.into_inner()
        .map_err(|e| Error::Input(format!("flushing results: {e}")))
}

pub fn write_results_csv(path: &Path, tables: &[ResultsTable]) -> Result<()> {
    write_atomic(path, &results_csv(tables)?)
}

/// Parses `results.csv` back into tables, in order of first appearance.
/// Processes are ordered P1..P6.
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultsTable>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Input(format!("{}: {other:?}", path.display())),
    })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header {}, found {}", HEADER.join(","), header.join(",")),
        });
    }
    // task -> (repeat, process) -> (accuracy, rows added per batch)
    type Cell = (Option<f64>, Option<Vec<usize>>);
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<String, BTreeMap<(usize, Process), Cell>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let parse_err = |message: String| Error::Parse { row: line, message };
        if record.len() != HEADER.len() {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                HEADER.len(),
                record.len()
            )));
        }
        let task = record[0].to_string();
        let process: Process = record[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        let repeat: usize = record[2]
            .parse()
            .map_err(|_| parse_err(format!("bad repeat index {:?}", &record[2])))?;
        let accuracy = match &record[3] {
            "" => None,
            s => {
                let v: f64 = s.parse().map_err(|_| parse_err(format!("bad accuracy {s:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(parse_err(format!("accuracy {v} outside [0, 1]")));
                }
                Some(v)
            }
        };
        let added = match &record[4] {
            "" => None,
            s => Some(
                s.split(';')
                    .map(|v| v.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(format!("bad batch counts {s:?}")))?,
            ),
        };
        if added.is_some() && accuracy.is_none() {
            return Err(parse_err(format!("batch counts for failed repeat {repeat}")));
        }
        if !cells.contains_key(&task) {
            order.push(task.clone());
        }
        if cells.entry(task).or_default().insert((repeat, process), (accuracy, added)).is_some() {
            return Err(parse_err(format!("duplicate entry for {process} repeat {repeat}")));
        }
    }
    if order.is_empty() {
        return Err(Error::Input(format!("{}: no results", path.display())));
    }
    order
        .into_iter()
        .map(|task| {
            let entries = &cells[&task];
            let mut processes: Vec<Process> = entries.keys().map(|k| k.1).collect();
            processes.sort_unstable();
            processes.dedup();
            let n_repeats = entries.keys().map(|k| k.0).max().map_or(0, |m| m + 1);
            let mut table = ResultsTable::new(task.clone(), processes.clone())
                .map_err(|_| Error::Input(format!("task {task}: no P1 baseline rows")))?;
            for r in 0..n_repeats {
                let row: Option<Vec<f64>> = processes
                    .iter()
                    .map(|&p| entries.get(&(r, p)).and_then(|c| c.0))
                    .collect();
                if row.is_some() {
                    for &p in &processes {
                        if let Some(added) = entries.get(&(r, p)).and_then(|c| c.1.clone()) {
                            table.added_per_batch.entry(p).or_default().push(added);
                        }
                    }
                }
                table.accuracy.push(row);
            }
            Ok(table)
        })
        .collect()
}

pub fn write_summary_json(path: &Path, summary: &SummaryReport) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(summary)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_summary_json(path: &Path) -> Result<SummaryReport> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

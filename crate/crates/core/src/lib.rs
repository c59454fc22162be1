//! Data augmentation with unlabelled on-site samples for small-sample
//! classification under sensor drift.
//!
//! The crate provides five augmentation strategies compared against a
//! supervised baseline:
//!
//! * **P1** supervised learning on the lab training set;
//! * **P2** noise-cloned training rows;
//! * **P3** semi-supervised pseudo-labels (label propagation, label
//!   spreading, seeded k-means);
//! * **P4** batch-wise classifier self-training over the active set;
//! * **P5** batch-wise inductive conformal prediction (ICP) self-training with
//!   a credibility/ratio filter on kNN-ratio p-values;
//! * **P6** ensemble ICP (EICP): a row is added only when it passes the ICP
//!   filter *and* the classifier agrees with the top p-value label.
//!
//! [`experiment`] repeats a task over random partitions and compares every
//! strategy to P1 with Wilcoxon signed-rank tests.

pub mod classify;
pub mod conformal;
pub mod data;
pub mod error;
pub mod experiment;
pub mod seed;
pub mod semisup;
pub mod strategies;

mod linalg;

pub use error::{Error, Result};

use std::path::Path;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

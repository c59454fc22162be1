//! Drift simulation: `x' = x + c * SD_j * delta` per feature `j`.
//!
//! `SD_j` is the population standard deviation of feature `j` over the set
//! being perturbed. Gaussian noise draws `delta ~ N(0, 1)` independently per
//! cell; a translational shift fixes `delta = 1`.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    TranslationalShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub c: f64,
    /// Ignored for translational shifts.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::Config(format!(
                "noise coefficient must be finite and >= 0, got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Population standard deviation of every column.
pub fn feature_sd(features: &Array2<f64>) -> Vec<f64> {
    let n = features.nrows();
    if n == 0 {
        return vec![0.0; features.ncols()];
    }
    features
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / n as f64;
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
        })
        .collect()
}

/// Adds `c_i * sd_j * delta_ij` to row `i`, feature `j`. `c_per_row` holds
/// one coefficient per row.
pub fn perturb_rows(
    features: &mut Array2<f64>,
    sd: &[f64],
    kind: NoiseKind,
    c_per_row: &[f64],
    rng: &mut seed::Rng,
) {
    debug_assert_eq!(sd.len(), features.ncols());
    debug_assert_eq!(c_per_row.len(), features.nrows());
    for (mut row, &c) in features.rows_mut().into_iter().zip(c_per_row) {
        for (x, &s) in row.iter_mut().zip(sd) {
            let delta = match kind {
                NoiseKind::Gaussian => StandardNormal.sample(rng),
                NoiseKind::TranslationalShift => 1.0,
            };
            *x += c * s * delta;
        }
    }
}

/// Returns a perturbed copy; labels pass through unchanged.
pub fn apply_noise(set: &LabeledDataset, spec: &NoiseSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut features = set.features().to_owned();
    let sd = feature_sd(&features);
    let mut rng = seed::rng(spec.seed);
    perturb_rows(&mut features, &sd, spec.kind, &vec![spec.c; set.len()], &mut rng);
    let mut out = LabeledDataset::new(features, set.labels().to_vec(), set.n_classes())?;
    if let Some(names) = set.class_names() {
        out = out.with_class_names(names.to_vec())?;
    }
    Ok(out)
}

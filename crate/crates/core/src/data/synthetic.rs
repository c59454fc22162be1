//! Gaussian class clusters standing in for featurized sensor-array data.
//!
//! Classes are split round-robin into `n_groups` groups. Class `c` in group
//! `g` has mean `offset + group_spread * h_g + separation * g_c` with `h_g`,
//! `g_c ~ N(0, I)`: groups lie far apart, classes within a group close
//! together. Samples add a shared low-rank term `factor_scale * U z`
//! (common-mode sensor response, identical loadings for all classes; off by
//! default) and an isotropic term `within_scale * e`.
//!
//! With a large group spread the per-feature standard deviation is dominated
//! by differences between groups, so perturbations scaled by it blur the
//! classes within a group the way sensor drift does.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    #[serde(default = "default_n_features")]
    pub n_features: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_within_scale")]
    pub within_scale: f64,
    #[serde(default = "default_n_factors")]
    pub n_factors: usize,
    #[serde(default = "default_factor_scale")]
    pub factor_scale: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default = "default_n_groups")]
    pub n_groups: usize,
    #[serde(default)]
    pub group_spread: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_features() -> usize {
    super::N_FEATURES
}
fn default_separation() -> f64 {
    0.3
}
fn default_within_scale() -> f64 {
    1.0
}
fn default_n_factors() -> usize {
    4
}
fn default_factor_scale() -> f64 {
    0.0
}
fn default_offset() -> f64 {
    10.0
}
fn default_n_groups() -> usize {
    1
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 12,
            samples_per_class: 50,
            n_features: default_n_features(),
            separation: default_separation(),
            within_scale: default_within_scale(),
            n_factors: default_n_factors(),
            factor_scale: default_factor_scale(),
            offset: default_offset(),
            n_groups: default_n_groups(),
            group_spread: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.samples_per_class == 0 || self.n_features == 0 {
            return Err(Error::Config(format!(
                "n_classes, samples_per_class and n_features must be positive \
                 (got {}, {}, {})",
                self.n_classes, self.samples_per_class, self.n_features
            )));
        }
        if self.n_groups == 0 || self.n_groups > self.n_classes {
            return Err(Error::Config(format!(
                "n_groups must lie in 1..={}, got {}",
                self.n_classes, self.n_groups
            )));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::Config(format!(
                "separation must be positive, got {}",
                self.separation
            )));
        }
        for (name, v) in [
            ("within_scale", self.within_scale),
            ("factor_scale", self.factor_scale),
            ("group_spread", self.group_spread),
            ("offset", self.offset),
        ] {
            if !v.is_finite() || (name != "offset" && v < 0.0) {
                return Err(Error::Config(format!("invalid {name}: {v}")));
            }
        }
        Ok(())
    }
}

/// Draws `n_classes * samples_per_class` rows, grouped by class.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let d = spec.n_features;
    let r = spec.n_factors;
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let loadings: Vec<f64> = (0..d * r)
        .map(|_| normal() / (r.max(1) as f64).sqrt())
        .collect();
    let groups: Vec<Vec<f64>> = (0..spec.n_groups)
        .map(|_| (0..d).map(|_| spec.group_spread * normal()).collect())
        .collect();
    let means: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|c| {
            let g = &groups[c % spec.n_groups];
            (0..d).map(|j| spec.offset + g[j] + spec.separation * normal()).collect()
        })
        .collect();

    let n = spec.n_classes * spec.samples_per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut z = vec![0.0; r];
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            z.iter_mut().for_each(|v| *v = normal());
            for (j, m) in mean.iter().enumerate() {
                let common: f64 = loadings[j * r..(j + 1) * r]
                    .iter()
                    .zip(&z)
                    .map(|(u, z)| u * z)
                    .sum();
                data.push(m + spec.factor_scale * common + spec.within_scale * normal());
            }
            labels.push(class);
        }
    }
    let features = Array2::from_shape_vec((n, d), data).expect("shape");
    LabeledDataset::labeled(features, labels, spec.n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_paper_datasets() {
        let d1 = generate_synthetic(&SyntheticSpec {
            seed: 7,
            ..SyntheticSpec::default()
        })
        .unwrap();
        assert_eq!((d1.len(), d1.n_features()), (600, 128));
        assert!(d1.class_counts().iter().all(|&c| c == 50));

        let d2 = generate_synthetic(&SyntheticSpec {
            n_classes: 3,
            samples_per_class: 160,
            ..SyntheticSpec::default()
        })
        .unwrap();
        assert_eq!((d2.len(), d2.n_features()), (480, 128));
    }

    #[test]
    fn groups_set_the_feature_spread() {
        let spec = SyntheticSpec {
            n_classes: 4,
            samples_per_class: 50,
            n_factors: 0,
            factor_scale: 0.0,
            n_groups: 2,
            group_spread: 20.0,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let mean = |c: usize| -> Vec<f64> {
            let rows: Vec<usize> = (c * 50..(c + 1) * 50).collect();
            let sel = d.select(&rows);
            sel.features().mean_axis(ndarray::Axis(0)).unwrap().to_vec()
        };
        let gap = |a: usize, b: usize| crate::linalg::dist(&mean(a), &mean(b));
        // classes 0 and 2 share a group, 0 and 1 do not
        assert!(gap(0, 2) < 10.0, "{}", gap(0, 2));
        assert!(gap(0, 1) > 100.0, "{}", gap(0, 1));
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SyntheticSpec {
            seed: 99,
            n_classes: 3,
            samples_per_class: 10,
            ..SyntheticSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 100, ..spec };
        assert_ne!(generate_synthetic(&other).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn invalid_spec_is_config_error() {
        for spec in [
            SyntheticSpec { n_classes: 0, ..SyntheticSpec::default() },
            SyntheticSpec { separation: 0.0, ..SyntheticSpec::default() },
            SyntheticSpec { within_scale: -1.0, ..SyntheticSpec::default() },
            SyntheticSpec { n_groups: 0, ..SyntheticSpec::default() },
            SyntheticSpec { n_groups: 13, ..SyntheticSpec::default() },
            SyntheticSpec { group_spread: -1.0, ..SyntheticSpec::default() },
        ] {
            assert!(matches!(generate_synthetic(&spec), Err(Error::Config(_))));
        }
    }
}

//! Datasets, synthetic generation, feature extraction, partitioning, noise
//! injection and CSV persistence.

mod csv_io;
mod features;
mod noise;
mod partition;
mod synthetic;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv, CsvSchema};
pub use features::{
    extract_features, ema, FeatureVector, SensorRecord, DEFAULT_SMOOTHING, FEATURES_PER_CHANNEL,
    N_CHANNELS, N_FEATURES,
};
pub use noise::{apply_noise, feature_sd, perturb_rows, NoiseKind, NoiseSpec};
pub use partition::{partition, HeldOutLabels, Partition, PartitionIndices, PartitionSizes, PartitionSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Rows of real-valued features with optional integer class labels.
///
/// Feature storage is a row-major matrix so that `row` can hand out plain
/// slices to the distance kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    n_classes: usize,
    class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<Option<usize>>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Config("n_classes must be positive".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Input(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some((i, l)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&l| l >= n_classes).map(|l| (i, l)))
        {
            return Err(Error::Validation(format!(
                "row {i}: label {l} outside [0, {n_classes})"
            )));
        }
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        Ok(Self {
            features,
            labels,
            n_classes,
            class_names: None,
        })
    }

    /// A fully labelled dataset.
    pub fn labeled(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        Self::new(features, labels.into_iter().map(Some).collect(), n_classes)
    }

    /// A dataset with no labels at all.
    pub fn unlabeled(features: Array2<f64>, n_classes: usize) -> Result<Self> {
        let n = features.nrows();
        Self::new(features, vec![None; n], n_classes)
    }

    /// An empty dataset with the given width.
    pub fn empty(n_features: usize, n_classes: usize) -> Self {
        Self {
            features: Array2::zeros((0, n_features)),
            labels: Vec::new(),
            n_classes,
            class_names: None,
        }
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::Input(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_features();
        &self.features.as_slice().expect("standard layout")[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    /// All labels, failing if any row is unlabelled.
    pub fn known_labels(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::Input(format!("row {i} has no label"))))
            .collect()
    }

    /// Number of labelled rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for l in self.labels.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }

    /// A new dataset made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        }
    }

    /// The same rows with every label removed.
    pub fn without_labels(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: vec![None; self.len()],
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        }
    }

    /// The same rows with labels replaced.
    pub fn with_labels(&self, labels: Vec<Option<usize>>) -> Result<Self> {
        let mut out = Self::new(self.features.clone(), labels, self.n_classes)?;
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.n_features() != other.n_features() {
            return Err(Error::Input(format!(
                "cannot concatenate {}-feature and {}-feature datasets",
                self.n_features(),
                other.n_features()
            )));
        }
        if self.n_classes != other.n_classes {
            return Err(Error::Input(format!(
                "cannot concatenate datasets with {} and {} classes",
                self.n_classes, other.n_classes
            )));
        }
        let features = concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .expect("widths checked");
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self {
            features,
            labels,
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        })
    }

    /// Appends labelled rows in place. Nothing is appended on error.
    pub fn push_rows<'a>(
        &mut self,
        rows: impl IntoIterator<Item = (&'a [f64], usize)>,
    ) -> Result<()> {
        let n = self.n_features();
        let rows: Vec<(&[f64], usize)> = rows.into_iter().collect();
        for &(row, label) in &rows {
            if row.len() != n {
                return Err(Error::Input(format!(
                    "row has {} features, expected {n}",
                    row.len()
                )));
            }
            if label >= self.n_classes {
                return Err(Error::Validation(format!(
                    "label {label} outside [0, {})",
                    self.n_classes
                )));
            }
        }
        let mut data = std::mem::take(&mut self.features).into_raw_vec_and_offset().0;
        for (row, label) in rows {
            data.extend_from_slice(row);
            self.labels.push(Some(label));
        }
        self.features = Array2::from_shape_vec((self.labels.len(), n), data).expect("shape");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_out_of_range_label() {
        let err = LabeledDataset::labeled(array![[0.0], [1.0]], vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn push_rows_appends() {
        let mut d = LabeledDataset::labeled(array![[0.0, 1.0]], vec![0], 2).unwrap();
        d.push_rows([(&[2.0, 3.0][..], 1)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(1), &[2.0, 3.0]);
        assert_eq!(d.labels(), &[Some(0), Some(1)]);
        assert!(d.push_rows([(&[2.0][..], 1)]).is_err());
    }

    #[test]
    fn select_and_concat_preserve_rows() {
        let d = LabeledDataset::new(array![[0.0], [1.0], [2.0]], vec![Some(0), None, Some(1)], 2)
            .unwrap();
        let s = d.select(&[2, 0]);
        assert_eq!(s.row(0), &[2.0]);
        assert_eq!(s.labels(), &[Some(1), Some(0)]);
        let c = s.concat(&d).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.class_counts(), vec![2, 2]);
        assert!(d.known_labels().is_err());
    }
}

use ndarray::{Array2, ArrayView2};

use crate::linalg::sq_dist;

/// Stores the training rows; scores are neighbour vote fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    rows: Array2<f64>,
    targets: Vec<usize>,
    n_slots: usize,
    k: usize,
}

impl KnnModel {
    pub(super) fn fit(x: ArrayView2<'_, f64>, targets: &[usize], n_slots: usize, k: usize) -> Self {
        Self {
            rows: x.as_standard_layout().into_owned(),
            targets: targets.to_vec(),
            n_slots,
            k,
        }
    }

    pub(super) fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let k = self.k.min(self.targets.len());
        let mut out = Array2::zeros((x.nrows(), self.n_slots));
        let train = self.rows.as_slice().expect("standard layout");
        let d = self.rows.ncols();
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(self.targets.len());
        for (q, query) in x.rows().into_iter().enumerate() {
            let query = query.to_vec();
            order.clear();
            order.extend(
                train
                    .chunks_exact(d)
                    .enumerate()
                    .map(|(i, r)| (sq_dist(&query, r), i)),
            );
            // nearest first, lower index first on equal distance
            order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, i) in &order[..k] {
                out[[q, self.targets[i]]] += 1.0 / k as f64;
            }
        }
        out
    }
}

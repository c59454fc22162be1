use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Linear discriminant with a shrunk pooled covariance.
///
/// The score of class `k` is `x' W m_k - m_k' W m_k / 2 + ln p_k` with
/// `W` the inverse of the shrunk covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// `n_classes x n_features`, row `k` is `W m_k`.
    coef: Array2<f64>,
    intercept: Vec<f64>,
    means: Vec<Vec<f64>>,
    priors: Vec<f64>,
    covariance: DMatrix<f64>,
}

impl LdaModel {
    pub(super) fn fit(
        x: ArrayView2<'_, f64>,
        targets: &[usize],
        classes: &[usize],
        shrinkage: f64,
    ) -> Result<Self> {
        let (n, d) = x.dim();
        let k = classes.len();
        let mut counts = vec![0usize; k];
        let mut means = vec![vec![0.0; d]; k];
        for (row, &t) in x.rows().into_iter().zip(targets) {
            counts[t] += 1;
            for (m, v) in means[t].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (slot, &c) in counts.iter().enumerate() {
            if c < 2 {
                return Err(Error::DegenerateClass {
                    label: classes[slot],
                    count: c,
                    required: 2,
                });
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }

        // pooled within-class scatter / n
        let mut centered = DMatrix::<f64>::zeros(n, d);
        for (i, (row, &t)) in x.rows().into_iter().zip(targets).enumerate() {
            for (j, v) in row.iter().enumerate() {
                centered[(i, j)] = v - means[t][j];
            }
        }
        let mut cov = centered.tr_mul(&centered) / n as f64;

        let mean_diag = cov.diagonal().mean();
        let floor = (mean_diag * 1e-9).max(1e-12);
        let diag: Vec<f64> = cov.diagonal().iter().map(|v| v.max(floor)).collect();
        cov *= 1.0 - shrinkage;
        for (j, v) in diag.iter().enumerate() {
            cov[(j, j)] = (cov[(j, j)] + shrinkage * v).max(floor);
        }

        let chol = {
            let mut jitter = 0.0;
            loop {
                let mut m = cov.clone();
                for j in 0..d {
                    m[(j, j)] += jitter;
                }
                if let Some(c) = m.cholesky() {
                    break c;
                }
                jitter = if jitter == 0.0 { floor } else { jitter * 10.0 };
            }
        };

        let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let mut coef = Array2::zeros((k, d));
        let mut intercept = Vec::with_capacity(k);
        for (slot, m) in means.iter().enumerate() {
            let w = chol.solve(&DVector::from_column_slice(m));
            let quad: f64 = w.iter().zip(m).map(|(a, b)| a * b).sum();
            for (j, v) in w.iter().enumerate() {
                coef[[slot, j]] = *v;
            }
            intercept.push(-0.5 * quad + priors[slot].ln());
        }
        Ok(Self {
            coef,
            intercept,
            means,
            priors,
            covariance: cov,
        })
    }

    pub(super) fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut s = x.dot(&self.coef.t());
        for mut row in s.rows_mut() {
            for (v, b) in row.iter_mut().zip(&self.intercept) {
                *v += b;
            }
        }
        s.as_standard_layout().into_owned()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// The shrunk pooled covariance actually inverted.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};

use crate::linalg::dot;

const MAX_NEWTON: usize = 100;
const BIAS: f64 = 1.0;

/// One-vs-rest linear SVM with squared hinge loss.
///
/// Each binary problem `min ½‖w‖² + C Σ max(0, 1 - yᵢ w·xᵢ)²` is solved
/// exactly by generalized Newton steps with an exact line search
/// (Keerthi & DeCoste, 2005). Each step solves a regularized least-squares
/// problem on the margin violators, in feature space or in sample space,
/// whichever is smaller. The bias is learned as the weight of a constant
/// feature, so it is regularized like every other weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// `n_classes x n_features`
    weights: Array2<f64>,
    bias: Vec<f64>,
}

impl SvmModel {
    pub(super) fn fit(x: ArrayView2<'_, f64>, targets: &[usize], n_slots: usize, c: f64) -> Self {
        let (n, d) = x.dim();
        debug_assert_eq!(n, targets.len());
        let augmented = with_bias(x);
        let mut weights = Array2::zeros((n_slots, d));
        let mut bias = vec![0.0; n_slots];
        if n_slots < 2 {
            return Self { weights, bias };
        }
        // From w = 0 every row violates its margin, so the first Newton
        // system is the same for every slot.
        let all: Vec<usize> = (0..n).collect();
        let first = System::new(&augmented, &all, c);
        for slot in 0..n_slots {
            let y: Vec<f64> = targets
                .iter()
                .map(|&t| if t == slot { 1.0 } else { -1.0 })
                .collect();
            let w = solve_binary(&augmented, &y, c, &first);
            weights.row_mut(slot).assign(&ArrayView1::from(&w[..d]));
            bias[slot] = w[d] * BIAS;
        }
        Self { weights, bias }
    }

    pub(super) fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut s = x.dot(&self.weights.t());
        for mut row in s.rows_mut() {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        s.as_standard_layout().into_owned()
    }
}

fn with_bias(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::from_elem((n, d + 1), BIAS);
    out.slice_mut(s![.., ..d]).assign(&x);
    out
}

/// Factorized normal equations of `min ½‖w‖² + C Σ_{i∈I} (yᵢ - w·xᵢ)²`.
struct System {
    rows: Vec<usize>,
    /// Factor of `X_I X_Iᵀ + I/2C` when true, else of `X_Iᵀ X_I + I/2C`.
    sample_space: bool,
    factor: Cholesky<f64, Dyn>,
}

impl System {
    fn new(x: &Array2<f64>, rows: &[usize], c: f64) -> Self {
        let xi = x.select(Axis(0), rows);
        let sample_space = rows.len() < x.ncols();
        let gram = if sample_space { xi.dot(&xi.t()) } else { xi.t().dot(&xi) };
        let m = gram.nrows();
        let ridge = 0.5 / c;
        let mut jitter = 0.0;
        let factor = loop {
            let a = DMatrix::from_fn(m, m, |i, j| {
                gram[[i, j]] + if i == j { ridge + jitter } else { 0.0 }
            });
            if let Some(f) = a.cholesky() {
                break f;
            }
            jitter = if jitter == 0.0 { ridge.max(1e-12) * 1e-6 } else { jitter * 10.0 };
        };
        Self {
            rows: rows.to_vec(),
            sample_space,
            factor,
        }
    }

    fn solve(&self, x: &Array2<f64>, y: &[f64]) -> Vec<f64> {
        let d = x.ncols();
        if self.sample_space {
            let rhs = DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&i| y[i]));
            let beta = self.factor.solve(&rhs);
            let mut w = vec![0.0; d];
            for (&i, b) in self.rows.iter().zip(beta.iter()) {
                for (wj, xj) in w.iter_mut().zip(x.row(i)) {
                    *wj += b * xj;
                }
            }
            w
        } else {
            let mut rhs = DVector::zeros(d);
            for &i in &self.rows {
                for (r, xj) in rhs.iter_mut().zip(x.row(i)) {
                    *r += y[i] * xj;
                }
            }
            self.factor.solve(&rhs).iter().copied().collect()
        }
    }
}

fn outputs(x: &Array2<f64>, w: &[f64]) -> Vec<f64> {
    x.dot(&ArrayView1::from(w)).to_vec()
}

fn violators(y: &[f64], o: &[f64]) -> Vec<usize> {
    (0..y.len()).filter(|&i| y[i] * o[i] < 1.0).collect()
}

fn solve_binary(x: &Array2<f64>, y: &[f64], c: f64, first: &System) -> Vec<f64> {
    let mut w = first.solve(x, y);
    let mut o = outputs(x, &w);
    // Rows whose least-squares problem `w` currently solves exactly.
    let mut solved: Vec<usize> = first.rows.clone();
    for _ in 0..MAX_NEWTON {
        let next = violators(y, &o);
        if next == solved {
            // The objective agrees with that least-squares problem to first
            // order at `w`, so `w` is the global minimum.
            break;
        }
        let target = if next.is_empty() {
            vec![0.0; w.len()]
        } else {
            System::new(x, &next, c).solve(x, y)
        };
        let delta: Vec<f64> = target.iter().zip(&w).map(|(t, v)| t - v).collect();
        let d_out = outputs(x, &delta);
        let t = line_search(&w, &delta, y, &o, &d_out, c);
        if t <= 0.0 {
            break;
        }
        for (wj, dj) in w.iter_mut().zip(&delta) {
            *wj += t * dj;
        }
        for (oi, di) in o.iter_mut().zip(&d_out) {
            *oi += t * di;
        }
        solved = if t == 1.0 { next } else { Vec::new() };
    }
    w
}

/// Exact minimizer over `t ≥ 0` of the objective along `w + t·delta`.
///
/// The derivative is piecewise linear and nondecreasing in `t`, with a
/// breakpoint wherever a row crosses its margin.
fn line_search(w: &[f64], delta: &[f64], y: &[f64], o: &[f64], d_out: &[f64], c: f64) -> f64 {
    let a: Vec<f64> = (0..y.len()).map(|i| 1.0 - y[i] * o[i]).collect();
    let b: Vec<f64> = (0..y.len()).map(|i| y[i] * d_out[i]).collect();
    // On the current segment the derivative is `intercept + slope * t`.
    let mut intercept = dot(w, delta);
    let mut slope = dot(delta, delta);
    let mut breaks = Vec::new();
    for i in 0..y.len() {
        let live = a[i] > 0.0 || (a[i] == 0.0 && b[i] < 0.0);
        if live {
            intercept -= 2.0 * c * a[i] * b[i];
            slope += 2.0 * c * b[i] * b[i];
        }
        // Live rows with b > 0 leave at a/b; dead rows with b < 0 join there.
        if b[i] != 0.0 && live == (b[i] > 0.0) {
            let t = a[i] / b[i];
            if t > 0.0 {
                breaks.push((t, i));
            }
        }
    }
    if intercept >= 0.0 {
        return 0.0;
    }
    breaks.sort_by(|p, q| p.0.total_cmp(&q.0));
    for (at, i) in breaks {
        if slope > 0.0 && -intercept / slope <= at {
            break;
        }
        let sign = if b[i] > 0.0 { -1.0 } else { 1.0 };
        intercept -= sign * 2.0 * c * a[i] * b[i];
        slope += sign * 2.0 * c * b[i] * b[i];
    }
    if slope <= 0.0 {
        return 1.0;
    }
    let t = -intercept / slope;
    // Land exactly on the Newton point when rounding is all that separates us.
    if (t - 1.0).abs() <= 1e-9 {
        1.0
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::clusters;
    use super::super::*;
    use super::*;

    fn gradient(x: &Array2<f64>, y: &[f64], w: &[f64], c: f64) -> Vec<f64> {
        let mut g = w.to_vec();
        for (i, row) in x.rows().into_iter().enumerate() {
            let slack = 1.0 - y[i] * dot(row.as_slice().unwrap(), w);
            if slack > 0.0 {
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj -= 2.0 * c * slack * y[i] * xj;
                }
            }
        }
        g
    }

    #[test]
    fn separable_two_class_any_c_at_least_one() {
        let d = clusters(&[vec![-3.0, 1.0, 0.0], vec![3.0, -1.0, 0.0]], 25, 0.4, 12);
        for c in [1.0, 10.0, 100.0] {
            let m = fit(&ClassifierConfig::svm(c), &d).unwrap();
            assert_eq!(accuracy(&m, &d).unwrap(), 1.0, "C = {c}");
        }
    }

    #[test]
    fn solution_zeroes_the_primal_gradient() {
        // The objective is strictly convex, so a vanishing gradient certifies
        // the global minimum. Cover both sample- and feature-space systems.
        for (per_class, dim) in [(4, 20), (30, 3)] {
            let means: Vec<Vec<f64>> = (0..3).map(|k| vec![k as f64 * 0.7; dim]).collect();
            let data = clusters(&means, per_class, 1.0, 5);
            let x = with_bias(data.features());
            let n = x.nrows();
            let y: Vec<f64> = data
                .known_labels()
                .unwrap()
                .iter()
                .map(|&l| if l == 1 { 1.0 } else { -1.0 })
                .collect();
            for c in [0.01, 1.0, 100.0] {
                let all: Vec<usize> = (0..n).collect();
                let w = solve_binary(&x, &y, c, &System::new(&x, &all, c));
                let g = gradient(&x, &y, &w, c);
                let norm = dot(&g, &g).sqrt();
                assert!(norm < 1e-8 * (1.0 + c * n as f64), "n {n} C {c}: |grad| = {norm}");
            }
        }
    }

    #[test]
    fn two_classes_give_opposite_weights() {
        let data = clusters(&[vec![0.0, 0.0], vec![1.0, 0.5]], 15, 1.0, 8);
        let m = SvmModel::fit(data.features(), &data.known_labels().unwrap(), 2, 1.0);
        for (a, b) in m.weights.row(0).iter().zip(m.weights.row(1)) {
            assert!((a + b).abs() < 1e-9);
        }
        assert!((m.bias[0] + m.bias[1]).abs() < 1e-9);
    }

    #[test]
    fn single_class_predicts_it() {
        let d = clusters(&[vec![0.0; 2]], 5, 1.0, 3);
        let m = fit(&ClassifierConfig::svm(1.0), &d).unwrap();
        assert_eq!(m.predict(d.features()).unwrap(), vec![0; 5]);
    }
}

//! Graph-based labelers.
//!
//! Nodes are the labelled rows followed by the unlabelled rows. Propagation
//! iterates `F_u <- T_uu F_u + T_ul Y_l` with `T` the row-normalised affinity
//! (labelled rows stay clamped), converging to the harmonic solution.
//! Spreading iterates `F <- a S F + (1 - a) Y` with
//! `S = D^-1/2 W D^-1/2`, converging to `(1 - a)(I - a S)^-1 Y`.

use ndarray::Array2;

use super::graph::Affinity;
use super::{check_inputs, Method, PseudoLabeledSet, SemiSupConfig};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{argmax, sq_dist};

fn graph(labeled: &LabeledDataset, unlabeled: &LabeledDataset, config: &SemiSupConfig) -> Result<Affinity> {
    let points: Vec<&[f64]> = labeled.rows().chain(unlabeled.rows()).collect();
    Affinity::build(&points, &config.kernel)
}

fn one_hot(labels: &[usize], n_classes: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), n_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[[i, l]] = 1.0;
    }
    y
}

/// Label scores for the unlabelled rows only.
pub(crate) fn propagation_scores(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<Array2<f64>> {
    config.validate()?;
    let labels = check_inputs(labeled, unlabeled)?;
    let n_l = labeled.len();
    let n_u = unlabeled.len();
    let c = labeled.n_classes();
    let w = graph(labeled, unlabeled, config)?;

    // per unlabelled node: clamped inflow and links to other unlabelled nodes
    let mut inflow = Array2::<f64>::zeros((n_u, c));
    let mut links: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_u);
    for u in 0..n_u {
        let node = n_l + u;
        let deg = w.degree(node);
        let mut own = Vec::new();
        if deg > 0.0 {
            for &(j, v) in w.neighbors(node) {
                let t = v / deg;
                if j < n_l {
                    inflow[[u, labels[j]]] += t;
                } else {
                    own.push((j - n_l, t));
                }
            }
        }
        links.push(own);
    }

    let mut f = Array2::<f64>::zeros((n_u, c));
    let mut next = Array2::<f64>::zeros((n_u, c));
    for _ in 0..config.max_iterations {
        let mut change: f64 = 0.0;
        for u in 0..n_u {
            for k in 0..c {
                let mut v = inflow[[u, k]];
                for &(j, t) in &links[u] {
                    v += t * f[[j, k]];
                }
                change = change.max((v - f[[u, k]]).abs());
                next[[u, k]] = v;
            }
        }
        std::mem::swap(&mut f, &mut next);
        if change < config.tolerance {
            break;
        }
    }
    Ok(f)
}

/// Label scores for every node (labelled rows first).
pub(crate) fn spreading_scores(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<Array2<f64>> {
    config.validate()?;
    let labels = check_inputs(labeled, unlabeled)?;
    let n = labeled.len() + unlabeled.len();
    let c = labeled.n_classes();
    let w = graph(labeled, unlabeled, config)?;
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = w.degree(i);
            if d > 0.0 { d.sqrt().recip() } else { 0.0 }
        })
        .collect();
    let s: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            w.neighbors(i)
                .iter()
                .map(|&(j, v)| (j, v * inv_sqrt[i] * inv_sqrt[j]))
                .collect()
        })
        .collect();
    let mut y = Array2::<f64>::zeros((n, c));
    y.slice_mut(ndarray::s![..labels.len(), ..]).assign(&one_hot(&labels, c));

    let a = config.alpha;
    let mut f = y.clone();
    let mut next = Array2::<f64>::zeros((n, c));
    for _ in 0..config.max_iterations {
        let mut change: f64 = 0.0;
        for i in 0..n {
            for k in 0..c {
                let mut v = 0.0;
                for &(j, t) in &s[i] {
                    v += t * f[[j, k]];
                }
                let v = a * v + (1.0 - a) * y[[i, k]];
                change = change.max((v - f[[i, k]]).abs());
                next[[i, k]] = v;
            }
        }
        std::mem::swap(&mut f, &mut next);
        if change < config.tolerance {
            break;
        }
    }
    Ok(f)
}

/// Turns score rows into labels; rows without any label mass fall back to
/// the nearest labelled row with confidence 0.
pub(crate) fn decide(
    scores: ndarray::ArrayView2<'_, f64>,
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
) -> Result<PseudoLabeledSet> {
    let labels = labeled.known_labels()?;
    let mut out_labels = Vec::with_capacity(unlabeled.len());
    let mut confidence = Vec::with_capacity(unlabeled.len());
    for (u, row) in scores.rows().into_iter().enumerate() {
        let row = row.to_vec();
        let total: f64 = row.iter().sum();
        if total > 0.0 && total.is_finite() {
            let best = argmax(&row);
            out_labels.push(best);
            confidence.push(row[best] / total);
        } else {
            let x = unlabeled.row(u);
            let nearest = (0..labeled.len())
                .min_by(|&a, &b| {
                    sq_dist(x, labeled.row(a)).total_cmp(&sq_dist(x, labeled.row(b)))
                })
                .ok_or_else(|| Error::Input("no labelled rows".into()))?;
            out_labels.push(labels[nearest]);
            confidence.push(0.0);
        }
    }
    PseudoLabeledSet::new(unlabeled, out_labels, confidence)
}

pub fn label_propagation(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<PseudoLabeledSet> {
    debug_assert_eq!(config.method, Method::Propagation);
    let f = propagation_scores(labeled, unlabeled, config)?;
    decide(f.view(), labeled, unlabeled)
}

pub fn label_spreading(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<PseudoLabeledSet> {
    debug_assert_eq!(config.method, Method::Spreading);
    let f = spreading_scores(labeled, unlabeled, config)?;
    decide(f.slice(ndarray::s![labeled.len().., ..]), labeled, unlabeled)
}

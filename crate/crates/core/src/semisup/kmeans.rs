//! Seeded k-means: one cluster per class, centres initialised at the
//! labelled class means, labelled rows pinned to their class's cluster.

use super::{check_inputs, PseudoLabeledSet, SemiSupConfig};
use crate::data::LabeledDataset;
use crate::error::Result;
use crate::linalg::{dist, sq_dist};

struct Clustering {
    centers: Vec<Option<Vec<f64>>>,
    assignment: Vec<usize>,
}

fn nearest(x: &[f64], centers: &[Option<Vec<f64>>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, c) in centers.iter().enumerate() {
        if let Some(c) = c {
            let d = sq_dist(x, c);
            if d < best.0 {
                best = (d, k);
            }
        }
    }
    best.1
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; d];
    let mut n = 0usize;
    for r in rows {
        sum.iter_mut().zip(r).for_each(|(s, v)| *s += v);
        n += 1;
    }
    (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
}

fn run(labeled: &LabeledDataset, unlabeled: &LabeledDataset, config: &SemiSupConfig) -> Result<Clustering> {
    config.validate()?;
    let labels = check_inputs(labeled, unlabeled)?;
    let k = labeled.n_classes();
    let d = labeled.n_features();
    let mut centers: Vec<Option<Vec<f64>>> = (0..k)
        .map(|c| mean_of((0..labeled.len()).filter(|&i| labels[i] == c).map(|i| labeled.row(i)), d))
        .collect();
    let mut assignment: Vec<usize> = vec![usize::MAX; unlabeled.len()];

    for _ in 0..config.max_iterations {
        let next: Vec<usize> = unlabeled.rows().map(|x| nearest(x, &centers)).collect();

        // clusters with no member at all get the unlabelled row farthest
        // from its own centre
        let mut next = next;
        let mut members = vec![0usize; k];
        labels.iter().for_each(|&l| members[l] += 1);
        next.iter().for_each(|&a| members[a] += 1);
        let mut reseeded = false;
        for c in 0..k {
            if members[c] > 0 {
                continue;
            }
            let far = (0..unlabeled.len())
                .filter(|&u| members[next[u]] > 1 && centers[next[u]].is_some())
                .map(|u| (sq_dist(unlabeled.row(u), centers[next[u]].as_ref().unwrap()), u))
                .fold(None::<(f64, usize)>, |best, cand| match best {
                    Some(b) if b.0 >= cand.0 => Some(b),
                    _ => Some(cand),
                });
            if let Some((_, u)) = far {
                members[next[u]] -= 1;
                members[c] += 1;
                next[u] = c;
                centers[c] = Some(unlabeled.row(u).to_vec());
                reseeded = true;
            }
        }

        let converged = next == assignment && !reseeded;
        assignment = next;
        if converged {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let rows = (0..labeled.len())
                .filter(|&i| labels[i] == c)
                .map(|i| labeled.row(i))
                .chain((0..unlabeled.len()).filter(|&u| assignment[u] == c).map(|u| unlabeled.row(u)));
            if let Some(m) = mean_of(rows, d) {
                *center = Some(m);
            }
        }
    }
    Ok(Clustering {
        centers,
        assignment,
    })
}

/// Confidence is `1 - d1 / d2` for the two closest centres.
pub fn semi_kmeans(
    labeled: &LabeledDataset,
    unlabeled: &LabeledDataset,
    config: &SemiSupConfig,
) -> Result<PseudoLabeledSet> {
    let Clustering {
        centers,
        assignment,
    } = run(labeled, unlabeled, config)?;
    let confidence = unlabeled
        .rows()
        .zip(&assignment)
        .map(|(x, &a)| {
            let d1 = centers[a].as_ref().map_or(0.0, |c| dist(x, c));
            let d2 = centers
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != a)
                .filter_map(|(_, c)| c.as_ref().map(|c| dist(x, c)))
                .fold(f64::INFINITY, f64::min);
            if d2.is_infinite() {
                1.0
            } else if d2 > 0.0 {
                (1.0 - d1 / d2).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    PseudoLabeledSet::new(unlabeled, assignment, confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semisup::{Kernel, Method};
    use ndarray::{array, Array2};

    fn cfg() -> SemiSupConfig {
        SemiSupConfig::new(Method::Kmeans, Kernel::Knn { n_neighbors: 1 })
    }

    #[test]
    fn point_at_class_mean() {
        let l = LabeledDataset::labeled(array![[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]], vec![0, 0, 1, 1], 2)
            .unwrap();
        let u = LabeledDataset::unlabeled(array![[10.0, 1.0], [0.0, 1.0]], 2).unwrap();
        assert_eq!(semi_kmeans(&l, &u, &cfg()).unwrap().labels, vec![1, 0]);
    }

    #[test]
    fn no_unlabelled_rows() {
        let l = LabeledDataset::labeled(array![[0.0], [2.0], [10.0]], vec![0, 0, 1], 2).unwrap();
        let u = LabeledDataset::unlabeled(Array2::zeros((0, 1)), 2).unwrap();
        let c = run(&l, &u, &cfg()).unwrap();
        assert_eq!(c.centers, vec![Some(vec![1.0]), Some(vec![10.0])]);
        assert!(semi_kmeans(&l, &u, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn missing_class_is_reseeded() {
        // class 2 has no labelled rows; the far-away pair must found it
        let l = LabeledDataset::labeled(array![[0.0], [1.0], [5.0], [6.0]], vec![0, 0, 1, 1], 3).unwrap();
        let u = LabeledDataset::unlabeled(array![[0.5], [5.5], [50.0], [51.0]], 3).unwrap();
        let out = semi_kmeans(&l, &u, &cfg()).unwrap();
        assert_eq!(out.labels, vec![0, 1, 2, 2]);
    }

    /// Plain Lloyd iterations written independently.
    fn lloyd_oracle(lab: &[(f64, f64, usize)], unl: &[(f64, f64)]) -> Vec<usize> {
        let mut centers = [(0.0, 0.0); 2];
        for (c, center) in centers.iter_mut().enumerate() {
            let pts: Vec<_> = lab.iter().filter(|p| p.2 == c).collect();
            *center = (
                pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
                pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
            );
        }
        let mut assign = vec![9; unl.len()];
        loop {
            let next: Vec<usize> = unl
                .iter()
                .map(|p| {
                    let d0 = (p.0 - centers[0].0).powi(2) + (p.1 - centers[0].1).powi(2);
                    let d1 = (p.0 - centers[1].0).powi(2) + (p.1 - centers[1].1).powi(2);
                    usize::from(d1 < d0)
                })
                .collect();
            if next == assign {
                return assign;
            }
            assign = next;
            for (c, center) in centers.iter_mut().enumerate() {
                let mut sx = 0.0;
                let mut sy = 0.0;
                let mut n = 0.0;
                for p in lab.iter().filter(|p| p.2 == c) {
                    sx += p.0;
                    sy += p.1;
                    n += 1.0;
                }
                for (p, _) in unl.iter().zip(&assign).filter(|(_, &a)| a == c) {
                    sx += p.0;
                    sy += p.1;
                    n += 1.0;
                }
                *center = (sx / n, sy / n);
            }
        }
    }

    #[test]
    fn matches_lloyd_oracle() {
        let mut rng = crate::seed::rng(77);
        use rand::Rng;
        for _ in 0..20 {
            let lab = vec![(0.0, 0.0, 0), (0.5, 0.2, 0), (3.0, 1.0, 1), (2.5, 1.4, 1)];
            let unl: Vec<(f64, f64)> = (0..20)
                .map(|_| (rng.random_range(-1.0..4.0), rng.random_range(-1.0..2.5)))
                .collect();
            let l = LabeledDataset::labeled(
                Array2::from_shape_vec((4, 2), lab.iter().flat_map(|p| [p.0, p.1]).collect()).unwrap(),
                lab.iter().map(|p| p.2).collect(),
                2,
            )
            .unwrap();
            let u = LabeledDataset::unlabeled(
                Array2::from_shape_vec((20, 2), unl.iter().flat_map(|p| [p.0, p.1]).collect()).unwrap(),
                2,
            )
            .unwrap();
            assert_eq!(semi_kmeans(&l, &u, &cfg()).unwrap().labels, lloyd_oracle(&lab, &unl));
        }
    }
}

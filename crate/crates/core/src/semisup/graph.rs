use super::{Gamma, Kernel};
use crate::error::{Error, Result};
use crate::linalg::{median, sq_dist};

/// Symmetric, non-negative edge weights without self loops, stored as
/// per-node adjacency lists sorted by neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    edges: Vec<Vec<(usize, f64)>>,
}

impl Affinity {
    pub fn build(points: &[&[f64]], kernel: &Kernel) -> Result<Self> {
        let n = points.len();
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = sq_dist(points[i], points[j]);
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        let mut w = vec![0.0; n * n];
        match *kernel {
            Kernel::Knn { n_neighbors } => {
                let k = n_neighbors.min(n.saturating_sub(1));
                let mut order: Vec<usize> = Vec::with_capacity(n);
                for i in 0..n {
                    order.clear();
                    order.extend((0..n).filter(|&j| j != i));
                    order.sort_by(|&a, &b| d2[i * n + a].total_cmp(&d2[i * n + b]).then(a.cmp(&b)));
                    for &j in &order[..k] {
                        w[i * n + j] = 1.0;
                        w[j * n + i] = 1.0;
                    }
                }
            }
            Kernel::Rbf { gamma } => {
                let gamma = match gamma {
                    Gamma::Fixed(g) => g,
                    Gamma::MedianScaled(s) => {
                        let pairs: Vec<f64> = (0..n)
                            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                            .map(|(i, j)| d2[i * n + j])
                            .collect();
                        let m = if pairs.is_empty() { 0.0 } else { median(&pairs) };
                        if m <= 0.0 {
                            return Err(Error::Input(
                                "median pairwise distance is zero; cannot scale gamma".into(),
                            ));
                        }
                        s / m
                    }
                };
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            w[i * n + j] = (-gamma * d2[i * n + j]).exp();
                        }
                    }
                }
            }
        }
        let edges = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let v = w[i * n + j];
                        (v > 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.edges[i]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.edges[i].iter().map(|e| e.1).sum()
    }

    /// Dense copy, for tests and small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in self.edges.iter().enumerate() {
            for &(j, v) in row {
                m[i][j] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_graph_is_symmetric_without_self_loops() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![(i * i) as f64]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let a = Affinity::build(&refs, &Kernel::Knn { n_neighbors: 2 }).unwrap();
        let m = a.to_dense();
        for i in 0..6 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..6 {
                assert_eq!(m[i][j], m[j][i]);
            }
            assert!(a.neighbors(i).len() >= 2);
        }
    }

    #[test]
    fn rbf_weights() {
        let pts = [vec![0.0], vec![1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let a = Affinity::build(&refs, &Kernel::Rbf { gamma: Gamma::Fixed(2.0) }).unwrap();
        assert!((a.to_dense()[0][1] - (-2.0f64).exp()).abs() < 1e-15);
    }
}

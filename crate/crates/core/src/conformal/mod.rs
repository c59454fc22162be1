//! Inductive conformal prediction with a kNN distance-ratio nonconformity
//! measure.
//!
//! For a sample `x` and hypothesised label `y`,
//!
//! ```text
//! a(x, y) = sum of distances to the k nearest rows labelled y
//!         / sum of distances to the k nearest rows labelled otherwise
//! ```
//!
//! and its p-value is `(#{j : a_j >= a(x, y)} + 1) / (n + 1)` over the
//! calibration scores `a_j`. The proper-training and calibration sets are the
//! same set: each reference row is scored against the others, leaving itself
//! out. By default the calibration pool for hypothesis `y` only holds rows
//! whose true label is `y`.
//!
//! A prediction is trusted when its credibility (largest p-value) reaches
//! `epsilon` and the largest p-value is at least `ratio_threshold` times the
//! second largest.

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::dist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationPool {
    /// Scores of reference rows whose true label is the hypothesis.
    #[default]
    PerLabel,
    /// Scores of every reference row under its own label.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalConfig {
    pub k: usize,
    pub epsilon: f64,
    pub ratio_threshold: f64,
    #[serde(default)]
    pub calibration: CalibrationPool,
}

pub const DEFAULT_RATIO_THRESHOLD: f64 = 3.0;

impl ConformalConfig {
    pub fn new(k: usize, epsilon: f64) -> Self {
        Self {
            k,
            epsilon,
            ratio_threshold: DEFAULT_RATIO_THRESHOLD,
            calibration: CalibrationPool::PerLabel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("conformal k must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        // +inf is allowed: it rejects everything
        if self.ratio_threshold.is_nan() || self.ratio_threshold < 1.0 {
            return Err(Error::Config(format!(
                "ratio threshold must be >= 1, got {}",
                self.ratio_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonconformityScore {
    /// Non-negative; `+inf` when only the other-label distances vanish.
    pub value: f64,
    pub label: usize,
}

fn ratio(same: f64, other: f64) -> f64 {
    if other > 0.0 {
        same / other
    } else if same > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Distances from `x` to every reference row, nearest first, lower index first
/// on ties; `exclude` is left out.
fn sorted_neighbours(x: &[f64], reference: &LabeledDataset, labels: &[usize], exclude: Option<usize>) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = (0..reference.len())
        .filter(|&j| Some(j) != exclude)
        .map(|j| (dist(x, reference.row(j)), labels[j]))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Score for hypothesis `y` from a pre-sorted neighbour list. `None` when
/// fewer than `k` rows of either kind exist.
fn score_sorted(sorted: &[(f64, usize)], y: usize, k: usize) -> Option<f64> {
    let (mut same, mut other) = (0.0, 0.0);
    let (mut n_same, mut n_other) = (0, 0);
    for &(d, l) in sorted {
        if l == y {
            if n_same < k {
                same += d;
                n_same += 1;
            }
        } else if n_other < k {
            other += d;
            n_other += 1;
        }
        if n_same == k && n_other == k {
            break;
        }
    }
    (n_same == k && n_other == k).then(|| ratio(same, other))
}

/// Nonconformity of `x` under hypothesis `y` against `reference`.
///
/// `exclude` removes one reference row from the neighbour search, for
/// scoring a row of the reference set itself.
pub fn nonconformity(
    x: &[f64],
    y: usize,
    reference: &LabeledDataset,
    k: usize,
    exclude: Option<usize>,
) -> Result<NonconformityScore> {
    if k == 0 {
        return Err(Error::Config("conformal k must be >= 1".into()));
    }
    if x.len() != reference.n_features() {
        return Err(Error::Input(format!(
            "sample has {} features, reference {}",
            x.len(),
            reference.n_features()
        )));
    }
    let labels = reference.known_labels()?;
    let sorted = sorted_neighbours(x, reference, &labels, exclude);
    let n_same = sorted.iter().filter(|e| e.1 == y).count();
    let n_other = sorted.len() - n_same;
    score_sorted(&sorted, y, k)
        .map(|value| NonconformityScore { value, label: y })
        .ok_or_else(|| {
            Error::Config(format!(
                "label {y}: need {k} same-label and {k} other-label reference rows, \
                 have {n_same} and {n_other}"
            ))
        })
}

/// `(#{a in calibration : a >= score} + 1) / (len + 1)`.
pub fn conformal_p_value(score: f64, calibration: &[f64]) -> f64 {
    let at_least = calibration.iter().filter(|&&a| a >= score).count();
    (at_least + 1) as f64 / (calibration.len() + 1) as f64
}

/// p-values of one sample over all labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueRow {
    /// Indexed by label. Labels the reference cannot score carry 0.
    pub p: Vec<f64>,
}

impl PValueRow {
    /// Top label, lowest index on ties.
    pub fn predicted(&self) -> usize {
        crate::linalg::argmax(&self.p)
    }

    pub fn credibility(&self) -> f64 {
        self.p[self.predicted()]
    }

    pub fn second(&self) -> f64 {
        let top = self.predicted();
        self.p
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != top)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max)
    }

    pub fn confidence(&self) -> f64 {
        1.0 - self.second()
    }

    /// Both acceptance criteria; a tie for the top p-value is rejected.
    pub fn accepted(&self, config: &ConformalConfig) -> bool {
        let (top, second) = (self.credibility(), self.second());
        top > second && top >= config.epsilon && top >= config.ratio_threshold * second
    }
}

/// Calibrated predictor over a fixed reference set.
#[derive(Debug, Clone)]
pub struct ConformalPredictor<'a> {
    reference: &'a LabeledDataset,
    labels: Vec<usize>,
    config: ConformalConfig,
    /// Per label: calibration scores, or `None` when the label cannot be scored.
    pools: Vec<Option<Vec<f64>>>,
}

impl<'a> ConformalPredictor<'a> {
    /// Fails if any label lacks the rows needed for leave-one-out scoring
    /// (`k + 1` of its own, `k` of others).
    pub fn new(reference: &'a LabeledDataset, config: ConformalConfig) -> Result<Self> {
        let p = Self::lenient(reference, config)?;
        if let Some(y) = p.pools.iter().position(Option::is_none) {
            let counts = reference.class_counts();
            return Err(Error::Config(format!(
                "label {y}: {} reference row(s), leave-one-out scoring with k = {} needs {} \
                 of its own and {} of other labels",
                counts[y],
                config.k,
                config.k + 1,
                config.k
            )));
        }
        Ok(p)
    }

    /// Like [`new`](Self::new), but labels that cannot be scored are skipped:
    /// their hypothesis gets an infinite score and a p-value of 0.
    pub fn lenient(reference: &'a LabeledDataset, config: ConformalConfig) -> Result<Self> {
        config.validate()?;
        let labels = reference.known_labels()?;
        let counts = reference.class_counts();
        let n = labels.len();
        let k = config.k;
        let supported: Vec<bool> = counts.iter().map(|&c| c > k && n - c >= k).collect();

        let own_scores: Vec<Option<f64>> = (0..n)
            .map(|j| {
                if !supported[labels[j]] {
                    return None;
                }
                let sorted = sorted_neighbours(reference.row(j), reference, &labels, Some(j));
                score_sorted(&sorted, labels[j], k)
            })
            .collect();

        let pools = (0..reference.n_classes())
            .map(|y| {
                if !supported[y] {
                    return None;
                }
                Some(match config.calibration {
                    CalibrationPool::PerLabel => (0..n)
                        .filter(|&j| labels[j] == y)
                        .filter_map(|j| own_scores[j])
                        .collect(),
                    CalibrationPool::Pooled => own_scores.iter().flatten().copied().collect(),
                })
            })
            .collect();
        Ok(Self {
            reference,
            labels,
            config,
            pools,
        })
    }

    pub fn config(&self) -> &ConformalConfig {
        &self.config
    }

    /// Calibration scores for hypothesis `y`.
    pub fn calibration(&self, y: usize) -> Option<&[f64]> {
        self.pools.get(y).and_then(|p| p.as_deref())
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<NonconformityScore>> {
        if x.len() != self.reference.n_features() {
            return Err(Error::Input(format!(
                "sample has {} features, reference {}",
                x.len(),
                self.reference.n_features()
            )));
        }
        let sorted = sorted_neighbours(x, self.reference, &self.labels, None);
        Ok((0..self.pools.len())
            .map(|y| NonconformityScore {
                value: self.pools[y]
                    .as_ref()
                    .and_then(|_| score_sorted(&sorted, y, self.config.k))
                    .unwrap_or(f64::INFINITY),
                label: y,
            })
            .collect())
    }

    pub fn p_values(&self, x: &[f64]) -> Result<PValueRow> {
        let scores = self.scores(x)?;
        let p = scores
            .iter()
            .zip(&self.pools)
            .map(|(s, pool)| pool.as_ref().map_or(0.0, |pool| conformal_p_value(s.value, pool)))
            .collect();
        Ok(PValueRow { p })
    }

    pub fn p_values_all(&self, rows: &LabeledDataset) -> Result<Vec<PValueRow>> {
        rows.rows().map(|x| self.p_values(x)).collect()
    }
}

/// p-values of `x` against `reference`, failing on unscorable labels.
pub fn p_values(x: &[f64], reference: &LabeledDataset, config: &ConformalConfig) -> Result<PValueRow> {
    ConformalPredictor::new(reference, *config)?.p_values(x)
}

/// Indices and top labels of the rows passing both criteria.
pub fn filter(rows: &[PValueRow], config: &ConformalConfig) -> Vec<(usize, usize)> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.accepted(config))
        .map(|(i, r)| (i, r.predicted()))
        .collect()
}

/// Candidate `(k, epsilon)` pairs, `k` outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalGrid {
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_ratio")]
    pub ratio_threshold: f64,
    #[serde(default)]
    pub calibration: CalibrationPool,
}

fn default_k() -> Vec<usize> {
    vec![1, 3, 5]
}
fn default_epsilon() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_ratio() -> f64 {
    DEFAULT_RATIO_THRESHOLD
}

impl Default for ConformalGrid {
    fn default() -> Self {
        Self {
            k: default_k(),
            epsilon: default_epsilon(),
            ratio_threshold: default_ratio(),
            calibration: CalibrationPool::PerLabel,
        }
    }
}

impl ConformalGrid {
    pub fn candidates(&self) -> Vec<ConformalConfig> {
        self.k
            .iter()
            .flat_map(|&k| {
                self.epsilon.iter().map(move |&epsilon| ConformalConfig {
                    k,
                    epsilon,
                    ratio_threshold: self.ratio_threshold,
                    calibration: self.calibration,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::test_support::clusters;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// Direct evaluation: per-label distance lists sorted independently.
    fn brute_score(x: &[f64], y: usize, reference: &LabeledDataset, k: usize, exclude: Option<usize>) -> f64 {
        let mut same = Vec::new();
        let mut other = Vec::new();
        for j in 0..reference.len() {
            if Some(j) == exclude {
                continue;
            }
            let d: f64 = x
                .iter()
                .zip(reference.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if reference.label(j) == Some(y) {
                same.push(d);
            } else {
                other.push(d);
            }
        }
        same.sort_by(f64::total_cmp);
        other.sort_by(f64::total_cmp);
        let s: f64 = same[..k].iter().sum();
        let o: f64 = other[..k].iter().sum();
        if o == 0.0 {
            if s == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            s / o
        }
    }

    fn brute_p(x: &[f64], y: usize, reference: &LabeledDataset, k: usize) -> f64 {
        let a = brute_score(x, y, reference, k, None);
        let pool: Vec<f64> = (0..reference.len())
            .filter(|&j| reference.label(j) == Some(y))
            .map(|j| brute_score(reference.row(j), y, reference, k, Some(j)))
            .collect();
        let ge = pool.iter().filter(|&&v| v >= a).count();
        (ge + 1) as f64 / (pool.len() + 1) as f64
    }

    fn three_blobs(per_class: usize, sd: f64, seed: u64) -> LabeledDataset {
        clusters(
            &[vec![0.0, 0.0, 0.0], vec![1.5, 0.0, 0.5], vec![0.0, 1.5, -0.5]],
            per_class,
            sd,
            seed,
        )
    }

    fn line() -> LabeledDataset {
        LabeledDataset::labeled(
            array![[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]],
            vec![0, 0, 0, 1, 1, 1],
            2,
        )
        .unwrap()
    }

    #[test]
    fn score_on_a_line() {
        let r = line();
        // nearest same: 1, 0 (+1, +0); nearest other: 10, 11 (+9, +10)
        let s = nonconformity(&[1.0], 0, &r, 2, None).unwrap();
        assert!((s.value - 1.0 / 19.0).abs() < 1e-15);
        let s = nonconformity(&[1.0], 1, &r, 2, None).unwrap();
        assert!((s.value - 19.0).abs() < 1e-15);
        // excluding row 1 itself
        let s = nonconformity(&[1.0], 0, &r, 2, Some(1)).unwrap();
        assert!((s.value - 2.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators() {
        let r = LabeledDataset::labeled(array![[0.0], [0.0], [1.0], [1.0]], vec![0, 1, 0, 1], 2).unwrap();
        // exact duplicate of a same-label and an other-label row
        assert_eq!(nonconformity(&[0.0], 0, &r, 1, None).unwrap().value, 0.0);
        let r = LabeledDataset::labeled(array![[0.0], [5.0], [5.0]], vec![1, 0, 0], 2).unwrap();
        assert_eq!(nonconformity(&[0.0], 0, &r, 1, None).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn too_few_rows_is_an_error_naming_the_label() {
        let r = line();
        let err = nonconformity(&[0.0], 1, &r, 4, None).unwrap_err().to_string();
        assert!(err.contains("label 1"), "{err}");
        let err = ConformalPredictor::new(&r, ConformalConfig::new(3, 0.1)).unwrap_err();
        assert!(err.to_string().contains("label 0"), "{err}");
    }

    #[test]
    fn matches_brute_force_oracle() {
        let r = three_blobs(12, 0.8, 5);
        let q = three_blobs(5, 0.8, 6);
        for k in [1, 3, 5] {
            let pred = ConformalPredictor::new(&r, ConformalConfig::new(k, 0.1)).unwrap();
            for x in q.rows() {
                let row = pred.p_values(x).unwrap();
                let scores = pred.scores(x).unwrap();
                for y in 0..3 {
                    let a = brute_score(x, y, &r, k, None);
                    assert!((scores[y].value - a).abs() <= 1e-12 * a.max(1.0));
                    assert!((row.p[y] - brute_p(x, y, &r, k)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn extreme_ranks() {
        let r = line();
        let pred = ConformalPredictor::new(&r, ConformalConfig::new(1, 0.1)).unwrap();
        // far more conforming than every calibration row
        let row = pred.p_values(&[1.0]).unwrap();
        assert_eq!(row.p[0], 1.0);
        // less conforming than every calibration row
        assert_eq!(row.p[1], 0.25);
        assert_eq!(conformal_p_value(7.0, &[]), 1.0);
    }

    #[test]
    fn pooled_calibration_uses_every_row() {
        let r = three_blobs(10, 0.8, 3);
        let mut cfg = ConformalConfig::new(3, 0.1);
        cfg.calibration = CalibrationPool::Pooled;
        let pred = ConformalPredictor::new(&r, cfg).unwrap();
        for y in 0..3 {
            assert_eq!(pred.calibration(y).unwrap().len(), 30);
        }
        let row = pred.p_values(&[0.0, 0.0, 0.0]).unwrap();
        assert!(row.p.iter().all(|&p| (1.0 / 31.0..=1.0).contains(&p)));
    }

    #[test]
    fn lenient_gives_zero_for_unscorable_labels() {
        let r = LabeledDataset::labeled(
            array![[0.0], [1.0], [2.0], [10.0], [11.0], [12.0], [50.0]],
            vec![0, 0, 0, 1, 1, 1, 2],
            3,
        )
        .unwrap();
        let cfg = ConformalConfig::new(1, 0.1);
        assert!(ConformalPredictor::new(&r, cfg).is_err());
        let pred = ConformalPredictor::lenient(&r, cfg).unwrap();
        let row = pred.p_values(&[50.0]).unwrap();
        assert_eq!(row.p[2], 0.0);
        assert!(pred.calibration(2).is_none());
        // the lone class-2 row still counts as an "other" neighbour
        assert!(row.p[1] > 0.0);
    }

    fn row(p: &[f64]) -> PValueRow {
        PValueRow { p: p.to_vec() }
    }

    #[test]
    fn filter_criteria() {
        let cfg = ConformalConfig::new(1, 0.05);
        assert!(row(&[0.9, 0.2]).accepted(&cfg));
        // ratio 0.9 / 0.4 < 3
        assert!(!row(&[0.9, 0.4]).accepted(&cfg));
        // credibility below epsilon
        assert!(!row(&[0.04, 0.01]).accepted(&cfg));
        // tied top p-values
        assert!(!row(&[0.3, 0.3, 0.0]).accepted(&cfg));
        assert_eq!(row(&[0.1, 0.6, 0.2]).predicted(), 1);
        assert_eq!(row(&[0.1, 0.6, 0.2]).second(), 0.2);
        assert!((row(&[0.1, 0.6, 0.2]).confidence() - 0.8).abs() < 1e-15);
        let rows = [row(&[0.9, 0.2]), row(&[0.9, 0.4]), row(&[0.01, 0.8])];
        assert_eq!(filter(&rows, &cfg), vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn infinite_ratio_rejects_everything() {
        let mut cfg = ConformalConfig::new(1, 0.05);
        cfg.ratio_threshold = f64::INFINITY;
        cfg.validate().unwrap();
        assert!(!row(&[1.0, 0.05]).accepted(&cfg));
        // 0 * inf is NaN, which must not pass either
        assert!(!row(&[1.0, 0.0]).accepted(&cfg));
    }

    #[test]
    fn vanishing_epsilon_with_unit_ratio_accepts_all_but_ties() {
        let cfg = ConformalConfig {
            k: 1,
            epsilon: f64::MIN_POSITIVE,
            ratio_threshold: 1.0,
            calibration: CalibrationPool::PerLabel,
        };
        let r = three_blobs(10, 1.5, 1);
        let pred = ConformalPredictor::new(&r, cfg).unwrap();
        let rows = pred.p_values_all(&three_blobs(20, 1.5, 2)).unwrap();
        let accepted = filter(&rows, &cfg).len();
        let untied = rows.iter().filter(|r| r.credibility() > r.second()).count();
        assert_eq!(accepted, untied);
    }

    #[test]
    fn invalid_configs() {
        assert!(ConformalConfig::new(0, 0.1).validate().is_err());
        assert!(ConformalConfig::new(1, 0.0).validate().is_err());
        assert!(ConformalConfig::new(1, 1.0).validate().is_err());
        let mut c = ConformalConfig::new(1, 0.1);
        c.ratio_threshold = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_order() {
        let g = ConformalGrid::default();
        let c = g.candidates();
        assert_eq!(c.len(), 9);
        assert_eq!((c[0].k, c[0].epsilon), (1, 0.05));
        assert_eq!((c[1].k, c[1].epsilon), (1, 0.1));
        assert_eq!((c[8].k, c[8].epsilon), (5, 0.2));
    }

    #[test]
    fn power_of_two_scaling_is_exact() {
        let r = three_blobs(10, 1.0, 9);
        let q = three_blobs(4, 1.0, 10);
        let scale = |d: &LabeledDataset| {
            LabeledDataset::new(d.features().mapv(|v| v * 4.0), d.labels().to_vec(), 3).unwrap()
        };
        let (r4, q4) = (scale(&r), scale(&q));
        let cfg = ConformalConfig::new(3, 0.1);
        let a = ConformalPredictor::new(&r, cfg).unwrap().p_values_all(&q).unwrap();
        let b = ConformalPredictor::new(&r4, cfg).unwrap().p_values_all(&q4).unwrap();
        assert_eq!(a, b);
    }

    /// p-values of the true label are (nearly) uniform on an exchangeable stream.
    #[test]
    fn empirical_validity() {
        let means = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let train = clusters(&means, 40, 1.0, 77);
        let pred = ConformalPredictor::new(&train, ConformalConfig::new(3, 0.1)).unwrap();
        let mut rng = crate::seed::rng(78);
        let n = 2000;
        let mut p_true = Vec::with_capacity(n);
        for i in 0..n {
            let y = rng.random_range(0..3);
            let one = clusters(&means[y..=y], 1, 1.0, 1000 + i as u64);
            p_true.push(pred.p_values(one.row(0)).unwrap().p[y]);
        }
        for t in [0.05, 0.1, 0.2, 0.3, 0.5] {
            let frac = p_true.iter().filter(|&&p| p <= t).count() as f64 / n as f64;
            assert!(frac <= t + 0.03, "P(p <= {t}) = {frac}");
        }
    }

    proptest! {
        #[test]
        fn p_values_in_range(seed in 0u64..500, k in 1usize..4) {
            let r = three_blobs(6, 1.0, seed);
            let pred = ConformalPredictor::new(&r, ConformalConfig::new(k, 0.1)).unwrap();
            let q = three_blobs(2, 1.0, seed + 1);
            for x in q.rows() {
                for &p in &pred.p_values(x).unwrap().p {
                    prop_assert!((1.0 / 7.0..=1.0).contains(&p));
                }
            }
        }

        #[test]
        fn scores_are_scale_invariant(seed in 0u64..500, s in 0.01f64..100.0) {
            let r = three_blobs(6, 1.0, seed);
            let scaled = LabeledDataset::new(r.features().mapv(|v| v * s), r.labels().to_vec(), 3).unwrap();
            let x = [0.3, -0.2, 0.1];
            let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
            for y in 0..3 {
                let a = nonconformity(&x, y, &r, 2, None).unwrap().value;
                let b = nonconformity(&xs, y, &scaled, 2, None).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }

        #[test]
        fn adding_a_larger_score_raises_p(
            pool in proptest::collection::vec(0.0f64..10.0, 0..30),
            a in 0.0f64..10.0,
            extra in 0.0f64..10.0,
        ) {
            let before = conformal_p_value(a, &pool);
            let mut grown = pool.clone();
            grown.push(extra);
            let after = conformal_p_value(a, &grown);
            if extra >= a {
                prop_assert!(after >= before);
            } else {
                prop_assert!(after <= before);
            }
        }
    }
}

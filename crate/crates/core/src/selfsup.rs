//! Online pseudo-labelers for unrevealed steps.
//!
//! All three models are anchored to labels: every label seen in a labeled
//! example owns exactly one centroid / Gaussian, or contributes stored
//! neighbours. `predict` therefore only ever names a label that was observed.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Neighbours consulted by the KNN labeler.
pub const KNN_K: usize = 5;
/// Most recent labeled contexts kept by the KNN labeler.
pub const KNN_CAPACITY: usize = 5000;
/// Lower bound on every per-dimension GMM variance.
pub const GMM_VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfSupKind {
    Kmeans,
    Knn,
    Gmm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Centroid {
    mean: Vec<f64>,
    count: u64,
}

/// Welford running mean and sum of squared deviations per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DiagGaussian {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl DiagGaussian {
    fn variance(&self, j: usize) -> f64 {
        (self.m2[j] / self.count as f64).max(GMM_VARIANCE_FLOOR)
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let var = self.variance(j);
                let diff = v - self.mean[j];
                -0.5 * (ln_2pi + var.ln() + diff * diff / var)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Stats {
    Kmeans(Vec<Centroid>),
    Knn {
        k: usize,
        capacity: usize,
        /// (context, label index), oldest first.
        history: VecDeque<(Vec<f64>, usize)>,
    },
    Gmm(Vec<DiagGaussian>),
}

/// A label-anchored online clusterer over labels of type `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSupModel<L> {
    /// Labels in first-seen order; statistics are indexed alike.
    labels: Vec<L>,
    stats: Stats,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<L: Clone + PartialEq> SelfSupModel<L> {
    pub fn new(kind: SelfSupKind) -> Self {
        let stats = match kind {
            SelfSupKind::Kmeans => Stats::Kmeans(Vec::new()),
            SelfSupKind::Knn => Stats::Knn {
                k: KNN_K,
                capacity: KNN_CAPACITY,
                history: VecDeque::new(),
            },
            SelfSupKind::Gmm => Stats::Gmm(Vec::new()),
        };
        Self {
            labels: Vec::new(),
            stats,
        }
    }

    /// KNN labeler with non-default neighbourhood size and history bound.
    pub fn knn(k: usize, capacity: usize) -> Self {
        assert!(k > 0 && capacity > 0);
        Self {
            labels: Vec::new(),
            stats: Stats::Knn {
                k,
                capacity,
                history: VecDeque::new(),
            },
        }
    }

    pub fn kind(&self) -> SelfSupKind {
        match self.stats {
            Stats::Kmeans(_) => SelfSupKind::Kmeans,
            Stats::Knn { .. } => SelfSupKind::Knn,
            Stats::Gmm(_) => SelfSupKind::Gmm,
        }
    }

    pub fn labels_seen(&self) -> &[L] {
        &self.labels
    }

    fn label_index(&mut self, label: &L) -> (usize, bool) {
        match self.labels.iter().position(|l| l == label) {
            Some(i) => (i, false),
            None => {
                self.labels.push(label.clone());
                (self.labels.len() - 1, true)
            }
        }
    }

    pub fn observe_labeled(&mut self, x: &[f64], label: &L) {
        debug_assert!(x.iter().all(|v| v.is_finite()));
        let (idx, is_new) = self.label_index(label);
        match &mut self.stats {
            Stats::Kmeans(centroids) => {
                if is_new {
                    centroids.push(Centroid {
                        mean: x.to_vec(),
                        count: 1,
                    });
                } else {
                    let c = &mut centroids[idx];
                    c.count += 1;
                    let n = c.count as f64;
                    for (m, v) in c.mean.iter_mut().zip(x) {
                        *m += (v - *m) / n;
                    }
                }
            }
            Stats::Knn {
                capacity, history, ..
            } => {
                if history.len() == *capacity {
                    history.pop_front();
                }
                history.push_back((x.to_vec(), idx));
            }
            Stats::Gmm(gaussians) => {
                if is_new {
                    gaussians.push(DiagGaussian {
                        count: 0,
                        mean: vec![0.0; x.len()],
                        m2: vec![0.0; x.len()],
                    });
                }
                let g = &mut gaussians[idx];
                g.count += 1;
                let n = g.count as f64;
                for (j, &v) in x.iter().enumerate() {
                    let delta = v - g.mean[j];
                    g.mean[j] += delta / n;
                    g.m2[j] += delta * (v - g.mean[j]);
                }
            }
        }
    }

    /// Pseudo-label for `x`, or `None` before any labeled example.
    pub fn predict(&self, x: &[f64]) -> Option<L> {
        let idx = match &self.stats {
            Stats::Kmeans(centroids) => first_max(centroids.iter().map(|c| -sq_dist(&c.mean, x))),
            Stats::Gmm(gaussians) => first_max(gaussians.iter().map(|g| g.log_likelihood(x))),
            Stats::Knn { k, history, .. } => knn_vote(history, x, *k),
        }?;
        Some(self.labels[idx].clone())
    }

    /// Centroid of `label` (K-means only).
    pub fn centroid(&self, label: &L) -> Option<&[f64]> {
        let i = self.labels.iter().position(|l| l == label)?;
        match &self.stats {
            Stats::Kmeans(c) => Some(&c[i].mean),
            _ => None,
        }
    }

    /// Mean and floored population variance of `label` (GMM only).
    pub fn gaussian(&self, label: &L) -> Option<(Vec<f64>, Vec<f64>)> {
        let i = self.labels.iter().position(|l| l == label)?;
        match &self.stats {
            Stats::Gmm(g) => {
                let g = &g[i];
                Some((g.mean.clone(), (0..g.mean.len()).map(|j| g.variance(j)).collect()))
            }
            _ => None,
        }
    }

    /// Stored KNN examples, oldest first.
    pub fn history(&self) -> Vec<(&[f64], &L)> {
        match &self.stats {
            Stats::Knn { history, .. } => history
                .iter()
                .map(|(x, i)| (x.as_slice(), &self.labels[*i]))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        let n = self.labels.len();
        match &self.stats {
            Stats::Kmeans(c) => c.len() == n && c.iter().all(|c| c.mean.iter().all(|v| v.is_finite())),
            Stats::Gmm(g) => g.len() == n && g.iter().all(|g| g.count > 0 && g.mean.len() == g.m2.len()),
            Stats::Knn { k, history, .. } => *k > 0 && history.iter().all(|(_, i)| *i < n),
        }
    }
}

/// First index attaining the maximum; NaN never wins.
fn first_max(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Majority label among the `k` nearest stored examples. Distance ties keep
/// insertion order; vote ties go to the label of the nearest neighbour.
fn knn_vote(history: &VecDeque<(Vec<f64>, usize)>, x: &[f64], k: usize) -> Option<usize> {
    if history.is_empty() {
        return None;
    }
    let mut order: Vec<(f64, usize)> = history
        .iter()
        .map(|(h, label)| (sq_dist(h, x), *label))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order.truncate(k);

    let mut votes: Vec<(usize, usize)> = Vec::new(); // (label, count) in nearest-first order
    for &(_, label) in &order {
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => votes.push((label, 1)),
        }
    }
    let top = votes.iter().map(|(_, c)| *c).max()?;
    votes.iter().find(|(_, c)| *c == top).map(|(l, _)| *l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_predicts_nothing() {
        for kind in [SelfSupKind::Kmeans, SelfSupKind::Knn, SelfSupKind::Gmm] {
            let m: SelfSupModel<&str> = SelfSupModel::new(kind);
            assert_eq!(m.predict(&[0.0, 0.0]), None);
        }
    }

    #[test]
    fn kmeans_running_mean() {
        let mut m = SelfSupModel::new(SelfSupKind::Kmeans);
        m.observe_labeled(&[2.0, 2.0], &"L");
        assert_eq!(m.centroid(&"L").unwrap(), &[2.0, 2.0]);
        m.observe_labeled(&[0.0, 0.0], &"L");
        assert_eq!(m.centroid(&"L").unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn kmeans_nearest_centroid() {
        let mut m = SelfSupModel::new(SelfSupKind::Kmeans);
        m.observe_labeled(&[0.0, 0.0], &'A');
        m.observe_labeled(&[10.0, 0.0], &'B');
        assert_eq!(m.predict(&[1.0, 0.0]), Some('A'));
        assert_eq!(m.predict(&[9.0, 0.0]), Some('B'));
        // equidistant: first label wins
        assert_eq!(m.predict(&[5.0, 0.0]), Some('A'));
    }

    #[test]
    fn gmm_population_variance() {
        let mut m = SelfSupModel::new(SelfSupKind::Gmm);
        for x in [[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]] {
            m.observe_labeled(&x, &"L");
        }
        let (mean, var) = m.gaussian(&"L").unwrap();
        assert_eq!(mean, vec![2.0, 0.0]);
        assert!((var[0] - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(var[1], GMM_VARIANCE_FLOOR);
    }

    #[test]
    fn knn_majority_and_tie_break() {
        let mut m = SelfSupModel::new(SelfSupKind::Knn);
        for x in [[0.1, 0.0], [0.0, 0.2], [-0.1, 0.1]] {
            m.observe_labeled(&x, &'A');
        }
        for x in [[9.0, 9.0], [8.0, 9.5]] {
            m.observe_labeled(&x, &'B');
        }
        assert_eq!(m.predict(&[0.0, 0.0]), Some('A'));

        // 2-2-1 vote: the label holding the single nearest neighbour wins
        let mut m = SelfSupModel::new(SelfSupKind::Knn);
        m.observe_labeled(&[3.0], &'A');
        m.observe_labeled(&[4.0], &'A');
        m.observe_labeled(&[1.0], &'B');
        m.observe_labeled(&[5.0], &'B');
        m.observe_labeled(&[2.0], &'C');
        assert_eq!(m.predict(&[0.0]), Some('B'));
    }

    #[test]
    fn knn_history_is_bounded_fifo() {
        let mut m = SelfSupModel::knn(1, 3);
        for i in 0..5 {
            m.observe_labeled(&[f64::from(i)], &i);
        }
        let h = m.history();
        assert_eq!(h.len(), 3);
        assert_eq!(*h[0].1, 2);
        // label 0 was evicted, so it can no longer be predicted
        assert_eq!(m.predict(&[0.0]), Some(2));
        assert_eq!(m.labels_seen().len(), 5);
    }
}

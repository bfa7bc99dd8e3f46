//! Lloyd's k-means with k-means++ seeding, used as a desk-scale stand-in for
//! the ground-truth clustering suite.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::dataset::{squared_euclidean, Dataset, Partition};
use crate::error::{ClmError, Result};
use crate::evm::EvmKind;
use crate::rng;

/// Independent k-means++ starts per call; the lowest-inertia run wins.
const RESTARTS: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub partition: Partition,
    pub inertia: f64,
    /// Within-cluster sum of squares after every update step.
    pub history: Vec<f64>,
}

pub fn kmeans(ds: &Dataset, k: usize, seed: u64, max_iters: usize) -> Result<Partition> {
    kmeans_with_history(ds, k, seed, max_iters).map(|fit| fit.partition)
}

pub fn kmeans_with_history(ds: &Dataset, k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    if k == 0 || k > ds.n_points() {
        return Err(ClmError::InvalidArgument(format!(
            "k must lie in [1, {}], got {k}",
            ds.n_points()
        )));
    }
    let mut best: Option<KMeansFit> = None;
    for restart in 0..RESTARTS {
        let fit = lloyd(ds.points(), k, seed, restart, max_iters.max(1));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, r: &mut impl Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    centers.row_mut(0).assign(&points.row(r.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_euclidean(points.row(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random_range(0.0..total);
            nearest
                .iter()
                .position(|&d| {
                    target -= d;
                    target < 0.0
                })
                .unwrap_or(n - 1)
        } else {
            r.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_euclidean(points.row(i), centers.row(c)));
        }
    }
    centers
}

fn lloyd(points: ArrayView2<'_, f64>, k: usize, seed: u64, restart: u64, max_iters: usize) -> KMeansFit {
    let n = points.nrows();
    let mut r = rng::stream(seed, restart, 0, 0);
    let mut centers = plus_plus(points, k, &mut r);
    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..max_iters {
        let mut dist = vec![0.0; n];
        let mut next = vec![0; n];
        for i in 0..n {
            let (c, d) = (0..k)
                .map(|c| (c, squared_euclidean(points.row(i), centers.row(c))))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            next[i] = c;
            dist[i] = d;
        }
        reseed_empty(&mut next, &mut dist, k);
        let changed = next != assign;
        assign = next;
        centers = means(points, &assign, k);
        history.push(inertia(points, &assign, &centers));
        if !changed {
            break;
        }
    }
    let partition = Partition::from_assignments(&assign);
    KMeansFit {
        partition,
        inertia: *history.last().expect("at least one iteration"),
        history,
    }
}

/// Gives every empty cluster the point farthest from its current centre,
/// taken from a cluster that can spare it.
fn reseed_empty(assign: &mut [usize], dist: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assign.iter() {
        counts[a] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..assign.len())
            .filter(|&i| counts[assign[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = far {
            counts[assign[i]] -= 1;
            assign[i] = c;
            counts[c] = 1;
            dist[i] = 0.0;
        }
    }
}

fn means(points: ArrayView2<'_, f64>, assign: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = Array1::<f64>::zeros(k);
    for (i, &a) in assign.iter().enumerate() {
        let mut row = sums.row_mut(a);
        row += &points.row(i);
        counts[a] += 1.0;
    }
    for (mut row, &c) in sums.outer_iter_mut().zip(counts.iter()) {
        if c > 0.0 {
            row /= c;
        }
    }
    sums
}

fn inertia(points: ArrayView2<'_, f64>, assign: &[usize], centers: &Array2<f64>) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &a)| squared_euclidean(points.row(i), centers.row(a)))
        .sum()
}

/// `2 ..= 3 * n_classes`.
pub fn default_k_grid(n_classes: usize) -> Vec<usize> {
    (2..=(3 * n_classes).max(2)).collect()
}

/// Best external score of k-means clusterings against the class labels over
/// every `(k, seed)` candidate. Single-technique approximation of the
/// ground-truth CLM. Candidates with `k > |X|` are skipped.
pub fn approx_ground_truth_clm(ds: &Dataset, evm: EvmKind, k_grid: &[usize], seeds: &[u64]) -> Result<f64> {
    let classes = ds.class_partition();
    let mut best = f64::NEG_INFINITY;
    for &k in k_grid.iter().filter(|&&k| k >= 1 && k <= ds.n_points()) {
        for &seed in seeds {
            let clusters = kmeans(ds, k, seed, 100)?;
            best = best.max(evm.evaluate(&classes, &clusters)?);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(ClmError::InvalidArgument("no usable (k, seed) candidate".into()));
    }
    Ok(best)
}

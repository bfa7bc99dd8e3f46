//! Pairwise rank stability of techniques across random benchmark subsets.

use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};
use crate::rng;

pub const DEFAULT_SUBSET_SIZE: usize = 10;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub techniques: Vec<String>,
    /// `p[a][b]`: share of trials where technique `a` has the larger subset
    /// mean; ties count one half.
    pub p: Array2<f64>,
    /// `max(p, 1 - p)` elementwise, symmetric, in `[0.5, 1]`.
    pub pairwise_stability: Array2<f64>,
    /// Techniques ordered by mean score over all datasets, best first.
    pub ranking: Vec<(String, f64)>,
}

/// Subset-resampling stability of technique comparisons. `scores` has one
/// row per dataset and one column per technique.
pub fn rank_stability(
    scores: ArrayView2<'_, f64>,
    techniques: &[String],
    subset_size: usize,
    trials: usize,
    seed: u64,
) -> Result<StabilityResult> {
    let (n_sets, n_tech) = scores.dim();
    if techniques.len() != n_tech {
        return Err(ClmError::InvalidArgument(format!(
            "{} technique names for {n_tech} columns",
            techniques.len()
        )));
    }
    if subset_size == 0 || subset_size > n_sets {
        return Err(ClmError::InvalidArgument(format!(
            "subset size {subset_size} outside [1, {n_sets}]"
        )));
    }
    if trials == 0 {
        return Err(ClmError::InvalidArgument("trials must be positive".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(ClmError::InvalidArgument("scores must be finite".into()));
    }
    let mut wins = Array2::<f64>::zeros((n_tech, n_tech));
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64, 0, 0);
        let mut rows = index::sample(&mut r, n_sets, subset_size).into_vec();
        rows.sort_unstable();
        let means: Vec<f64> = (0..n_tech)
            .map(|t| rows.iter().map(|&i| scores[[i, t]]).sum::<f64>() / subset_size as f64)
            .collect();
        for a in 0..n_tech {
            for b in 0..n_tech {
                wins[[a, b]] += match means[a].partial_cmp(&means[b]) {
                    Some(std::cmp::Ordering::Greater) => 1.0,
                    Some(std::cmp::Ordering::Equal) => 0.5,
                    _ => 0.0,
                };
            }
        }
    }
    let p = wins / trials as f64;
    let pairwise_stability = p.mapv(|v| v.max(1.0 - v));
    let mut ranking: Vec<(String, f64)> = techniques
        .iter()
        .enumerate()
        .map(|(t, name)| (name.clone(), scores.column(t).sum() / n_sets as f64))
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(StabilityResult {
        techniques: techniques.to_vec(),
        p,
        pairwise_stability,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn dominant_technique_is_perfectly_stable() {
        let scores = Array2::from_shape_fn((30, 3), |(i, j)| (i % 7) as f64 * 0.1 + j as f64);
        let res = rank_stability(scores.view(), &names(3), 10, 100, 0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(res.pairwise_stability[[a, b]], 1.0);
                }
            }
        }
        assert_eq!(res.p[[2, 0]], 1.0);
        assert_eq!(res.p[[0, 2]], 0.0);
        assert_eq!(res.ranking[0].0, "t2");
    }

    #[test]
    fn identical_columns_give_one_half() {
        let col: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let scores = Array2::from_shape_fn((20, 4), |(i, _)| col[i]);
        let res = rank_stability(scores.view(), &names(4), 10, 50, 3).unwrap();
        assert!(res.pairwise_stability.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn full_subset_is_deterministic_comparison() {
        let scores = array![[0.9, 0.1], [0.1, 0.8], [0.5, 0.5]];
        let res = rank_stability(scores.view(), &names(2), 3, 10, 0).unwrap();
        assert_eq!(res.p[[0, 1]], 1.0);
    }

    #[test]
    fn invalid_arguments() {
        let scores = Array2::<f64>::zeros((5, 2));
        assert!(rank_stability(scores.view(), &names(2), 6, 10, 0).is_err());
        assert!(rank_stability(scores.view(), &names(3), 2, 10, 0).is_err());
        assert!(rank_stability(scores.view(), &names(2), 2, 0, 0).is_err());
    }

    fn matrix() -> impl Strategy<Value = Array2<f64>> {
        (2usize..15, 2usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(0.0f64..1.0, r * c)
                .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn stability_bounds_and_complement(m in matrix(), seed in 0u64..50) {
            let k = m.nrows().min(4);
            let res = rank_stability(m.view(), &names(m.ncols()), k, 20, seed).unwrap();
            for a in 0..m.ncols() {
                for b in 0..m.ncols() {
                    let s = res.pairwise_stability[[a, b]];
                    prop_assert!((0.5..=1.0).contains(&s));
                    prop_assert!((res.p[[a, b]] + res.p[[b, a]] - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn invariant_under_positive_affine_maps(m in matrix(), slope in 0.5f64..4.0, offset in -3.0f64..3.0, seed in 0u64..50) {
            let k = m.nrows().min(4);
            // Dyadic slope and offset keep the subset-mean comparisons exact.
            let slope = (slope * 4.0).round() / 4.0;
            let offset = (offset * 4.0).round() / 4.0;
            let m = m.mapv(|v| (v * 1024.0).round() / 1024.0);
            let t = m.mapv(|v| slope * v + offset);
            let a = rank_stability(m.view(), &names(m.ncols()), k, 20, seed).unwrap();
            let b = rank_stability(t.view(), &names(m.ncols()), k, 20, seed).unwrap();
            prop_assert_eq!(a.pairwise_stability, b.pairwise_stability);
        }

        #[test]
        fn invariant_under_relabeling(m in matrix(), seed in 0u64..50) {
            let c = m.ncols();
            let perm: Vec<usize> = (0..c).rev().collect();
            let permuted = Array2::from_shape_fn(m.dim(), |(i, j)| m[[i, perm[j]]]);
            let k = m.nrows().min(4);
            let a = rank_stability(m.view(), &names(c), k, 20, seed).unwrap();
            let b = rank_stability(permuted.view(), &names(c), k, 20, seed).unwrap();
            for x in 0..c {
                for y in 0..c {
                    prop_assert_eq!(a.pairwise_stability[[perm[x], perm[y]]], b.pairwise_stability[[x, y]]);
                }
            }
        }
    }
}

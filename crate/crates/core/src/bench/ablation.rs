//! Sensitivity of the variants to dataset size and dimension.
//!
//! Each base dataset is a pair of 2-D Gaussians padded with isotropic noise
//! columns. For every grid value `t` an instance is cut from each base, with
//! the other factor drawn at random, and every variant is scored on it. The
//! matrix entry `(a, b)` is the SMAPE across bases between the scores at grid
//! values `a` and `b`: a size- or dimension-insensitive measure keeps it low.

use ndarray::Array2;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::between::{score_variant, BetweenConfig, VariantId};
use crate::error::{ClmError, Result};
use crate::evm::smape;
use crate::rng;
use crate::synth::{
    base_params, cardinality_grid, dimension_grid, generate_augmented, make_instance,
    InstanceSpec, DEFAULT_BASE_DIMS, DEFAULT_BASE_POINTS,
};

/// Stream tag of instance draws; tag 1 is taken by base parameters.
const TAG_INSTANCE: u64 = 2;

/// Largest excluded share of bases before a variant fails.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factor {
    Cardinality,
    Dimension,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::Cardinality => "cardinality",
            Factor::Dimension => "dimension",
        }
    }
}

impl std::str::FromStr for Factor {
    type Err = ClmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cardinality" | "n" => Ok(Factor::Cardinality),
            "dimension" | "dimensionality" | "d" => Ok(Factor::Dimension),
            other => Err(ClmError::InvalidArgument(format!("unknown factor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub factor: Factor,
    pub n_bases: usize,
    pub variants: Vec<VariantId>,
    /// Monte Carlo settings; `between.seed` also seeds base generation.
    pub between: BetweenConfig,
    /// Base size. Grids scale by `base_points / 10000` and `base_dims / 100`.
    pub base_points: usize,
    pub base_dims: usize,
    /// Range of the distance between the two Gaussian means.
    pub separation: (f64, f64),
}

impl AblationConfig {
    pub fn new(factor: Factor, n_bases: usize, variants: Vec<VariantId>, between: BetweenConfig) -> Self {
        Self {
            factor,
            n_bases,
            variants,
            between,
            base_points: DEFAULT_BASE_POINTS,
            base_dims: DEFAULT_BASE_DIMS,
            separation: (0.0, 8.0),
        }
    }

    fn scaled(values: Vec<usize>, num: usize, den: usize, floor: usize) -> Vec<usize> {
        values
            .into_iter()
            .map(|v| ((v * num) as f64 / den as f64).round().max(floor as f64) as usize)
            .collect()
    }

    /// Grid values of the ablated factor.
    pub fn grid(&self) -> Vec<usize> {
        match self.factor {
            Factor::Cardinality => Self::scaled(cardinality_grid(), self.base_points, DEFAULT_BASE_POINTS, 4),
            Factor::Dimension => Self::scaled(dimension_grid(), self.base_dims, DEFAULT_BASE_DIMS, 2),
        }
    }

    /// Range of the randomized other factor: dimension in `[2, 100]` or size
    /// in `[500, 5000]`, scaled like the grid.
    fn other_range(&self) -> (usize, usize) {
        match self.factor {
            Factor::Cardinality => (2.min(self.base_dims), self.base_dims),
            Factor::Dimension => {
                let s = Self::scaled(vec![500, 5000], self.base_points, DEFAULT_BASE_POINTS, 4);
                (s[0], s[1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_bases < 2 {
            return Err(ClmError::InvalidArgument(format!(
                "need at least 2 bases, got {}",
                self.n_bases
            )));
        }
        if self.variants.is_empty() {
            return Err(ClmError::InvalidArgument("no variants selected".into()));
        }
        if self.base_dims < 2 || self.base_points < 8 {
            return Err(ClmError::InvalidArgument(format!(
                "base of {} x {} is too small",
                self.base_points, self.base_dims
            )));
        }
        let (lo, hi) = self.separation;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(ClmError::InvalidArgument(format!(
                "separation range ({lo}, {hi}) is invalid"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMatrix {
    pub variant: VariantId,
    /// Symmetric, zero diagonal, entries in `[0, 1]`.
    pub matrix: Array2<f64>,
    /// Mean of the off-diagonal entries.
    pub average: f64,
    /// Bases dropped because some instance failed to score.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub factor: Factor,
    pub grid: Vec<usize>,
    pub n_bases: usize,
    pub variants: Vec<VariantMatrix>,
}

impl AblationResult {
    pub fn get(&self, variant: VariantId) -> Option<&VariantMatrix> {
        self.variants.iter().find(|m| m.variant == variant)
    }
}

/// Scores of one base: `[variant][grid index]`, `None` where scoring failed.
type BaseScores = Vec<Vec<Option<f64>>>;

pub fn ablation(cfg: &AblationConfig) -> Result<AblationResult> {
    cfg.validate()?;
    let grid = cfg.grid();
    let per_base: Vec<BaseScores> = (0..cfg.n_bases)
        .into_par_iter()
        .map(|k| score_base(cfg, &grid, k as u64))
        .collect::<Result<_>>()?;

    let mut variants = Vec::with_capacity(cfg.variants.len());
    for (v, &variant) in cfg.variants.iter().enumerate() {
        let kept: Vec<Vec<f64>> = per_base
            .iter()
            .filter_map(|b| b[v].iter().copied().collect::<Option<Vec<f64>>>())
            .collect();
        let excluded = cfg.n_bases - kept.len();
        if excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.n_bases as f64 || kept.is_empty() {
            return Err(ClmError::AblationFailure {
                variant: variant.name().into(),
                excluded,
                total: cfg.n_bases,
            });
        }
        let column = |t: usize| kept.iter().map(|s| s[t]).collect::<Vec<f64>>();
        let g = grid.len();
        let mut matrix = Array2::zeros((g, g));
        let mut off_diagonal = Vec::with_capacity(g * g.saturating_sub(1));
        for a in 0..g {
            for b in (a + 1)..g {
                let s = smape(&column(a), &column(b))?;
                matrix[[a, b]] = s;
                matrix[[b, a]] = s;
                off_diagonal.extend([s, s]);
            }
        }
        let average = if off_diagonal.is_empty() {
            0.0
        } else {
            off_diagonal.iter().sum::<f64>() / off_diagonal.len() as f64
        };
        variants.push(VariantMatrix {
            variant,
            matrix,
            average,
            excluded,
        });
    }
    Ok(AblationResult {
        factor: cfg.factor,
        grid,
        n_bases: cfg.n_bases,
        variants,
    })
}

fn score_base(cfg: &AblationConfig, grid: &[usize], k: u64) -> Result<BaseScores> {
    let base = generate_augmented(&base_params(cfg.between.seed, k, cfg.separation), cfg.base_points, cfg.base_dims)?;
    let (lo, hi) = cfg.other_range();
    let mut scores = vec![vec![None; grid.len()]; cfg.variants.len()];
    for (t, &value) in grid.iter().enumerate() {
        let mut r = rng::stream(cfg.between.seed, TAG_INSTANCE, k, t as u64);
        let other = r.random_range(lo..=hi);
        let spec = match cfg.factor {
            Factor::Cardinality => InstanceSpec {
                base_index: k as usize,
                n_points: value.min(cfg.base_points),
                n_dims: other,
            },
            Factor::Dimension => InstanceSpec {
                base_index: k as usize,
                n_points: other,
                n_dims: value.min(cfg.base_dims),
            },
        };
        let instance_seed = r.next_u64();
        let mc = BetweenConfig {
            seed: r.next_u64(),
            ..cfg.between
        };
        let Ok(instance) = make_instance(&base, &spec, instance_seed) else {
            continue;
        };
        let part = instance.class_partition();
        for (v, &variant) in cfg.variants.iter().enumerate() {
            scores[v][t] = score_variant(variant, &instance, &part, &mc).ok().map(|s| s.value);
        }
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(factor: Factor, variants: Vec<VariantId>) -> AblationConfig {
        AblationConfig {
            base_points: 400,
            base_dims: 10,
            ..AblationConfig::new(factor, 4, variants, BetweenConfig::with_seed(11).with_trials(5))
        }
    }

    #[test]
    fn paper_grids_at_full_scale() {
        let c = AblationConfig::new(Factor::Cardinality, 2, vec![VariantId::Ch], BetweenConfig::default());
        assert_eq!(c.grid(), (0..=10).map(|t| 500 * t + 5000).collect::<Vec<_>>());
        assert_eq!(c.other_range(), (2, 100));
        let d = AblationConfig { factor: Factor::Dimension, ..c };
        assert_eq!(d.grid(), vec![2, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        assert_eq!(d.other_range(), (500, 5000));
    }

    #[test]
    fn matrices_are_symmetric_bounded_and_average_is_off_diagonal_mean() {
        for factor in [Factor::Cardinality, Factor::Dimension] {
            let res = ablation(&small(factor, VariantId::ALL.to_vec())).unwrap();
            assert_eq!(res.grid.len(), 11);
            assert_eq!(res.variants.len(), 4);
            for vm in &res.variants {
                let m = &vm.matrix;
                assert_eq!(m.dim(), (11, 11));
                let mut sum = 0.0;
                for a in 0..11 {
                    assert_eq!(m[[a, a]], 0.0);
                    for b in 0..11 {
                        assert_eq!(m[[a, b]], m[[b, a]]);
                        assert!((0.0..=1.0).contains(&m[[a, b]]));
                        sum += m[[a, b]];
                    }
                }
                assert!((vm.average - sum / 110.0).abs() < 1e-12);
                assert_eq!(vm.excluded, 0);
            }
        }
    }

    #[test]
    fn identical_instances_have_zero_smape() {
        let cfg = small(Factor::Cardinality, vec![VariantId::ChT2T4]);
        let a = ablation(&cfg).unwrap();
        let b = ablation(&cfg).unwrap();
        assert_eq!(a, b);
        let base = generate_augmented(&base_params(cfg.between.seed, 0, cfg.separation), 300, 5).unwrap();
        let part = base.class_partition();
        let s1 = score_variant(VariantId::ChT2T4, &base, &part, &cfg.between).unwrap().value;
        let s2 = score_variant(VariantId::ChT2T4, &base, &part, &cfg.between).unwrap().value;
        assert_eq!(smape(&[s1], &[s2]).unwrap(), 0.0);
    }

    #[test]
    fn variant_selection_and_validation() {
        let res = ablation(&small(Factor::Dimension, vec![VariantId::Ch, VariantId::ChT2T4])).unwrap();
        assert_eq!(res.variants.len(), 2);
        assert!(res.get(VariantId::ChT2).is_none());
        let mut bad = small(Factor::Dimension, vec![VariantId::Ch]);
        bad.n_bases = 1;
        assert!(ablation(&bad).is_err());
        bad.n_bases = 3;
        bad.variants.clear();
        assert!(ablation(&bad).is_err());
    }

    #[test]
    fn failing_bases_are_counted() {
        // Tiny bases make some instances too small to score.
        let mut cfg = small(Factor::Cardinality, vec![VariantId::Ch]);
        cfg.base_points = 8;
        cfg.base_dims = 2;
        match ablation(&cfg) {
            Ok(res) => assert!(res.variants[0].excluded as f64 <= 0.1 * cfg.n_bases as f64),
            Err(ClmError::AblationFailure { excluded, total, .. }) => assert!(excluded * 10 > total),
            Err(e) => panic!("{e}"),
        }
    }
}

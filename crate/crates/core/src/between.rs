//! Between-dataset Calinski-Harabasz index.
//!
//! The pipeline generalizes the classic index in stages:
//!
//! 1. `ch1` replaces squared distances by `exp(d / sigma_d)`, where `sigma_d`
//!    is the standard deviation of point-to-centroid distances. Any common
//!    shift of the distances factors out of numerator and denominator, and
//!    the division by `sigma_d` restores scale invariance.
//! 2. `ch2` squashes `ch1` into `(0, 1)` with `x / (1 + x)`.
//! 3. `ch3` min-max normalizes `ch2`, with the maximum fixed at 1 and the
//!    minimum estimated as the mean `ch2` over random label shuffles that keep
//!    the class sizes.
//! 4. `ch_btwn` aggregates `ch3` over every unordered pair of classes.
//!
//! [`score_variant`] switches the exponential stage (T2) and the
//! normalization stage (T4) on and off for ablation; pairwise aggregation is
//! always applied.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{centroid, distance_spread, Dataset, DistanceView, Partition, EPS_GEOM};
use crate::error::{ClmError, Result};
use crate::rng;
use crate::within::ch_ratio;

pub const DEFAULT_MC_TRIALS: usize = 50;

/// Redraws allowed for a single Monte Carlo trial whose shuffle is degenerate.
pub const MAX_TRIAL_RETRIES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
    Max,
}

/// Which points a class pair is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairScope {
    /// Only the two classes' points: global centroid, `sigma_d` and the
    /// shuffle null are all recomputed on the pair.
    #[default]
    Restricted,
    /// Global centroid and `sigma_d` come from the whole dataset; sums,
    /// degrees of freedom and shuffles still run over the pair's points.
    FullDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetweenConfig {
    pub mc_trials: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub clamp_negative: bool,
    pub pair_scope: PairScope,
}

impl Default for BetweenConfig {
    fn default() -> Self {
        Self {
            mc_trials: DEFAULT_MC_TRIALS,
            seed: 0,
            aggregation: Aggregation::Mean,
            clamp_negative: true,
            pair_scope: PairScope::Restricted,
        }
    }
}

impl BetweenConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_trials(mut self, mc_trials: usize) -> Self {
        self.mc_trials = mc_trials;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.mc_trials == 0 {
            return Err(ClmError::InvalidArgument(
                "mc_trials must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Ablation variants: classic CH with the shift trick (T2) and the range
/// trick (T4) independently switched on or off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantId {
    #[serde(rename = "ch")]
    Ch,
    #[serde(rename = "ch-t2")]
    ChT2,
    #[serde(rename = "ch-t4")]
    ChT4,
    #[serde(rename = "ch-t2t4")]
    ChT2T4,
}

impl VariantId {
    pub const ALL: [VariantId; 4] = [
        VariantId::Ch,
        VariantId::ChT2,
        VariantId::ChT4,
        VariantId::ChT2T4,
    ];

    pub fn shift_trick(self) -> bool {
        matches!(self, VariantId::ChT2 | VariantId::ChT2T4)
    }

    pub fn range_trick(self) -> bool {
        matches!(self, VariantId::ChT4 | VariantId::ChT2T4)
    }

    pub fn name(self) -> &'static str {
        match self {
            VariantId::Ch => "ch",
            VariantId::ChT2 => "ch-t2",
            VariantId::ChT4 => "ch-t4",
            VariantId::ChT2T4 => "ch-t2t4",
        }
    }

    fn base(self) -> Base {
        if self.shift_trick() {
            Base::Ch1
        } else {
            Base::Ch
        }
    }
}

impl std::fmt::Display for VariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for VariantId {
    type Err = ClmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ch" => Ok(VariantId::Ch),
            "ch-t2" | "ch_t2" => Ok(VariantId::ChT2),
            "ch-t4" | "ch_t4" => Ok(VariantId::ChT4),
            "ch-t2t4" | "ch_t2t4" | "ch-btwn" | "ch_btwn" => Ok(VariantId::ChT2T4),
            other => Err(ClmError::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Per-pair breakdown. For variants without the range trick only `base` and
/// `raw` are populated (and equal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    /// Group indices of the pair, `first < second`.
    pub first: usize,
    pub second: usize,
    /// CH (shift trick off) or CH1 (shift trick on) of the pair.
    pub base: f64,
    /// Logistic squash of `base` (CH2).
    pub squashed: Option<f64>,
    /// Monte Carlo estimate of the squashed null mean (CH2_min).
    pub null_mean: Option<f64>,
    /// Unclamped pair score (CH3 when normalized).
    pub raw: f64,
    /// Pair score entering the aggregation.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetweenScore {
    pub variant: VariantId,
    pub value: f64,
    pub pairs: Vec<PairScore>,
    pub pair_count: usize,
}

/// Source of the random label assignments used for the null estimate.
///
/// `assign` returns one group index per position, where positions enumerate
/// the scored points group by group (group 0's points in ascending row order,
/// then group 1's, ...). Group `g` must receive exactly `sizes[g]` positions.
/// `stream` identifies the class pair (its index in `(0,1), (0,2), ...,
/// (1,2), ...` order, or 0 for a whole-partition estimate).
pub trait NullAssigner: Sync {
    fn assign(&self, stream: u64, trial: u64, attempt: u64, sizes: &[usize]) -> Vec<usize>;
}

/// Uniform shuffles keyed by `(seed, stream, trial, attempt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededAssigner(pub u64);

impl NullAssigner for SeededAssigner {
    fn assign(&self, stream: u64, trial: u64, attempt: u64, sizes: &[usize]) -> Vec<usize> {
        let mut labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        labels.shuffle(&mut rng::stream(self.0, stream, trial, attempt));
        labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Base {
    Ch,
    Ch1,
}

/// CH1 over member groups with a fixed centre and spread.
fn ch1_ratio(
    points: ArrayView2<'_, f64>,
    groups: &[Vec<usize>],
    center: ArrayView1<'_, f64>,
    sigma: f64,
    dv: &DistanceView,
) -> Result<f64> {
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(ClmError::DegenerateInput(format!(
            "{n} points for {k} groups leaves no within-group degrees of freedom"
        )));
    }
    let mut between_exp = Vec::with_capacity(k);
    let mut within_exp = Vec::with_capacity(n);
    for group in groups {
        let c = centroid(points, group);
        between_exp.push(dv.distance(c.view(), center) / sigma);
        within_exp.extend(
            group
                .iter()
                .map(|&i| dv.distance(points.row(i), c.view()) / sigma),
        );
    }
    // Common offset keeps exp() in range without changing the ratio.
    let top = between_exp
        .iter()
        .chain(&within_exp)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let between: f64 = groups
        .iter()
        .zip(&between_exp)
        .map(|(g, u)| g.len() as f64 * (u - top).exp())
        .sum();
    let within: f64 = within_exp.iter().map(|v| (v - top).exp()).sum();
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// The points a score is evaluated on, with their reference centre and
/// spread.
struct Frame<'a> {
    points: ArrayView2<'a, f64>,
    center: Array1<f64>,
    sigma: Option<f64>,
    dv: DistanceView,
}

impl<'a> Frame<'a> {
    /// Centre and spread from `reference` rows.
    fn new(
        points: ArrayView2<'a, f64>,
        reference: &[usize],
        dv: DistanceView,
        base: Base,
    ) -> Result<Self> {
        let center = centroid(points, reference);
        let sigma = match base {
            Base::Ch1 => Some(distance_spread(points, reference, center.view(), &dv)?),
            Base::Ch => None,
        };
        Ok(Self {
            points,
            center,
            sigma,
            dv,
        })
    }

    fn eval(&self, base: Base, groups: &[Vec<usize>]) -> Result<f64> {
        match (base, self.sigma) {
            (Base::Ch1, Some(sigma)) => {
                ch1_ratio(self.points, groups, self.center.view(), sigma, &self.dv)
            }
            (Base::Ch1, None) => unreachable!("frame built without spread"),
            (Base::Ch, _) => ch_ratio(self.points, groups, self.center.view(), &self.dv),
        }
    }

    /// Mean of `squash(base)` over shuffled assignments of `groups`' points.
    fn null_mean(
        &self,
        base: Base,
        groups: &[Vec<usize>],
        trials: usize,
        stream: u64,
        assigner: &dyn NullAssigner,
    ) -> Result<f64> {
        let members: Vec<usize> = groups.iter().flatten().copied().collect();
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let values = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut last = None;
                for attempt in 0..=MAX_TRIAL_RETRIES {
                    let labels = assigner.assign(stream, trial, attempt, &sizes);
                    let mut shuffled: Vec<Vec<usize>> =
                        sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
                    for (&m, &g) in members.iter().zip(&labels) {
                        shuffled[g].push(m);
                    }
                    if shuffled.iter().zip(&sizes).any(|(g, &s)| g.len() != s) {
                        return Err(ClmError::MonteCarloFailure(
                            "assigner did not preserve group sizes".into(),
                        ));
                    }
                    match self.eval(base, &shuffled) {
                        Ok(v) => return Ok(squash(v)),
                        Err(
                            e @ (ClmError::DegenerateGeometry(_) | ClmError::DegenerateInput(_)),
                        ) => last = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                Err(ClmError::MonteCarloFailure(format!(
                    "trial {trial} stayed degenerate after {} redraws: {}",
                    MAX_TRIAL_RETRIES,
                    last.map(|e| e.to_string()).unwrap_or_default()
                )))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(values.iter().sum::<f64>() / trials as f64)
    }
}

#[inline]
/// `x / (1 + x)`, with an overflowed `x = inf` mapping to 1.
fn squash(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}

fn normalize(squashed: f64, null_mean: f64) -> Result<f64> {
    let span = 1.0 - null_mean;
    if span < EPS_GEOM {
        return Err(ClmError::DegenerateNormalization(format!(
            "estimated minimum {null_mean} leaves no range below the maximum 1"
        )));
    }
    Ok((squashed - null_mean) / span)
}

fn check(ds: &Dataset, part: &Partition) -> Result<()> {
    part.check_matches(ds)?;
    if part.n_groups() < 2 {
        return Err(ClmError::InvalidPartition(format!(
            "need at least 2 groups, got {}",
            part.n_groups()
        )));
    }
    Ok(())
}

fn all_rows(ds: &Dataset) -> Vec<usize> {
    (0..ds.n_points()).collect()
}

pub fn ch1(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<f64> {
    check(ds, part)?;
    let frame = Frame::new(ds.points(), &all_rows(ds), *dv, Base::Ch1)?;
    frame.eval(Base::Ch1, part.groups())
}

/// Logistic squash `1 / (1 + 1/x)` of a positive CH1 value.
pub fn ch2(ch1_value: f64) -> Result<f64> {
    if ch1_value.is_nan() || ch1_value <= 0.0 {
        return Err(ClmError::InvalidArgument(format!(
            "ch2 needs a positive input, got {ch1_value}"
        )));
    }
    Ok(squash(ch1_value))
}

/// Mean CH2 over `cfg.mc_trials` size-preserving label shuffles.
pub fn estimate_ch2_min(
    ds: &Dataset,
    part: &Partition,
    dv: &DistanceView,
    cfg: &BetweenConfig,
) -> Result<f64> {
    estimate_ch2_min_with(ds, part, dv, cfg, &SeededAssigner(cfg.seed))
}

pub fn estimate_ch2_min_with(
    ds: &Dataset,
    part: &Partition,
    dv: &DistanceView,
    cfg: &BetweenConfig,
    assigner: &dyn NullAssigner,
) -> Result<f64> {
    check(ds, part)?;
    cfg.validate()?;
    let frame = Frame::new(ds.points(), &all_rows(ds), *dv, Base::Ch1)?;
    frame.null_mean(Base::Ch1, part.groups(), cfg.mc_trials, 0, assigner)
}

/// Normalized CH3 of the whole partition, clamped at 0 when
/// `cfg.clamp_negative`.
pub fn ch3(ds: &Dataset, part: &Partition, dv: &DistanceView, cfg: &BetweenConfig) -> Result<f64> {
    ch3_with(ds, part, dv, cfg, &SeededAssigner(cfg.seed))
}

pub fn ch3_with(
    ds: &Dataset,
    part: &Partition,
    dv: &DistanceView,
    cfg: &BetweenConfig,
    assigner: &dyn NullAssigner,
) -> Result<f64> {
    check(ds, part)?;
    cfg.validate()?;
    let frame = Frame::new(ds.points(), &all_rows(ds), *dv, Base::Ch1)?;
    let squashed = squash(frame.eval(Base::Ch1, part.groups())?);
    let null = frame.null_mean(
        Base::Ch1,
        part.groups(),
        cfg.mc_trials,
        0,
        assigner,
    )?;
    let raw = normalize(squashed, null)?;
    Ok(if cfg.clamp_negative { raw.max(0.0) } else { raw })
}

/// Aggregates pair values. The mean is taken over sorted values so the result
/// does not depend on pair order.
pub fn aggregate(values: &[f64], how: Aggregation) -> f64 {
    match how {
        Aggregation::Mean => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            sorted.iter().sum::<f64>() / sorted.len() as f64
        }
        Aggregation::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Unordered group pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn class_pairs(n_groups: usize) -> Vec<(usize, usize)> {
    (0..n_groups)
        .flat_map(|i| (i + 1..n_groups).map(move |j| (i, j)))
        .collect()
}

/// Between-dataset CH with Euclidean distances.
pub fn ch_btwn(ds: &Dataset, part: &Partition, cfg: &BetweenConfig) -> Result<BetweenScore> {
    score_variant(VariantId::ChT2T4, ds, part, cfg)
}

pub fn ch_btwn_with(
    ds: &Dataset,
    part: &Partition,
    dv: &DistanceView,
    cfg: &BetweenConfig,
    assigner: &dyn NullAssigner,
) -> Result<BetweenScore> {
    score_variant_with(VariantId::ChT2T4, ds, part, dv, cfg, assigner)
}

pub fn score_variant(
    variant: VariantId,
    ds: &Dataset,
    part: &Partition,
    cfg: &BetweenConfig,
) -> Result<BetweenScore> {
    score_variant_with(
        variant,
        ds,
        part,
        &DistanceView::euclidean(),
        cfg,
        &SeededAssigner(cfg.seed),
    )
}

pub fn score_variant_with(
    variant: VariantId,
    ds: &Dataset,
    part: &Partition,
    dv: &DistanceView,
    cfg: &BetweenConfig,
    assigner: &dyn NullAssigner,
) -> Result<BetweenScore> {
    check(ds, part)?;
    cfg.validate()?;
    if let Some(g) = part.groups().iter().position(|g| g.len() < 2) {
        return Err(ClmError::InvalidPartition(format!(
            "group {g} has fewer than 2 points"
        )));
    }
    let base = variant.base();
    let full = match cfg.pair_scope {
        PairScope::FullDataset => Some(Frame::new(ds.points(), &all_rows(ds), *dv, base)?),
        PairScope::Restricted => None,
    };
    let pairs = class_pairs(part.n_groups());
    let scored = pairs
        .par_iter()
        .enumerate()
        .map(|(stream, &(i, j))| {
            let groups = [part.groups()[i].clone(), part.groups()[j].clone()];
            score_pair(variant, ds, &groups, dv, cfg, full.as_ref(), stream as u64, assigner)
                .map(|(base, squashed, null_mean, raw, value)| PairScore {
                    first: i,
                    second: j,
                    base,
                    squashed,
                    null_mean,
                    raw,
                    value,
                })
                .map_err(|e| ClmError::PairFailure {
                    first: i,
                    second: j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = scored.iter().map(|p| p.value).collect();
    Ok(BetweenScore {
        variant,
        value: aggregate(&values, cfg.aggregation),
        pair_count: scored.len(),
        pairs: scored,
    })
}

type PairParts = (f64, Option<f64>, Option<f64>, f64, f64);

#[allow(clippy::too_many_arguments)]
fn score_pair<'a>(
    variant: VariantId,
    ds: &'a Dataset,
    groups: &[Vec<usize>; 2],
    dv: &DistanceView,
    cfg: &BetweenConfig,
    full: Option<&'a Frame<'a>>,
    stream: u64,
    assigner: &dyn NullAssigner,
) -> Result<PairParts> {
    let base_kind = variant.base();
    let local;
    let frame = match full {
        Some(f) => f,
        None => {
            let members: Vec<usize> = groups.iter().flatten().copied().collect();
            local = Frame::new(ds.points(), &members, *dv, base_kind)?;
            &local
        }
    };
    let base = frame.eval(base_kind, groups)?;
    if !variant.range_trick() {
        return Ok((base, None, None, base, base));
    }
    let squashed = squash(base);
    let null = frame.null_mean(base_kind, groups, cfg.mc_trials, stream, assigner)?;
    let raw = normalize(squashed, null)?;
    let value = if cfg.clamp_negative { raw.max(0.0) } else { raw };
    Ok((base, Some(squashed), Some(null), raw, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::{d4, six_point};
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    /// CH1 written out directly from its definition, for the six-point
    /// fixture, with no shared helpers.
    fn six_point_ch1_oracle() -> f64 {
        let a = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let b = [[8.0, 0.0], [9.0, 1.0], [8.0, 2.0]];
        let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let ca = [1.0 / 3.0, 1.0 / 3.0];
        let cb = [25.0 / 3.0, 1.0];
        let c = [26.0 / 6.0, 4.0 / 6.0];
        let all: Vec<[f64; 2]> = a.iter().chain(&b).copied().collect();
        let dc: Vec<f64> = all.iter().map(|&p| dist(p, c)).collect();
        let mean = dc.iter().sum::<f64>() / 6.0;
        let sigma = (dc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 6.0).sqrt();
        let num = (3.0 * (dist(ca, c) / sigma).exp() + 3.0 * (dist(cb, c) / sigma).exp()) / 1.0;
        let den = (a.iter().map(|&p| (dist(p, ca) / sigma).exp()).sum::<f64>()
            + b.iter().map(|&p| (dist(p, cb) / sigma).exp()).sum::<f64>())
            / 4.0;
        num / den
    }

    fn gaussian_pair(seed: u64, n: usize, sep: f64) -> Dataset {
        let mut rng = rng::stream(seed, 7, 0, 0);
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + if i >= n / 2 && j == 0 { sep } else { 0.0 }
        });
        let labels = (0..n).map(|i| if i < n / 2 { "a" } else { "b" }.to_string()).collect();
        Dataset::new(pts, labels).unwrap()
    }

    #[test]
    fn ch1_matches_straight_line_oracle() {
        let ds = six_point();
        let v = ch1(&ds, &ds.class_partition(), &DistanceView::euclidean()).unwrap();
        assert_relative_eq!(v, six_point_ch1_oracle(), max_relative = 1e-9);
    }

    #[test]
    fn ch1_scale_and_shift_invariance() {
        let ds = six_point();
        let part = ds.class_partition();
        let base = ch1(&ds, &part, &DistanceView::euclidean()).unwrap();
        let scaled = ch1(&ds, &part, &DistanceView::new(5.0, 0.0).unwrap()).unwrap();
        let mean_d = {
            let stats = crate::dataset::centroid_stats(&ds, &part, &DistanceView::euclidean()).unwrap();
            let pts = ds.points();
            (0..6).map(|i| DistanceView::euclidean().distance(pts.row(i), stats.global_centroid.view())).sum::<f64>() / 6.0
        };
        let shifted = ch1(&ds, &part, &DistanceView::new(1.0, 3.0 * mean_d).unwrap()).unwrap();
        assert_relative_eq!(scaled, base, max_relative = 1e-9);
        assert_relative_eq!(shifted, base, max_relative = 1e-9);
    }

    #[test]
    fn ch1_survives_large_exponents() {
        // A shift of 1e6 sigma would overflow a naive exp().
        let ds = gaussian_pair(3, 40, 5.0);
        let part = ds.class_partition();
        let plain = ch1(&ds, &part, &DistanceView::euclidean()).unwrap();
        let v = ch1(&ds, &part, &DistanceView::new(1.0, 1e6).unwrap()).unwrap();
        assert_relative_eq!(v, plain, max_relative = 1e-6);
    }

    #[test]
    fn overflowing_ratio_squashes_to_one() {
        // Tiny within-class spread: the true ratio is near exp(2500).
        let mut ds = gaussian_pair(3, 40, 5000.0);
        let pts = ds.points().to_owned() * 1e-3;
        ds = Dataset::new(pts, ds.labels().to_vec()).unwrap();
        let v = ch1(&ds, &ds.class_partition(), &DistanceView::euclidean()).unwrap();
        assert_eq!(v, f64::INFINITY);
        assert_eq!(ch2(v).unwrap(), 1.0);
    }

    #[test]
    fn ch2_values() {
        assert_eq!(ch2(1.0).unwrap(), 0.5);
        assert_eq!(ch2(3.0).unwrap(), 0.75);
        assert!(ch2(1e12).unwrap() > 1.0 - 1e-11);
        assert!(ch2(0.0).is_err());
        assert!(ch2(-2.0).is_err());
        assert!(ch2(0.2).unwrap() < ch2(0.3).unwrap());
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalize(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(normalize(1.0, 0.3).unwrap(), 1.0);
        assert!(matches!(
            normalize(1.0, 1.0),
            Err(ClmError::DegenerateNormalization(_))
        ));
    }

    #[test]
    fn ch2_min_is_deterministic() {
        let ds = gaussian_pair(1, 120, 1.0);
        let part = ds.class_partition();
        let cfg = BetweenConfig::with_seed(42);
        let a = estimate_ch2_min(&ds, &part, &DistanceView::euclidean(), &cfg).unwrap();
        let b = estimate_ch2_min(&ds, &part, &DistanceView::euclidean(), &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn ch2_min_tracks_actual_labels_on_one_gaussian() {
        let ds = gaussian_pair(2, 400, 0.0);
        let part = ds.class_partition();
        let dv = DistanceView::euclidean();
        let cfg = BetweenConfig::with_seed(5).with_trials(200);
        let null = estimate_ch2_min(&ds, &part, &dv, &cfg).unwrap();
        let actual = ch2(ch1(&ds, &part, &dv).unwrap()).unwrap();
        assert!((null - actual).abs() < 0.05, "{null} vs {actual}");
    }

    #[test]
    fn ch2_min_below_separated_labels() {
        let ds = gaussian_pair(3, 200, 10.0);
        let part = ds.class_partition();
        let dv = DistanceView::euclidean();
        let null = estimate_ch2_min(&ds, &part, &dv, &BetweenConfig::with_seed(1)).unwrap();
        let actual = ch2(ch1(&ds, &part, &dv).unwrap()).unwrap();
        assert!(null < actual);
    }

    #[test]
    fn ch3_high_for_well_separated_data() {
        let ds = gaussian_pair(4, 500, 10.0);
        let v = ch3(&ds, &ds.class_partition(), &DistanceView::euclidean(), &BetweenConfig::with_seed(9)).unwrap();
        assert!(v > 0.9, "{v}");
    }

    #[test]
    fn two_classes_equal_single_ch3() {
        let ds = gaussian_pair(5, 100, 2.0);
        let part = ds.class_partition();
        let cfg = BetweenConfig::with_seed(3);
        let btwn = ch_btwn(&ds, &part, &cfg).unwrap();
        let single = ch3(&ds, &part, &DistanceView::euclidean(), &cfg).unwrap();
        assert_eq!(btwn.pair_count, 1);
        assert_eq!(btwn.value.to_bits(), single.to_bits());
    }

    #[test]
    fn overlapping_classes_score_near_zero() {
        let ds = gaussian_pair(6, 500, 0.0);
        let v = ch_btwn(&ds, &ds.class_partition(), &BetweenConfig::with_seed(2).with_trials(200)).unwrap();
        assert!(v.value < 0.1, "{}", v.value);
    }

    #[test]
    fn aggregation_forms() {
        let vals = [0.2, 0.5, 0.8];
        assert_relative_eq!(aggregate(&vals, Aggregation::Mean), 0.5, max_relative = 1e-15);
        assert_eq!(aggregate(&vals, Aggregation::Min), 0.2);
        assert_eq!(aggregate(&vals, Aggregation::Max), 0.8);
        assert_relative_eq!(aggregate(&[0.37; 6], Aggregation::Mean), 0.37, max_relative = 1e-15);
    }

    #[test]
    fn pair_count_and_mean_of_pairs() {
        let n = 90;
        let mut rng = rng::stream(8, 0, 0, 0);
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + (i % 3) as f64 * if j == 0 { 3.0 } else { 1.0 }
        });
        let labels = (0..n).map(|i| format!("k{}", i % 3)).collect();
        let ds = Dataset::new(pts, labels).unwrap();
        let s = ch_btwn(&ds, &ds.class_partition(), &BetweenConfig::with_seed(1)).unwrap();
        assert_eq!(s.pair_count, 3);
        let mean = s.pairs.iter().map(|p| p.value).sum::<f64>() / 3.0;
        assert_relative_eq!(s.value, mean, max_relative = 1e-12);
        for p in &s.pairs {
            assert_eq!(p.value, p.raw.max(0.0));
        }
    }

    #[test]
    fn variant_aliases_and_hand_value() {
        let ds = gaussian_pair(9, 60, 3.0);
        let part = ds.class_partition();
        let cfg = BetweenConfig::with_seed(4);
        let a = score_variant(VariantId::ChT2T4, &ds, &part, &cfg).unwrap();
        let b = ch_btwn(&ds, &part, &cfg).unwrap();
        assert_eq!(a, b);
        let d4 = d4();
        let ch = score_variant(VariantId::Ch, &d4, &d4.class_partition(), &cfg).unwrap();
        assert_relative_eq!(ch.pairs[0].base, 200.0, max_relative = 1e-12);
        assert_relative_eq!(ch.value, 200.0, max_relative = 1e-12);
    }

    #[test]
    fn shift_trick_variant_ignores_shift() {
        let ds = gaussian_pair(10, 80, 2.0);
        let part = ds.class_partition();
        let cfg = BetweenConfig::with_seed(0);
        let assigner = SeededAssigner(0);
        let plain = DistanceView::euclidean();
        let shifted = DistanceView::new(1.0, 4.0).unwrap();
        let t2 = |dv| score_variant_with(VariantId::ChT2, &ds, &part, &dv, &cfg, &assigner).unwrap().value;
        let ch = |dv| score_variant_with(VariantId::Ch, &ds, &part, &dv, &cfg, &assigner).unwrap().value;
        assert_relative_eq!(t2(plain), t2(shifted), max_relative = 1e-9);
        assert!((ch(plain) - ch(shifted)).abs() / ch(plain) > 0.01);
    }

    #[test]
    fn full_dataset_scope_matches_restricted_for_two_classes() {
        let ds = gaussian_pair(11, 80, 2.0);
        let part = ds.class_partition();
        let mut cfg = BetweenConfig::with_seed(0);
        let restricted = ch_btwn(&ds, &part, &cfg).unwrap();
        cfg.pair_scope = PairScope::FullDataset;
        let full = ch_btwn(&ds, &part, &cfg).unwrap();
        assert_relative_eq!(restricted.value, full.value, max_relative = 1e-12);
    }

    #[test]
    fn errors() {
        let ds = d4();
        let one = Partition::new(vec![vec![0, 1, 2, 3]], 4).unwrap();
        assert!(matches!(
            ch_btwn(&ds, &one, &BetweenConfig::default()),
            Err(ClmError::InvalidPartition(_))
        ));
        // D4's points are equidistant from its centroid.
        match ch_btwn(&ds, &ds.class_partition(), &BetweenConfig::default()) {
            Err(ClmError::PairFailure { first: 0, second: 1, source }) => {
                assert!(matches!(*source, ClmError::DegenerateGeometry(_)))
            }
            other => panic!("unexpected {other:?}"),
        }
        let cfg = BetweenConfig::default().with_trials(0);
        assert!(ch_btwn(&six_point(), &six_point().class_partition(), &cfg).is_err());
    }

    struct BrokenAssigner;
    impl NullAssigner for BrokenAssigner {
        fn assign(&self, _: u64, _: u64, _: u64, sizes: &[usize]) -> Vec<usize> {
            vec![0; sizes.iter().sum()]
        }
    }

    #[test]
    fn assigner_must_preserve_sizes() {
        let ds = six_point();
        let r = estimate_ch2_min_with(&ds, &ds.class_partition(), &DistanceView::euclidean(), &BetweenConfig::default(), &BrokenAssigner);
        assert!(matches!(r, Err(ClmError::MonteCarloFailure(_))));
    }

    /// Shuffles that always pair up the duplicates leave zero within-group
    /// scatter, so every redraw is degenerate.
    #[test]
    fn degenerate_trials_exhaust_retries() {
        let ds = Dataset::new(
            ndarray::array![[0.0], [0.0], [1.0], [1.0]],
            ["a", "b", "a", "b"].map(String::from).to_vec(),
        )
        .unwrap();
        struct Sorted;
        impl NullAssigner for Sorted {
            // positions are a0, a1, b0, b1 = rows 0, 2, 1, 3 -> values 0, 1, 0, 1
            fn assign(&self, _: u64, _: u64, _: u64, _: &[usize]) -> Vec<usize> {
                vec![0, 1, 0, 1]
            }
        }
        let r = score_variant_with(VariantId::ChT4, &ds, &ds.class_partition(), &DistanceView::euclidean(), &BetweenConfig::default(), &Sorted);
        match r {
            Err(ClmError::PairFailure { source, .. }) => {
                assert!(matches!(*source, ClmError::MonteCarloFailure(_)), "{source}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Two-Gaussian synthetic datasets with Gaussian noise dimensions.
//!
//! A base dataset holds two bivariate Gaussian classes, `A` and `B`, whose
//! means lie `separation` apart along a random direction. Extra dimensions
//! carry zero-mean Gaussian noise whose variance is the "minimum span" of the
//! generating class's covariance. Instances are class-proportional
//! subsamples projected onto their first `n_dims` columns, so the first two
//! columns are always the cluster plane.

use ndarray::Array2;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{subsample_n, Dataset};
use crate::error::{ClmError, Result};
use crate::rng;

pub const CLASS_A: &str = "A";
pub const CLASS_B: &str = "B";
pub const DEFAULT_BASE_POINTS: usize = 10_000;
pub const DEFAULT_BASE_DIMS: usize = 100;

pub type Cov2 = [[f64; 2]; 2];

/// The eight free parameters of a base dataset plus its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairParams {
    pub cov_a: Cov2,
    pub cov_b: Cov2,
    /// Fraction of points in class A, in (0, 1).
    pub proportion: f64,
    /// Distance between the two means.
    pub separation: f64,
    pub seed: u64,
}

/// How the noise variance is read off a class covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSpan {
    #[default]
    MinEigenvalue,
    MinDiagonal,
}

impl NoiseSpan {
    pub fn variance(self, cov: &Cov2) -> f64 {
        match self {
            NoiseSpan::MinEigenvalue => eigenvalues(cov).0,
            NoiseSpan::MinDiagonal => cov[0][0].min(cov[1][1]),
        }
    }
}

/// Eigenvalues `(min, max)` of a symmetric 2x2 matrix.
pub fn eigenvalues(cov: &Cov2) -> (f64, f64) {
    let mean = (cov[0][0] + cov[1][1]) / 2.0;
    let half_gap = (((cov[0][0] - cov[1][1]) / 2.0).powi(2) + cov[0][1] * cov[0][1]).sqrt();
    (mean - half_gap, mean + half_gap)
}

fn cholesky(cov: &Cov2) -> Result<Cov2> {
    let sym = (cov[0][1] - cov[1][0]).abs() <= 1e-12 * cov[0][1].abs().max(1.0);
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let finite = cov.iter().flatten().all(|v| v.is_finite());
    if !sym || !finite || cov[0][0] <= 0.0 || det <= 0.0 {
        return Err(ClmError::InvalidArgument(format!(
            "covariance {cov:?} is not symmetric positive-definite"
        )));
    }
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).sqrt();
    Ok([[l00, 0.0], [l10, l11]])
}

/// Covariance with standard deviations `sd` along axes rotated by `angle`.
pub fn rotated_covariance(sd: (f64, f64), angle: f64) -> Cov2 {
    let (s, c) = angle.sin_cos();
    let (v0, v1) = (sd.0 * sd.0, sd.1 * sd.1);
    let off = (v0 - v1) * c * s;
    [[v0 * c * c + v1 * s * s, off], [off, v0 * s * s + v1 * c * c]]
}

impl GaussianPairParams {
    pub fn validate(&self) -> Result<()> {
        cholesky(&self.cov_a)?;
        cholesky(&self.cov_b)?;
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(ClmError::InvalidArgument(format!(
                "proportion must lie in (0, 1), got {}",
                self.proportion
            )));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(ClmError::InvalidArgument(format!(
                "separation must be non-negative, got {}",
                self.separation
            )));
        }
        Ok(())
    }

    /// Random parameters: per-class standard deviations in [0.5, 2], random
    /// orientation, class-A share in [0.2, 0.8] and separation uniform in
    /// `separation`.
    pub fn random(seed: u64, separation: (f64, f64)) -> Self {
        let mut r = rng::stream(seed, u64::MAX, 0, 0);
        let mut cov = || {
            let sd = (r.random_range(0.5..=2.0), r.random_range(0.5..=2.0));
            rotated_covariance(sd, r.random_range(0.0..std::f64::consts::PI))
        };
        let cov_a = cov();
        let cov_b = cov();
        let proportion = r.random_range(0.2..=0.8);
        let separation = if separation.1 > separation.0 {
            r.random_range(separation.0..=separation.1)
        } else {
            separation.0
        };
        Self {
            cov_a,
            cov_b,
            proportion,
            separation,
            seed,
        }
    }

    /// Number of class-A points among `n`.
    pub fn class_a_count(&self, n: usize) -> usize {
        ((self.proportion * n as f64).round() as usize).clamp(1, n - 1)
    }
}

/// Samples the 2-D base dataset: class A rows first, then class B.
pub fn generate_base(params: &GaussianPairParams, n: usize) -> Result<Dataset> {
    params.validate()?;
    if n < 2 {
        return Err(ClmError::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let la = cholesky(&params.cov_a)?;
    let lb = cholesky(&params.cov_b)?;
    let mut r = rng::stream(params.seed, 0, 0, 0);
    let angle: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let shift = [params.separation * angle.cos(), params.separation * angle.sin()];
    let n_a = params.class_a_count(n);
    let mut points = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (l, mean, label) = if i < n_a {
            (&la, [0.0, 0.0], CLASS_A)
        } else {
            (&lb, shift, CLASS_B)
        };
        let z0: f64 = StandardNormal.sample(&mut r);
        let z1: f64 = StandardNormal.sample(&mut r);
        points[[i, 0]] = mean[0] + l[0][0] * z0;
        points[[i, 1]] = mean[1] + l[1][0] * z0 + l[1][1] * z1;
        labels.push(label.to_string());
    }
    Dataset::new(points, labels)
}

/// Appends `target_dims - 2` noise columns to a 2-D base.
pub fn augment_noise(
    ds: &Dataset,
    params: &GaussianPairParams,
    target_dims: usize,
    seed: u64,
    span: NoiseSpan,
) -> Result<Dataset> {
    if target_dims < 2 {
        return Err(ClmError::InvalidArgument(format!(
            "target dimension must be at least 2, got {target_dims}"
        )));
    }
    if ds.n_dims() != 2 {
        return Err(ClmError::InvalidArgument(format!(
            "noise augmentation expects a 2-D base, got {} columns",
            ds.n_dims()
        )));
    }
    let sd_a = span.variance(&params.cov_a).sqrt();
    let sd_b = span.variance(&params.cov_b).sqrt();
    let mut r = rng::stream(seed, 1, 0, 0);
    let src = ds.points();
    let mut points = Array2::zeros((ds.n_points(), target_dims));
    for (i, label) in ds.labels().iter().enumerate() {
        let sd = match label.as_str() {
            CLASS_A => sd_a,
            CLASS_B => sd_b,
            other => {
                return Err(ClmError::InvalidArgument(format!(
                    "unexpected class {other:?}; expected {CLASS_A} or {CLASS_B}"
                )))
            }
        };
        points[[i, 0]] = src[[i, 0]];
        points[[i, 1]] = src[[i, 1]];
        for j in 2..target_dims {
            let z: f64 = StandardNormal.sample(&mut r);
            points[[i, j]] = sd * z;
        }
    }
    Dataset::new(points, ds.labels().to_vec())
}

/// A full base: 2-D Gaussians augmented to `dims` columns.
pub fn generate_augmented(params: &GaussianPairParams, n: usize, dims: usize) -> Result<Dataset> {
    let base = generate_base(params, n)?;
    augment_noise(&base, params, dims, params.seed, NoiseSpan::default())
}

/// Parameters of the `index`-th base of a run seeded with `seed`.
pub fn base_params(seed: u64, index: u64, separation: (f64, f64)) -> GaussianPairParams {
    let base_seed = rng::stream(seed, 1, index, 0).next_u64();
    GaussianPairParams::random(base_seed, separation)
}

/// Which base an instance is drawn from and its size and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub base_index: usize,
    pub n_points: usize,
    pub n_dims: usize,
}

pub fn make_instance(base: &Dataset, spec: &InstanceSpec, seed: u64) -> Result<Dataset> {
    if spec.n_dims < 2 || spec.n_dims > base.n_dims() {
        return Err(ClmError::InvalidArgument(format!(
            "instance dimension {} outside [2, {}]",
            spec.n_dims,
            base.n_dims()
        )));
    }
    if spec.n_points > base.n_points() {
        return Err(ClmError::InvalidArgument(format!(
            "instance size {} exceeds base size {}",
            spec.n_points,
            base.n_points()
        )));
    }
    subsample_n(base, spec.n_points, seed)?.project(spec.n_dims)
}

/// `N_t = 500 t + 5000` for `t = 0..=10`.
pub fn cardinality_grid() -> Vec<usize> {
    (0..=10).map(|t| 500 * t + 5000).collect()
}

/// `2, 10, 20, ..., 100`.
pub fn dimension_grid() -> Vec<usize> {
    (0..=10).map(|t| if t == 0 { 2 } else { 10 * t }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::between::{ch_btwn, BetweenConfig};
    use approx::assert_relative_eq;

    fn params(sep: f64, seed: u64) -> GaussianPairParams {
        GaussianPairParams {
            cov_a: [[1.0, 0.3], [0.3, 0.5]],
            cov_b: [[0.8, -0.2], [-0.2, 1.2]],
            proportion: 0.5,
            separation: sep,
            seed,
        }
    }

    #[test]
    fn exact_split_and_determinism() {
        let p = params(3.0, 1);
        let ds = generate_base(&p, 10_000).unwrap();
        assert_eq!(ds.class_partition().sizes(), vec![5000, 5000]);
        assert_eq!(ds, generate_base(&p, 10_000).unwrap());
    }

    #[test]
    fn non_pd_covariance_rejected() {
        let mut p = params(1.0, 0);
        p.cov_a = [[1.0, 2.0], [2.0, 1.0]];
        assert!(generate_base(&p, 100).is_err());
        p.cov_a = [[1.0, 0.1], [0.0, 1.0]];
        assert!(generate_base(&p, 100).is_err());
    }

    #[test]
    fn zero_separation_classes_are_equidistributed() {
        // Welch t-test on each coordinate; |t| < 2.576 is non-rejection at
        // the 1% level. Count rejections over seeds.
        let mut rejections = 0;
        let trials = 20;
        for seed in 0..trials {
            let mut p = params(0.0, seed);
            p.cov_b = p.cov_a;
            let ds = generate_base(&p, 2000).unwrap();
            let part = ds.class_partition();
            for col in 0..2 {
                let stats: Vec<(f64, f64, f64)> = part
                    .groups()
                    .iter()
                    .map(|g| {
                        let v: Vec<f64> = g.iter().map(|&i| ds.points()[[i, col]]).collect();
                        let n = v.len() as f64;
                        let m = v.iter().sum::<f64>() / n;
                        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
                        (m, var, n)
                    })
                    .collect();
                let (m1, v1, n1) = stats[0];
                let (m2, v2, n2) = stats[1];
                let t = (m1 - m2) / (v1 / n1 + v2 / n2).sqrt();
                if t.abs() > 2.576 {
                    rejections += 1;
                }
            }
        }
        // 40 tests at the 1% level: more than 3 rejections has probability < 1%.
        assert!(rejections <= 3, "{rejections} rejections");
    }

    #[test]
    fn noise_columns_follow_min_eigenvalue() {
        let p = params(4.0, 2);
        let base = generate_base(&p, 10_000).unwrap();
        assert_eq!(augment_noise(&base, &p, 2, 0, NoiseSpan::default()).unwrap(), base);
        let ds = augment_noise(&base, &p, 100, 5, NoiseSpan::default()).unwrap();
        assert_eq!((ds.n_points(), ds.n_dims()), (10_000, 100));
        assert_eq!(ds.project(2).unwrap(), base);
        for (g, cov) in ds.class_partition().groups().iter().zip([p.cov_a, p.cov_b]) {
            let v: Vec<f64> = g.iter().map(|&i| ds.points()[[i, 50]]).collect();
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            let target = eigenvalues(&cov).0;
            assert!((var - target).abs() < 0.1 * target, "{var} vs {target}");
        }
        assert!(augment_noise(&base, &p, 1, 0, NoiseSpan::default()).is_err());
    }

    #[test]
    fn eigen_and_rotation_agree() {
        let cov = rotated_covariance((2.0, 0.5), 0.7);
        let (lo, hi) = eigenvalues(&cov);
        assert_relative_eq!(lo, 0.25, max_relative = 1e-12);
        assert_relative_eq!(hi, 4.0, max_relative = 1e-12);
        assert_eq!(NoiseSpan::MinDiagonal.variance(&[[3.0, 0.0], [0.0, 2.0]]), 2.0);
    }

    #[test]
    fn grids() {
        let n = cardinality_grid();
        assert_eq!(n.len(), 11);
        assert_eq!(n[0], 5000);
        assert_eq!(n[10], 10_000);
        let d = dimension_grid();
        assert_eq!(d[0], 2);
        assert_eq!(d[3], 30);
        assert_eq!(d[10], 100);
    }

    #[test]
    fn instances_keep_proportions_and_plane() {
        let mut p = params(3.0, 3);
        p.proportion = 0.37;
        let base = generate_augmented(&p, 10_000, 100).unwrap();
        let full = make_instance(&base, &InstanceSpec { base_index: 0, n_points: 10_000, n_dims: 100 }, 1).unwrap();
        assert_eq!(full, base);
        let spec = InstanceSpec { base_index: 0, n_points: 5500, n_dims: 30 };
        let inst = make_instance(&base, &spec, 8).unwrap();
        assert_eq!((inst.n_points(), inst.n_dims()), (5500, 30));
        let share = inst.class_partition().sizes()[0] as f64 / 5500.0;
        assert!((share - 0.37).abs() <= 1.0 / 5500.0);
        let plane = make_instance(&base.project(2).unwrap(), &InstanceSpec { n_dims: 2, ..spec }, 8).unwrap();
        assert_eq!(inst.project(2).unwrap(), plane);
        assert!(make_instance(&base, &InstanceSpec { n_dims: 101, ..spec }, 0).is_err());
        assert!(make_instance(&base, &InstanceSpec { n_points: 10_001, ..spec }, 0).is_err());
    }

    #[test]
    fn separation_raises_median_score() {
        let seps = [0.0, 1.0, 2.0, 4.0, 8.0];
        let mut medians = Vec::new();
        for &sep in &seps {
            let mut scores: Vec<f64> = (0..20)
                .map(|s| {
                    let ds = generate_base(&params(sep, 100 + s), 300).unwrap();
                    ch_btwn(&ds, &ds.class_partition(), &BetweenConfig::with_seed(s).with_trials(30))
                        .unwrap()
                        .value
                })
                .collect();
            scores.sort_by(f64::total_cmp);
            medians.push((scores[9] + scores[10]) / 2.0);
        }
        for w in medians.windows(2) {
            assert!(w[1] >= w[0], "{medians:?}");
        }
    }
}

//! Classical within-dataset internal validity indices.
//!
//! Every index reads distances through a [`DistanceView`], so the scale and
//! shift transforms used by the axiom checks apply uniformly. Min/max
//! reductions compare values only, never indices.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{centroid, Dataset, DistanceView, Partition};
use crate::error::{ClmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    MaxIsBetter,
    MinIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvmScore {
    pub value: f64,
    pub direction: Direction,
}

impl IvmScore {
    fn max(value: f64) -> Self {
        Self {
            value,
            direction: Direction::MaxIsBetter,
        }
    }

    fn min(value: f64) -> Self {
        Self {
            value,
            direction: Direction::MinIsBetter,
        }
    }

    /// Whether `self` is strictly better than `other` in its direction.
    pub fn beats(&self, other: &IvmScore) -> bool {
        match self.direction {
            Direction::MaxIsBetter => self.value > other.value,
            Direction::MinIsBetter => self.value < other.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IvmKind {
    CalinskiHarabasz,
    Silhouette,
    DaviesBouldin,
    Dunn,
    XieBeni,
    IIndex,
}

impl IvmKind {
    pub const ALL: [IvmKind; 6] = [
        IvmKind::CalinskiHarabasz,
        IvmKind::Silhouette,
        IvmKind::DaviesBouldin,
        IvmKind::Dunn,
        IvmKind::XieBeni,
        IvmKind::IIndex,
    ];

    pub fn direction(self) -> Direction {
        match self {
            IvmKind::DaviesBouldin | IvmKind::XieBeni => Direction::MinIsBetter,
            _ => Direction::MaxIsBetter,
        }
    }

    /// Evaluates the index; the I-index uses its default exponent.
    pub fn evaluate(self, ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
        match self {
            IvmKind::CalinskiHarabasz => calinski_harabasz(ds, part, dv),
            IvmKind::Silhouette => silhouette(ds, part, dv),
            IvmKind::DaviesBouldin => davies_bouldin(ds, part, dv),
            IvmKind::Dunn => dunn(ds, part, dv),
            IvmKind::XieBeni => xie_beni(ds, part, dv),
            IvmKind::IIndex => i_index(ds, part, dv, I_INDEX_DEFAULT_P),
        }
    }
}

pub const I_INDEX_DEFAULT_P: f64 = 2.0;

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

fn class_centroids(points: ArrayView2<'_, f64>, part: &Partition) -> Vec<Array1<f64>> {
    part.groups().iter().map(|g| centroid(points, g)).collect()
}

/// Calinski-Harabasz ratio over arbitrary member groups, with `center` the
/// centroid of their union.
pub(crate) fn ch_ratio(
    points: ArrayView2<'_, f64>,
    groups: &[Vec<usize>],
    center: ArrayView1<'_, f64>,
    dv: &DistanceView,
) -> Result<f64> {
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(ClmError::DegenerateInput(format!(
            "{n} points for {k} groups leaves no within-group degrees of freedom"
        )));
    }
    let mut between = 0.0;
    let mut within = 0.0;
    for group in groups {
        let c = centroid(points, group);
        let d = dv.distance(c.view(), center);
        between += group.len() as f64 * d * d;
        within += group
            .iter()
            .map(|&i| {
                let d = dv.distance(points.row(i), c.view());
                d * d
            })
            .sum::<f64>();
    }
    if within <= 0.0 {
        return Err(ClmError::DegenerateGeometry(
            "zero within-group scatter".into(),
        ));
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

pub fn calinski_harabasz(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
    check(ds, part)?;
    let all: Vec<usize> = (0..ds.n_points()).collect();
    let center = centroid(ds.points(), &all);
    ch_ratio(ds.points(), part.groups(), center.view(), dv).map(IvmScore::max)
}

/// Mean silhouette over all points.
pub fn silhouette(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
    check(ds, part)?;
    if let Some(g) = part.groups().iter().position(|g| g.len() < 2) {
        return Err(ClmError::DegenerateInput(format!(
            "group {g} is a singleton; silhouette needs two points per group"
        )));
    }
    let pts = ds.points();
    let groups = part.groups();
    let mut total = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        for &x in group {
            let mean_to = |members: &[usize]| {
                members
                    .iter()
                    .map(|&y| dv.distance(pts.row(x), pts.row(y)))
                    .sum::<f64>()
            };
            let a = mean_to(group) / (group.len() - 1) as f64;
            let b = groups
                .iter()
                .enumerate()
                .filter(|(gj, _)| *gj != gi)
                .map(|(_, other)| mean_to(other) / other.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    Ok(IvmScore::max(total / ds.n_points() as f64))
}

pub fn davies_bouldin(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
    check(ds, part)?;
    let pts = ds.points();
    let cents = class_centroids(pts, part);
    let spread: Vec<f64> = part
        .groups()
        .iter()
        .zip(&cents)
        .map(|(g, c)| {
            g.iter().map(|&i| dv.distance(pts.row(i), c.view())).sum::<f64>() / g.len() as f64
        })
        .collect();
    let k = cents.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let sep = dv.distance(cents[i].view(), cents[j].view());
            if sep <= 0.0 {
                return Err(ClmError::DegenerateGeometry(format!(
                    "groups {i} and {j} share a centroid"
                )));
            }
            worst = worst.max((spread[i] + spread[j]) / sep);
        }
        total += worst;
    }
    Ok(IvmScore::min(total / k as f64))
}

pub fn dunn(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
    check(ds, part)?;
    let pts = ds.points();
    let groups = part.groups();
    let mut diameter = 0.0f64;
    for g in groups {
        for (a, &x) in g.iter().enumerate() {
            for &y in &g[a + 1..] {
                diameter = diameter.max(dv.distance(pts.row(x), pts.row(y)));
            }
        }
    }
    if diameter <= 0.0 {
        return Err(ClmError::DegenerateGeometry(
            "every group has zero diameter".into(),
        ));
    }
    let mut separation = f64::INFINITY;
    for (i, gi) in groups.iter().enumerate() {
        for gj in &groups[i + 1..] {
            for &x in gi {
                for &y in gj {
                    separation = separation.min(dv.distance(pts.row(x), pts.row(y)));
                }
            }
        }
    }
    Ok(IvmScore::max(separation / diameter))
}

pub fn xie_beni(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<IvmScore> {
    check(ds, part)?;
    let pts = ds.points();
    let cents = class_centroids(pts, part);
    let scatter: f64 = part
        .groups()
        .iter()
        .zip(&cents)
        .map(|(g, c)| {
            g.iter()
                .map(|&i| dv.distance(pts.row(i), c.view()).powi(2))
                .sum::<f64>()
        })
        .sum();
    let mut min_sep = f64::INFINITY;
    for (i, ci) in cents.iter().enumerate() {
        for cj in &cents[i + 1..] {
            min_sep = min_sep.min(dv.distance(ci.view(), cj.view()).powi(2));
        }
    }
    if min_sep <= 0.0 {
        return Err(ClmError::DegenerateGeometry(
            "two groups share a centroid".into(),
        ));
    }
    Ok(IvmScore::min(scatter / (ds.n_points() as f64 * min_sep)))
}

/// I-index (Maulik-Bandyopadhyay). Not scale invariant: the value scales as
/// `scale^p` because the maximum centroid separation carries one factor of
/// the distance scale.
pub fn i_index(ds: &Dataset, part: &Partition, dv: &DistanceView, p: f64) -> Result<IvmScore> {
    check(ds, part)?;
    let pts = ds.points();
    let all: Vec<usize> = (0..ds.n_points()).collect();
    let center = centroid(pts, &all);
    let cents = class_centroids(pts, part);
    let total: f64 = all
        .iter()
        .map(|&i| dv.distance(pts.row(i), center.view()))
        .sum();
    let within: f64 = part
        .groups()
        .iter()
        .zip(&cents)
        .map(|(g, c)| g.iter().map(|&i| dv.distance(pts.row(i), c.view())).sum::<f64>())
        .sum();
    if within <= 0.0 {
        return Err(ClmError::DegenerateGeometry(
            "zero within-group scatter".into(),
        ));
    }
    let mut max_sep = 0.0f64;
    for (i, ci) in cents.iter().enumerate() {
        for cj in &cents[i + 1..] {
            max_sep = max_sep.max(dv.distance(ci.view(), cj.view()));
        }
    }
    let base = total / within * max_sep / cents.len() as f64;
    Ok(IvmScore::max(base.powf(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::{d4, six_point};
    use crate::rng;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, StandardNormal};

    fn euclid() -> DistanceView {
        DistanceView::euclidean()
    }

    fn d4_far() -> Dataset {
        Dataset::new(
            array![[0.0, 0.0], [0.0, 1.0], [20.0, 0.0], [20.0, 1.0]],
            d4().labels().to_vec(),
        )
        .unwrap()
    }

    fn blobs(seed: u64, sep: f64, n: usize) -> Dataset {
        let mut rng = rng::stream(seed, 0, 0, 0);
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + if i % 2 == 1 && j == 0 { sep } else { 0.0 }
        });
        let labels = (0..n).map(|i| (i % 2).to_string()).collect();
        Dataset::new(pts, labels).unwrap()
    }

    #[test]
    fn d4_hand_values() {
        let ds = d4();
        let part = ds.class_partition();
        let dv = euclid();
        assert_relative_eq!(calinski_harabasz(&ds, &part, &dv).unwrap().value, 200.0, max_relative = 1e-12);
        assert_relative_eq!(dunn(&ds, &part, &dv).unwrap().value, 10.0, max_relative = 1e-12);
        assert_relative_eq!(xie_beni(&ds, &part, &dv).unwrap().value, 0.0025, max_relative = 1e-12);
        assert_relative_eq!(davies_bouldin(&ds, &part, &dv).unwrap().value, 0.1, max_relative = 1e-12);
        let sil = silhouette(&ds, &part, &dv).unwrap().value;
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert_relative_eq!(sil, 1.0 - 1.0 / b, max_relative = 1e-12);
        assert!((sil - 0.9002).abs() < 1e-4);
        let i2 = i_index(&ds, &part, &dv, 2.0).unwrap().value;
        let expected = (0.5 * (4.0 * 25.25f64.sqrt() / 2.0) * 10.0).powi(2);
        assert_relative_eq!(i2, expected, max_relative = 1e-12);
        assert_relative_eq!(i2, 2525.0, max_relative = 1e-3);
    }

    #[test]
    fn i_index_exponent_and_scale_law() {
        let ds = six_point();
        let part = ds.class_partition();
        let p2 = i_index(&ds, &part, &euclid(), 2.0).unwrap().value;
        let p1 = i_index(&ds, &part, &euclid(), 1.0).unwrap().value;
        assert_relative_eq!(p1, p2.sqrt(), max_relative = 1e-12);
        let scaled = i_index(&ds, &part, &DistanceView::new(2.0, 0.0).unwrap(), 2.0)
            .unwrap()
            .value;
        assert_relative_eq!(scaled, 4.0 * p2, max_relative = 1e-12);
    }

    #[test]
    fn plain_ch_is_not_shift_invariant() {
        let ds = d4();
        let part = ds.class_partition();
        let shifted = calinski_harabasz(&ds, &part, &DistanceView::new(1.0, 1.0).unwrap())
            .unwrap()
            .value;
        // Between term 2*36*2, within term 4*1.5^2/2.
        assert_relative_eq!(shifted, 32.0, max_relative = 1e-12);
        assert!((shifted - 200.0).abs() / 200.0 > 0.01);
    }

    #[test]
    fn db_halves_when_clusters_move_apart() {
        let ds = d4_far();
        let v = davies_bouldin(&ds, &ds.class_partition(), &euclid()).unwrap().value;
        assert_relative_eq!(v, 0.05, max_relative = 1e-12);
    }

    #[test]
    fn separation_improves_every_index() {
        let (near, far) = (d4(), d4_far());
        for kind in IvmKind::ALL {
            let a = kind.evaluate(&near, &near.class_partition(), &euclid()).unwrap();
            let b = kind.evaluate(&far, &far.class_partition(), &euclid()).unwrap();
            assert!(b.beats(&a), "{kind:?}: {} vs {}", b.value, a.value);
        }
    }

    #[test]
    fn scale_invariance_of_ratio_indices() {
        let ds = blobs(4, 3.0, 40);
        let part = ds.class_partition();
        for kind in IvmKind::ALL.into_iter().filter(|k| *k != IvmKind::IIndex) {
            let base = kind.evaluate(&ds, &part, &euclid()).unwrap().value;
            for alpha in [0.1, 1.0, 7.3] {
                let dv = DistanceView::new(alpha, 0.0).unwrap();
                let v = kind.evaluate(&ds, &part, &dv).unwrap().value;
                assert_relative_eq!(v, base, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn isomorphism_invariance() {
        let ds = blobs(5, 2.0, 30);
        let mut order: Vec<usize> = (0..ds.n_points()).collect();
        order.shuffle(&mut rng::stream(11, 0, 0, 0));
        let moved = ds.select_rows(&order).unwrap();
        let relabeled: Vec<String> = moved
            .labels()
            .iter()
            .map(|l| if l == "0" { "z".into() } else { "a".into() })
            .collect();
        let moved = Dataset::new(moved.points().to_owned(), relabeled).unwrap();
        for kind in IvmKind::ALL {
            let a = kind.evaluate(&ds, &ds.class_partition(), &euclid()).unwrap().value;
            let b = kind
                .evaluate(&moved, &moved.class_partition(), &euclid())
                .unwrap()
                .value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn silhouette_is_unchanged_by_duplicating_points() {
        let ds = six_point();
        let rows: Vec<usize> = (0..ds.n_points()).flat_map(|i| [i, i]).collect();
        let doubled = ds.select_rows(&rows).unwrap();
        let a = silhouette(&ds, &ds.class_partition(), &euclid()).unwrap().value;
        let b = silhouette(&doubled, &doubled.class_partition(), &euclid())
            .unwrap()
            .value;
        // Brute force on the doubled set: a(x) gains a zero-distance twin, so
        // it is only approximately preserved; the point-mean stays close.
        let brute = {
            let pts = doubled.points();
            let labels = doubled.labels();
            let n = doubled.n_points();
            let mut total = 0.0;
            for x in 0..n {
                let mut same = (0.0, 0usize);
                let mut other = (0.0, 0usize);
                for y in 0..n {
                    if y == x {
                        continue;
                    }
                    let d = euclid().distance(pts.row(x), pts.row(y));
                    if labels[y] == labels[x] {
                        same = (same.0 + d, same.1 + 1);
                    } else {
                        other = (other.0 + d, other.1 + 1);
                    }
                }
                let (a, b) = (same.0 / same.1 as f64, other.0 / other.1 as f64);
                total += (b - a) / a.max(b);
            }
            total / n as f64
        };
        assert_relative_eq!(b, brute, max_relative = 1e-12);
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn xie_beni_prefers_separated_data() {
        let ds = d4();
        let sep = xie_beni(&ds, &ds.class_partition(), &euclid()).unwrap();
        let overlap = blobs(9, 0.0, 200);
        let ov = xie_beni(&overlap, &overlap.class_partition(), &euclid()).unwrap();
        assert!(sep.beats(&ov));
    }

    #[test]
    fn error_paths() {
        let ds = d4();
        let singletons = Partition::new(vec![vec![0], vec![1], vec![2], vec![3]], 4).unwrap();
        assert!(matches!(
            calinski_harabasz(&ds, &singletons, &euclid()),
            Err(ClmError::DegenerateInput(_))
        ));
        assert!(matches!(
            silhouette(&ds, &singletons, &euclid()),
            Err(ClmError::DegenerateInput(_))
        ));
        let one = Partition::new(vec![vec![0, 1, 2, 3]], 4).unwrap();
        assert!(matches!(
            dunn(&ds, &one, &euclid()),
            Err(ClmError::InvalidPartition(_))
        ));
        // Interleaved groups with equal centroids.
        let sym = Dataset::new(
            array![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
            ["a", "b", "a", "b"].map(String::from).to_vec(),
        )
        .unwrap();
        assert!(matches!(
            davies_bouldin(&sym, &sym.class_partition(), &euclid()),
            Err(ClmError::DegenerateGeometry(_))
        ));
        assert!(matches!(
            xie_beni(&sym, &sym.class_partition(), &euclid()),
            Err(ClmError::DegenerateGeometry(_))
        ));
    }
}

//! Datasets, partitions, the distance layer and centroid statistics.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};
use crate::rng;

/// Relative threshold below which the spread of point-to-centroid distances
/// is treated as zero.
pub const EPS_GEOM: f64 = 1e-12;

/// Numeric points with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    labels: Vec<String>,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Vec<String>) -> Result<Self> {
        let (rows, cols) = points.dim();
        if rows < 2 {
            return Err(ClmError::InvalidDataset(format!(
                "need at least 2 points, got {rows}"
            )));
        }
        if cols < 1 {
            return Err(ClmError::InvalidDataset("need at least 1 feature".into()));
        }
        if labels.len() != rows {
            return Err(ClmError::InvalidDataset(format!(
                "{} labels for {rows} points",
                labels.len()
            )));
        }
        if let Some(((r, c), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(ClmError::InvalidDataset(format!(
                "non-finite value at row {r}, column {c}"
            )));
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.points.ncols()
    }

    /// Distinct class names, sorted.
    pub fn classes(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.clone();
        names.sort();
        names.dedup();
        names
    }

    /// The partition induced by the class labels. Group `i` holds the rows of
    /// `self.classes()[i]`, in ascending row order.
    pub fn class_partition(&self) -> Partition {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, label) in self.labels.iter().enumerate() {
            groups.entry(label.as_str()).or_default().push(i);
        }
        Partition {
            groups: groups.into_values().collect(),
            n_points: self.n_points(),
        }
    }

    /// Rows `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let points = self.points.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Self::new(points, labels)
    }

    /// The first `dims` columns.
    pub fn project(&self, dims: usize) -> Result<Self> {
        if dims == 0 || dims > self.n_dims() {
            return Err(ClmError::InvalidArgument(format!(
                "cannot project {} columns to {dims}",
                self.n_dims()
            )));
        }
        let points = self.points.slice(ndarray::s![.., ..dims]).to_owned();
        Self::new(points, self.labels.clone())
    }
}

/// Disjoint, non-empty groups of point indices covering `0..n_points`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    n_points: usize,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, n_points: usize) -> Result<Self> {
        let mut seen = vec![false; n_points];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(ClmError::InvalidPartition(format!("group {g} is empty")));
            }
            for &i in group {
                if i >= n_points {
                    return Err(ClmError::InvalidPartition(format!(
                        "index {i} out of range for {n_points} points"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(ClmError::InvalidPartition(format!(
                        "index {i} appears twice"
                    )));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(ClmError::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(Self { groups, n_points })
    }

    /// Builds a partition from one group id per point. Ids need not be
    /// contiguous; groups are ordered by id.
    pub fn from_assignments(assignments: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &a) in assignments.iter().enumerate() {
            groups.entry(a).or_default().push(i);
        }
        Self {
            groups: groups.into_values().collect(),
            n_points: assignments.len(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Group index of every point.
    pub fn assignments(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_points];
        for (g, group) in self.groups.iter().enumerate() {
            for &i in group {
                out[i] = g;
            }
        }
        out
    }

    pub(crate) fn check_matches(&self, ds: &Dataset) -> Result<()> {
        if self.n_points != ds.n_points() {
            return Err(ClmError::InvalidPartition(format!(
                "partition covers {} points, dataset has {}",
                self.n_points,
                ds.n_points()
            )));
        }
        Ok(())
    }
}

/// Euclidean distance with an affine transform: `scale * d + shift` for
/// distinct inputs and `0` for identical ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceView {
    scale: f64,
    shift: f64,
}

impl Default for DistanceView {
    fn default() -> Self {
        Self::euclidean()
    }
}

impl DistanceView {
    pub const fn euclidean() -> Self {
        Self {
            scale: 1.0,
            shift: 0.0,
        }
    }

    pub fn new(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ClmError::InvalidArgument(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(ClmError::InvalidArgument(format!(
                "shift must be non-negative, got {shift}"
            )));
        }
        Ok(Self { scale, shift })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Applies the transform to a raw Euclidean distance.
    #[inline]
    pub fn transform(&self, raw: f64) -> f64 {
        if raw == 0.0 {
            0.0
        } else {
            self.scale * raw + self.shift
        }
    }

    #[inline]
    pub fn distance(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        self.transform(euclidean(x, y))
    }
}

#[inline]
pub(crate) fn squared_euclidean(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn euclidean(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    squared_euclidean(x, y).sqrt()
}

/// Coordinate-wise mean of the rows in `members`.
pub(crate) fn centroid(points: ArrayView2<'_, f64>, members: &[usize]) -> Array1<f64> {
    let mut sum = Array1::zeros(points.ncols());
    for &i in members {
        sum += &points.row(i);
    }
    sum / members.len() as f64
}

/// Population standard deviation of `dv(x, center)` over `members`, rejecting
/// spreads below [`EPS_GEOM`] relative to the mean distance.
pub(crate) fn distance_spread(
    points: ArrayView2<'_, f64>,
    members: &[usize],
    center: ArrayView1<'_, f64>,
    dv: &DistanceView,
) -> Result<f64> {
    let dists: Vec<f64> = members
        .iter()
        .map(|&i| dv.distance(points.row(i), center))
        .collect();
    let n = dists.len() as f64;
    let mean = dists.iter().sum::<f64>() / n;
    let var = dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if mean.is_nan() || mean <= 0.0 || sigma < EPS_GEOM * mean {
        return Err(ClmError::DegenerateGeometry(format!(
            "distances to the centroid have no spread (sigma={sigma:e}, mean={mean:e})"
        )));
    }
    Ok(sigma)
}

/// Class centroids, the global centroid and the spread of distances to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidStats {
    pub class_centroids: Vec<Array1<f64>>,
    pub global_centroid: Array1<f64>,
    pub sigma_d: f64,
}

/// Class and global centroids without the spread check.
pub fn centroids(ds: &Dataset, part: &Partition) -> Result<(Vec<Array1<f64>>, Array1<f64>)> {
    part.check_matches(ds)?;
    let pts = ds.points();
    let class_centroids = part.groups().iter().map(|g| centroid(pts, g)).collect();
    let all: Vec<usize> = (0..ds.n_points()).collect();
    Ok((class_centroids, centroid(pts, &all)))
}

pub fn centroid_stats(ds: &Dataset, part: &Partition, dv: &DistanceView) -> Result<CentroidStats> {
    let (class_centroids, global_centroid) = centroids(ds, part)?;
    let all: Vec<usize> = (0..ds.n_points()).collect();
    let sigma_d = distance_spread(ds.points(), &all, global_centroid.view(), dv)?;
    Ok(CentroidStats {
        class_centroids,
        global_centroid,
        sigma_d,
    })
}

/// Class-proportional random subsample: `ceil(alpha * |C_i|)` rows drawn
/// without replacement from every class. Selected rows keep their original
/// relative order.
pub fn subsample(ds: &Dataset, alpha: f64, seed: u64) -> Result<Dataset> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ClmError::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let part = ds.class_partition();
    let mut keep = Vec::new();
    for (c, group) in part.groups().iter().enumerate() {
        let take = proportional_count(alpha, group.len());
        let mut rng = rng::stream(seed, c as u64, 0, 0);
        keep.extend(
            index::sample(&mut rng, group.len(), take)
                .into_iter()
                .map(|k| group[k]),
        );
    }
    keep.sort_unstable();
    ds.select_rows(&keep)
}

/// Class-proportional random subsample of exactly `n` rows. Class quotas are
/// `floor(n * p_i)` plus one for the largest remainders (ties to the earlier
/// class), and every class keeps at least one row.
pub fn subsample_n(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let part = ds.class_partition();
    let sizes = part.sizes();
    if n < sizes.len() || n > ds.n_points() {
        return Err(ClmError::InvalidArgument(format!(
            "cannot draw {n} rows covering {} classes from {} points",
            sizes.len(),
            ds.n_points()
        )));
    }
    let total = ds.n_points() as f64;
    let exact: Vec<f64> = sizes.iter().map(|&s| n as f64 * s as f64 / total).collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| (x.floor() as usize).max(1)).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut assigned: usize = quota.iter().sum();
    for &c in order.iter().cycle() {
        if assigned >= n {
            break;
        }
        if quota[c] < sizes[c] {
            quota[c] += 1;
            assigned += 1;
        }
    }
    // Minimum-one quotas can overshoot on tiny draws; trim the largest classes.
    while assigned > n {
        let c = (0..sizes.len()).max_by_key(|&c| (quota[c], usize::MAX - c)).unwrap();
        quota[c] -= 1;
        assigned -= 1;
    }
    let mut keep = Vec::with_capacity(n);
    for (c, group) in part.groups().iter().enumerate() {
        let mut rng = rng::stream(seed, c as u64, 0, 0);
        keep.extend(
            index::sample(&mut rng, group.len(), quota[c])
                .into_iter()
                .map(|k| group[k]),
        );
    }
    keep.sort_unstable();
    ds.select_rows(&keep)
}

/// `ceil(alpha * n)`, treating products within 1e-9 of an integer as exact.
pub(crate) fn proportional_count(alpha: f64, n: usize) -> usize {
    let x = alpha * n as f64;
    let r = x.round();
    let count = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (count as usize).clamp(1, n)
}

/// Selects the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    #[default]
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by zero-based index, `last` the final column, anything
    /// else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "last" {
            return Ok(LabelColumn::Last);
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label)
}

pub fn read_csv(reader: impl Read, label: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = match label {
        LabelColumn::Last => headers.len().checked_sub(1),
        LabelColumn::Index(i) => (*i < headers.len()).then_some(*i),
        LabelColumn::Name(name) => headers.iter().position(|h| h == name),
    }
    .ok_or_else(|| ClmError::Parse {
        row: 0,
        column: format!("{label:?}"),
        message: "label column not found".into(),
    })?;
    if headers.len() < 2 {
        return Err(ClmError::InvalidDataset(
            "need at least one feature column besides the label".into(),
        ));
    }
    let dims = headers.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| ClmError::Parse {
                row: r + 1,
                column: headers[c].to_string(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(ClmError::Parse {
                    row: r + 1,
                    column: headers[c].to_string(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
    }
    let rows = labels.len();
    if rows < 2 {
        return Err(ClmError::InvalidDataset(format!(
            "need at least 2 rows, got {rows}"
        )));
    }
    let points = Array2::from_shape_vec((rows, dims), values)
        .map_err(|e| ClmError::InvalidDataset(e.to_string()))?;
    let ds = Dataset::new(points, labels)?;
    if ds.classes().len() < 2 {
        return Err(ClmError::InvalidDataset(
            "need at least 2 distinct classes".into(),
        ));
    }
    Ok(ds)
}

/// Writes `x0..x{d-1},label` with shortest round-trip float formatting.
pub fn write_csv(ds: &Dataset, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.n_dims()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(ds.n_dims() + 1);
    for (i, point) in ds.points().outer_iter().enumerate() {
        row.clear();
        row.extend(point.iter().map(|v| v.to_string()));
        row.push(ds.labels()[i].clone());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(ds, std::io::BufWriter::new(file))
}

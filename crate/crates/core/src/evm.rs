//! External validation measures and small statistics helpers.
//!
//! Entropies use the natural log. Sums over contingency cells are taken over
//! sorted terms, which makes every measure exactly symmetric in its two
//! arguments.
//!
//! Zero-entropy conventions:
//! - ARI is 1 when both partitions are trivial in the same way (denominator 0).
//! - AMI is 1 for partitions identical up to relabeling, 0 when exactly one of
//!   them is a single group.
//! - NMI is 0 whenever either entropy is 0.
//! - V-measure takes homogeneity 1 when `H(p1) = 0` and completeness 1 when
//!   `H(p2) = 0`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::Partition;
use crate::error::{ClmError, Result};

/// Co-occurrence counts of two partitions of the same points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    total: usize,
}

impl ContingencyTable {
    pub fn new(p1: &Partition, p2: &Partition) -> Result<Self> {
        if p1.n_points() != p2.n_points() {
            return Err(ClmError::InvalidArgument(format!(
                "partitions cover {} and {} points",
                p1.n_points(),
                p2.n_points()
            )));
        }
        let col_of = p2.assignments();
        let mut counts = vec![vec![0usize; p2.n_groups()]; p1.n_groups()];
        for (r, group) in p1.groups().iter().enumerate() {
            for &i in group {
                counts[r][col_of[i]] += 1;
            }
        }
        Ok(Self {
            row_sums: p1.sizes(),
            col_sums: p2.sizes(),
            total: p1.n_points(),
            counts,
        })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn total(&self) -> usize {
        self.total
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.counts.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(k, &c)| (r, k, c))
        })
    }

    /// Each row and each column has exactly one non-zero cell.
    fn is_bijective(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
            && (0..self.col_sums.len())
                .all(|k| self.counts.iter().filter(|row| row[k] > 0).count() == 1)
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        sorted_sum(self.cells().map(|(r, k, c)| {
            let c = c as f64;
            c / n * (n * c / (self.row_sums[r] as f64 * self.col_sums[k] as f64)).ln()
        }))
        .max(0.0)
    }

    pub fn row_entropy(&self) -> f64 {
        entropy(&self.row_sums, self.total)
    }

    pub fn col_entropy(&self) -> f64 {
        entropy(&self.col_sums, self.total)
    }

    /// `H(rows | cols)`.
    fn rows_given_cols(&self) -> f64 {
        let n = self.total as f64;
        sorted_sum(
            self.cells()
                .map(|(_, k, c)| -(c as f64 / n) * (c as f64 / self.col_sums[k] as f64).ln()),
        )
        .max(0.0)
    }

    /// `H(cols | rows)`.
    fn cols_given_rows(&self) -> f64 {
        let n = self.total as f64;
        sorted_sum(
            self.cells()
                .map(|(r, _, c)| -(c as f64 / n) * (c as f64 / self.row_sums[r] as f64).ln()),
        )
        .max(0.0)
    }
}

fn sorted_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn entropy(sizes: &[usize], total: usize) -> f64 {
    let n = total as f64;
    sorted_sum(
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| -(s as f64 / n) * (s as f64 / n).ln()),
    )
    .max(0.0)
}

fn choose2(x: usize) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

/// Adjusted Rand index, computed in exact integer arithmetic up to the final
/// division.
pub fn adjusted_rand(p1: &Partition, p2: &Partition) -> Result<f64> {
    let t = ContingencyTable::new(p1, p2)?;
    let index: i128 = t.cells().map(|(_, _, c)| choose2(c)).sum();
    let a: i128 = t.row_sums.iter().map(|&s| choose2(s)).sum();
    let b: i128 = t.col_sums.iter().map(|&s| choose2(s)).sum();
    let pairs = choose2(t.total);
    // ARI = (index - a*b/pairs) / ((a+b)/2 - a*b/pairs), scaled by 2*pairs.
    let num = 2 * (pairs * index - a * b);
    let den = pairs * (a + b) - 2 * a * b;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Normalizer used in the AMI denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmiNormalization {
    #[default]
    Arithmetic,
    Geometric,
    Max,
    Min,
}

impl AmiNormalization {
    fn combine(self, h1: f64, h2: f64) -> f64 {
        match self {
            AmiNormalization::Arithmetic => (h1 + h2) / 2.0,
            AmiNormalization::Geometric => (h1 * h2).sqrt(),
            AmiNormalization::Max => h1.max(h2),
            AmiNormalization::Min => h1.min(h2),
        }
    }
}

/// Expected mutual information of two partitions with the given group sizes
/// under the permutation (hypergeometric) model.
pub fn expected_mutual_information(rows: &[usize], cols: &[usize], total: usize) -> f64 {
    let n = total as f64;
    let lf = |x: usize| ln_gamma(x as f64 + 1.0);
    let ln_n_fact = lf(total);
    let mut terms = Vec::new();
    for &a in rows {
        for &b in cols {
            let lo = (a + b).saturating_sub(total).max(1);
            let hi = a.min(b);
            // Grouped so that swapping (a, b) reproduces the same bits.
            let fixed = (lf(a) + lf(total - a)) + (lf(b) + lf(total - b)) - ln_n_fact;
            for nij in lo..=hi {
                let x = nij as f64;
                let log_p =
                    fixed - lf(nij) - (lf(a - nij) + lf(b - nij)) - lf(total + nij - a - b);
                terms.push(x / n * (n * x / (a as f64 * b as f64)).ln() * log_p.exp());
            }
        }
    }
    sorted_sum(terms.into_iter())
}

pub fn adjusted_mutual_information(p1: &Partition, p2: &Partition) -> Result<f64> {
    adjusted_mutual_information_with(p1, p2, AmiNormalization::default())
}

pub fn adjusted_mutual_information_with(
    p1: &Partition,
    p2: &Partition,
    norm: AmiNormalization,
) -> Result<f64> {
    let t = ContingencyTable::new(p1, p2)?;
    if t.is_bijective() {
        return Ok(1.0);
    }
    let (h1, h2) = (t.row_entropy(), t.col_entropy());
    if h1 == 0.0 || h2 == 0.0 {
        return Ok(0.0);
    }
    let mi = t.mutual_information();
    let emi = expected_mutual_information(&t.row_sums, &t.col_sums, t.total);
    let den = norm.combine(h1, h2) - emi;
    if den.abs() < f64::EPSILON {
        return Ok(0.0);
    }
    Ok((mi - emi) / den)
}

/// Normalized mutual information with the geometric-mean normalizer.
pub fn nmi_geometric(p1: &Partition, p2: &Partition) -> Result<f64> {
    let t = ContingencyTable::new(p1, p2)?;
    let (h1, h2) = (t.row_entropy(), t.col_entropy());
    if h1 == 0.0 || h2 == 0.0 {
        return Ok(0.0);
    }
    Ok((t.mutual_information() / (h1 * h2).sqrt()).clamp(0.0, 1.0))
}

/// Homogeneity, completeness and V-measure of `clusters` against `classes`.
pub fn homogeneity_completeness_v(classes: &Partition, clusters: &Partition) -> Result<(f64, f64, f64)> {
    let t = ContingencyTable::new(classes, clusters)?;
    let (h_c, h_k) = (t.row_entropy(), t.col_entropy());
    let h = if h_c == 0.0 {
        1.0
    } else {
        1.0 - t.rows_given_cols() / h_c
    };
    let c = if h_k == 0.0 {
        1.0
    } else {
        1.0 - t.cols_given_rows() / h_k
    };
    let v = if h + c == 0.0 { 0.0 } else { 2.0 * h * c / (h + c) };
    Ok((h, c, v))
}

pub fn v_measure(p1: &Partition, p2: &Partition) -> Result<f64> {
    homogeneity_completeness_v(p1, p2).map(|(_, _, v)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvmKind {
    Ami,
    Arand,
    Vm,
    Nmi,
}

impl EvmKind {
    pub fn evaluate(self, p1: &Partition, p2: &Partition) -> Result<f64> {
        match self {
            EvmKind::Ami => adjusted_mutual_information(p1, p2),
            EvmKind::Arand => adjusted_rand(p1, p2),
            EvmKind::Vm => v_measure(p1, p2),
            EvmKind::Nmi => nmi_geometric(p1, p2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvmKind::Ami => "ami",
            EvmKind::Arand => "arand",
            EvmKind::Vm => "vm",
            EvmKind::Nmi => "nmi",
        }
    }
}

impl std::str::FromStr for EvmKind {
    type Err = ClmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ami" => Ok(EvmKind::Ami),
            "arand" | "ari" => Ok(EvmKind::Arand),
            "vm" | "v-measure" => Ok(EvmKind::Vm),
            "nmi" => Ok(EvmKind::Nmi),
            other => Err(ClmError::InvalidArgument(format!("unknown external measure {other:?}"))),
        }
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(ClmError::InvalidArgument(format!(
            "need two equal-length vectors of at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or_else(|| ClmError::DegenerateInput("constant input has no rank correlation".into()))
}

/// Symmetric mean absolute percentage error in `[0, 1]`; pairs with
/// `|f| + |g| = 0` contribute 0.
pub fn smape(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() || f.is_empty() {
        return Err(ClmError::InvalidArgument(format!(
            "need two equal-length non-empty vectors, got {} and {}",
            f.len(),
            g.len()
        )));
    }
    let total: f64 = f
        .iter()
        .zip(g)
        .map(|(x, y)| {
            let den = x.abs() + y.abs();
            if den == 0.0 {
                0.0
            } else {
                (x - y).abs() / den
            }
        })
        .sum();
    Ok(total / f.len() as f64)
}

//! Ranking datasets by a chosen internal measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::between::{score_variant, BetweenConfig, BetweenScore, VariantId};
use crate::dataset::{Dataset, DistanceView};
use crate::error::{ClmError, Result};
use crate::within::{Direction, IvmKind};

/// Any within-dataset index or any between-dataset variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Within(IvmKind),
    Between(VariantId),
}

/// Successful evaluation; `between` holds the per-pair breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOutcome {
    pub value: f64,
    pub direction: Direction,
    pub between: Option<BetweenScore>,
}

impl Measure {
    pub const NAMES: [&'static str; 10] = [
        "ch",
        "silhouette",
        "davies-bouldin",
        "dunn",
        "xie-beni",
        "i-index",
        "ch-pairwise",
        "ch-t2",
        "ch-t4",
        "ch-btwn",
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Within(IvmKind::CalinskiHarabasz) => "ch",
            Measure::Within(IvmKind::Silhouette) => "silhouette",
            Measure::Within(IvmKind::DaviesBouldin) => "davies-bouldin",
            Measure::Within(IvmKind::Dunn) => "dunn",
            Measure::Within(IvmKind::XieBeni) => "xie-beni",
            Measure::Within(IvmKind::IIndex) => "i-index",
            Measure::Between(VariantId::Ch) => "ch-pairwise",
            Measure::Between(VariantId::ChT2) => "ch-t2",
            Measure::Between(VariantId::ChT4) => "ch-t4",
            Measure::Between(VariantId::ChT2T4) => "ch-btwn",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Measure::Within(kind) => kind.direction(),
            Measure::Between(_) => Direction::MaxIsBetter,
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Measure::Between(v) if v.range_trick())
    }

    /// Scores the dataset against its own class labels.
    pub fn evaluate(self, ds: &Dataset, cfg: &BetweenConfig) -> Result<MeasureOutcome> {
        let part = ds.class_partition();
        match self {
            Measure::Within(kind) => {
                let s = kind.evaluate(ds, &part, &DistanceView::euclidean())?;
                Ok(MeasureOutcome {
                    value: s.value,
                    direction: s.direction,
                    between: None,
                })
            }
            Measure::Between(v) => {
                let s = score_variant(v, ds, &part, cfg)?;
                Ok(MeasureOutcome {
                    value: s.value,
                    direction: Direction::MaxIsBetter,
                    between: Some(s),
                })
            }
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = ClmError;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ch" | "calinski-harabasz" => Measure::Within(IvmKind::CalinskiHarabasz),
            "silhouette" | "sc" => Measure::Within(IvmKind::Silhouette),
            "davies-bouldin" | "db" => Measure::Within(IvmKind::DaviesBouldin),
            "dunn" | "di" => Measure::Within(IvmKind::Dunn),
            "xie-beni" | "xb" => Measure::Within(IvmKind::XieBeni),
            "i-index" | "ii" => Measure::Within(IvmKind::IIndex),
            "ch-pairwise" => Measure::Between(VariantId::Ch),
            "ch-t2" => Measure::Between(VariantId::ChT2),
            "ch-t4" => Measure::Between(VariantId::ChT4),
            "ch-btwn" | "ch-t2t4" => Measure::Between(VariantId::ChT2T4),
            other => {
                return Err(ClmError::InvalidArgument(format!(
                    "unknown measure {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub name: String,
    pub outcome: MeasureOutcome,
}

impl RankEntry {
    pub fn value(&self) -> f64 {
        self.outcome.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingFailure {
    pub name: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub measure: Measure,
    /// Best first.
    pub entries: Vec<RankEntry>,
    /// Datasets that could not be scored, in input order.
    pub failures: Vec<RankingFailure>,
}

impl Ranking {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

/// Scores every dataset and sorts best first; ties are broken by name.
/// Every dataset is scored with the same configuration and seed.
pub fn rank_datasets(datasets: &[(String, Dataset)], measure: Measure, cfg: &BetweenConfig) -> Ranking {
    let results: Vec<_> = datasets
        .par_iter()
        .map(|(name, ds)| (name.clone(), measure.evaluate(ds, cfg)))
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (name, res) in results {
        match res {
            Ok(outcome) => entries.push(RankEntry { name, outcome }),
            Err(e) => failures.push(RankingFailure {
                name,
                error: e.to_string(),
            }),
        }
    }
    let dir = measure.direction();
    entries.sort_by(|a, b| {
        let by_value = match dir {
            Direction::MaxIsBetter => b.value().total_cmp(&a.value()),
            Direction::MinIsBetter => a.value().total_cmp(&b.value()),
        };
        by_value.then_with(|| a.name.cmp(&b.name))
    });
    Ranking {
        measure,
        entries,
        failures,
    }
}

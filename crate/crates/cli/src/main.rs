//! `clmkit` command-line front end.

mod commands;
mod exit;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clmkit::bench::{Factor, Measure};
use clmkit::dataset::LabelColumn;
use clmkit::{Aggregation, PairScope, VariantId};

use crate::exit::CliError;

#[derive(Debug, Parser)]
#[command(name = "clmkit", version, about = "Cluster-label matching evaluation of labeled datasets")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "CLMKIT_JOBS")]
    jobs: Option<usize>,

    /// Omit wall-clock timings so repeated runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score labeled datasets with one measure.
    Score(ScoreArgs),
    /// Rank datasets by one measure.
    Rank(RankArgs),
    /// Generate two-Gaussian base datasets and a manifest.
    Synth(SynthArgs),
    /// Run the size/dimension sensitivity ablation.
    Ablate(AblateArgs),
    /// Pairwise rank stability of techniques over random dataset subsets.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Args)]
struct MeasureArgs {
    /// ch, silhouette, davies-bouldin, dunn, xie-beni, i-index, ch-pairwise,
    /// ch-t2, ch-t4 or ch-btwn.
    #[arg(long, default_value = "ch-btwn", value_parser = parse_measure)]
    measure: Measure,

    /// Score an ablation variant instead of `--measure`.
    #[arg(long, value_parser = parse_variant, conflicts_with = "measure")]
    variant: Option<VariantId>,

    /// Label column: header name, 0-based index, or `last`.
    #[arg(long = "label-col", default_value = "last", value_parser = parse_label)]
    label_col: LabelColumn,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Monte Carlo shuffles per class pair.
    #[arg(long = "mc-trials", default_value_t = clmkit::between::DEFAULT_MC_TRIALS)]
    mc_trials: usize,

    /// How per-pair scores combine: mean, min or max.
    #[arg(long, default_value = "mean", value_parser = parse_aggregation)]
    aggregation: Aggregation,

    /// Take the reference centroid and spread from the whole dataset.
    #[arg(long)]
    full_dataset_scope: bool,

    /// Keep negative normalized pair scores.
    #[arg(long)]
    no_clamp: bool,
}

impl MeasureArgs {
    fn measure(&self) -> Measure {
        self.variant.map(Measure::Between).unwrap_or(self.measure)
    }

    fn between(&self) -> clmkit::BetweenConfig {
        clmkit::BetweenConfig {
            mc_trials: self.mc_trials,
            seed: self.seed,
            aggregation: self.aggregation,
            clamp_negative: !self.no_clamp,
            pair_scope: if self.full_dataset_scope {
                PairScope::FullDataset
            } else {
                PairScope::Restricted
            },
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Dataset CSV files.
    #[arg(required = true)]
    datasets: Vec<PathBuf>,

    #[command(flatten)]
    measure: MeasureArgs,

    /// JSON report path; stdout when omitted.
    #[arg(long, alias = "json")]
    out: Option<PathBuf>,

    /// Also write a flat CSV of the scores.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Dataset CSV files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[command(flatten)]
    measure: MeasureArgs,

    /// Keep only the best N entries.
    #[arg(long)]
    top: Option<usize>,

    /// Second measure whose ranking is compared with the first.
    #[arg(long, value_parser = parse_measure)]
    compare: Option<Measure>,

    #[arg(long, alias = "json")]
    out: Option<PathBuf>,

    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    bases: usize,

    #[arg(long, default_value_t = clmkit::synth::DEFAULT_BASE_POINTS)]
    points: usize,

    #[arg(long, default_value_t = clmkit::synth::DEFAULT_BASE_DIMS)]
    dims: usize,

    /// `lo,hi` distance between the class means.
    #[arg(long = "separation-range", default_value = "0,8", value_parser = parse_range)]
    separation_range: (f64, f64),

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long = "out-dir")]
    out_dir: PathBuf,

    /// Regenerate the bases listed in an existing manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// cardinality or dimension.
    #[arg(long, value_parser = parse_factor)]
    factor: Factor,

    #[arg(long, default_value_t = 50)]
    bases: usize,

    /// Comma-separated variants.
    #[arg(long, value_delimiter = ',', default_value = "ch,ch-t2,ch-t4,ch-t2t4", value_parser = parse_variant)]
    variants: Vec<VariantId>,

    #[arg(long = "mc-trials", default_value_t = 30)]
    mc_trials: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Base size; the size grid scales with it.
    #[arg(long, default_value_t = clmkit::synth::DEFAULT_BASE_POINTS)]
    points: usize,

    /// Base dimension; the dimension grid scales with it.
    #[arg(long, default_value_t = clmkit::synth::DEFAULT_BASE_DIMS)]
    dims: usize,

    #[arg(long = "separation-range", default_value = "0,8", value_parser = parse_range)]
    separation_range: (f64, f64),

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    /// CSV with a dataset-name column followed by one score column per technique.
    scores: PathBuf,

    #[arg(long = "subset-size", default_value_t = clmkit::bench::DEFAULT_SUBSET_SIZE)]
    subset_size: usize,

    #[arg(long, default_value_t = clmkit::bench::DEFAULT_TRIALS)]
    trials: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: clmkit::ClmError| e.to_string())
}

fn parse_variant(s: &str) -> Result<VariantId, String> {
    s.parse().map_err(|e: clmkit::ClmError| e.to_string())
}

fn parse_factor(s: &str) -> Result<Factor, String> {
    s.parse().map_err(|e: clmkit::ClmError| e.to_string())
}

fn parse_label(s: &str) -> Result<LabelColumn, String> {
    match s.parse::<LabelColumn>() {
        Ok(label) => Ok(label),
        Err(never) => match never {},
    }
}

fn parse_aggregation(s: &str) -> Result<Aggregation, String> {
    match s.to_ascii_lowercase().as_str() {
        "mean" => Ok(Aggregation::Mean),
        "min" => Ok(Aggregation::Min),
        "max" => Ok(Aggregation::Max),
        other => Err(format!("unknown aggregation {other:?}")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(format!("invalid range {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn run(cli: Cli, argv: Vec<String>) -> Result<ExitCode, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::software(e.to_string()))?;
    }
    let ctx = commands::Context {
        argv,
        deterministic: cli.deterministic,
    };
    match cli.command {
        Command::Score(a) => commands::score(&ctx, a),
        Command::Rank(a) => commands::rank(&ctx, a),
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::Ablate(a) => commands::ablate(&ctx, a),
        Command::Stability(a) => commands::stability(&ctx, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    match run(cli, argv.into_iter().skip(1).collect()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("clmkit: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

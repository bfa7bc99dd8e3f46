//! Command implementations.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clmkit::bench::{ablation, rank_datasets, rank_stability, AblationConfig, Ranking};
use clmkit::dataset::{load_csv, save_csv, LabelColumn};
use clmkit::evm::spearman_rho;
use clmkit::synth::{augment_noise, base_params, generate_base, GaussianPairParams, NoiseSpan};
use clmkit::{ClmError, Dataset, Direction};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::exit::{self, CliError};
use crate::output::{ensure_dir, write_csv, write_file, write_matrix};
use crate::report::{Entry, Report, TOOL, VERSION};
use crate::{AblateArgs, RankArgs, ScoreArgs, StabilityArgs, SynthArgs};

pub struct Context {
    pub argv: Vec<String>,
    pub deterministic: bool,
}

impl Context {
    fn elapsed(&self, since: Instant) -> Option<f64> {
        (!self.deterministic).then(|| since.elapsed().as_secs_f64() * 1e3)
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn dataset_name(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display(p))
}

/// Loads a dataset; an unreadable file aborts with exit 66, malformed
/// contents come back as the error text.
fn load(path: &Path, label: &LabelColumn) -> Result<Result<Dataset, String>, CliError> {
    match load_csv(path, label) {
        Ok(ds) => Ok(Ok(ds)),
        Err(ClmError::Io(e)) => Err(CliError::no_input(format!("{}: {e}", display(path)))),
        Err(e) => Ok(Err(e.to_string())),
    }
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let json = report.to_json();
    match out {
        Some(path) => write_file(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn finish(partial: bool) -> ExitCode {
    if partial {
        ExitCode::from(exit::PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn check_trials(mc_trials: usize) -> Result<(), CliError> {
    if mc_trials == 0 {
        return Err(CliError::usage("--mc-trials must be at least 1"));
    }
    Ok(())
}

fn push_entry(report: &mut Report, entry: Entry) {
    for field in entry.non_finite_fields() {
        report
            .warnings
            .push(format!("{}: non-finite {field} written as null", entry.name));
    }
    report.entries.push(entry);
}

fn entries_csv(path: &Path, entries: &[Entry]) -> Result<(), CliError> {
    let header: Vec<String> = ["name", "measure", "rank", "value", "direction", "seed", "error"]
        .map(String::from)
        .to_vec();
    let opt = |v: Option<String>| v.unwrap_or_default();
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            vec![
                e.name.clone(),
                e.measure.clone(),
                opt(e.rank.map(|r| r.to_string())),
                opt(e.value.map(|v| v.to_string())),
                opt(e.direction.map(|d| match d {
                    Direction::MaxIsBetter => "max-is-better".to_string(),
                    Direction::MinIsBetter => "min-is-better".to_string(),
                })),
                e.seed.to_string(),
                opt(e.error.clone()),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

pub fn score(ctx: &Context, args: ScoreArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let measure = args.measure.measure();
    let cfg = args.measure.between();
    check_trials(cfg.mc_trials)?;
    let trials = measure.is_randomized().then_some(cfg.mc_trials);
    let mut report = Report::new("score", &ctx.argv, cfg.seed, trials);
    let mut partial = false;
    for path in &args.datasets {
        let t = Instant::now();
        let name = dataset_name(path);
        let entry = match load(path, &args.measure.label_col)? {
            Err(e) => Entry::failed(name, Some(display(path)), measure.name(), cfg.seed, e),
            Ok(ds) => match measure.evaluate(&ds, &cfg) {
                Err(e) => Entry::failed(name, Some(display(path)), measure.name(), cfg.seed, e.to_string()),
                Ok(out) => Entry {
                    name,
                    path: Some(display(path)),
                    measure: measure.name().into(),
                    rank: None,
                    value: Some(out.value),
                    direction: Some(out.direction),
                    seed: cfg.seed,
                    mc_trials: trials,
                    pairs: out.between.map(|b| b.pairs),
                    error: None,
                    elapsed_ms: ctx.elapsed(t),
                },
            },
        };
        partial |= entry.error.is_some();
        push_entry(&mut report, entry);
    }
    report.elapsed_ms = ctx.elapsed(start);
    if let Some(csv) = &args.csv {
        entries_csv(csv, &report.entries)?;
    }
    emit(&report, args.out.as_deref())?;
    Ok(finish(partial))
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| CliError::no_input(format!("{}: {e}", display(input))))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::usage("no datasets found in the given inputs"));
    }
    Ok(files)
}

/// Score with the sign flipped for min-is-better measures, so larger always
/// ranks higher.
fn oriented(ranking: &Ranking) -> Vec<(String, f64)> {
    let sign = match ranking.measure.direction() {
        Direction::MaxIsBetter => 1.0,
        Direction::MinIsBetter => -1.0,
    };
    ranking
        .entries
        .iter()
        .map(|e| (e.name.clone(), sign * e.value()))
        .collect()
}

pub fn rank(ctx: &Context, args: RankArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let measure = args.measure.measure();
    let cfg = args.measure.between();
    check_trials(cfg.mc_trials)?;
    let files = collect_inputs(&args.inputs)?;
    let mut seen = BTreeSet::new();
    let mut datasets = Vec::new();
    let mut unreadable = Vec::new();
    for path in &files {
        let name = dataset_name(path);
        if !seen.insert(name.clone()) {
            return Err(CliError::usage(format!("duplicate dataset name {name:?}")));
        }
        match load(path, &args.measure.label_col)? {
            Ok(ds) => datasets.push((name, ds)),
            Err(e) => unreadable.push((name, display(path), e)),
        }
    }
    let trials = measure
        .is_randomized()
        .then_some(cfg.mc_trials)
        .or(args.compare.filter(|m| m.is_randomized()).map(|_| cfg.mc_trials));
    let mut report = Report::new("rank", &ctx.argv, cfg.seed, trials);
    let ranking = rank_datasets(&datasets, measure, &cfg);
    let keep = args.top.unwrap_or(usize::MAX);
    for (i, e) in ranking.entries.iter().take(keep).enumerate() {
        push_entry(
            &mut report,
            Entry {
                name: e.name.clone(),
                path: None,
                measure: measure.name().into(),
                rank: Some(i + 1),
                value: Some(e.value()),
                direction: Some(e.outcome.direction),
                seed: cfg.seed,
                mc_trials: measure.is_randomized().then_some(cfg.mc_trials),
                pairs: e.outcome.between.as_ref().map(|b| b.pairs.clone()),
                error: None,
                elapsed_ms: None,
            },
        );
    }
    let mut partial = false;
    for (name, path, e) in unreadable {
        partial = true;
        push_entry(&mut report, Entry::failed(name, Some(path), measure.name(), cfg.seed, e));
    }
    for f in &ranking.failures {
        partial = true;
        push_entry(
            &mut report,
            Entry::failed(f.name.clone(), None, measure.name(), cfg.seed, f.error.clone()),
        );
    }
    report.section(
        "ranking",
        json!({
            "measure": measure.name(),
            "ranked": ranking.entries.len(),
            "shown": ranking.entries.len().min(keep),
            "excluded": ranking.failures.len(),
        }),
    );
    if let Some(other) = args.compare {
        let second = rank_datasets(&datasets, other, &cfg);
        let a = oriented(&ranking);
        let b: std::collections::BTreeMap<String, f64> = oriented(&second).into_iter().collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = a
            .iter()
            .filter_map(|(n, v)| b.get(n).map(|w| (*v, *w)))
            .unzip();
        let rho = if xs.len() >= 2 {
            match spearman_rho(&xs, &ys) {
                Ok(r) => Some(r),
                Err(e) => {
                    report.warnings.push(format!("comparison: {e}"));
                    None
                }
            }
        } else {
            report
                .warnings
                .push("comparison needs at least 2 datasets scored by both measures".into());
            None
        };
        report.section(
            "comparison",
            json!({
                "measure": other.name(),
                "common": xs.len(),
                "spearman_rho": rho,
                "spearman_distance": rho.map(|r| 1.0 - r),
                "order": second.entries.iter().take(keep).map(|e| e.name.clone()).collect::<Vec<_>>(),
            }),
        );
    }
    report.elapsed_ms = ctx.elapsed(start);
    if let Some(csv) = &args.csv {
        entries_csv(csv, &report.entries)?;
    }
    emit(&report, args.out.as_deref())?;
    Ok(finish(partial))
}

/// Everything needed to regenerate a set of synthetic bases.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Decimal string: TOML integers are signed 64-bit.
    pub seed: String,
    pub points: usize,
    pub dims: usize,
    pub separation_range: [f64; 2],
    pub noise_span: NoiseSpan,
    pub bases: Vec<ManifestBase>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestBase {
    pub file: String,
    pub seed: String,
    pub cov_a: [[f64; 2]; 2],
    pub cov_b: [[f64; 2]; 2],
    pub proportion: f64,
    pub separation: f64,
}

impl ManifestBase {
    fn params(&self) -> Result<GaussianPairParams, CliError> {
        let seed = self
            .seed
            .parse()
            .map_err(|e| CliError::data(format!("manifest seed {:?}: {e}", self.seed)))?;
        Ok(GaussianPairParams {
            cov_a: self.cov_a,
            cov_b: self.cov_b,
            proportion: self.proportion,
            separation: self.separation,
            seed,
        })
    }
}

pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn synth(ctx: &Context, args: SynthArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let manifest = match &args.manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::no_input(format!("{}: {e}", display(path))))?;
            toml::from_str::<Manifest>(&text)
                .map_err(|e| CliError::data(format!("{}: {e}", display(path))))?
        }
        None => {
            if args.bases == 0 || args.points < 2 || args.dims < 2 {
                return Err(CliError::usage("need --bases >= 1, --points >= 2 and --dims >= 2"));
            }
            let bases = (0..args.bases)
                .map(|i| {
                    let p = base_params(args.seed, i as u64, args.separation_range);
                    ManifestBase {
                        file: format!("base_{i:04}.csv"),
                        seed: p.seed.to_string(),
                        cov_a: p.cov_a,
                        cov_b: p.cov_b,
                        proportion: p.proportion,
                        separation: p.separation,
                    }
                })
                .collect();
            Manifest {
                tool: TOOL.into(),
                version: VERSION.into(),
                seed: args.seed.to_string(),
                points: args.points,
                dims: args.dims,
                separation_range: [args.separation_range.0, args.separation_range.1],
                noise_span: NoiseSpan::default(),
                bases,
            }
        }
    };
    let seed: u64 = manifest
        .seed
        .parse()
        .map_err(|e| CliError::data(format!("manifest seed {:?}: {e}", manifest.seed)))?;
    ensure_dir(&args.out_dir)?;
    let mut report = Report::new("synth", &ctx.argv, seed, None);
    for base in &manifest.bases {
        if base.file.contains(['/', '\\']) {
            return Err(CliError::data(format!("manifest file name {:?} is not a plain name", base.file)));
        }
        let params = base.params()?;
        let ds = generate_base(&params, manifest.points)
            .and_then(|ds| augment_noise(&ds, &params, manifest.dims, params.seed, manifest.noise_span))
            .map_err(|e| match e {
                ClmError::InvalidArgument(m) => CliError::usage(m),
                other => CliError::data(other.to_string()),
            })?;
        let path = args.out_dir.join(&base.file);
        save_csv(&ds, &path)
            .map_err(|e| CliError::cant_create(format!("cannot write {}: {e}", display(&path))))?;
    }
    let text = toml::to_string(&manifest).map_err(|e| CliError::software(e.to_string()))?;
    write_file(&args.out_dir.join(MANIFEST_FILE), text.as_bytes())?;
    report.section(
        "synth",
        json!({
            "out_dir": display(&args.out_dir),
            "points": manifest.points,
            "dims": manifest.dims,
            "files": manifest.bases.iter().map(|b| b.file.clone()).collect::<Vec<_>>(),
            "manifest": MANIFEST_FILE,
        }),
    );
    report.elapsed_ms = ctx.elapsed(start);
    emit(&report, None)?;
    Ok(ExitCode::SUCCESS)
}

pub fn ablate(ctx: &Context, args: AblateArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    check_trials(args.mc_trials)?;
    if args.bases < 2 {
        return Err(CliError::usage("--bases must be at least 2"));
    }
    let mut variants = args.variants.clone();
    variants.dedup();
    let cfg = AblationConfig {
        base_points: args.points,
        base_dims: args.dims,
        separation: args.separation_range,
        ..AblationConfig::new(
            args.factor,
            args.bases,
            variants,
            clmkit::BetweenConfig::with_seed(args.seed).with_trials(args.mc_trials),
        )
    };
    ensure_dir(&args.out)?;
    let result = ablation(&cfg).map_err(|e| match e {
        ClmError::InvalidArgument(m) => CliError::usage(m),
        other => CliError::failure(other.to_string()),
    })?;
    let keys: Vec<String> = result.grid.iter().map(usize::to_string).collect();
    let corner = args.factor.name();
    let mut files = Vec::new();
    for vm in &result.variants {
        let file = format!("smape_{}.csv", vm.variant.name());
        write_matrix(&args.out.join(&file), corner, &keys, &vm.matrix)?;
        files.push(file);
    }
    let rows: Vec<Vec<String>> = result
        .variants
        .iter()
        .map(|vm| vec![vm.variant.name().into(), vm.average.to_string(), vm.excluded.to_string()])
        .collect();
    write_csv(
        &args.out.join("averages.csv"),
        &["variant", "average_smape", "excluded_bases"].map(String::from),
        &rows,
    )?;
    files.push("averages.csv".into());
    let mut report = Report::new("ablate", &ctx.argv, args.seed, Some(args.mc_trials));
    for vm in result.variants.iter().filter(|vm| vm.excluded > 0) {
        report
            .warnings
            .push(format!("{}: {} of {} bases excluded", vm.variant, vm.excluded, result.n_bases));
    }
    report.section(
        "ablation",
        json!({
            "factor": result.factor,
            "grid": result.grid,
            "n_bases": result.n_bases,
            "base_points": cfg.base_points,
            "base_dims": cfg.base_dims,
            "separation_range": [cfg.separation.0, cfg.separation.1],
            "variants": result.variants.iter().map(|vm| json!({
                "variant": vm.variant,
                "average": vm.average,
                "excluded": vm.excluded,
                "matrix": vm.matrix.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "files": files,
        }),
    );
    report.elapsed_ms = ctx.elapsed(start);
    write_file(&args.out.join("report.json"), report.to_json().as_bytes())?;
    emit(&report, None)?;
    Ok(ExitCode::SUCCESS)
}

/// Dataset names, technique names and the dataset-by-technique matrix.
type ScoreTable = (Vec<String>, Vec<String>, Array2<f64>);

/// Parses `name,technique...` headed score tables.
fn read_scores(path: &Path) -> Result<ScoreTable, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::no_input(format!("{}: {e}", display(path))))?;
    let malformed = |m: String| CliError::data(format!("{}: {m}", display(path)));
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(malformed("need a dataset column and at least one technique column".into()));
    }
    let techniques: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        names.push(record.get(0).unwrap_or_default().to_string());
        for (col, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell.trim().parse().map_err(|_| {
                malformed(format!("row {}, column {:?}: {cell:?} is not a number", row + 1, header[col].to_string()))
            })?;
            if !v.is_finite() {
                return Err(malformed(format!("row {}: non-finite score", row + 1)));
            }
            values.push(v);
        }
    }
    if names.is_empty() {
        return Err(malformed("no score rows".into()));
    }
    let m = Array2::from_shape_vec((names.len(), techniques.len()), values)
        .map_err(|e| malformed(e.to_string()))?;
    Ok((names, techniques, m))
}

pub fn stability(ctx: &Context, args: StabilityArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let (datasets, techniques, scores) = read_scores(&args.scores)?;
    let result = rank_stability(scores.view(), &techniques, args.subset_size, args.trials, args.seed)?;
    ensure_dir(&args.out)?;
    write_matrix(&args.out.join("pb_matrix.csv"), "technique", &techniques, &result.pairwise_stability)?;
    write_matrix(&args.out.join("p_matrix.csv"), "technique", &techniques, &result.p)?;
    let rows: Vec<Vec<String>> = result
        .ranking
        .iter()
        .enumerate()
        .map(|(i, (t, m))| vec![(i + 1).to_string(), t.clone(), m.to_string()])
        .collect();
    write_csv(&args.out.join("ranking.csv"), &["rank", "technique", "mean_score"].map(String::from), &rows)?;
    let mut report = Report::new("stability", &ctx.argv, args.seed, None);
    report.section(
        "stability",
        json!({
            "datasets": datasets.len(),
            "techniques": techniques,
            "subset_size": args.subset_size,
            "trials": args.trials,
            "pairwise_stability": result.pairwise_stability.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            "p": result.p.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            "ranking": result.ranking.iter().map(|(t, m)| json!({"technique": t, "mean": m})).collect::<Vec<_>>(),
            "files": ["pb_matrix.csv", "p_matrix.csv", "ranking.csv"],
        }),
    );
    report.elapsed_ms = ctx.elapsed(start);
    write_file(&args.out.join("report.json"), report.to_json().as_bytes())?;
    emit(&report, None)?;
    Ok(ExitCode::SUCCESS)
}

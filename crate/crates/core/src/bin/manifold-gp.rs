//! Command-line entry point: evolve fronts, apply saved mappings, evaluate
//! archives, and inspect the rank-sampling schedule.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use manifold_gp::dataset::{Dataset, LabelSpec};
use manifold_gp::eval::{build_front_report, front_report_csv, mean_front_report, FrontReport};
use manifold_gp::gp::{default_t_max, individual_to_dot, parse_individual, serialize_individual, Individual};
use manifold_gp::moead::{run, MoeadConfig, RunResult};
use manifold_gp::neighbors::{sample_schedule, NeighborModel};
use manifold_gp::variation::VariationConfig;
use manifold_gp::Error;

/// Usage problems (bad flags, malformed config, missing inputs) exit 2;
/// failures during a run exit 1.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl ToString) -> CliError {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl ToString) -> CliError {
        CliError::Runtime(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "manifold-gp",
    version,
    about = "Evolves interpretable tree-based feature constructions that preserve neighborhood structure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the evolutionary search and write per-seed archives.
    Evolve(EvolveArgs),
    /// Map a dataset through a saved individual, producing an embedding CSV.
    Apply(ApplyArgs),
    /// Score archived fronts with the kNN proxy, PCA baseline, and hypervolume.
    Evaluate(EvaluateArgs),
    /// Print the neighbor-rank sampling positions for a given (n, k).
    Schedule(ScheduleArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// CSV dataset with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column: "last", "none", or a header name.
    #[arg(long)]
    label: Option<String>,
    /// Comma-separated list of run seeds.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Base sample size of the neighbor-rank schedule.
    #[arg(long = "neighbors-k")]
    neighbors_k: Option<usize>,
    /// Maximum trees per individual; defaults to max(2, ceil(m/2)).
    #[arg(long)]
    tmax: Option<usize>,
    /// Record an archive snapshot in the manifest every this many generations (0 disables).
    #[arg(long = "snapshot-every")]
    snapshot_every: Option<usize>,
    /// Output directory; one seed<N> subdirectory per run.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; defaults to available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Optional key=value config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    /// Serialized individual (one prefix-notation tree per line).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "last")]
    label: String,
    /// Embedding CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a DOT rendering of the trees.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "last")]
    label: String,
    /// An evolve output directory (or a single seed<N> directory).
    #[arg(long)]
    run: PathBuf,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Instance count.
    #[arg(long)]
    n: usize,
    /// Base sample size.
    #[arg(long)]
    k: usize,
}

/// Everything `evolve` runs with, after merging flags, config file, and
/// defaults. Echoed verbatim into each run manifest.
struct RunSettings {
    data: PathBuf,
    label_text: String,
    label: LabelSpec,
    seeds: Vec<u64>,
    generations: usize,
    population: usize,
    neighbors_k: usize,
    tmax: Option<usize>,
    snapshot_every: usize,
    out: PathBuf,
    threads: Option<usize>,
    p_crossover: f64,
    p_standard_mut: f64,
    p_arity_mut: f64,
}

fn parse_label(text: &str) -> LabelSpec {
    match text {
        "last" => LabelSpec::LastColumn,
        "none" => LabelSpec::None,
        name => LabelSpec::Named(name.to_string()),
    }
}

fn parse_seeds(text: &str) -> CliResult<Vec<u64>> {
    let seeds: Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse::<u64>()).collect();
    let seeds = seeds.map_err(|_| CliError::usage(format!("cannot parse seed list {text:?}")))?;
    if seeds.is_empty() {
        return Err(CliError::usage("seed list is empty"));
    }
    Ok(seeds)
}

const CONFIG_KEYS: [&str; 13] = [
    "data",
    "label",
    "seed",
    "generations",
    "population",
    "neighbors-k",
    "tmax",
    "snapshot-every",
    "out",
    "threads",
    "crossover-rate",
    "standard-mutation-rate",
    "arity-mutation-rate",
];

fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {} is not key=value: {raw:?}", idx + 1)))?;
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!("unknown config key {key:?}")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parsed<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::usage(format!("config value {key}={raw:?} does not parse"))),
    }
}

fn resolve_settings(args: &EvolveArgs) -> CliResult<RunSettings> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };

    let data = args
        .data
        .clone()
        .or_else(|| file.get("data").map(PathBuf::from))
        .ok_or_else(|| CliError::usage("--data is required (flag or config file)"))?;
    let label_text = args.label.clone().or_else(|| file.get("label").cloned()).unwrap_or_else(|| "last".into());
    let seed_text = args.seed.clone().or_else(|| file.get("seed").cloned()).unwrap_or_else(|| "0".into());
    let settings = RunSettings {
        label: parse_label(&label_text),
        label_text,
        seeds: parse_seeds(&seed_text)?,
        generations: args.generations.map(Ok).unwrap_or_else(|| Ok(parsed(&file, "generations")?.unwrap_or(1000)))?,
        population: args.population.map(Ok).unwrap_or_else(|| Ok(parsed(&file, "population")?.unwrap_or(100)))?,
        neighbors_k: args.neighbors_k.map(Ok).unwrap_or_else(|| Ok(parsed(&file, "neighbors-k")?.unwrap_or(10)))?,
        tmax: match args.tmax {
            Some(t) => Some(t),
            None => parsed(&file, "tmax")?,
        },
        snapshot_every: args
            .snapshot_every
            .map(Ok)
            .unwrap_or_else(|| Ok(parsed(&file, "snapshot-every")?.unwrap_or(100)))?,
        out: args.out.clone().or_else(|| file.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out")),
        threads: match args.threads {
            Some(t) => Some(t),
            None => parsed(&file, "threads")?,
        },
        p_crossover: parsed(&file, "crossover-rate")?.unwrap_or(0.70),
        p_standard_mut: parsed(&file, "standard-mutation-rate")?.unwrap_or(0.15),
        p_arity_mut: parsed(&file, "arity-mutation-rate")?.unwrap_or(0.15),
        data,
    };
    if settings.neighbors_k == 0 {
        return Err(CliError::usage("--neighbors-k must be positive"));
    }
    Ok(settings)
}

/// Dataset loading shared by the subcommands; scales features to [0,1].
fn load_scaled(path: &Path, label: &LabelSpec) -> CliResult<Dataset> {
    let loaded = Dataset::load(path, label).map_err(|e| match e {
        Error::Io { .. } | Error::MissingLabelColumn { .. } => CliError::usage(e),
        other => CliError::runtime(other),
    })?;
    loaded.scale().map_err(CliError::runtime)
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(threads) = threads {
        if threads == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    Ok(())
}

fn settings_json(settings: &RunSettings, seed: u64, t_max: usize, d: &Dataset, schedule_len: usize) -> serde_json::Value {
    json!({
        "dataset": settings.data.display().to_string(),
        "label": settings.label_text,
        "seed": seed,
        "seeds": settings.seeds,
        "generations": settings.generations,
        "population": settings.population,
        "neighbors_k": settings.neighbors_k,
        "t_max": t_max,
        "snapshot_every": settings.snapshot_every,
        "out": settings.out.display().to_string(),
        "threads": settings.threads,
        "rates": {
            "crossover": settings.p_crossover,
            "standard_mutation": settings.p_standard_mut,
            "arity_mutation": settings.p_arity_mut,
        },
        "neighborhood": 20,
        "replacement_cap": 2,
        "neighborhood_mating_p": 0.9,
        "num_instances": d.num_instances(),
        "num_features": d.num_features(),
        "schedule_length": schedule_len,
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_run_outputs(dir: &Path, result: &RunResult, manifest_base: serde_json::Value) -> CliResult<()> {
    let front = result.archive.export();

    let mut archive_csv = String::from("t,cost\n");
    let mut archive_entries = Vec::new();
    for entry in &front {
        let t = entry.objectives.raw_t;
        let _ = writeln!(archive_csv, "{},{}", t, entry.objectives.f_cost);
        let tree_file = format!("t{t}.trees");
        write_file(&dir.join(&tree_file), &serialize_individual(&entry.individual))?;
        archive_entries.push(json!({
            "t": t,
            "cost": entry.objectives.f_cost,
            "generation": entry.generation,
            "file": tree_file,
        }));
    }
    write_file(&dir.join("archive.csv"), &archive_csv)?;

    // the final population is exported alongside the archive so fronts can
    // be compared against what decomposition replacement kept alive
    let mut population_csv = String::from("t,cost\n");
    for ind in &result.final_population {
        let obj = ind.objectives().expect("population is evaluated");
        let _ = writeln!(population_csv, "{},{}", obj.raw_t, obj.f_cost);
    }
    write_file(&dir.join("population.csv"), &population_csv)?;

    let mut manifest = manifest_base;
    manifest["status"] = json!("ok");
    manifest["initial_evaluations"] = json!(result.final_population.len());
    manifest["offspring_evaluations"] = json!(result.offspring_evaluations);
    manifest["wall_seconds"] = json!(result.wall_seconds);
    manifest["ideal"] = json!(result.ideal);
    manifest["archive"] = json!(archive_entries);
    manifest["snapshots"] = json!(result
        .snapshots
        .iter()
        .map(|s| {
            json!({
                "generation": s.generation,
                "front": s.entries.iter().map(|(t, cost)| json!({"t": t, "cost": cost})).collect::<Vec<_>>(),
            })
        })
        .collect::<Vec<_>>());
    write_file(&dir.join("manifest.json"), &format!("{:#}\n", manifest))
}

fn cmd_evolve(args: &EvolveArgs) -> CliResult<()> {
    let settings = resolve_settings(args)?;
    init_threads(settings.threads)?;
    let d = load_scaled(&settings.data, &settings.label)?;
    let m = d.num_features();
    let t_max = settings.tmax.unwrap_or_else(|| default_t_max(m));
    if t_max < 2 {
        return Err(CliError::usage("--tmax must be at least 2"));
    }

    fs::create_dir_all(&settings.out)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", settings.out.display())))?;

    // the neighbor model depends only on (data, k): reuse it across seeds and
    // across invocations via an on-disk cache keyed by the dataset hash
    let cache_path = settings.out.join("neighbors.cache");
    let hash = d.content_hash();
    let nm = match NeighborModel::load(&cache_path, &hash, settings.neighbors_k) {
        Ok(model) => {
            log::info!("reusing neighbor cache {}", cache_path.display());
            model
        }
        Err(_) => {
            let model = NeighborModel::build(&d, settings.neighbors_k).map_err(CliError::runtime)?;
            model.save(&cache_path, &hash).map_err(CliError::runtime)?;
            model
        }
    };

    for &seed in &settings.seeds {
        let dir = settings.out.join(format!("seed{seed}"));
        fs::create_dir_all(&dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;

        let mut variation = VariationConfig::new(t_max, m);
        variation.p_crossover = settings.p_crossover;
        variation.p_standard_mut = settings.p_standard_mut;
        variation.p_arity_mut = settings.p_arity_mut;
        let mut config = MoeadConfig::new(seed, variation);
        config.population = settings.population;
        config.generations = settings.generations;
        config.snapshot_every = settings.snapshot_every;

        let manifest_base = settings_json(&settings, seed, t_max, &d, nm.schedule().len());
        match run(&d, &nm, &config) {
            Ok(result) => {
                write_run_outputs(&dir, &result, manifest_base)?;
                let front = result.archive.export();
                println!(
                    "seed {seed}: front sizes t={:?}, {} offspring evaluations, {:.1}s",
                    front.iter().map(|e| e.objectives.raw_t).collect::<Vec<_>>(),
                    result.offspring_evaluations,
                    result.wall_seconds
                );
            }
            Err(e) => {
                let mut manifest = manifest_base;
                manifest["status"] = json!("error");
                manifest["error"] = json!(e.to_string());
                write_file(&dir.join("manifest.json"), &format!("{:#}\n", manifest))?;
                let kind = match e {
                    Error::InvalidConfig(_) => CliError::usage(format!("seed {seed}: {e}")),
                    other => CliError::runtime(format!("seed {seed}: {other}")),
                };
                return Err(kind);
            }
        }
    }
    Ok(())
}

fn read_model(path: &Path, m: usize) -> CliResult<Individual> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read model {}: {e}", path.display())))?;
    parse_individual(&text, m).map_err(CliError::runtime)
}

fn cmd_apply(args: &ApplyArgs) -> CliResult<()> {
    let d = load_scaled(&args.data, &parse_label(&args.label))?;
    let individual = read_model(&args.model, d.num_features())?;
    let embedding = individual.apply(&d).map_err(CliError::runtime)?;

    let mut csv = (1..=embedding.ncols()).map(|j| format!("e{j}")).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for row in embedding.rows() {
        let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        csv.push_str(&line);
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }

    if let Some(dot_path) = &args.dot {
        write_file(dot_path, &individual_to_dot(&individual, d.feature_names()))?;
    }
    Ok(())
}

/// A run directory holds archive.csv, t<N>.trees files, and a manifest whose
/// seed drives the cross-validation folds.
fn evaluate_run_dir(dir: &Path, d: &Dataset, dataset_id: &str) -> CliResult<FrontReport> {
    let manifest_text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| CliError::usage(format!("{} is not a run directory (no manifest.json): {e}", dir.display())))?;
    let manifest: serde_json::Value =
        serde_json::from_str(&manifest_text).map_err(|e| CliError::runtime(format!("bad manifest.json: {e}")))?;
    if manifest["status"] != json!("ok") {
        return Err(CliError::runtime(format!("{}: run did not complete (status {})", dir.display(), manifest["status"])));
    }
    let seed = manifest["seed"]
        .as_u64()
        .ok_or_else(|| CliError::runtime("manifest.json lacks a numeric seed".to_string()))?;

    let archive_text = fs::read_to_string(dir.join("archive.csv"))
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", dir.join("archive.csv").display())))?;
    let mut front = Vec::new();
    for line in archive_text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (t_text, cost_text) = line
            .split_once(',')
            .ok_or_else(|| CliError::runtime(format!("bad archive.csv row {line:?}")))?;
        let t: usize = t_text.parse().map_err(|_| CliError::runtime(format!("bad tree count {t_text:?}")))?;
        let cost: f64 = cost_text.parse().map_err(|_| CliError::runtime(format!("bad cost {cost_text:?}")))?;
        let individual = read_model(&dir.join(format!("t{t}.trees")), d.num_features())?;
        if individual.num_trees() != t {
            return Err(CliError::runtime(format!("t{t}.trees holds {} trees", individual.num_trees())));
        }
        front.push((individual, cost));
    }

    let report = build_front_report(d, &front, dataset_id, seed).map_err(CliError::runtime)?;
    write_file(&dir.join("front_report.csv"), &front_report_csv(&report))?;
    let summary = serde_json::to_string_pretty(&report).map_err(CliError::runtime)?;
    write_file(&dir.join("summary.json"), &format!("{summary}\n"))?;
    Ok(report)
}

fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let d = load_scaled(&args.data, &parse_label(&args.label))?;
    if !d.has_labels() {
        return Err(CliError::usage("evaluate needs labels; pass --label last or --label <name>"));
    }
    let dataset_id = args.data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();

    let mut run_dirs: Vec<PathBuf> = Vec::new();
    if args.run.join("archive.csv").exists() {
        run_dirs.push(args.run.clone());
    } else {
        let entries = fs::read_dir(&args.run)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.run.display())))?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() && path.join("archive.csv").exists() {
                run_dirs.push(path);
            }
        }
        run_dirs.sort();
    }
    if run_dirs.is_empty() {
        return Err(CliError::usage(format!("{} contains no run directories", args.run.display())));
    }

    let mut reports = Vec::new();
    for dir in &run_dirs {
        let report = evaluate_run_dir(dir, &d, &dataset_id)?;
        println!(
            "{}: {} front points, hypervolume {:.4} (PCA {:.4})",
            dir.display(),
            report.rows.len(),
            report.hypervolume_gp,
            report.hypervolume_pca
        );
        reports.push(report);
    }

    if reports.len() > 1 {
        let mean = mean_front_report(&reports).expect("at least one report");
        write_file(&args.run.join("front_report.csv"), &front_report_csv(&mean))?;
        let summary = serde_json::to_string_pretty(&mean).map_err(CliError::runtime)?;
        write_file(&args.run.join("summary.json"), &format!("{summary}\n"))?;
        println!(
            "mean over {} runs: hypervolume {:.4} (PCA {:.4})",
            reports.len(),
            mean.hypervolume_gp,
            mean.hypervolume_pca
        );
    }
    Ok(())
}

fn cmd_schedule(args: &ScheduleArgs) -> CliResult<()> {
    if args.n < 2 || args.k < 1 {
        return Err(CliError::usage("schedule needs --n >= 2 and --k >= 1"));
    }
    let positions = sample_schedule(args.n, args.k);
    let rendered = positions.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    println!("{rendered}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Evolve(args) => cmd_evolve(args),
        Command::Apply(args) => cmd_apply(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Schedule(args) => cmd_schedule(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

//! `tickclust` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, unreadable
//! paths), 3 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use serde::Deserialize;

use tickclust::classify::Classifier;
use tickclust::cluster::{DistanceMatrix, PrototypeDendrogram};
use tickclust::ingest::{parse_clock, Session};
use tickclust::pipeline::{run_cluster, run_measures, run_pipeline, PipelineConfig, RegistrySelection, RunReport};
use tickclust::registry::TradeShareNorm;
use tickclust::render::{render_dendrogram, TreeFormat};
use tickclust::synth::{generate_to_dir, SynthSpec};
use tickclust::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tickclust", version, about = "Microstructure measures and prototype clustering from tick data")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full run: panels, distances, trees and the prototype table.
    Run(RunArgs),
    /// Measure panels only.
    Measures(RunArgs),
    /// Cluster from cached per-symbol distance matrices.
    Cluster(ClusterArgs),
    /// Render a saved tree JSON as SVG, JSON or Newick.
    Render(RenderArgs),
    /// Write a synthetic trading day.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with any of the flags below; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trades: Option<PathBuf>,
    #[arg(long)]
    quotes: Option<PathBuf>,
    #[arg(long)]
    daily: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    clustering: ClusterFlags,
    #[arg(long)]
    interval_secs: Option<u64>,
    /// clnv, lr or emo.
    #[arg(long)]
    classifier: Option<String>,
    /// Comma-separated symbols to process.
    #[arg(long, value_delimiter = ',')]
    symbols: Option<Vec<String>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Recorded in the report; the pipeline itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Session open, HH:MM:SS.
    #[arg(long)]
    open: Option<String>,
    /// Session close, HH:MM:SS.
    #[arg(long)]
    close: Option<String>,
    /// Normalizer for trade share volumes: adtv or adrv.
    #[arg(long)]
    trade_norm: Option<String>,
    /// Analysis day (YYYY-MM-DD); daily references use its prevailing month.
    #[arg(long)]
    date: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ClusterFlags {
    #[arg(long)]
    cut: Option<f64>,
    /// full, reduced, or a file with one measure name per line.
    #[arg(long)]
    registry: Option<String>,
    #[arg(long)]
    min_support: Option<usize>,
    #[arg(long)]
    min_coverage: Option<f64>,
    /// Skip twin removal before prototype selection.
    #[arg(long)]
    no_reduce: bool,
    /// Re-cluster surviving prototypes until no cluster merges two of them.
    #[arg(long)]
    iterative: bool,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-symbol distance matrix CSVs.
    #[arg(long, num_args = 1.., required = true)]
    distances: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    clustering: ClusterFlags,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    tree: PathBuf,
    /// svg, json or newick.
    #[arg(long, default_value = "svg")]
    format: String,
    /// Draw this cut height on the SVG.
    #[arg(long)]
    cut: Option<f64>,
    /// Output file; defaults to the tree path with the format's extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// TOML spec; omitted fields take their defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Mirrors every flag of `run`, `measures` and `cluster`.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    trades: Option<PathBuf>,
    quotes: Option<PathBuf>,
    daily: Option<PathBuf>,
    out: Option<PathBuf>,
    cut: Option<f64>,
    interval_secs: Option<u64>,
    classifier: Option<String>,
    registry: Option<String>,
    symbols: Option<Vec<String>>,
    workers: Option<usize>,
    seed: Option<u64>,
    min_support: Option<usize>,
    min_coverage: Option<f64>,
    open: Option<String>,
    close: Option<String>,
    trade_norm: Option<String>,
    date: Option<String>,
    reduce: Option<bool>,
    iterative: Option<bool>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
    }
}

fn required(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or(file).ok_or_else(|| Error::Config(format!("--{name} is required")))
}

fn apply_cluster_flags(cfg: &mut PipelineConfig, flags: &ClusterFlags, file: &FileConfig) -> Result<()> {
    let d = PipelineConfig::default();
    cfg.cut = flags.cut.or(file.cut).unwrap_or(d.cut);
    cfg.registry = match flags.registry.clone().or_else(|| file.registry.clone()) {
        Some(s) => s.parse::<RegistrySelection>()?,
        None => d.registry,
    };
    cfg.min_support = flags.min_support.or(file.min_support).unwrap_or(d.min_support);
    cfg.min_coverage = flags.min_coverage.or(file.min_coverage).unwrap_or(d.min_coverage);
    cfg.reduce = !flags.no_reduce && file.reduce.unwrap_or(d.reduce);
    cfg.iterative = flags.iterative || file.iterative.unwrap_or(d.iterative);
    Ok(())
}

fn trade_norm(s: &str) -> Result<TradeShareNorm> {
    match s.to_ascii_lowercase().as_str() {
        "adtv" => Ok(TradeShareNorm::Adtv),
        "adrv" => Ok(TradeShareNorm::Adrv),
        other => Err(Error::Config(format!("unknown trade normalizer {other:?}"))),
    }
}

fn run_config(args: RunArgs) -> Result<PipelineConfig> {
    let file = load_file_config(args.config.as_deref())?;
    let d = PipelineConfig::default();
    let mut cfg = PipelineConfig {
        trades: required(args.trades, file.trades.clone(), "trades")?,
        quotes: required(args.quotes, file.quotes.clone(), "quotes")?,
        daily: required(args.daily, file.daily.clone(), "daily")?,
        out_dir: required(args.out, file.out.clone(), "out")?,
        interval_secs: args.interval_secs.or(file.interval_secs).unwrap_or(d.interval_secs),
        classifier: match args.classifier.or_else(|| file.classifier.clone()) {
            Some(s) => s.parse::<Classifier>().map_err(|e| Error::Config(e.to_string()))?,
            None => d.classifier,
        },
        symbols: args.symbols.or_else(|| file.symbols.clone()),
        workers: args.workers.or(file.workers),
        seed: args.seed.or(file.seed),
        trade_norm: match args.trade_norm.or_else(|| file.trade_norm.clone()) {
            Some(s) => trade_norm(&s)?,
            None => d.trade_norm,
        },
        date: match args.date.or_else(|| file.date.clone()) {
            Some(s) => Some(
                s.parse()
                    .map_err(|e| Error::Config(format!("bad date {s:?}: {e}")))?,
            ),
            None => None,
        },
        ..d
    };
    let open = args.open.or_else(|| file.open.clone());
    let close = args.close.or_else(|| file.close.clone());
    if open.is_some() || close.is_some() {
        let us = Session::us_equities();
        cfg.session = Session::new(
            open.map_or(Ok(us.open), |s| parse_clock(&s))?,
            close.map_or(Ok(us.close), |s| parse_clock(&s))?,
        )?;
    }
    apply_cluster_flags(&mut cfg, &args.clustering, &file)?;
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(report: &RunReport) {
    println!(
        "symbols: {} processed, {} failed",
        report.symbols_processed.len(),
        report.symbols_failed.len()
    );
    if !report.prototypes.is_empty() {
        println!(
            "prototypes: {} from {} measures at cut {}",
            report.prototypes.len(),
            report.final_tree_leaves,
            report.cut
        );
        for p in &report.prototypes {
            println!("{:>3}  {}  ({} members)", p.rank, p.name, p.cluster_size);
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => summarize(&run_pipeline(&run_config(args)?)?),
        Command::Measures(args) => summarize(&run_measures(&run_config(args)?)?),
        Command::Cluster(args) => {
            let file = load_file_config(args.config.as_deref())?;
            let mut cfg = PipelineConfig {
                out_dir: required(args.out, file.out.clone(), "out")?,
                ..PipelineConfig::default()
            };
            apply_cluster_flags(&mut cfg, &args.clustering, &file)?;
            let mats = args
                .distances
                .iter()
                .map(DistanceMatrix::read_csv)
                .collect::<Result<Vec<_>>>()?;
            summarize(&run_cluster(&mats, &cfg)?);
        }
        Command::Render(args) => {
            let format: TreeFormat = args.format.parse()?;
            let tree = PrototypeDendrogram::from_json(&read_text(&args.tree)?)?;
            let out = args.out.unwrap_or_else(|| args.tree.with_extension(format.extension()));
            render_dendrogram(&tree, format, args.cut, &out)?;
            println!("{}", out.display());
        }
        Command::Synth(args) => {
            let spec: SynthSpec = match &args.spec {
                Some(p) => toml::from_str(&read_text(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
                None => SynthSpec::default(),
            };
            let files = generate_to_dir(&spec, &args.out)?;
            for p in [files.trades, files.quotes, files.daily] {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

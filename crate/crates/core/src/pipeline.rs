//! End-to-end run: ingest, classify, panels, distances, trees, prototypes.
//!
//! Output directory layout:
//!
//! ```text
//! panels/<SYM>.csv, panels/<SYM>.bin   per-symbol measure panels
//! distances/<SYM>.csv                  per-symbol correlation distances
//! distances_average.csv                cross-symbol mean distances
//! tree_full.{json,nwk,svg}             tree over every clusterable measure
//! tree_reduced.{json,nwk,svg}          tree after twin removal (if enabled)
//! prototypes.csv                       one row per cluster at the cut
//! report.json                          counts, drops, prototypes
//! timings.json                         wall-clock time per stage
//! ```
//!
//! Everything except `timings.json` is a pure function of inputs and config.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, Classifier};
use crate::cluster::{
    average_distances, iterative_prototypes, minimax_linkage_cluster, pairwise_distances, Cluster,
    DistanceMatrix, DistanceOptions, PrototypeDendrogram,
};
use crate::error::{Error, Result};
use crate::ingest::{
    daily_references, parse_daily, parse_quotes, parse_trades, prevailing_month, session_clip_quotes,
    session_clip_trades, DailyReference, QuoteRecord, Session, TradeRecord, NANOS_PER_SEC,
};
use crate::measures::{build_panel, EngineConfig, SymbolDay};
use crate::panel::MeasurePanel;
use crate::registry::{reduce_registry, Registry, RemovedMeasure, TradeShareNorm};
use crate::render::{render_dendrogram, TreeFormat};

/// Which measures to compute.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RegistrySelection {
    #[default]
    Full,
    Reduced,
    File(PathBuf),
}

impl FromStr for RegistrySelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => RegistrySelection::Full,
            "reduced" => RegistrySelection::Reduced,
            "" => return Err(Error::Config("empty registry selection".into())),
            path => RegistrySelection::File(PathBuf::from(path)),
        })
    }
}

impl RegistrySelection {
    pub fn load(&self, trade_norm: TradeShareNorm) -> Result<Registry> {
        match self {
            RegistrySelection::Full => Ok(Registry::full_with(trade_norm)),
            RegistrySelection::Reduced => Ok(reduce_registry(&Registry::full_with(trade_norm), None).kept),
            RegistrySelection::File(p) => Registry::from_file(p, trade_norm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub trades: PathBuf,
    pub quotes: PathBuf,
    pub daily: PathBuf,
    pub out_dir: PathBuf,
    pub session: Session,
    pub interval_secs: u64,
    pub classifier: Classifier,
    pub registry: RegistrySelection,
    pub cut: f64,
    pub min_support: usize,
    pub min_coverage: f64,
    pub symbols: Option<Vec<String>>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Recorded in the report only; the pipeline has no random steps.
    pub seed: Option<u64>,
    /// Remove redundant twins and cluster again before selecting prototypes.
    pub reduce: bool,
    /// Repeat cluster-and-cut on surviving prototypes until stable.
    pub iterative: bool,
    pub trade_norm: TradeShareNorm,
    /// Analysis day; restricts the daily reference to its prevailing month.
    pub date: Option<NaiveDate>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            trades: PathBuf::new(),
            quotes: PathBuf::new(),
            daily: PathBuf::new(),
            out_dir: PathBuf::from("out"),
            session: Session::us_equities(),
            interval_secs: 10,
            classifier: Classifier::Clnv,
            registry: RegistrySelection::Full,
            cut: 0.7,
            min_support: 30,
            min_coverage: 0.5,
            symbols: None,
            workers: None,
            seed: None,
            reduce: true,
            iterative: false,
            trade_norm: TradeShareNorm::Adtv,
            date: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval_secs == 0 {
            return Err(Error::Config("interval length must be positive".into()));
        }
        if !(self.cut.is_finite() && self.cut >= 0.0) {
            return Err(Error::Config(format!("cut height {} must be a non-negative number", self.cut)));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(Error::Config("min coverage must lie in [0, 1]".into()));
        }
        if self.min_support < 2 {
            return Err(Error::Config("min support must be at least 2".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be positive".into()));
        }
        Ok(())
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig {
            session: self.session,
            interval_ns: self.interval_secs as i64 * NANOS_PER_SEC,
            trade_norm: self.trade_norm,
        }
    }

    fn distance_options(&self) -> DistanceOptions {
        DistanceOptions {
            min_support: self.min_support,
            min_coverage: self.min_coverage,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub trade_rows: usize,
    pub quote_rows: usize,
    pub daily_rows: usize,
    pub trade_rows_rejected: usize,
    pub quote_rows_rejected: usize,
    pub daily_rows_rejected: usize,
    pub crossed_quotes: usize,
    pub trades_in_session: usize,
    pub quotes_in_session: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeRow {
    pub rank: usize,
    pub name: String,
    pub description: String,
    pub cluster_size: usize,
    pub cluster_members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: Option<u64>,
    pub ingest: IngestCounts,
    pub symbols_processed: Vec<String>,
    pub symbols_without_reference: Vec<String>,
    pub symbols_failed: Vec<String>,
    pub symbols_without_distances: Vec<String>,
    pub panel_columns: usize,
    pub panel_rows: usize,
    pub measures_dropped_sparse: Vec<String>,
    pub full_tree_leaves: usize,
    pub reduction: Vec<RemovedMeasure>,
    pub final_tree_leaves: usize,
    pub cut: f64,
    pub iterative: bool,
    pub prototypes: Vec<PrototypeRow>,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

/// Panels built by the measure stage, in symbol order.
#[derive(Debug, Clone)]
pub struct PanelStage {
    pub registry: Registry,
    pub panels: Vec<MeasurePanel>,
}

struct Timer {
    start: Instant,
    timings: Vec<StageTiming>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: (now - self.start).as_secs_f64(),
        });
        self.start = now;
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Contiguous per-symbol ranges of a slice sorted by symbol.
fn group_by_symbol<T>(items: &[T], symbol: impl Fn(&T) -> &str) -> BTreeMap<String, std::ops::Range<usize>> {
    let mut out = BTreeMap::new();
    let mut start = 0;
    for i in 1..=items.len() {
        if i == items.len() || symbol(&items[i]) != symbol(&items[start]) {
            if start < items.len() {
                out.insert(symbol(&items[start]).to_owned(), start..i);
            }
            start = i;
        }
    }
    out
}

fn symbol_panel(
    symbol: &str,
    trades: &[TradeRecord],
    quotes: &[QuoteRecord],
    reference: Option<&DailyReference>,
    registry: &Registry,
    config: &PipelineConfig,
) -> Result<MeasurePanel> {
    let usable: Vec<QuoteRecord> = quotes.iter().filter(|q| !q.is_crossed()).cloned().collect();
    let has_nbbo = usable.iter().any(|q| q.is_nbbo);
    let nbbo: Vec<QuoteRecord> = usable.iter().filter(|q| q.is_nbbo || !has_nbbo).cloned().collect();
    let classified = classify(trades, &nbbo, config.classifier);
    let day = SymbolDay {
        symbol,
        trades: &classified,
        quotes: &usable,
        reference,
    };
    build_panel(day, registry, &config.engine())
}

/// Ingests the inputs and builds one panel per symbol, writing panel files
/// under `out_dir/panels`.
pub fn build_panels(config: &PipelineConfig, report: &mut RunReport) -> Result<PanelStage> {
    config.validate()?;
    let registry = config.registry.load(config.trade_norm)?;
    let trades = parse_trades(&config.trades)?;
    let quotes = parse_quotes(&config.quotes)?;
    let daily = parse_daily(&config.daily)?;
    for (what, rejected) in [
        ("trades", &trades.rejected),
        ("quotes", &quotes.rejected),
        ("daily", &daily.rejected),
    ] {
        for r in rejected.iter().take(5) {
            warn!("{what}: line {}: {}", r.line, r.message);
        }
        if rejected.len() > 5 {
            warn!("{what}: {} more rejected rows", rejected.len() - 5);
        }
    }

    let wanted: Option<HashSet<&str>> = config.symbols.as_ref().map(|s| s.iter().map(String::as_str).collect());
    let keep = |s: &str| wanted.as_ref().is_none_or(|w| w.contains(s));
    let trade_records: Vec<TradeRecord> = trades.records.iter().filter(|t| keep(&t.symbol)).cloned().collect();
    let quote_records: Vec<QuoteRecord> = quotes.records.iter().filter(|q| keep(&q.symbol)).cloned().collect();

    let in_session = session_clip_trades(&trade_records, config.session);
    let clipped = session_clip_quotes(&quote_records, config.session);
    report.ingest = IngestCounts {
        trade_rows: trades.records.len(),
        quote_rows: quotes.records.len(),
        daily_rows: daily.records.len(),
        trade_rows_rejected: trades.rejected_count(),
        quote_rows_rejected: quotes.rejected_count(),
        daily_rows_rejected: daily.rejected_count(),
        crossed_quotes: quote_records.iter().filter(|q| q.is_crossed()).count(),
        trades_in_session: in_session.len(),
        quotes_in_session: clipped.records.len(),
    };
    let quote_stream = clipped.into_stream();

    let trade_groups = group_by_symbol(&in_session, |t| &t.symbol);
    let quote_groups = group_by_symbol(&quote_stream, |q| &q.symbol);
    let symbols: BTreeSet<String> = trade_groups.keys().chain(quote_groups.keys()).cloned().collect();
    let symbols: Vec<String> = symbols.into_iter().collect();
    if let Some(w) = &wanted {
        for s in w {
            if !symbols.iter().any(|x| x == s) {
                warn!("requested symbol {s} has no events");
            }
        }
    }

    let window = config.date.map(prevailing_month);
    let references = daily_references(&daily.records, window);
    let reference_of = |s: &str| match references.get(s) {
        Some(Ok(r)) => Some(r),
        Some(Err(e)) => {
            warn!("{s}: no daily reference ({e}); normalized measures will be missing");
            None
        }
        None => {
            warn!("{s}: no daily reference rows; normalized measures will be missing");
            None
        }
    };

    let panel_dir = config.out_dir.join("panels");
    create_dir(&panel_dir)?;
    let results: Vec<(String, Result<MeasurePanel>)> = with_pool(config.workers, || {
        symbols
            .par_iter()
            .map(|s| {
                let trades = trade_groups.get(s).map_or(&[][..], |r| &in_session[r.clone()]);
                let quotes = quote_groups.get(s).map_or(&[][..], |r| &quote_stream[r.clone()]);
                let panel = symbol_panel(s, trades, quotes, reference_of(s), &registry, config).and_then(|p| {
                    p.write_csv(panel_dir.join(format!("{s}.csv")))?;
                    p.write_binary(panel_dir.join(format!("{s}.bin")))?;
                    Ok(p)
                });
                (s.clone(), panel)
            })
            .collect()
    })?;

    let mut panels = Vec::new();
    for (s, r) in results {
        match r {
            Ok(p) => {
                report.symbols_processed.push(s);
                panels.push(p);
            }
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                warn!("{s}: skipped: {e}");
                report.symbols_failed.push(s);
            }
        }
    }
    report.symbols_without_reference = symbols
        .iter()
        .filter(|s| !matches!(references.get(s.as_str()), Some(Ok(_))))
        .cloned()
        .collect();
    report.panel_columns = registry.len();
    report.panel_rows = panels.first().map_or(0, MeasurePanel::rows);
    info!("built {} panels with {} measures", panels.len(), registry.len());
    Ok(PanelStage { registry, panels })
}

/// Per-symbol distance matrices, written under `out_dir/distances`.
pub fn symbol_distances(
    panels: &[MeasurePanel],
    config: &PipelineConfig,
    report: &mut RunReport,
) -> Result<Vec<DistanceMatrix>> {
    let dir = config.out_dir.join("distances");
    create_dir(&dir)?;
    let opts = config.distance_options();
    let mats: Vec<Result<DistanceMatrix>> = with_pool(config.workers, || {
        panels
            .par_iter()
            .map(|p| {
                let m = pairwise_distances(p, opts);
                m.write_csv(dir.join(format!("{}.csv", p.symbol)))?;
                Ok(m)
            })
            .collect()
    })?;
    let mut usable = Vec::new();
    for (p, m) in panels.iter().zip(mats) {
        let m = m?;
        if m.undefined_pairs().len() == m.len() * m.len().saturating_sub(1) / 2 && m.len() > 1 {
            warn!("{}: no defined distances; excluded from the average", p.symbol);
            report.symbols_without_distances.push(p.symbol.clone());
        } else {
            usable.push(m);
        }
    }
    Ok(usable)
}

fn write_tree(tree: &PrototypeDendrogram, stem: &str, cut: f64, out: &Path) -> Result<()> {
    for format in [TreeFormat::Json, TreeFormat::Newick, TreeFormat::Svg] {
        let path = out.join(format!("{stem}.{}", format.extension()));
        render_dendrogram(tree, format, Some(cut), path)?;
    }
    Ok(())
}

/// Result of the clustering stage.
#[derive(Debug, Clone)]
pub struct ClusterStage {
    pub average: DistanceMatrix,
    pub full_tree: PrototypeDendrogram,
    pub final_tree: PrototypeDendrogram,
    pub clusters: Vec<Cluster>,
}

/// Averages, drops incomplete measures, clusters, optionally reduces and
/// re-clusters, cuts, and writes trees plus the prototype table.
pub fn cluster_stage(
    mats: &[DistanceMatrix],
    registry: &Registry,
    config: &PipelineConfig,
    report: &mut RunReport,
) -> Result<ClusterStage> {
    if mats.is_empty() {
        return Err(Error::Data("no usable symbols".into()));
    }
    let average = average_distances(mats)?;
    average.write_csv(config.out_dir.join("distances_average.csv"))?;
    let (complete, dropped) = average.drop_incomplete();
    for name in &dropped {
        warn!("{name}: undefined averaged distance; dropped from clustering");
    }
    report.measures_dropped_sparse = dropped;
    if complete.is_empty() {
        return Err(Error::Data("no measure has a complete set of distances".into()));
    }
    let full_tree = minimax_linkage_cluster(&complete)?;
    report.full_tree_leaves = full_tree.leaf_count();
    write_tree(&full_tree, "tree_full", config.cut, &config.out_dir)?;

    let (matrix, final_tree) = if config.reduce {
        let present: HashSet<&str> = complete.ids.iter().map(String::as_str).collect();
        let reduction = reduce_registry(&registry.retain_names(&present), Some(&average));
        let kept: HashSet<&str> = reduction.kept.measures().iter().map(|m| m.name()).collect();
        let keep: Vec<usize> = (0..complete.len()).filter(|&i| kept.contains(complete.ids[i].as_str())).collect();
        report.reduction = reduction.removed;
        let sub = complete.submatrix(&keep);
        let tree = minimax_linkage_cluster(&sub)?;
        write_tree(&tree, "tree_reduced", config.cut, &config.out_dir)?;
        (sub, tree)
    } else {
        (complete, full_tree.clone())
    };
    report.final_tree_leaves = final_tree.leaf_count();

    let clusters = if config.iterative {
        iterative_prototypes(&matrix, config.cut)?
    } else {
        final_tree.cut_at_height(config.cut)
    };
    report.cut = config.cut;
    report.iterative = config.iterative;
    report.prototypes = prototype_rows(&clusters, &matrix.ids, registry);
    write_prototype_table(&report.prototypes, &config.out_dir.join("prototypes.csv"))?;
    Ok(ClusterStage {
        average,
        full_tree,
        final_tree,
        clusters,
    })
}

/// One row per cluster, ranked by the prototype's position in the registry.
pub fn prototype_rows(clusters: &[Cluster], ids: &[String], registry: &Registry) -> Vec<PrototypeRow> {
    let mut rows: Vec<(usize, PrototypeRow)> = clusters
        .iter()
        .map(|c| {
            let name = ids[c.prototype].clone();
            let order = registry.position(&name).unwrap_or(usize::MAX);
            let row = PrototypeRow {
                rank: 0,
                description: registry.description(&name).unwrap_or_default().to_owned(),
                cluster_size: c.members.len(),
                cluster_members: c.members.iter().map(|&m| ids[m].clone()).collect(),
                name,
            };
            (order, row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.name.cmp(&b.1.name)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (_, mut r))| {
            r.rank = i + 1;
            r
        })
        .collect()
}

/// `rank,name,description,cluster_size,cluster_members`, members joined by `;`.
pub fn write_prototype_table(rows: &[PrototypeRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["rank", "name", "description", "cluster_size", "cluster_members"])?;
    for r in rows {
        w.write_record([
            r.rank.to_string(),
            r.name.clone(),
            r.description.clone(),
            r.cluster_size.to_string(),
            r.cluster_members.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_report(report: &RunReport, out: &Path) -> Result<()> {
    write_text(&out.join("report.json"), &(serde_json::to_string_pretty(report)? + "\n"))?;
    write_text(
        &out.join("timings.json"),
        &(serde_json::to_string_pretty(&report.timings)? + "\n"),
    )
}

/// Panels only.
pub fn run_measures(config: &PipelineConfig) -> Result<RunReport> {
    let mut report = RunReport {
        seed: config.seed,
        ..RunReport::default()
    };
    create_dir(&config.out_dir)?;
    let mut timer = Timer::new();
    build_panels(config, &mut report)?;
    timer.lap("panels");
    report.timings = timer.timings;
    write_report(&report, &config.out_dir)?;
    Ok(report)
}

/// Clustering from cached per-symbol distance matrices.
pub fn run_cluster(mats: &[DistanceMatrix], config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let mut report = RunReport {
        seed: config.seed,
        ..RunReport::default()
    };
    create_dir(&config.out_dir)?;
    let mut timer = Timer::new();
    let registry = config.registry.load(config.trade_norm)?;
    cluster_stage(mats, &registry, config, &mut report)?;
    timer.lap("cluster");
    report.timings = timer.timings;
    write_report(&report, &config.out_dir)?;
    Ok(report)
}

/// The full procedure.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let mut report = RunReport {
        seed: config.seed,
        ..RunReport::default()
    };
    create_dir(&config.out_dir)?;
    let mut timer = Timer::new();
    let stage = build_panels(config, &mut report)?;
    timer.lap("panels");
    if stage.panels.is_empty() {
        return Err(Error::Data("zero usable symbols".into()));
    }
    let mats = symbol_distances(&stage.panels, config, &mut report)?;
    timer.lap("distances");
    if mats.is_empty() {
        return Err(Error::Data("zero usable symbols: no symbol has defined distances".into()));
    }
    cluster_stage(&mats, &stage.registry, config, &mut report)?;
    timer.lap("cluster");
    report.timings = timer.timings;
    write_report(&report, &config.out_dir)?;
    info!(
        "selected {} prototypes from {} measures",
        report.prototypes.len(),
        report.final_tree_leaves
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::DistanceMatrix;

    #[test]
    fn registry_selection_parsing() {
        assert_eq!("full".parse::<RegistrySelection>().unwrap(), RegistrySelection::Full);
        assert_eq!("reduced".parse::<RegistrySelection>().unwrap(), RegistrySelection::Reduced);
        assert_eq!(
            "m.txt".parse::<RegistrySelection>().unwrap(),
            RegistrySelection::File("m.txt".into())
        );
        assert_eq!(RegistrySelection::Reduced.load(TradeShareNorm::Adtv).unwrap().len(), 63);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        for bad in [
            PipelineConfig {
                interval_secs: 0,
                ..Default::default()
            },
            PipelineConfig {
                cut: -0.1,
                ..Default::default()
            },
            PipelineConfig {
                min_coverage: 1.5,
                ..Default::default()
            },
            PipelineConfig {
                workers: Some(0),
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn grouping() {
        let v = ["a", "a", "b", "c", "c", "c"];
        let g = group_by_symbol(&v, |s| s);
        assert_eq!(g["a"], 0..2);
        assert_eq!(g["b"], 2..3);
        assert_eq!(g["c"], 3..6);
        assert!(group_by_symbol::<&str>(&[], |s| s).is_empty());
    }

    fn block_matrix() -> DistanceMatrix {
        let names: Vec<String> = Registry::full().names().into_iter().take(8).collect();
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                (0..8)
                    .map(|j| if i == j { 0.0 } else if i / 2 == j / 2 { 0.1 } else { 0.9 })
                    .collect()
            })
            .collect();
        DistanceMatrix::from_rows(names, &rows).unwrap()
    }

    #[test]
    fn prototype_table_from_cached_matrices() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            out_dir: dir.path().to_path_buf(),
            reduce: false,
            ..Default::default()
        };
        let report = run_cluster(&[block_matrix()], &cfg).unwrap();
        assert_eq!(report.prototypes.len(), 4);
        assert!(report.prototypes.iter().all(|p| p.cluster_size == 2));
        let text = std::fs::read_to_string(dir.path().join("prototypes.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("rank,name,description,cluster_size,cluster_members\n1,"));

        let zero = run_cluster(&[block_matrix()], &PipelineConfig { cut: 0.0, ..cfg.clone() }).unwrap();
        assert_eq!(zero.prototypes.len(), 8);
        let one = run_cluster(&[block_matrix()], &PipelineConfig { cut: 1.01, ..cfg }).unwrap();
        assert_eq!(one.prototypes.len(), 1);
    }

    #[test]
    fn no_matrices_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        assert!(matches!(run_cluster(&[], &cfg), Err(Error::Data(_))));
    }
}

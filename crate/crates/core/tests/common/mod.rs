//! Shared fixtures for integration and acceptance tests.
#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use tickclust::ingest::{
    daily_references, prevailing_month, session_clip_quotes, session_clip_trades, DailyReference, QuoteRecord,
    TradeRecord,
};
use tickclust::pipeline::PipelineConfig;
use tickclust::synth::{write_day, SynthDay, SynthFiles, SynthSpec};

pub struct Fixture {
    pub spec: SynthSpec,
    pub day: SynthDay,
    pub files: SynthFiles,
}

impl Fixture {
    pub fn new(spec: SynthSpec, dir: &Path) -> Self {
        let day = tickclust::synth::generate_day(&spec).expect("synthetic day");
        let files = write_day(&day, dir).expect("write synthetic day");
        Fixture { spec, day, files }
    }

    pub fn config(&self, out: impl Into<PathBuf>) -> PipelineConfig {
        PipelineConfig {
            trades: self.files.trades.clone(),
            quotes: self.files.quotes.clone(),
            daily: self.files.daily.clone(),
            out_dir: out.into(),
            session: self.spec.session().unwrap(),
            date: Some(self.spec.date),
            ..PipelineConfig::default()
        }
    }

    /// Session-clipped trades and quote stream (seeds included) of one symbol.
    pub fn symbol_inputs(&self, symbol: &str) -> (Vec<TradeRecord>, Vec<QuoteRecord>) {
        let session = self.spec.session().unwrap();
        let trades: Vec<TradeRecord> = self.day.trades.iter().filter(|t| &*t.symbol == symbol).cloned().collect();
        let quotes: Vec<QuoteRecord> = self.day.quotes.iter().filter(|q| &*q.symbol == symbol).cloned().collect();
        (
            session_clip_trades(&trades, session),
            session_clip_quotes(&quotes, session).into_stream(),
        )
    }

    pub fn reference(&self, symbol: &str) -> Option<DailyReference> {
        daily_references(&self.day.daily, Some(prevailing_month(self.spec.date)))
            .remove(symbol)
            .and_then(|r| r.ok())
    }

    pub fn oracle(&self, symbol: &str) -> oracle::OracleSymbol {
        let (t, q) = self.symbol_inputs(symbol);
        oracle::OracleSymbol::new(&t, &q, self.reference(symbol).map(|r| (r.adtv, r.adrv)))
    }
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Minimax radius and smallest-index prototype by full enumeration.
pub fn rescan_radius(members: &[usize], d: impl Fn(usize, usize) -> f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, usize::MAX);
    for &c in members {
        let r = members.iter().map(|&m| d(c, m)).fold(0.0, f64::max);
        if r < best.0 {
            best = (r, c);
        }
    }
    best
}

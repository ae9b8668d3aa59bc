//! Per-symbol, per-interval measure computation.
//!
//! Intervals are half-open `[t0, t0 + len)`; an event exactly on a boundary
//! belongs to the later interval. "Last prevailing" values are the state just
//! before the interval end. Time-weighted values are averages over the
//! interval (integral divided by the defined duration).
//!
//! Quote measures other than the HHI family read the NBBO stream (records
//! flagged `is_nbbo`); when a symbol has no NBBO records its whole quote
//! stream is used instead. The HHI family reads the per-exchange streams, or
//! the NBBO records grouped by exchange code when no per-exchange quotes
//! exist.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::classify::{ClassifiedTrade, Direction};
use crate::error::{Error, Result};
use crate::ingest::{DailyReference, QuoteRecord, Session, Timestamp, NANOS_PER_SEC};
use crate::panel::MeasurePanel;
use crate::registry::{
    Agg, DepthSide, HhiBase, MeasureKind, PriceSource, QuoteBase, QuoteEvent, Registry, Side,
    TradeBase, TradeShareNorm, Unit, VolumeAgg,
};
use crate::step::StepSeries;

/// The regular grid of intervals covering a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub open: Timestamp,
    pub interval_ns: i64,
    pub count: usize,
}

impl Grid {
    pub fn new(session: Session, interval_ns: i64) -> Result<Self> {
        if interval_ns <= 0 {
            return Err(Error::Config("interval length must be positive".into()));
        }
        if session.length() % interval_ns != 0 {
            return Err(Error::Config(format!(
                "interval of {interval_ns} ns does not divide the {} ns session",
                session.length()
            )));
        }
        Ok(Grid {
            open: session.open,
            interval_ns,
            count: (session.length() / interval_ns) as usize,
        })
    }

    pub fn bounds(&self, i: usize) -> (Timestamp, Timestamp) {
        let t0 = self.open + i as i64 * self.interval_ns;
        (t0, t0 + self.interval_ns)
    }

    pub fn starts(&self) -> Vec<Timestamp> {
        (0..self.count).map(|i| self.bounds(i).0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub session: Session,
    pub interval_ns: i64,
    pub trade_norm: TradeShareNorm,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            session: Session::us_equities(),
            interval_ns: 10 * NANOS_PER_SEC,
            trade_norm: TradeShareNorm::Adtv,
        }
    }
}

/// One symbol's session events. Trades are classified, in session, and in
/// time order; quotes are in time order and may include pre-open seeds.
#[derive(Debug, Clone, Copy)]
pub struct SymbolDay<'a> {
    pub symbol: &'a str,
    pub trades: &'a [ClassifiedTrade],
    pub quotes: &'a [QuoteRecord],
    pub reference: Option<&'a DailyReference>,
}

/// `(a - b) / (a + b)`, or `None` on a zero denominator.
pub fn imbalance(a: f64, b: f64) -> Option<f64> {
    let den = a + b;
    (den != 0.0).then(|| ((a - b) / den).clamp(-1.0, 1.0))
}

/// Sum of squared shares of the total; `None` when the total is zero.
pub fn hhi<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let values: Vec<f64> = values.into_iter().collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(values.iter().map(|v| (v / total).powi(2)).sum())
}

/// Mean gap, in seconds, between consecutive time-ordered events.
pub fn avg_gap_secs(times: &[Timestamp]) -> Option<f64> {
    match times {
        [first, .., last] => {
            Some((last - first) as f64 / NANOS_PER_SEC as f64 / (times.len() - 1) as f64)
        }
        _ => None,
    }
}

/// Dollar and proportional (percent of mid) quoted spread.
pub fn quoted_spread(bid: f64, ask: f64) -> (f64, f64) {
    let dollar = ask - bid;
    let mid = 0.5 * (bid + ask);
    (dollar, 100.0 * dollar / mid)
}

/// Dollar and proportional (percent of mid) effective spread.
pub fn effective_spread(price: f64, mid: f64) -> (f64, f64) {
    let dollar = 2.0 * (price - mid).abs();
    (dollar, 100.0 * dollar / mid)
}

#[derive(Debug, Default)]
struct QuoteStream {
    times: Vec<Timestamp>,
    bid_changed: Vec<bool>,
    ask_changed: Vec<bool>,
    bid: StepSeries,
    ask: StepSeries,
    bid_size: StepSeries,
    ask_size: StepSeries,
}

impl QuoteStream {
    fn new(records: &[&QuoteRecord]) -> Self {
        let mut s = QuoteStream::default();
        let mut prev: Option<&QuoteRecord> = None;
        for q in records {
            s.times.push(q.timestamp);
            s.bid_changed.push(prev.is_none_or(|p| p.bid_price != q.bid_price));
            s.ask_changed.push(prev.is_none_or(|p| p.ask_price != q.ask_price));
            s.bid.push(q.timestamp, q.bid_price);
            s.ask.push(q.timestamp, q.ask_price);
            s.bid_size.push(q.timestamp, q.bid_size as f64);
            s.ask_size.push(q.timestamp, q.ask_size as f64);
            prev = Some(q);
        }
        s
    }

    fn range(&self, t0: Timestamp, t1: Timestamp) -> Range<usize> {
        self.times.partition_point(|&t| t < t0)..self.times.partition_point(|&t| t < t1)
    }

    fn event_times(&self, r: Range<usize>, ev: QuoteEvent) -> Vec<Timestamp> {
        r.filter(|&i| match ev {
            QuoteEvent::Record => true,
            QuoteEvent::BidChange => self.bid_changed[i],
            QuoteEvent::AskChange => self.ask_changed[i],
        })
        .map(|i| self.times[i])
        .collect()
    }

    fn size(&self, bid: bool) -> &StepSeries {
        if bid {
            &self.bid_size
        } else {
            &self.ask_size
        }
    }
}

/// NBBO-derived step functions.
#[derive(Debug, Default)]
struct NbboSeries {
    mid: StepSeries,
    spread: StepSeries,
    prop_spread: StepSeries,
    ask_dollar: StepSeries,
    bid_dollar: StepSeries,
    diff_shares: StepSeries,
    abs_diff_shares: StepSeries,
    diff_dollar: StepSeries,
    abs_diff_dollar: StepSeries,
    fraction: StepSeries,
}

impl NbboSeries {
    fn new(records: &[&QuoteRecord]) -> Self {
        let mut s = NbboSeries::default();
        for q in records {
            let t = q.timestamp;
            let (dollar, prop) = quoted_spread(q.bid_price, q.ask_price);
            let (a, b) = (q.ask_size as f64, q.bid_size as f64);
            let (ad, bd) = (q.ask_price * a, q.bid_price * b);
            s.mid.push(t, q.mid());
            s.spread.push(t, dollar);
            s.prop_spread.push(t, prop);
            s.ask_dollar.push(t, ad);
            s.bid_dollar.push(t, bd);
            s.diff_shares.push(t, a - b);
            s.abs_diff_shares.push(t, (a - b).abs());
            s.diff_dollar.push(t, ad - bd);
            s.abs_diff_dollar.push(t, (ad - bd).abs());
            let frac = imbalance(a, b).unwrap_or(f64::NAN);
            s.fraction.push(t, frac);
        }
        s
    }
}

#[derive(Debug, Default)]
struct TradeSizes {
    all: StepSeries,
    buy: StepSeries,
    sell: StepSeries,
}

impl TradeSizes {
    fn push(&mut self, t: &ClassifiedTrade) {
        let ts = t.trade.timestamp;
        let size = t.trade.size as f64;
        self.all.push(ts, size);
        match t.direction {
            Direction::Buy => self.buy.push(ts, size),
            Direction::Sell => self.sell.push(ts, size),
            Direction::Unclassified => {}
        }
    }

    fn side(&self, side: Side) -> &StepSeries {
        match side {
            Side::Any => &self.all,
            Side::Buy => &self.buy,
            Side::Sell => &self.sell,
        }
    }
}

#[derive(Debug, Default)]
struct ExchangeTrades {
    times: Vec<Timestamp>,
    sizes: Vec<f64>,
    series: TradeSizes,
}

struct Context<'a> {
    trades: &'a [ClassifiedTrade],
    trade_times: Vec<Timestamp>,
    /// Dollar and proportional effective spread per trade.
    effective: Vec<Option<(f64, f64)>>,
    trade_sizes: TradeSizes,
    trade_dollars: StepSeries,
    nbbo: QuoteStream,
    derived: NbboSeries,
    exchange_trades: BTreeMap<char, ExchangeTrades>,
    exchange_quotes: BTreeMap<char, QuoteStream>,
    reference: Option<&'a DailyReference>,
    trade_norm: TradeShareNorm,
}

impl<'a> Context<'a> {
    fn new(day: SymbolDay<'a>, trade_norm: TradeShareNorm) -> Self {
        let usable: Vec<&QuoteRecord> = day.quotes.iter().filter(|q| !q.is_crossed()).collect();
        let mut nbbo_records: Vec<&QuoteRecord> =
            usable.iter().copied().filter(|q| q.is_nbbo).collect();
        let mut exchange_records: Vec<&QuoteRecord> =
            usable.iter().copied().filter(|q| !q.is_nbbo).collect();
        if nbbo_records.is_empty() {
            nbbo_records = usable.clone();
        }
        if exchange_records.is_empty() {
            exchange_records = nbbo_records.clone();
        }
        nbbo_records.sort_by_key(|q| q.timestamp);
        exchange_records.sort_by_key(|q| q.timestamp);

        let mut by_exchange: BTreeMap<char, Vec<&QuoteRecord>> = BTreeMap::new();
        for q in exchange_records {
            by_exchange.entry(q.exchange).or_default().push(q);
        }
        let exchange_quotes = by_exchange
            .into_iter()
            .map(|(ex, recs)| (ex, QuoteStream::new(&recs)))
            .collect();

        let derived = NbboSeries::new(&nbbo_records);
        let nbbo = QuoteStream::new(&nbbo_records);

        let mut trade_sizes = TradeSizes::default();
        let mut trade_dollars = StepSeries::new();
        let mut exchange_trades: BTreeMap<char, ExchangeTrades> = BTreeMap::new();
        let mut effective = Vec::with_capacity(day.trades.len());
        for t in day.trades {
            let ts = t.trade.timestamp;
            trade_sizes.push(t);
            trade_dollars.push(ts, t.trade.price * t.trade.size as f64);
            let ex = exchange_trades.entry(t.trade.exchange).or_default();
            ex.times.push(ts);
            ex.sizes.push(t.trade.size as f64);
            ex.series.push(t);
            effective.push(
                derived
                    .mid
                    .last_prevailing(ts - 1)
                    .map(|mid| effective_spread(t.trade.price, mid)),
            );
        }

        Context {
            trades: day.trades,
            trade_times: day.trades.iter().map(|t| t.trade.timestamp).collect(),
            effective,
            trade_sizes,
            trade_dollars,
            nbbo,
            derived,
            exchange_trades,
            exchange_quotes,
            reference: day.reference,
            trade_norm,
        }
    }

    fn trade_range(&self, t0: Timestamp, t1: Timestamp) -> Range<usize> {
        self.trade_times.partition_point(|&t| t < t0)..self.trade_times.partition_point(|&t| t < t1)
    }

    fn adtv(&self) -> Option<f64> {
        self.reference.map(|r| r.adtv)
    }

    fn adrv(&self) -> Option<f64> {
        self.reference.map(|r| r.adrv)
    }

    fn trade_share_divisor(&self) -> Option<f64> {
        match self.trade_norm {
            TradeShareNorm::Adtv => self.adtv(),
            TradeShareNorm::Adrv => self.adrv(),
        }
    }

    fn aggregate(s: &StepSeries, agg: Agg, t0: Timestamp, t1: Timestamp) -> Option<f64> {
        match agg {
            Agg::Last => s.last_in(t1),
            Agg::Weighted => s.time_weighted_avg(t0, t1),
        }
    }

    fn eval(&self, kind: MeasureKind, t0: Timestamp, t1: Timestamp) -> Option<f64> {
        match kind {
            MeasureKind::Return => {
                let q1 = self.derived.mid.last_in(t1)?;
                let q0 = self.derived.mid.last_in(t0)?;
                Some(q1 / q0 - 1.0)
            }
            MeasureKind::QuotedSpread { agg, proportional } => {
                let s = if proportional {
                    &self.derived.prop_spread
                } else {
                    &self.derived.spread
                };
                Self::aggregate(s, agg, t0, t1)
            }
            MeasureKind::EffectiveSpread { agg, proportional } => {
                let pick = |e: (f64, f64)| if proportional { e.1 } else { e.0 };
                let r = self.trade_range(t0, t1);
                match agg {
                    Agg::Last => r.rev().find_map(|i| self.effective[i]).map(pick),
                    Agg::Weighted => {
                        let (mut num, mut den) = (0.0, 0.0);
                        for i in r {
                            if let Some(e) = self.effective[i] {
                                let w = self.trades[i].trade.size as f64;
                                num += w * pick(e);
                                den += w;
                            }
                        }
                        (den > 0.0).then(|| num / den)
                    }
                }
            }
            MeasureKind::Volatility(src) => {
                let adrv = self.adrv()?;
                let (lo, hi) = match src {
                    PriceSource::Bid => self.nbbo.bid.range(t0, t1)?,
                    PriceSource::Ask => self.nbbo.ask.range(t0, t1)?,
                    PriceSource::Mid => self.derived.mid.range(t0, t1)?,
                    PriceSource::Trade => self.trades[self.trade_range(t0, t1)]
                        .iter()
                        .map(|t| t.trade.price)
                        .fold(None, |acc: Option<(f64, f64)>, p| match acc {
                            None => Some((p, p)),
                            Some((lo, hi)) => Some((lo.min(p), hi.max(p))),
                        })?,
                };
                Some((hi - lo) / adrv)
            }
            MeasureKind::TradeCount => Some(self.trade_range(t0, t1).len() as f64),
            MeasureKind::TradeAvgGap => avg_gap_secs(&self.trade_times[self.trade_range(t0, t1)]),
            MeasureKind::TradeVolume { agg, unit } => {
                let shares = match agg {
                    VolumeAgg::Total => {
                        let r = self.trade_range(t0, t1);
                        if unit == Unit::Dollar {
                            return Some(
                                self.trades[r]
                                    .iter()
                                    .map(|t| t.trade.price * t.trade.size as f64)
                                    .sum(),
                            );
                        }
                        self.trades[r].iter().map(|t| t.trade.size as f64).sum()
                    }
                    VolumeAgg::Last | VolumeAgg::Weighted => {
                        let agg = if agg == VolumeAgg::Last { Agg::Last } else { Agg::Weighted };
                        if unit == Unit::Dollar {
                            return Self::aggregate(&self.trade_dollars, agg, t0, t1);
                        }
                        Self::aggregate(&self.trade_sizes.all, agg, t0, t1)?
                    }
                };
                match unit {
                    Unit::SharesNorm => Some(shares / self.trade_share_divisor()?),
                    _ => Some(shares),
                }
            }
            MeasureKind::TradeImbalance { base, absolute } => {
                let (buy, sell) = match base {
                    TradeBase::Count | TradeBase::TotalShares => {
                        let (mut b, mut s) = (0.0, 0.0);
                        for t in &self.trades[self.trade_range(t0, t1)] {
                            let w = if base == TradeBase::Count { 1.0 } else { t.trade.size as f64 };
                            match t.direction {
                                Direction::Buy => b += w,
                                Direction::Sell => s += w,
                                Direction::Unclassified => {}
                            }
                        }
                        (b, s)
                    }
                    TradeBase::LastShares | TradeBase::WeightedShares => {
                        let agg = if base == TradeBase::LastShares { Agg::Last } else { Agg::Weighted };
                        (
                            Self::aggregate(&self.trade_sizes.buy, agg, t0, t1)?,
                            Self::aggregate(&self.trade_sizes.sell, agg, t0, t1)?,
                        )
                    }
                };
                let v = imbalance(buy, sell)?;
                Some(if absolute { v.abs() } else { v })
            }
            MeasureKind::QuoteCount(ev) => {
                let r = self.nbbo.range(t0, t1);
                Some(self.nbbo.event_times(r, ev).len() as f64)
            }
            MeasureKind::QuoteAvgGap(ev) => {
                let r = self.nbbo.range(t0, t1);
                avg_gap_secs(&self.nbbo.event_times(r, ev))
            }
            MeasureKind::Depth { agg, side, unit } => {
                let d = &self.derived;
                let s = match (side, unit) {
                    (DepthSide::Ask, Unit::Dollar) => &d.ask_dollar,
                    (DepthSide::Bid, Unit::Dollar) => &d.bid_dollar,
                    (DepthSide::Diff, Unit::Dollar) => &d.diff_dollar,
                    (DepthSide::AbsDiff, Unit::Dollar) => &d.abs_diff_dollar,
                    (DepthSide::Ask, _) => &self.nbbo.ask_size,
                    (DepthSide::Bid, _) => &self.nbbo.bid_size,
                    (DepthSide::Diff, _) => &d.diff_shares,
                    (DepthSide::AbsDiff, _) => &d.abs_diff_shares,
                };
                let v = Self::aggregate(s, agg, t0, t1)?;
                match unit {
                    Unit::SharesNorm => Some(v / self.adtv()?),
                    _ => Some(v),
                }
            }
            MeasureKind::QuoteImbalance { base, absolute } => {
                let v = match base {
                    QuoteBase::IntegratedFraction => {
                        // nondirectional is the absolute value of the average, not the average of absolute values
                        let v = self.derived.fraction.time_weighted_avg(t0, t1)?;
                        return Some(if absolute { v.abs() } else { v });
                    }
                    QuoteBase::ChangeCount | QuoteBase::ChangeGap => {
                        let r = self.nbbo.range(t0, t1);
                        let asks = self.nbbo.event_times(r.clone(), QuoteEvent::AskChange);
                        let bids = self.nbbo.event_times(r, QuoteEvent::BidChange);
                        if base == QuoteBase::ChangeCount {
                            imbalance(asks.len() as f64, bids.len() as f64)?
                        } else {
                            imbalance(avg_gap_secs(&asks)?, avg_gap_secs(&bids)?)?
                        }
                    }
                    QuoteBase::LastShares | QuoteBase::WeightedShares => {
                        let agg = if base == QuoteBase::LastShares { Agg::Last } else { Agg::Weighted };
                        imbalance(
                            Self::aggregate(&self.nbbo.ask_size, agg, t0, t1)?,
                            Self::aggregate(&self.nbbo.bid_size, agg, t0, t1)?,
                        )?
                    }
                    QuoteBase::LastDollar | QuoteBase::WeightedDollar => {
                        let agg = if base == QuoteBase::LastDollar { Agg::Last } else { Agg::Weighted };
                        imbalance(
                            Self::aggregate(&self.derived.ask_dollar, agg, t0, t1)?,
                            Self::aggregate(&self.derived.bid_dollar, agg, t0, t1)?,
                        )?
                    }
                };
                Some(if absolute { v.abs() } else { v })
            }
            MeasureKind::Hhi(base) => self.eval_hhi(base, t0, t1),
        }
    }

    fn eval_hhi(&self, base: HhiBase, t0: Timestamp, t1: Timestamp) -> Option<f64> {
        let per_exchange: Vec<f64> = match base {
            HhiBase::TradeCount | HhiBase::TradeShares => self
                .exchange_trades
                .values()
                .map(|ex| {
                    let r = ex.times.partition_point(|&t| t < t0)
                        ..ex.times.partition_point(|&t| t < t1);
                    if base == HhiBase::TradeCount {
                        r.len() as f64
                    } else {
                        ex.sizes[r].iter().sum()
                    }
                })
                .collect(),
            HhiBase::TradeSize { agg, side } => self
                .exchange_trades
                .values()
                .filter_map(|ex| Self::aggregate(ex.series.side(side), agg, t0, t1))
                .collect(),
            HhiBase::QuoteCount(ev) => self
                .exchange_quotes
                .values()
                .map(|q| q.event_times(q.range(t0, t1), ev).len() as f64)
                .collect(),
            HhiBase::QuoteSize { agg, bid } => self
                .exchange_quotes
                .values()
                .filter_map(|q| Self::aggregate(q.size(bid), agg, t0, t1))
                .collect(),
        };
        hhi(per_exchange)
    }
}

/// Computes every registry measure for every interval of the session.
/// Sparse symbols yield missing cells, never an error.
pub fn build_panel(day: SymbolDay<'_>, registry: &Registry, config: &EngineConfig) -> Result<MeasurePanel> {
    let grid = Grid::new(config.session, config.interval_ns)?;
    debug_assert!(day
        .trades
        .windows(2)
        .all(|w| w[0].trade.timestamp <= w[1].trade.timestamp));
    let ctx = Context::new(day, config.trade_norm);
    let mut panel = MeasurePanel::new(day.symbol, grid.starts(), registry.names());
    for row in 0..grid.count {
        let (t0, t1) = grid.bounds(row);
        for (col, m) in registry.measures().iter().enumerate() {
            panel.set(row, col, ctx.eval(m.kind, t0, t1));
        }
    }
    Ok(panel)
}

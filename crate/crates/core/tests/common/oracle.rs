//! Brute-force single-cell recomputation of every measure, keyed on the
//! measure name. Shares nothing with the engine beyond the record types:
//! lookups are linear scans, time-weighted values are 1 ms Riemann sums, and
//! trade direction comes from an integer-arithmetic CLNV.

use std::collections::BTreeMap;

use tickclust::ingest::{QuoteRecord, TradeRecord};

const MS: i64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct Q {
    pub t: i64,
    pub bid: f64,
    pub ask: f64,
    pub bsz: f64,
    pub asz: f64,
}

#[derive(Debug, Clone)]
pub struct T {
    pub t: i64,
    pub price: f64,
    pub size: f64,
    pub ex: char,
    /// +1 buy, -1 sell, 0 unclassified
    pub dir: i8,
}

fn units(p: f64) -> i64 {
    (p * 10_000.0).round() as i64
}

/// CLNV on a 1/10000-dollar grid with exact integer band tests. Prevailing
/// quote is the last one strictly before the trade; otherwise tick test
/// against the latest earlier trade at a different price. `quotes` must be
/// in time order.
pub fn reference_clnv(trades: &[(i64, f64)], quotes: &[(i64, f64, f64)]) -> Vec<i8> {
    let mut out = Vec::with_capacity(trades.len());
    let mut history: Vec<i64> = Vec::new();
    for &(t, p) in trades {
        let p = units(p);
        let before = quotes.partition_point(|q| q.0 < t);
        let prevailing = quotes[..before].iter().rev().find(|q| q.1 <= q.2);
        let by_quote = prevailing.and_then(|&(_, b, a)| {
            let (b, a) = (units(b), units(a));
            let s = a - b;
            // a - 0.3 s <= p <= a, scaled by 10
            if 10 * p >= 10 * a - 3 * s && p <= a {
                Some(1)
            } else if p >= b && 10 * p <= 10 * b + 3 * s {
                Some(-1)
            } else {
                None
            }
        });
        let dir = by_quote.unwrap_or_else(|| match history.iter().rev().find(|&&h| h != p) {
            Some(&h) if p > h => 1,
            Some(&h) if p < h => -1,
            _ => 0,
        });
        history.push(p);
        out.push(dir);
    }
    out
}

pub struct OracleSymbol {
    pub trades: Vec<T>,
    pub nbbo: Vec<Q>,
    pub venues: BTreeMap<char, Vec<Q>>,
    pub adtv: Option<f64>,
    pub adrv: Option<f64>,
}

fn to_q(q: &QuoteRecord) -> Q {
    Q {
        t: q.timestamp,
        bid: q.bid_price,
        ask: q.ask_price,
        bsz: q.bid_size as f64,
        asz: q.ask_size as f64,
    }
}

impl OracleSymbol {
    /// `quotes` is the clipped stream (pre-open seeds plus session records).
    pub fn new(trades: &[TradeRecord], quotes: &[QuoteRecord], reference: Option<(f64, f64)>) -> Self {
        let ok: Vec<&QuoteRecord> = quotes.iter().filter(|q| q.bid_price <= q.ask_price).collect();
        let mut nbbo: Vec<&QuoteRecord> = ok.iter().copied().filter(|q| q.is_nbbo).collect();
        if nbbo.is_empty() {
            nbbo = ok.clone();
        }
        let mut venue_recs: Vec<&QuoteRecord> = ok.iter().copied().filter(|q| !q.is_nbbo).collect();
        if venue_recs.is_empty() {
            venue_recs = nbbo.clone();
        }
        let mut venues: BTreeMap<char, Vec<Q>> = BTreeMap::new();
        for q in &venue_recs {
            venues.entry(q.exchange).or_default().push(to_q(q));
        }
        let nbbo_tuples: Vec<(i64, f64, f64)> = nbbo.iter().map(|q| (q.timestamp, q.bid_price, q.ask_price)).collect();
        let dirs = reference_clnv(
            &trades.iter().map(|t| (t.timestamp, t.price)).collect::<Vec<_>>(),
            &nbbo_tuples,
        );
        OracleSymbol {
            trades: trades
                .iter()
                .zip(dirs)
                .map(|(t, dir)| T {
                    t: t.timestamp,
                    price: t.price,
                    size: t.size as f64,
                    ex: t.exchange,
                    dir,
                })
                .collect(),
            nbbo: nbbo.iter().map(|q| to_q(q)).collect(),
            venues,
            adtv: reference.map(|r| r.0),
            adrv: reference.map(|r| r.1),
        }
    }
}

/// Last item with time at or before `t`.
fn last_at<X>(items: &[X], time: impl Fn(&X) -> i64, t: i64) -> Option<&X> {
    items.iter().filter(|x| time(x) <= t).last()
}

/// Mean of the prevailing value sampled every millisecond of `[t0, t1)`,
/// over the samples where it is defined.
fn riemann<X>(items: &[X], time: impl Fn(&X) -> i64, val: impl Fn(&X) -> Option<f64>, t0: i64, t1: i64) -> Option<f64> {
    let mut idx = items.iter().filter(|x| time(x) <= t0).count();
    let (mut sum, mut n) = (0.0, 0usize);
    let mut s = t0;
    while s < t1 {
        while idx < items.len() && time(&items[idx]) <= s {
            idx += 1;
        }
        if idx > 0 {
            if let Some(v) = val(&items[idx - 1]).filter(|v| v.is_finite()) {
                sum += v;
                n += 1;
            }
        }
        s += MS;
    }
    (n > 0).then(|| sum / n as f64)
}

fn imb(a: f64, b: f64) -> Option<f64> {
    (a + b != 0.0).then(|| (a - b) / (a + b))
}

fn gap_secs(times: &[i64]) -> Option<f64> {
    (times.len() >= 2).then(|| (times[times.len() - 1] - times[0]) as f64 / 1e9 / (times.len() - 1) as f64)
}

fn hhi(values: &[f64]) -> Option<f64> {
    let total: f64 = values.iter().sum();
    (total > 0.0).then(|| values.iter().map(|v| (v / total) * (v / total)).sum())
}

/// Times of records in `[t0, t1)` that are records / bid changes / ask
/// changes relative to the immediately preceding record of the same list.
fn events(list: &[Q], kind: &str, t0: i64, t1: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for (i, q) in list.iter().enumerate() {
        if q.t < t0 || q.t >= t1 {
            continue;
        }
        let hit = match kind {
            "record" => true,
            "bid" => i == 0 || list[i - 1].bid != q.bid,
            "ask" => i == 0 || list[i - 1].ask != q.ask,
            _ => unreachable!(),
        };
        if hit {
            out.push(q.t);
        }
    }
    out
}

/// Measures whose oracle value is a Riemann sum.
pub fn is_time_weighted(name: &str) -> bool {
    (name.contains("weighted") && !name.contains("eff.spread")) || name.contains("integrated")
}

impl OracleSymbol {
    fn trades_in(&self, t0: i64, t1: i64) -> Vec<&T> {
        self.trades.iter().filter(|t| t.t >= t0 && t.t < t1).collect()
    }

    fn quote_value(&self, agg: &str, f: impl Fn(&Q) -> Option<f64>, t0: i64, t1: i64) -> Option<f64> {
        match agg {
            "last" => last_at(&self.nbbo, |q| q.t, t1 - 1).and_then(&f),
            "weighted" => riemann(&self.nbbo, |q| q.t, &f, t0, t1),
            _ => unreachable!("{agg}"),
        }
    }

    fn trade_value(list: &[&T], agg: &str, f: impl Fn(&T) -> f64, t0: i64, t1: i64) -> Option<f64> {
        match agg {
            "last" => last_at(list, |t| t.t, t1 - 1).map(|t| f(t)),
            "weighted" => riemann(list, |t| t.t, |t| Some(f(t)), t0, t1),
            _ => unreachable!("{agg}"),
        }
    }

    pub fn cell(&self, name: &str, t0: i64, t1: i64) -> Option<f64> {
        let parts: Vec<&str> = name.split('.').collect();
        let mid = |q: &Q| (q.bid + q.ask) / 2.0;

        if name == "return" {
            let q1 = last_at(&self.nbbo, |q| q.t, t1 - 1).map(mid)?;
            let q0 = last_at(&self.nbbo, |q| q.t, t0 - 1).map(mid)?;
            return Some(q1 / q0 - 1.0);
        }
        if name.ends_with("bid.ask.spread") {
            let prop = parts[1] == "prop";
            return self.quote_value(
                parts[0],
                |q| Some(if prop { 100.0 * (q.ask - q.bid) / mid(q) } else { q.ask - q.bid }),
                t0,
                t1,
            );
        }
        if name.ends_with("eff.spread") {
            let prop = parts[1] == "prop";
            let effs: Vec<(f64, f64)> = self
                .trades_in(t0, t1)
                .into_iter()
                .filter_map(|t| {
                    let m = last_at(&self.nbbo, |q| q.t, t.t - 1).map(mid)?;
                    let d = 2.0 * (t.price - m).abs();
                    Some((t.size, if prop { 100.0 * d / m } else { d }))
                })
                .collect();
            return match parts[0] {
                "last" => effs.last().map(|e| e.1),
                _ => {
                    let w: f64 = effs.iter().map(|e| e.0).sum();
                    (w > 0.0).then(|| effs.iter().map(|e| e.0 * e.1).sum::<f64>() / w)
                }
            };
        }
        if name.ends_with("volatility") {
            let adrv = self.adrv?;
            let values: Vec<f64> = if parts[0] == "trade" {
                self.trades_in(t0, t1).iter().map(|t| t.price).collect()
            } else {
                let f = |q: &Q| match parts[0] {
                    "bid" => q.bid,
                    "ask" => q.ask,
                    _ => mid(q),
                };
                last_at(&self.nbbo, |q| q.t, t0)
                    .into_iter()
                    .chain(self.nbbo.iter().filter(|q| q.t > t0 && q.t < t1))
                    .map(f)
                    .collect()
            };
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            return (!values.is_empty()).then(|| (hi - lo) / adrv);
        }
        if name == "num.trades" {
            return Some(self.trades_in(t0, t1).len() as f64);
        }
        if name == "avg.time.between.trades" {
            return gap_secs(&self.trades_in(t0, t1).iter().map(|t| t.t).collect::<Vec<_>>());
        }
        if parts[0] != "HHI" && parts[1] == "trade" && (parts.len() == 3 || parts[3] == "norm") {
            let unit = parts[2];
            let norm = parts.len() == 4;
            if norm && self.adtv.is_none() {
                return None;
            }
            let f = |t: &T| match (unit, norm) {
                ("dollar", _) => t.price * t.size,
                (_, true) => t.size / self.adtv.unwrap(),
                _ => t.size,
            };
            return match parts[0] {
                "total" => Some(self.trades_in(t0, t1).iter().map(|t| f(t)).sum()),
                agg => {
                    let all: Vec<&T> = self.trades.iter().collect();
                    Self::trade_value(&all, agg, f, t0, t1)
                }
            };
        }
        if name.ends_with("buy.sell") || name.ends_with("buy.sell.vol") {
            let (b, s) = match parts[1] {
                "num" | "total" => {
                    let w = |t: &&T| if parts[1] == "num" { 1.0 } else { t.size };
                    let inside = self.trades_in(t0, t1);
                    (
                        inside.iter().filter(|t| t.dir == 1).map(w).sum::<f64>(),
                        inside.iter().filter(|t| t.dir == -1).map(w).sum::<f64>(),
                    )
                }
                agg => {
                    let buys: Vec<&T> = self.trades.iter().filter(|t| t.dir == 1).collect();
                    let sells: Vec<&T> = self.trades.iter().filter(|t| t.dir == -1).collect();
                    (
                        Self::trade_value(&buys, agg, |t| t.size, t0, t1)?,
                        Self::trade_value(&sells, agg, |t| t.size, t0, t1)?,
                    )
                }
            };
            let v = imb(b, s)?;
            return Some(if parts[0] == "undirectional" { v.abs() } else { v });
        }
        if let Some(kind) = match name {
            "num.records" | "avg.time.between.records" => Some("record"),
            "num.bid.changes" | "avg.time.between.bid.changes" => Some("bid"),
            "num.ask.changes" | "avg.time.between.ask.changes" => Some("ask"),
            _ => None,
        } {
            let ev = events(&self.nbbo, kind, t0, t1);
            return if parts[0] == "num" {
                Some(ev.len() as f64)
            } else {
                gap_secs(&ev)
            };
        }
        if parts[0] == "last" || parts[0] == "weighted" {
            // depth: {agg}.{ask|bid|diff|abs.diff}.{dollar|shares|shares.norm}
            let side = if parts[1] == "abs" { "abs.diff" } else { parts[1] };
            let rest = &parts[if parts[1] == "abs" { 3 } else { 2 }..];
            let dollar = rest[0] == "dollar";
            let norm = rest.len() == 2;
            let adtv = if norm { Some(self.adtv?) } else { None };
            let f = |q: &Q| {
                let (a, b) = if dollar { (q.ask * q.asz, q.bid * q.bsz) } else { (q.asz, q.bsz) };
                let v = match side {
                    "ask" => a,
                    "bid" => b,
                    "diff" => a - b,
                    _ => (a - b).abs(),
                };
                Some(adtv.map_or(v, |n| v / n))
            };
            return self.quote_value(parts[0], f, t0, t1);
        }
        if name.contains("bid.ask") {
            let abs = parts[0] == "undirectional";
            let v = match (parts[1], parts[2]) {
                ("num", _) => imb(
                    events(&self.nbbo, "ask", t0, t1).len() as f64,
                    events(&self.nbbo, "bid", t0, t1).len() as f64,
                )?,
                ("avg", _) => imb(
                    gap_secs(&events(&self.nbbo, "ask", t0, t1))?,
                    gap_secs(&events(&self.nbbo, "bid", t0, t1))?,
                )?,
                ("integrated", _) => {
                    riemann(&self.nbbo, |q| q.t, |q| imb(q.asz, q.bsz), t0, t1)?
                }
                (agg, _) => {
                    let dollar = parts[4] == "dollar";
                    let a = self.quote_value(agg, |q| Some(if dollar { q.ask * q.asz } else { q.asz }), t0, t1)?;
                    let b = self.quote_value(agg, |q| Some(if dollar { q.bid * q.bsz } else { q.bsz }), t0, t1)?;
                    imb(a, b)?
                }
            };
            return Some(if abs { v.abs() } else { v });
        }
        if parts[0] == "HHI" {
            let exchanges: Vec<char> = {
                let mut e: Vec<char> = self.trades.iter().map(|t| t.ex).collect();
                e.sort_unstable();
                e.dedup();
                e
            };
            let values: Vec<f64> = match &parts[1..] {
                ["trade", "count"] => exchanges
                    .iter()
                    .map(|e| self.trades_in(t0, t1).iter().filter(|t| t.ex == *e).count() as f64)
                    .collect(),
                ["trade", "shares"] => exchanges
                    .iter()
                    .map(|e| self.trades_in(t0, t1).iter().filter(|t| t.ex == *e).map(|t| t.size).sum())
                    .collect(),
                [agg @ ("last" | "weighted"), side @ ("trade" | "buy" | "sell"), "shares"] => exchanges
                    .iter()
                    .filter_map(|e| {
                        let list: Vec<&T> = self
                            .trades
                            .iter()
                            .filter(|t| {
                                t.ex == *e
                                    && match *side {
                                        "buy" => t.dir == 1,
                                        "sell" => t.dir == -1,
                                        _ => true,
                                    }
                            })
                            .collect();
                        Self::trade_value(&list, agg, |t| t.size, t0, t1)
                    })
                    .collect(),
                [kind @ ("record" | "bid" | "ask"), .., "count"] => {
                    let kind = match *kind {
                        "record" => "record",
                        k => k,
                    };
                    self.venues.values().map(|v| events(v, kind, t0, t1).len() as f64).collect()
                }
                [agg @ ("last" | "weighted"), side @ ("bid" | "ask"), "shares"] => self
                    .venues
                    .values()
                    .filter_map(|v| {
                        let f = |q: &Q| Some(if *side == "bid" { q.bsz } else { q.asz });
                        match *agg {
                            "last" => last_at(v, |q| q.t, t1 - 1).and_then(f),
                            _ => riemann(v, |q| q.t, f, t0, t1),
                        }
                    })
                    .collect(),
                other => panic!("oracle has no rule for HHI.{}", other.join(".")),
            };
            return hhi(&values);
        }
        panic!("oracle has no rule for {name}");
    }
}

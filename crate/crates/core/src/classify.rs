//! Buyer/seller-initiated trade classification: CLNV (default), Lee-Ready and
//! EMO. All three share the tick test as a fallback.
//!
//! The prevailing quote for a trade is the last non-crossed quote with a
//! timestamp strictly before the trade. Price comparisons use a relative
//! tolerance of [`PRICE_TOLERANCE`] so that a trade exactly on a band
//! boundary is treated as on it regardless of binary rounding.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{QuoteRecord, Symbol, TradeRecord};

pub const PRICE_TOLERANCE: f64 = 1e-10;

/// Fraction of the spread, measured in from each quote, assigned to the
/// quote rule by CLNV.
pub const CLNV_BAND: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Buy,
    Sell,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    QuoteRule,
    TickRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    #[default]
    Clnv,
    Lr,
    Emo,
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clnv" => Ok(Classifier::Clnv),
            "lr" => Ok(Classifier::Lr),
            "emo" => Ok(Classifier::Emo),
            other => Err(Error::Config(format!(
                "unknown classifier {other:?} (expected clnv, lr or emo)"
            ))),
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classifier::Clnv => "clnv",
            Classifier::Lr => "lr",
            Classifier::Emo => "emo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedTrade {
    pub trade: TradeRecord,
    pub direction: Direction,
    pub rule_used: Rule,
    pub prevailing_bid: Option<f64>,
    pub prevailing_ask: Option<f64>,
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= PRICE_TOLERANCE * scale.abs()
}

/// Quote-rule decision; `None` defers to the tick test.
fn quote_rule(classifier: Classifier, price: f64, bid: f64, ask: f64) -> Option<Direction> {
    let tol = PRICE_TOLERANCE * ask.abs();
    match classifier {
        Classifier::Clnv => {
            let spread = ask - bid;
            if price >= ask - CLNV_BAND * spread - tol && price <= ask + tol {
                Some(Direction::Buy)
            } else if price <= bid + CLNV_BAND * spread + tol && price >= bid - tol {
                Some(Direction::Sell)
            } else {
                None
            }
        }
        Classifier::Lr => {
            let mid = 0.5 * (bid + ask);
            if price > mid + tol {
                Some(Direction::Buy)
            } else if price < mid - tol {
                Some(Direction::Sell)
            } else {
                None
            }
        }
        Classifier::Emo => {
            if close(price, ask, ask) {
                Some(Direction::Buy)
            } else if close(price, bid, ask) {
                Some(Direction::Sell)
            } else {
                None
            }
        }
    }
}

/// Tick-test state for one symbol.
#[derive(Debug, Default, Clone, Copy)]
struct TickState {
    last: Option<f64>,
    /// Price of the trade run before the current one.
    before_run: Option<f64>,
}

impl TickState {
    fn test(&self, price: f64) -> Direction {
        let reference = match self.last {
            Some(last) if !close(price, last, price) => Some(last),
            Some(_) => self.before_run,
            None => None,
        };
        match reference {
            Some(r) if price > r => Direction::Buy,
            Some(r) if price < r => Direction::Sell,
            _ => Direction::Unclassified,
        }
    }

    fn push(&mut self, price: f64) {
        match self.last {
            Some(last) if close(price, last, price) => {}
            _ => {
                self.before_run = self.last;
                self.last = Some(price);
            }
        }
    }
}

struct SymbolState<'q> {
    quotes: Vec<&'q QuoteRecord>,
    next_quote: usize,
    prevailing: Option<&'q QuoteRecord>,
    tick: TickState,
}

/// Classifies `trades` against `quotes`. Both may hold several symbols; each
/// symbol's trades must be in time order. Crossed quotes are ignored.
pub fn classify(
    trades: &[TradeRecord],
    quotes: &[QuoteRecord],
    classifier: Classifier,
) -> Vec<ClassifiedTrade> {
    let mut states: HashMap<Symbol, SymbolState> = HashMap::new();
    for q in quotes.iter().filter(|q| !q.is_crossed()) {
        states
            .entry(q.symbol.clone())
            .or_insert_with(|| SymbolState {
                quotes: Vec::new(),
                next_quote: 0,
                prevailing: None,
                tick: TickState::default(),
            })
            .quotes
            .push(q);
    }
    for st in states.values_mut() {
        st.quotes.sort_by_key(|q| q.timestamp);
    }

    let mut out = Vec::with_capacity(trades.len());
    for trade in trades {
        let st = states
            .entry(trade.symbol.clone())
            .or_insert_with(|| SymbolState {
                quotes: Vec::new(),
                next_quote: 0,
                prevailing: None,
                tick: TickState::default(),
            });
        while st.next_quote < st.quotes.len()
            && st.quotes[st.next_quote].timestamp < trade.timestamp
        {
            st.prevailing = Some(st.quotes[st.next_quote]);
            st.next_quote += 1;
        }
        let by_quote = st
            .prevailing
            .and_then(|q| quote_rule(classifier, trade.price, q.bid_price, q.ask_price));
        let (direction, rule_used) = match by_quote {
            Some(d) => (d, Rule::QuoteRule),
            None => (st.tick.test(trade.price), Rule::TickRule),
        };
        st.tick.push(trade.price);
        out.push(ClassifiedTrade {
            trade: trade.clone(),
            direction,
            rule_used,
            prevailing_bid: st.prevailing.map(|q| q.bid_price),
            prevailing_ask: st.prevailing.map(|q| q.ask_price),
        });
    }
    out
}

pub fn classify_clnv(trades: &[TradeRecord], quotes: &[QuoteRecord]) -> Vec<ClassifiedTrade> {
    classify(trades, quotes, Classifier::Clnv)
}

pub fn classify_lr(trades: &[TradeRecord], quotes: &[QuoteRecord]) -> Vec<ClassifiedTrade> {
    classify(trades, quotes, Classifier::Lr)
}

pub fn classify_emo(trades: &[TradeRecord], quotes: &[QuoteRecord]) -> Vec<ClassifiedTrade> {
    classify(trades, quotes, Classifier::Emo)
}

/// Debug dump: `timestamp_ns,price,direction,rule_used`.
pub fn write_classified(path: impl AsRef<Path>, trades: &[ClassifiedTrade]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "timestamp_ns,price,direction,rule_used").map_err(io)?;
    for c in trades {
        let dir = match c.direction {
            Direction::Buy => "buy",
            Direction::Sell => "sell",
            Direction::Unclassified => "unclassified",
        };
        let rule = match c.rule_used {
            Rule::QuoteRule => "quote",
            Rule::TickRule => "tick",
        };
        writeln!(w, "{},{},{},{}", c.trade.timestamp, c.trade.price, dir, rule).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn quote(ts: i64, bid: f64, ask: f64) -> QuoteRecord {
        QuoteRecord {
            timestamp: ts,
            symbol: Arc::from("X"),
            bid_price: bid,
            bid_size: 100,
            ask_price: ask,
            ask_size: 100,
            exchange: 'N',
            is_nbbo: true,
        }
    }

    fn trade(ts: i64, price: f64) -> TradeRecord {
        TradeRecord {
            timestamp: ts,
            symbol: Arc::from("X"),
            price,
            size: 100,
            exchange: 'N',
        }
    }

    fn dirs(c: &[ClassifiedTrade]) -> Vec<(Direction, Rule)> {
        c.iter().map(|c| (c.direction, c.rule_used)).collect()
    }

    #[test]
    fn clnv_examples() {
        let q = [quote(0, 10.00, 10.10)];
        let at_ask = classify_clnv(&[trade(1, 10.10)], &q);
        assert_eq!(dirs(&at_ask), vec![(Direction::Buy, Rule::QuoteRule)]);

        let mid_uptick = classify_clnv(&[trade(1, 10.04), trade(2, 10.05)], &q);
        assert_eq!(mid_uptick[1].direction, Direction::Buy);
        assert_eq!(mid_uptick[1].rule_used, Rule::TickRule);

        let low = classify_clnv(&[trade(1, 10.01)], &q);
        assert_eq!(dirs(&low), vec![(Direction::Sell, Rule::QuoteRule)]);

        // band edges are closed
        let edges = classify_clnv(&[trade(1, 10.07), trade(2, 10.03)], &q);
        assert_eq!(edges[0].direction, Direction::Buy);
        assert_eq!(edges[0].rule_used, Rule::QuoteRule);
        assert_eq!(edges[1].direction, Direction::Sell);
        assert_eq!(edges[1].rule_used, Rule::QuoteRule);
    }

    #[test]
    fn clnv_outside_quotes_uses_tick_test() {
        let q = [quote(0, 10.00, 10.10)];
        let c = classify_clnv(&[trade(1, 10.12), trade(2, 10.15)], &q);
        assert_eq!(c[0].rule_used, Rule::TickRule);
        assert_eq!(c[0].direction, Direction::Unclassified);
        assert_eq!(c[1].direction, Direction::Buy);
    }

    #[test]
    fn prevailing_quote_is_strictly_before() {
        let q = [quote(0, 10.00, 10.10), quote(5, 20.00, 20.10)];
        let c = classify_clnv(&[trade(5, 10.10)], &q);
        assert_eq!(c[0].prevailing_ask, Some(10.10));
        assert_eq!(c[0].direction, Direction::Buy);
    }

    #[test]
    fn no_quote_falls_back_to_tick_test() {
        let c = classify_clnv(&[trade(1, 10.0), trade(2, 9.9), trade(3, 9.9)], &[]);
        assert_eq!(
            c.iter().map(|c| c.direction).collect::<Vec<_>>(),
            vec![Direction::Unclassified, Direction::Sell, Direction::Sell]
        );
        assert!(c.iter().all(|c| c.rule_used == Rule::TickRule));
        assert_eq!(c[0].prevailing_bid, None);
    }

    #[test]
    fn crossed_quotes_are_ignored() {
        let q = [quote(0, 10.00, 10.10), quote(1, 10.20, 10.10)];
        let c = classify_clnv(&[trade(2, 10.10)], &q);
        assert_eq!(c[0].prevailing_bid, Some(10.00));
    }

    #[test]
    fn lr_examples() {
        let q = [quote(0, 10.00, 10.10)];
        let c = classify_lr(&[trade(1, 10.06)], &q);
        assert_eq!(c[0].direction, Direction::Buy);
        let c = classify_lr(&[trade(1, 10.06), trade(2, 10.05)], &q);
        assert_eq!(c[1].direction, Direction::Sell);
        assert_eq!(c[1].rule_used, Rule::TickRule);
    }

    #[test]
    fn emo_examples() {
        let q = [quote(0, 10.00, 10.10)];
        assert_eq!(classify_emo(&[trade(1, 10.10)], &q)[0].direction, Direction::Buy);
        let c = classify_emo(&[trade(1, 10.02), trade(2, 10.08)], &q);
        assert_eq!(c[1].direction, Direction::Buy);
        assert_eq!(c[1].rule_used, Rule::TickRule);
    }

    #[test]
    fn symbols_are_independent() {
        let mut q = vec![quote(0, 10.0, 10.1)];
        let mut other = quote(0, 50.0, 50.1);
        other.symbol = Arc::from("Y");
        q.push(other);
        let mut t2 = trade(1, 50.1);
        t2.symbol = Arc::from("Y");
        let c = classify_clnv(&[trade(1, 10.0), t2], &q);
        assert_eq!(c[0].direction, Direction::Sell);
        assert_eq!(c[1].direction, Direction::Buy);
    }

    proptest! {
        #[test]
        fn at_quote_trades_agree_and_scale_invariant(
            bid_cents in 100u32..10_000,
            spread_cents in 0u32..50,
            steps in prop::collection::vec((0u8..4, 0u32..1000), 1..40),
            scale_num in 1u32..1000,
        ) {
            let bid = bid_cents as f64 / 100.0;
            let ask = (bid_cents + spread_cents) as f64 / 100.0;
            let q = [quote(0, bid, ask)];
            let trades: Vec<TradeRecord> = steps
                .iter()
                .enumerate()
                .map(|(i, &(kind, frac))| {
                    let p = match kind {
                        0 => ask,
                        1 => bid,
                        _ => bid + (ask - bid) * frac as f64 / 1000.0,
                    };
                    trade(i as i64 + 1, p)
                })
                .collect();
            let clnv = classify_clnv(&trades, &q);
            let lr = classify_lr(&trades, &q);
            let emo = classify_emo(&trades, &q);
            for (i, &(kind, _)) in steps.iter().enumerate() {
                if kind == 0 {
                    prop_assert_eq!(clnv[i].direction, Direction::Buy);
                    prop_assert_eq!(emo[i].direction, Direction::Buy);
                    if spread_cents > 0 {
                        prop_assert_eq!(lr[i].direction, Direction::Buy);
                    }
                } else if kind == 1 && spread_cents > 0 {
                    prop_assert_eq!(clnv[i].direction, Direction::Sell);
                    prop_assert_eq!(lr[i].direction, Direction::Sell);
                    prop_assert_eq!(emo[i].direction, Direction::Sell);
                }
            }

            let c = scale_num as f64 / 37.0;
            let sq = [quote(0, bid * c, ask * c)];
            let st: Vec<TradeRecord> = trades.iter().map(|t| trade(t.timestamp, t.price * c)).collect();
            for classifier in [Classifier::Clnv, Classifier::Lr, Classifier::Emo] {
                let a = classify(&trades, &q, classifier);
                let b = classify(&st, &sq, classifier);
                prop_assert_eq!(dirs(&a), dirs(&b));
            }
            // determinism
            prop_assert_eq!(dirs(&classify_clnv(&trades, &q)), dirs(&clnv));
        }
    }
}

//! Catalog of per-interval microstructure measures.
//!
//! Every measure has a dotted lowercase name (`last.prop.eff.spread`,
//! `HHI.weighted.bid.shares`, ...), a family, an aggregation, a normalizer and
//! a one-line description. [`Registry::full`] enumerates the default 91
//! measures; [`reduce_registry`] drops the redundant twins (dollar vs share
//! volume, dollar vs proportional effective spread, raw vs ADTV-normalized).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Return,
    Spread,
    Volatility,
    TradeFreq,
    TradeVol,
    TradeImbalance,
    QuoteFreq,
    Depth,
    QuoteImbalance,
    Hhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Aggregation {
    LastPrevailing,
    TimeWeighted,
    /// Share-weighted mean over the interval's trades.
    ShareWeighted,
    Count,
    Sum,
    AvgGap,
    /// Time-weighted mean of a pointwise fraction.
    Integral,
    /// High minus low within the interval.
    Range,
    /// Relative change between consecutive interval ends.
    Change,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalizer {
    None,
    Adtv,
    Adrv,
    SelfNormalized,
}

/// How the interval's trades or quotes are summarized before a formula is
/// applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agg {
    Last,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VolumeAgg {
    Total,
    Last,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Dollar,
    Shares,
    /// Shares divided by ADTV (or ADRV for trades when so configured).
    SharesNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriceSource {
    Bid,
    Ask,
    Mid,
    Trade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuoteEvent {
    Record,
    BidChange,
    AskChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DepthSide {
    Ask,
    Bid,
    Diff,
    AbsDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TradeBase {
    Count,
    TotalShares,
    LastShares,
    WeightedShares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuoteBase {
    ChangeCount,
    ChangeGap,
    LastShares,
    WeightedShares,
    LastDollar,
    WeightedDollar,
    /// Time-weighted mean of the pointwise size fraction.
    IntegratedFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Any,
    Buy,
    Sell,
}

/// Per-exchange quantity whose shares across exchanges enter the HHI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HhiBase {
    TradeCount,
    TradeShares,
    TradeSize { agg: Agg, side: Side },
    QuoteCount(QuoteEvent),
    QuoteSize { agg: Agg, bid: bool },
}

/// What a measure computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Return,
    QuotedSpread { agg: Agg, proportional: bool },
    EffectiveSpread { agg: Agg, proportional: bool },
    Volatility(PriceSource),
    TradeCount,
    TradeAvgGap,
    TradeVolume { agg: VolumeAgg, unit: Unit },
    TradeImbalance { base: TradeBase, absolute: bool },
    QuoteCount(QuoteEvent),
    QuoteAvgGap(QuoteEvent),
    Depth { agg: Agg, side: DepthSide, unit: Unit },
    QuoteImbalance { base: QuoteBase, absolute: bool },
    Hhi(HhiBase),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureId {
    pub name: String,
    pub family: Family,
    pub aggregation: Aggregation,
    pub normalizer: Normalizer,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDef {
    pub id: MeasureId,
    pub kind: MeasureKind,
}

impl MeasureDef {
    pub fn name(&self) -> &str {
        &self.id.name
    }
}

/// Which daily normalizer divides trade share volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TradeShareNorm {
    #[default]
    Adtv,
    Adrv,
}

fn agg_word(agg: Agg) -> &'static str {
    match agg {
        Agg::Last => "last",
        Agg::Weighted => "weighted",
    }
}

fn agg_phrase(agg: Agg) -> &'static str {
    match agg {
        Agg::Last => "last prevailing",
        Agg::Weighted => "time-weighted",
    }
}

fn unit_suffix(unit: Unit) -> &'static str {
    match unit {
        Unit::Dollar => "dollar",
        Unit::Shares => "shares",
        Unit::SharesNorm => "shares.norm",
    }
}

impl MeasureKind {
    pub fn family(&self) -> Family {
        match self {
            MeasureKind::Return => Family::Return,
            MeasureKind::QuotedSpread { .. } | MeasureKind::EffectiveSpread { .. } => Family::Spread,
            MeasureKind::Volatility(_) => Family::Volatility,
            MeasureKind::TradeCount | MeasureKind::TradeAvgGap => Family::TradeFreq,
            MeasureKind::TradeVolume { .. } => Family::TradeVol,
            MeasureKind::TradeImbalance { .. } => Family::TradeImbalance,
            MeasureKind::QuoteCount(_) | MeasureKind::QuoteAvgGap(_) => Family::QuoteFreq,
            MeasureKind::Depth { .. } => Family::Depth,
            MeasureKind::QuoteImbalance { .. } => Family::QuoteImbalance,
            MeasureKind::Hhi(_) => Family::Hhi,
        }
    }

    fn aggregation(&self) -> Aggregation {
        let of = |agg: Agg| match agg {
            Agg::Last => Aggregation::LastPrevailing,
            Agg::Weighted => Aggregation::TimeWeighted,
        };
        match *self {
            MeasureKind::Return => Aggregation::Change,
            MeasureKind::QuotedSpread { agg, .. } => of(agg),
            MeasureKind::EffectiveSpread { agg: Agg::Last, .. } => Aggregation::LastPrevailing,
            MeasureKind::EffectiveSpread { agg: Agg::Weighted, .. } => Aggregation::ShareWeighted,
            MeasureKind::Volatility(_) => Aggregation::Range,
            MeasureKind::TradeCount | MeasureKind::QuoteCount(_) => Aggregation::Count,
            MeasureKind::TradeAvgGap | MeasureKind::QuoteAvgGap(_) => Aggregation::AvgGap,
            MeasureKind::TradeVolume { agg, .. } => match agg {
                VolumeAgg::Total => Aggregation::Sum,
                VolumeAgg::Last => Aggregation::LastPrevailing,
                VolumeAgg::Weighted => Aggregation::TimeWeighted,
            },
            MeasureKind::TradeImbalance { base, .. } => match base {
                TradeBase::Count => Aggregation::Count,
                TradeBase::TotalShares => Aggregation::Sum,
                TradeBase::LastShares => Aggregation::LastPrevailing,
                TradeBase::WeightedShares => Aggregation::TimeWeighted,
            },
            MeasureKind::Depth { agg, .. } => of(agg),
            MeasureKind::QuoteImbalance { base, .. } => match base {
                QuoteBase::ChangeCount => Aggregation::Count,
                QuoteBase::ChangeGap => Aggregation::AvgGap,
                QuoteBase::LastShares | QuoteBase::LastDollar => Aggregation::LastPrevailing,
                QuoteBase::WeightedShares | QuoteBase::WeightedDollar => Aggregation::TimeWeighted,
                QuoteBase::IntegratedFraction => Aggregation::Integral,
            },
            MeasureKind::Hhi(base) => match base {
                HhiBase::TradeCount | HhiBase::QuoteCount(_) => Aggregation::Count,
                HhiBase::TradeShares => Aggregation::Sum,
                HhiBase::TradeSize { agg, .. } | HhiBase::QuoteSize { agg, .. } => of(agg),
            },
        }
    }

    fn normalizer(&self, trade_norm: TradeShareNorm) -> Normalizer {
        match *self {
            MeasureKind::Volatility(_) => Normalizer::Adrv,
            MeasureKind::TradeVolume { unit: Unit::SharesNorm, .. } => match trade_norm {
                TradeShareNorm::Adtv => Normalizer::Adtv,
                TradeShareNorm::Adrv => Normalizer::Adrv,
            },
            MeasureKind::Depth { unit: Unit::SharesNorm, .. } => Normalizer::Adtv,
            MeasureKind::TradeImbalance { .. }
            | MeasureKind::QuoteImbalance { .. }
            | MeasureKind::Hhi(_) => Normalizer::SelfNormalized,
            _ => Normalizer::None,
        }
    }

    fn name(&self) -> String {
        match *self {
            MeasureKind::Return => "return".into(),
            MeasureKind::QuotedSpread { agg, proportional } => format!(
                "{}.{}bid.ask.spread",
                agg_word(agg),
                if proportional { "prop." } else { "" }
            ),
            MeasureKind::EffectiveSpread { agg, proportional } => format!(
                "{}.{}.eff.spread",
                agg_word(agg),
                if proportional { "prop" } else { "dollar" }
            ),
            MeasureKind::Volatility(src) => match src {
                PriceSource::Bid => "bid.volatility",
                PriceSource::Ask => "ask.volatility",
                PriceSource::Mid => "mid.quote.volatility",
                PriceSource::Trade => "trade.price.volatility",
            }
            .into(),
            MeasureKind::TradeCount => "num.trades".into(),
            MeasureKind::TradeAvgGap => "avg.time.between.trades".into(),
            MeasureKind::TradeVolume { agg, unit } => {
                let a = match agg {
                    VolumeAgg::Total => "total",
                    VolumeAgg::Last => "last",
                    VolumeAgg::Weighted => "weighted",
                };
                format!("{a}.trade.{}", unit_suffix(unit))
            }
            MeasureKind::TradeImbalance { base, absolute } => {
                let b = match base {
                    TradeBase::Count => "num.buy.sell",
                    TradeBase::TotalShares => "total.buy.sell.vol",
                    TradeBase::LastShares => "last.buy.sell.vol",
                    TradeBase::WeightedShares => "weighted.buy.sell.vol",
                };
                format!("{}.{b}", if absolute { "undirectional" } else { "directional" })
            }
            MeasureKind::QuoteCount(ev) => match ev {
                QuoteEvent::Record => "num.records",
                QuoteEvent::BidChange => "num.bid.changes",
                QuoteEvent::AskChange => "num.ask.changes",
            }
            .into(),
            MeasureKind::QuoteAvgGap(ev) => match ev {
                QuoteEvent::Record => "avg.time.between.records",
                QuoteEvent::BidChange => "avg.time.between.bid.changes",
                QuoteEvent::AskChange => "avg.time.between.ask.changes",
            }
            .into(),
            MeasureKind::Depth { agg, side, unit } => {
                let s = match side {
                    DepthSide::Ask => "ask",
                    DepthSide::Bid => "bid",
                    DepthSide::Diff => "diff",
                    DepthSide::AbsDiff => "abs.diff",
                };
                format!("{}.{s}.{}", agg_word(agg), unit_suffix(unit))
            }
            MeasureKind::QuoteImbalance { base, absolute } => {
                let b = match base {
                    QuoteBase::ChangeCount => "num.bid.ask.changes",
                    QuoteBase::ChangeGap => "avg.time.bid.ask.changes",
                    QuoteBase::LastShares => "last.bid.ask.shares",
                    QuoteBase::WeightedShares => "weighted.bid.ask.shares",
                    QuoteBase::LastDollar => "last.bid.ask.dollar",
                    QuoteBase::WeightedDollar => "weighted.bid.ask.dollar",
                    QuoteBase::IntegratedFraction => "integrated.bid.ask.fraction",
                };
                format!("{}.{b}", if absolute { "undirectional" } else { "directional" })
            }
            MeasureKind::Hhi(base) => {
                let b = match base {
                    HhiBase::TradeCount => "trade.count".to_string(),
                    HhiBase::TradeShares => "trade.shares".to_string(),
                    HhiBase::TradeSize { agg, side } => format!(
                        "{}.{}.shares",
                        agg_word(agg),
                        match side {
                            Side::Any => "trade",
                            Side::Buy => "buy",
                            Side::Sell => "sell",
                        }
                    ),
                    HhiBase::QuoteCount(ev) => match ev {
                        QuoteEvent::Record => "record.count",
                        QuoteEvent::BidChange => "bid.change.count",
                        QuoteEvent::AskChange => "ask.change.count",
                    }
                    .to_string(),
                    HhiBase::QuoteSize { agg, bid } => {
                        format!("{}.{}.shares", agg_word(agg), if bid { "bid" } else { "ask" })
                    }
                };
                format!("HHI.{b}")
            }
        }
    }

    fn description(&self, trade_norm: TradeShareNorm) -> String {
        let unit_phrase = |unit: Unit, adtv_name: &str| match unit {
            Unit::Dollar => "dollar value".to_string(),
            Unit::Shares => "shares".to_string(),
            Unit::SharesNorm => format!("shares normalized by {adtv_name}"),
        };
        let trade_norm_name = match trade_norm {
            TradeShareNorm::Adtv => "the average daily trading shares",
            TradeShareNorm::Adrv => "the average daily realized volatility",
        };
        match *self {
            MeasureKind::Return => "Return of the last prevailing mid-quote over the interval".into(),
            MeasureKind::QuotedSpread { agg, proportional } => format!(
                "The {} {}bid-ask spread",
                agg_phrase(agg),
                if proportional { "proportional (percent of mid-quote) " } else { "" }
            ),
            MeasureKind::EffectiveSpread { agg, proportional } => format!(
                "The {} {} effective spread",
                match agg {
                    Agg::Last => "last prevailing",
                    Agg::Weighted => "share-weighted",
                },
                if proportional { "proportional" } else { "dollar" }
            ),
            MeasureKind::Volatility(src) => format!(
                "Volatility based on {} (high - low over ADRV)",
                match src {
                    PriceSource::Bid => "bid price",
                    PriceSource::Ask => "ask price",
                    PriceSource::Mid => "mid-quote",
                    PriceSource::Trade => "trade price",
                }
            ),
            MeasureKind::TradeCount => "The number of trades".into(),
            MeasureKind::TradeAvgGap => "The average time between trades".into(),
            MeasureKind::TradeVolume { agg, unit } => format!(
                "The {} trade {}",
                match agg {
                    VolumeAgg::Total => "interval total",
                    VolumeAgg::Last => "last prevailing",
                    VolumeAgg::Weighted => "time-weighted",
                },
                unit_phrase(unit, trade_norm_name)
            ),
            MeasureKind::TradeImbalance { base, absolute } => format!(
                "{}(buy - sell) / (buy + sell){} where buy (sell) means the {}",
                if absolute { "|" } else { "" },
                if absolute { "|" } else { "" },
                match base {
                    TradeBase::Count => "number of buy (sell) trades",
                    TradeBase::TotalShares => "total shares of buy (sell) trades",
                    TradeBase::LastShares => "last prevailing shares of buy (sell) trades",
                    TradeBase::WeightedShares => "time-weighted shares of buy (sell) trades",
                }
            ),
            MeasureKind::QuoteCount(ev) => format!(
                "The number of {}",
                match ev {
                    QuoteEvent::Record => "quote records",
                    QuoteEvent::BidChange => "bid changes",
                    QuoteEvent::AskChange => "ask changes",
                }
            ),
            MeasureKind::QuoteAvgGap(ev) => format!(
                "The average time between {}",
                match ev {
                    QuoteEvent::Record => "quote records",
                    QuoteEvent::BidChange => "bid changes",
                    QuoteEvent::AskChange => "ask changes",
                }
            ),
            MeasureKind::Depth { agg, side, unit } => format!(
                "The {} {} in {}",
                agg_phrase(agg),
                match side {
                    DepthSide::Ask => "ask depth",
                    DepthSide::Bid => "bid depth",
                    DepthSide::Diff => "(ask - bid) depth",
                    DepthSide::AbsDiff => "|ask - bid| depth",
                },
                unit_phrase(unit, "the average daily trading shares")
            ),
            MeasureKind::QuoteImbalance { base, absolute } => format!(
                "{}(ask - bid) / (ask + bid){} where ask (bid) means the {}",
                if absolute { "|" } else { "" },
                if absolute { "|" } else { "" },
                match base {
                    QuoteBase::ChangeCount => "number of ask (bid) changes",
                    QuoteBase::ChangeGap => "average time between ask (bid) changes",
                    QuoteBase::LastShares => "last prevailing ask (bid) shares",
                    QuoteBase::WeightedShares => "time-weighted ask (bid) shares",
                    QuoteBase::LastDollar => "last prevailing ask (bid) dollar depth",
                    QuoteBase::WeightedDollar => "time-weighted ask (bid) dollar depth",
                    QuoteBase::IntegratedFraction =>
                        "ask (bid) shares, averaged over time as a pointwise fraction",
                }
            ),
            MeasureKind::Hhi(base) => format!(
                "HHI across exchanges of {}",
                match base {
                    HhiBase::TradeCount => "trade count".to_string(),
                    HhiBase::TradeShares => "total trade shares".to_string(),
                    HhiBase::TradeSize { agg, side } => format!(
                        "{} {}shares",
                        agg_phrase(agg),
                        match side {
                            Side::Any => "trade ",
                            Side::Buy => "buy ",
                            Side::Sell => "sell ",
                        }
                    ),
                    HhiBase::QuoteCount(ev) => match ev {
                        QuoteEvent::Record => "quote record count",
                        QuoteEvent::BidChange => "count of bid changes",
                        QuoteEvent::AskChange => "count of ask changes",
                    }
                    .to_string(),
                    HhiBase::QuoteSize { agg, bid } =>
                        format!("{} {} shares", agg_phrase(agg), if bid { "bid" } else { "ask" }),
                }
            ),
        }
    }

    /// Counterparts that make this measure redundant, most preferred first.
    fn preferred_twins(&self) -> Vec<MeasureKind> {
        match *self {
            MeasureKind::TradeVolume { agg, unit: Unit::Dollar } => vec![
                MeasureKind::TradeVolume { agg, unit: Unit::Shares },
                MeasureKind::TradeVolume { agg, unit: Unit::SharesNorm },
            ],
            MeasureKind::TradeVolume { agg, unit: Unit::Shares } => {
                vec![MeasureKind::TradeVolume { agg, unit: Unit::SharesNorm }]
            }
            MeasureKind::Depth { agg, side, unit: Unit::Dollar } => vec![
                MeasureKind::Depth { agg, side, unit: Unit::Shares },
                MeasureKind::Depth { agg, side, unit: Unit::SharesNorm },
            ],
            MeasureKind::Depth { agg, side, unit: Unit::Shares } => {
                vec![MeasureKind::Depth { agg, side, unit: Unit::SharesNorm }]
            }
            MeasureKind::QuoteImbalance { base: QuoteBase::LastDollar, absolute } => {
                vec![MeasureKind::QuoteImbalance { base: QuoteBase::LastShares, absolute }]
            }
            MeasureKind::QuoteImbalance { base: QuoteBase::WeightedDollar, absolute } => {
                vec![MeasureKind::QuoteImbalance { base: QuoteBase::WeightedShares, absolute }]
            }
            MeasureKind::EffectiveSpread { agg, proportional: false } => {
                vec![MeasureKind::EffectiveSpread { agg, proportional: true }]
            }
            _ => Vec::new(),
        }
    }

    fn reduction_reason(&self) -> &'static str {
        match self {
            MeasureKind::EffectiveSpread { .. } => "dollar effective spread; proportional spread kept",
            MeasureKind::TradeVolume { unit: Unit::Dollar, .. }
            | MeasureKind::Depth { unit: Unit::Dollar, .. }
            | MeasureKind::QuoteImbalance { .. } => "dollar-volume measure; share-volume twin kept",
            _ => "non-normalized measure; normalized twin kept",
        }
    }
}

fn catalog() -> Vec<MeasureKind> {
    use MeasureKind as K;
    let aggs = [Agg::Last, Agg::Weighted];
    let units = [Unit::Dollar, Unit::Shares, Unit::SharesNorm];
    let mut out = vec![K::Return];
    for proportional in [false, true] {
        for agg in aggs {
            out.push(K::QuotedSpread { agg, proportional });
        }
    }
    for proportional in [false, true] {
        for agg in aggs {
            out.push(K::EffectiveSpread { agg, proportional });
        }
    }
    for src in [PriceSource::Bid, PriceSource::Ask, PriceSource::Mid, PriceSource::Trade] {
        out.push(K::Volatility(src));
    }
    out.push(K::TradeCount);
    out.push(K::TradeAvgGap);
    for agg in [VolumeAgg::Total, VolumeAgg::Last, VolumeAgg::Weighted] {
        for unit in units {
            out.push(K::TradeVolume { agg, unit });
        }
    }
    for base in [
        TradeBase::Count,
        TradeBase::TotalShares,
        TradeBase::LastShares,
        TradeBase::WeightedShares,
    ] {
        for absolute in [false, true] {
            out.push(K::TradeImbalance { base, absolute });
        }
    }
    let events = [QuoteEvent::Record, QuoteEvent::BidChange, QuoteEvent::AskChange];
    for ev in events {
        out.push(K::QuoteCount(ev));
    }
    for ev in events {
        out.push(K::QuoteAvgGap(ev));
    }
    for agg in aggs {
        for side in [DepthSide::Ask, DepthSide::Bid, DepthSide::Diff, DepthSide::AbsDiff] {
            for unit in units {
                out.push(K::Depth { agg, side, unit });
            }
        }
    }
    for base in [
        QuoteBase::ChangeCount,
        QuoteBase::ChangeGap,
        QuoteBase::LastShares,
        QuoteBase::WeightedShares,
        QuoteBase::LastDollar,
        QuoteBase::WeightedDollar,
        QuoteBase::IntegratedFraction,
    ] {
        for absolute in [false, true] {
            out.push(K::QuoteImbalance { base, absolute });
        }
    }
    out.push(K::Hhi(HhiBase::TradeCount));
    out.push(K::Hhi(HhiBase::TradeShares));
    for agg in aggs {
        for side in [Side::Any, Side::Buy, Side::Sell] {
            out.push(K::Hhi(HhiBase::TradeSize { agg, side }));
        }
    }
    for ev in events {
        out.push(K::Hhi(HhiBase::QuoteCount(ev)));
    }
    for agg in aggs {
        for bid in [true, false] {
            out.push(K::Hhi(HhiBase::QuoteSize { agg, bid }));
        }
    }
    out
}

fn define(kind: MeasureKind, trade_norm: TradeShareNorm) -> MeasureDef {
    MeasureDef {
        id: MeasureId {
            name: kind.name(),
            family: kind.family(),
            aggregation: kind.aggregation(),
            normalizer: kind.normalizer(trade_norm),
            description: kind.description(trade_norm),
        },
        kind,
    }
}

/// An ordered set of measures; one panel column per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    measures: Vec<MeasureDef>,
}

impl Registry {
    pub const FULL_SIZE: usize = 91;

    pub fn full() -> Self {
        Self::full_with(TradeShareNorm::Adtv)
    }

    pub fn full_with(trade_norm: TradeShareNorm) -> Self {
        Registry {
            measures: catalog().into_iter().map(|k| define(k, trade_norm)).collect(),
        }
    }

    /// The full registry with redundant twins removed.
    pub fn reduced() -> Self {
        reduce_registry(&Registry::full(), None).kept
    }

    /// Subset of the full catalog, in the given order.
    pub fn from_names<S: AsRef<str>>(names: &[S], trade_norm: TradeShareNorm) -> Result<Self> {
        let full = Registry::full_with(trade_norm);
        let mut seen = HashSet::new();
        let mut measures = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let def = full
                .get(name)
                .ok_or_else(|| Error::Config(format!("unknown measure {name:?}")))?;
            if !seen.insert(name.to_owned()) {
                return Err(Error::Config(format!("measure {name:?} listed twice")));
            }
            measures.push(def.clone());
        }
        if measures.is_empty() {
            return Err(Error::Config("registry is empty".into()));
        }
        Ok(Registry { measures })
    }

    /// Reads one measure name per line; blank lines and `#` comments are
    /// ignored.
    pub fn from_file(path: impl AsRef<Path>, trade_norm: TradeShareNorm) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let names: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        Registry::from_names(&names, trade_norm)
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measures(&self) -> &[MeasureDef] {
        &self.measures
    }

    pub fn names(&self) -> Vec<String> {
        self.measures.iter().map(|m| m.id.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&MeasureDef> {
        self.measures.iter().find(|m| m.id.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m.id.name == name)
    }

    pub fn description(&self, name: &str) -> Option<&str> {
        self.get(name).map(|m| m.id.description.as_str())
    }

    /// Keeps only the named measures, preserving registry order.
    pub fn retain_names(&self, names: &HashSet<&str>) -> Registry {
        Registry {
            measures: self
                .measures
                .iter()
                .filter(|m| names.contains(m.id.name.as_str()))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedMeasure {
    pub name: String,
    pub twin: String,
    pub reason: String,
    /// Averaged correlation distance to the twin, when a matrix was supplied.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub kept: Registry,
    pub removed: Vec<RemovedMeasure>,
}

/// Drops dollar-volume measures that have share-volume twins, dollar
/// effective spreads, and raw share measures that have ADTV-normalized twins.
/// Idempotent. When `distances` is supplied the twin distance is recorded
/// for each removal.
pub fn reduce_registry(
    registry: &Registry,
    distances: Option<&crate::cluster::DistanceMatrix>,
) -> Reduction {
    let present: HashMap<MeasureKind, &str> = registry
        .measures
        .iter()
        .map(|m| (m.kind, m.id.name.as_str()))
        .collect();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for m in &registry.measures {
        let twin = m
            .kind
            .preferred_twins()
            .into_iter()
            .find_map(|k| present.get(&k).copied());
        match twin {
            Some(twin) => removed.push(RemovedMeasure {
                name: m.id.name.clone(),
                twin: twin.to_owned(),
                reason: m.kind.reduction_reason().to_owned(),
                distance: distances.and_then(|d| d.get_by_name(&m.id.name, twin)),
            }),
            None => kept.push(m.clone()),
        }
    }
    Reduction {
        kept: Registry { measures: kept },
        removed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_registry_has_91_unique_names() {
        let r = Registry::full();
        assert_eq!(r.len(), Registry::FULL_SIZE);
        let names: HashSet<String> = r.names().into_iter().collect();
        assert_eq!(names.len(), r.len());
    }

    #[test]
    fn family_counts() {
        let r = Registry::full();
        let count = |f: Family| r.measures().iter().filter(|m| m.id.family == f).count();
        assert_eq!(count(Family::Return), 1);
        assert_eq!(count(Family::Spread), 8);
        assert_eq!(count(Family::Volatility), 4);
        assert_eq!(count(Family::TradeFreq), 2);
        assert_eq!(count(Family::TradeVol), 9);
        assert_eq!(count(Family::TradeImbalance), 8);
        assert_eq!(count(Family::QuoteFreq), 6);
        assert_eq!(count(Family::Depth), 24);
        assert_eq!(count(Family::QuoteImbalance), 14);
        assert_eq!(count(Family::Hhi), 15);
    }

    #[test]
    fn table_style_names_are_present() {
        let r = Registry::full();
        for name in [
            "return",
            "last.prop.eff.spread",
            "mid.quote.volatility",
            "num.bid.changes",
            "avg.time.between.trades",
            "last.trade.shares.norm",
            "directional.num.buy.sell",
            "undirectional.last.buy.sell.vol",
            "avg.time.between.records",
            "last.bid.ask.spread",
            "last.abs.diff.shares.norm",
            "directional.num.bid.ask.changes",
            "HHI.last.sell.shares",
            "HHI.weighted.buy.shares",
            "HHI.weighted.sell.shares",
            "HHI.last.ask.shares",
            "HHI.last.bid.shares",
            "HHI.weighted.bid.shares",
            "HHI.bid.change.count",
            "HHI.ask.change.count",
        ] {
            assert!(r.get(name).is_some(), "missing {name}");
        }
    }

    #[test]
    fn reduction_rules() {
        let full = Registry::full();
        let red = reduce_registry(&full, None);
        assert!(red.kept.len() < full.len());
        assert_eq!(red.kept.len() + red.removed.len(), full.len());
        assert_eq!(red.kept.len(), 63);
        let kept: HashSet<String> = red.kept.names().into_iter().collect();
        assert!(!kept.contains("last.trade.shares"));
        assert!(kept.contains("last.trade.shares.norm"));
        assert!(!kept.contains("last.dollar.eff.spread"));
        assert!(!kept.contains("weighted.dollar.eff.spread"));
        assert!(kept.contains("last.prop.eff.spread"));
        assert!(!kept.contains("weighted.ask.dollar"));
        assert!(kept.contains("last.bid.ask.spread"), "quoted dollar spread stays");

        // idempotent
        let again = reduce_registry(&red.kept, None);
        assert_eq!(again.kept, red.kept);
        assert!(again.removed.is_empty());
    }

    #[test]
    fn pairwise_twin_rule() {
        let r = Registry::from_names(
            &["last.trade.shares", "last.trade.shares.norm"],
            TradeShareNorm::Adtv,
        )
        .unwrap();
        let red = reduce_registry(&r, None);
        assert_eq!(red.kept.names(), vec!["last.trade.shares.norm"]);
        assert_eq!(red.removed[0].twin, "last.trade.shares.norm");

        // dollar falls back to the normalized twin when raw shares are absent
        let r = Registry::from_names(
            &["last.trade.dollar", "last.trade.shares.norm"],
            TradeShareNorm::Adtv,
        )
        .unwrap();
        assert_eq!(reduce_registry(&r, None).kept.len(), 1);
    }

    #[test]
    fn from_names_rejects_unknown_and_duplicates() {
        assert!(Registry::from_names(&["nope"], TradeShareNorm::Adtv).is_err());
        assert!(Registry::from_names(&["return", "return"], TradeShareNorm::Adtv).is_err());
        let empty: [&str; 0] = [];
        assert!(Registry::from_names(&empty, TradeShareNorm::Adtv).is_err());
    }

    #[test]
    fn adrv_toggle_changes_trade_normalizer_only() {
        let r = Registry::full_with(TradeShareNorm::Adrv);
        assert_eq!(r.get("last.trade.shares.norm").unwrap().id.normalizer, Normalizer::Adrv);
        assert_eq!(r.get("last.ask.shares.norm").unwrap().id.normalizer, Normalizer::Adtv);
    }
}

//! Deterministic synthetic trading days.
//!
//! Each symbol gets its own ChaCha8 stream (`seed_from_u64(seed)` with the
//! stream number set to the symbol index), so output depends only on the
//! spec and not on worker count. Samplers are written here rather than taken
//! from a distributions crate so the byte stream stays fixed across
//! dependency upgrades.
//!
//! Model, per symbol:
//! * a centre price doing a Gaussian random walk, reflected to stay within
//!   `max_excursion` of the opening price;
//! * latent AR(1) drivers updated every 10 seconds (activity, spread, depth,
//!   order flow) that modulate arrival rates, spread width, displayed sizes
//!   and buy probability, giving measures shared structure;
//! * merged Poisson arrivals of quote updates and trades. A quote update
//!   emits the posting exchange's quote and, one millisecond later, the new
//!   NBBO. Trades print at the prevailing bid or ask with probability
//!   `at_quote_fraction`, otherwise strictly inside the spread.
//!
//! Prices are held as integers in units of 1/10000 dollar.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    parse_clock, prevailing_month, write_daily, write_quotes, write_trades, DailyRow, QuoteRecord,
    Session, Timestamp, TradeRecord, NANOS_PER_SEC,
};
use crate::panel::MeasurePanel;

const UNITS_PER_DOLLAR: f64 = 10_000.0;
const MS: i64 = 1_000_000;
const DRIVER_STEP: i64 = 10 * NANOS_PER_SEC;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    Activity,
    Spread,
    Depth,
    OrderFlow,
}

/// A latent factor shared by every measure it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedDriver {
    pub driver: Driver,
    /// Scale of the driver's effect; 0 disables it.
    pub strength: f64,
    /// AR(1) coefficient per 10-second step, in [0, 1).
    pub persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub symbols: usize,
    pub date: NaiveDate,
    pub open: String,
    pub close: String,
    /// Quote updates per second per symbol.
    pub quote_rate: f64,
    /// Trades per second per symbol.
    pub trade_rate: f64,
    /// Standard deviation of the centre price's relative move per sqrt(second).
    pub volatility: f64,
    /// Largest relative distance of the centre price from its opening level.
    pub max_excursion: f64,
    pub tick: f64,
    /// Mean quoted spread in ticks; 0 gives locked quotes.
    pub spread_ticks: f64,
    /// Mean displayed size per side, in shares.
    pub depth_shares: f64,
    pub mean_trade_size: f64,
    pub at_quote_fraction: f64,
    pub exchanges: Vec<char>,
    pub routing_weights: Vec<f64>,
    pub min_price: f64,
    pub max_price: f64,
    pub drivers: Vec<PlantedDriver>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 7,
            symbols: 50,
            date: NaiveDate::from_ymd_opt(2018, 4, 3).unwrap(),
            open: "09:30:00".into(),
            close: "16:00:00".into(),
            quote_rate: 0.4,
            trade_rate: 0.5,
            volatility: 0.0002,
            max_excursion: 0.004,
            tick: 0.01,
            spread_ticks: 2.0,
            depth_shares: 800.0,
            mean_trade_size: 200.0,
            at_quote_fraction: 0.6,
            exchanges: vec!['N', 'P', 'Q'],
            routing_weights: vec![0.5, 0.3, 0.2],
            min_price: 40.0,
            max_price: 150.0,
            drivers: [Driver::Activity, Driver::Spread, Driver::Depth, Driver::OrderFlow]
                .into_iter()
                .map(|driver| PlantedDriver {
                    driver,
                    strength: 1.0,
                    persistence: 0.9,
                })
                .collect(),
        }
    }
}

impl SynthSpec {
    pub fn session(&self) -> Result<Session> {
        Session::new(parse_clock(&self.open)?, parse_clock(&self.close)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.session()?;
        if self.symbols == 0 {
            return bad("symbol count must be positive".into());
        }
        if !(self.quote_rate > 0.0 && self.trade_rate > 0.0) {
            return bad("arrival rates must be positive".into());
        }
        if !(self.volatility >= 0.0 && self.max_excursion > 0.0 && self.max_excursion < 0.5) {
            return bad("volatility must be >= 0 and max_excursion in (0, 0.5)".into());
        }
        if !(self.tick > 0.0) || (self.tick * UNITS_PER_DOLLAR).fract() != 0.0 {
            return bad("tick must be a positive multiple of 0.0001".into());
        }
        if !(self.spread_ticks >= 0.0 && self.depth_shares >= 1.0 && self.mean_trade_size >= 1.0) {
            return bad("spread, depth and trade size parameters out of range".into());
        }
        if !(0.0..=1.0).contains(&self.at_quote_fraction) {
            return bad("at_quote_fraction must lie in [0, 1]".into());
        }
        if self.exchanges.is_empty() || self.exchanges.len() != self.routing_weights.len() {
            return bad("need one routing weight per exchange".into());
        }
        if self.routing_weights.iter().any(|w| !(*w >= 0.0))
            || (self.routing_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("routing weights must be non-negative and sum to 1".into());
        }
        if !(self.min_price > 0.0 && self.min_price <= self.max_price) {
            return bad("price range must be positive and ordered".into());
        }
        for d in &self.drivers {
            if !(d.strength >= 0.0 && (0.0..1.0).contains(&d.persistence)) {
                return bad(format!("driver {:?}: strength >= 0 and persistence in [0, 1)", d.driver));
            }
        }
        Ok(())
    }

    pub fn symbol_name(&self, i: usize) -> String {
        format!("S{i:03}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthDay {
    pub trades: Vec<TradeRecord>,
    pub quotes: Vec<QuoteRecord>,
    pub daily: Vec<DailyRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub trades: PathBuf,
    pub quotes: PathBuf,
    pub daily: PathBuf,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

fn exponential(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - uniform(rng)).ln()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, one draw per call
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

struct Latent {
    values: [f64; 4],
    params: [(f64, f64); 4],
}

impl Latent {
    fn new(spec: &SynthSpec) -> Self {
        let mut params = [(0.0, 0.0); 4];
        for d in &spec.drivers {
            params[d.driver as usize] = (d.strength, d.persistence);
        }
        Latent {
            values: [0.0; 4],
            params,
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        for (v, (_, phi)) in self.values.iter_mut().zip(self.params) {
            *v = phi * *v + (1.0 - phi * phi).sqrt() * normal(rng);
        }
    }

    fn get(&self, d: Driver) -> f64 {
        self.params[d as usize].0 * self.values[d as usize]
    }
}

#[derive(Clone, Copy)]
struct Book {
    bid: i64,
    ask: i64,
    bid_size: u64,
    ask_size: u64,
}

fn dollars(units: i64) -> f64 {
    units as f64 / UNITS_PER_DOLLAR
}

fn lots(shares: f64) -> u64 {
    ((shares / 100.0).round().max(1.0) as u64) * 100
}

struct SymbolGen<'a> {
    spec: &'a SynthSpec,
    symbol: Arc<str>,
    rng: ChaCha8Rng,
    latent: Latent,
    tick: i64,
    open_center: f64,
    center: f64,
    last_move: Timestamp,
    book: Book,
    trades: Vec<TradeRecord>,
    quotes: Vec<QuoteRecord>,
}

impl<'a> SymbolGen<'a> {
    fn new(spec: &'a SynthSpec, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        let tick = (spec.tick * UNITS_PER_DOLLAR).round() as i64;
        let start = spec.min_price + (spec.max_price - spec.min_price) * uniform(&mut rng);
        let center = (start * UNITS_PER_DOLLAR / tick as f64).round() * tick as f64;
        let latent = Latent::new(spec);
        SymbolGen {
            spec,
            symbol: Arc::from(spec.symbol_name(index)),
            rng,
            latent,
            tick,
            open_center: center,
            center,
            last_move: 0,
            book: Book {
                bid: 0,
                ask: 0,
                bid_size: 0,
                ask_size: 0,
            },
            trades: Vec::new(),
            quotes: Vec::new(),
        }
    }

    fn move_center(&mut self, t: Timestamp) {
        let dt = (t - self.last_move).max(0) as f64 / NANOS_PER_SEC as f64;
        self.last_move = t;
        let step = self.spec.volatility * dt.sqrt() * normal(&mut self.rng);
        let (lo, hi) = (
            self.open_center * (1.0 - self.spec.max_excursion),
            self.open_center * (1.0 + self.spec.max_excursion),
        );
        let mut c = self.center * (1.0 + step);
        // reflect at the band edges
        for _ in 0..4 {
            if c > hi {
                c = 2.0 * hi - c;
            } else if c < lo {
                c = 2.0 * lo - c;
            }
        }
        self.center = c.clamp(lo, hi);
    }

    fn new_book(&mut self) -> Book {
        let spread_ticks = if self.spec.spread_ticks == 0.0 {
            0
        } else {
            let noise = 0.3 * self.latent.get(Driver::Spread) + 0.25 * normal(&mut self.rng);
            (self.spec.spread_ticks * noise.exp()).round().max(1.0) as i64
        };
        let half = spread_ticks * self.tick / 2;
        let bid = ((self.center as i64 - half) / self.tick).max(1) * self.tick;
        let ask = bid + spread_ticks * self.tick;
        let depth = self.spec.depth_shares * (0.5 * self.latent.get(Driver::Depth)).exp();
        let skew = 0.4 * self.latent.get(Driver::OrderFlow);
        let bid_size = lots(depth * (skew + 0.3 * normal(&mut self.rng)).exp());
        let ask_size = lots(depth * (-skew + 0.3 * normal(&mut self.rng)).exp());
        Book {
            bid,
            ask,
            bid_size,
            ask_size,
        }
    }

    fn quote_event(&mut self, t: Timestamp) {
        self.move_center(t);
        self.book = self.new_book();
        let ex = self.spec.exchanges[pick(&mut self.rng, &self.spec.routing_weights)];
        let share = 0.3 + 0.7 * uniform(&mut self.rng);
        let b = self.book;
        self.quotes.push(QuoteRecord {
            timestamp: t,
            symbol: self.symbol.clone(),
            bid_price: dollars(b.bid),
            bid_size: lots(b.bid_size as f64 * share),
            ask_price: dollars(b.ask),
            ask_size: lots(b.ask_size as f64 * share),
            exchange: ex,
            is_nbbo: false,
        });
        self.quotes.push(QuoteRecord {
            timestamp: t + MS,
            symbol: self.symbol.clone(),
            bid_price: dollars(b.bid),
            bid_size: b.bid_size,
            ask_price: dollars(b.ask),
            ask_size: b.ask_size,
            exchange: ex,
            is_nbbo: true,
        });
    }

    fn trade_event(&mut self, t: Timestamp) {
        let b = self.book;
        let buy_p = 0.5 + 0.4 * self.latent.get(Driver::OrderFlow).tanh();
        let buy = uniform(&mut self.rng) < buy_p;
        let at_quote = uniform(&mut self.rng) < self.spec.at_quote_fraction;
        let price = if b.ask - b.bid < 2 || at_quote {
            if buy {
                b.ask
            } else {
                b.bid
            }
        } else {
            let inside = (b.ask - b.bid - 1) as f64;
            b.bid + 1 + (uniform(&mut self.rng) * inside).floor().min(inside - 1.0) as i64
        };
        let scale = (0.3 * self.latent.get(Driver::Activity)).exp();
        let size = (self.spec.mean_trade_size * scale * exponential(&mut self.rng)).round().max(1.0) as u64;
        let ex = self.spec.exchanges[pick(&mut self.rng, &self.spec.routing_weights)];
        self.trades.push(TradeRecord {
            timestamp: t,
            symbol: self.symbol.clone(),
            price: dollars(price),
            size,
            exchange: ex,
        });
    }

    fn run(mut self, session: Session) -> (Vec<TradeRecord>, Vec<QuoteRecord>, f64) {
        let seed_t = session.open - NANOS_PER_SEC;
        self.last_move = seed_t;
        self.quote_event(seed_t);
        // events sit on a 3 ms grid so the NBBO echo never collides
        let mut t = session.open;
        let mut block_end = session.open;
        while t < session.close {
            if t >= block_end {
                self.latent.step(&mut self.rng);
                block_end += DRIVER_STEP;
            }
            let activity = self.latent.get(Driver::Activity).exp();
            let (lq, lt) = (self.spec.quote_rate * activity, self.spec.trade_rate * activity);
            let gap = exponential(&mut self.rng) / (lq + lt);
            let gap_ms = (gap * 1e3).ceil().max(3.0) as i64;
            let gap_ns = (gap_ms + 2) / 3 * 3 * MS;
            t += gap_ns;
            if t >= block_end {
                // re-draw from the block boundary under the new rates
                t = block_end;
                continue;
            }
            if t + MS >= session.close {
                break;
            }
            if uniform(&mut self.rng) < lq / (lq + lt) {
                self.quote_event(t);
            } else {
                self.trade_event(t);
            }
        }
        let open = self.open_center / UNITS_PER_DOLLAR;
        (self.trades, self.quotes, open)
    }
}

fn weekdays(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Generates every symbol in memory. Trades and quotes come out grouped by
/// symbol and time-sorted, pre-open seed quotes included.
pub fn generate_day(spec: &SynthSpec) -> Result<SynthDay> {
    spec.validate()?;
    let session = spec.session()?;
    let per_symbol: Vec<_> = (0..spec.symbols)
        .into_par_iter()
        .map(|i| {
            let (trades, quotes, open) = SymbolGen::new(spec, i).run(session);
            let daily = daily_rows(spec, i, open);
            (trades, quotes, daily)
        })
        .collect();
    let mut day = SynthDay::default();
    for (t, q, d) in per_symbol {
        day.trades.extend(t);
        day.quotes.extend(q);
        day.daily.extend(d);
    }
    Ok(day)
}

fn daily_rows(spec: &SynthSpec, index: usize, open_price: f64) -> Vec<DailyRow> {
    // separate stream block so intraday draws are unaffected
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xDA11_DA11);
    rng.set_stream(index as u64);
    let session_secs = spec.session().map_or(23_400.0, |s| s.length() as f64 / NANOS_PER_SEC as f64);
    let expected_volume = spec.trade_rate * session_secs * spec.mean_trade_size;
    let symbol: Arc<str> = Arc::from(spec.symbol_name(index));
    let (start, end) = prevailing_month(spec.date);
    weekdays(start, end)
        .into_iter()
        .map(|date| {
            let volume = (expected_volume * (0.25 * normal(&mut rng)).exp()).round().max(1.0);
            let range = open_price * 0.015 * (0.3 * normal(&mut rng)).exp();
            let ask_high = ((open_price + range / 2.0) * 100.0).round() / 100.0;
            let bid_low = ((open_price - range / 2.0) * 100.0).round() / 100.0;
            DailyRow {
                symbol: symbol.clone(),
                date,
                share_volume: volume,
                ask_high,
                bid_low,
            }
        })
        .collect()
}

/// Writes `trades.csv`, `quotes.csv` and `daily.csv` into `dir`.
pub fn write_day(day: &SynthDay, dir: impl AsRef<Path>) -> Result<SynthFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SynthFiles {
        trades: dir.join("trades.csv"),
        quotes: dir.join("quotes.csv"),
        daily: dir.join("daily.csv"),
    };
    write_trades(&files.trades, &day.trades)?;
    write_quotes(&files.quotes, &day.quotes)?;
    write_daily(&files.daily, &day.daily)?;
    Ok(files)
}

pub fn generate_to_dir(spec: &SynthSpec, dir: impl AsRef<Path>) -> Result<SynthFiles> {
    write_day(&generate_day(spec)?, dir)
}

/// Columns per planted block.
pub const BLOCK_WIDTH: usize = 4;

/// Panel of `k` blocks of [`BLOCK_WIDTH`] columns whose sample correlations
/// are exactly `within` inside a block and `between` across blocks.
///
/// Columns are built as `sqrt(b) g + sqrt(w - b) f_block + sqrt(1 - w) e_col`
/// from mutually orthonormal, mean-zero vectors, so the empirical
/// correlations equal the targets up to rounding.
pub fn generate_planted_blocks(k: usize, within: f64, between: f64, length: usize, seed: u64) -> Result<MeasurePanel> {
    if k == 0 {
        return Err(Error::Infeasible("need at least one block".into()));
    }
    if !(0.0 <= between && between < within && within <= 1.0) {
        return Err(Error::Infeasible(format!(
            "need 0 <= between < within <= 1, got between {between}, within {within}"
        )));
    }
    let basis_len = 1 + k + k * BLOCK_WIDTH;
    if length < basis_len + 1 {
        return Err(Error::Infeasible(format!(
            "length {length} too short for {basis_len} independent factors"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(basis_len);
    while basis.len() < basis_len {
        let mut v: Vec<f64> = (0..length).map(|_| normal(&mut rng)).collect();
        let mean = v.iter().sum::<f64>() / length as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        // two rounds of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let (cg, cf, ce) = (between.sqrt(), (within - between).sqrt(), (1.0 - within).sqrt());
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for blk in 0..k {
        for j in 0..BLOCK_WIDTH {
            let e = &basis[1 + k + blk * BLOCK_WIDTH + j];
            let col: Vec<f64> = (0..length)
                .map(|t| cg * basis[0][t] + cf * basis[1 + blk][t] + ce * e[t])
                .collect();
            names.push(format!("block{blk}.m{j}"));
            columns.push(col);
        }
    }
    let starts = (0..length as i64).map(|i| i * 10 * NANOS_PER_SEC).collect();
    MeasurePanel::from_columns("planted", starts, names, columns)
}

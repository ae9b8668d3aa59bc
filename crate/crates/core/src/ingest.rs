//! Tick-event and reference-data types, CSV ingestion, session clipping and
//! the prevailing-month daily normalizers.
//!
//! Timestamps are integer nanoseconds since midnight of the session day. All
//! interval arithmetic downstream stays in integers.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Timestamp = i64;
pub type Symbol = Arc<str>;

pub const NANOS_PER_SEC: i64 = 1_000_000_000;

pub const TRADES_HEADER: [&str; 5] = ["timestamp_ns", "symbol", "price", "size", "exchange"];
pub const QUOTES_HEADER: [&str; 8] = [
    "timestamp_ns",
    "symbol",
    "bid_price",
    "bid_size",
    "ask_price",
    "ask_size",
    "exchange",
    "is_nbbo",
];
pub const DAILY_HEADER: [&str; 5] = ["symbol", "date", "share_volume", "ask_high", "bid_low"];

#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub timestamp: Timestamp,
    pub symbol: Symbol,
    pub price: f64,
    pub size: u64,
    pub exchange: char,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteRecord {
    pub timestamp: Timestamp,
    pub symbol: Symbol,
    pub bid_price: f64,
    pub bid_size: u64,
    pub ask_price: f64,
    pub ask_size: u64,
    pub exchange: char,
    pub is_nbbo: bool,
}

impl QuoteRecord {
    /// Bid above ask. Locked quotes (bid == ask) are not crossed.
    pub fn is_crossed(&self) -> bool {
        self.bid_price > self.ask_price
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.bid_price + self.ask_price)
    }
}

/// Prevailing-month normalizers for one symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyReference {
    pub symbol: String,
    /// Mean daily share volume.
    pub adtv: f64,
    /// Mean of daily (ask high - bid low), in dollars.
    pub adrv: f64,
    pub month_start: NaiveDate,
    pub month_end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRow {
    pub symbol: Symbol,
    pub date: NaiveDate,
    pub share_volume: f64,
    pub ask_high: f64,
    pub bid_low: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// Accepted records plus per-row rejections from one input file.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejected: Vec<RowError>,
}

impl<T> Parsed<T> {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

/// Regular trading session as a half-open range of nanoseconds since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub open: Timestamp,
    pub close: Timestamp,
}

impl Session {
    pub fn new(open: Timestamp, close: Timestamp) -> Result<Self> {
        if open >= close {
            return Err(Error::Config(format!(
                "session open {open} must precede close {close}"
            )));
        }
        Ok(Session { open, close })
    }

    /// 09:30:00 to 16:00:00.
    pub fn us_equities() -> Self {
        Session {
            open: 34_200 * NANOS_PER_SEC,
            close: 57_600 * NANOS_PER_SEC,
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.open <= t && t < self.close
    }

    pub fn length(&self) -> i64 {
        self.close - self.open
    }
}

impl Default for Session {
    fn default() -> Self {
        Session::us_equities()
    }
}

/// Parses `HH:MM:SS[.fff]` into nanoseconds since midnight.
pub fn parse_clock(s: &str) -> Result<Timestamp> {
    let bad = || Error::Config(format!("bad clock time {s:?}, expected HH:MM:SS"));
    let mut parts = s.trim().split(':');
    let h: i64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    let m: i64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    let sec = parts.next().ok_or_else(bad)?;
    if parts.next().is_some() || !(0..24).contains(&h) || !(0..60).contains(&m) {
        return Err(bad());
    }
    let (whole, frac) = sec.split_once('.').unwrap_or((sec, ""));
    let whole: i64 = whole.parse().map_err(|_| bad())?;
    if !(0..60).contains(&whole) || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let frac_ns = if frac.is_empty() {
        0
    } else {
        frac.parse::<i64>().map_err(|_| bad())? * 10i64.pow(9 - frac.len() as u32)
    };
    Ok(((h * 60 + m) * 60 + whole) * NANOS_PER_SEC + frac_ns)
}

fn open_reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = rdr.headers()?.clone();
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    // An empty file has no header row at all; treat it as an empty stream.
    let empty = found.is_empty() || (found.len() == 1 && found[0].is_empty());
    if !empty && found != expected {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(rdr)
}

#[derive(Default)]
struct Interner(HashMap<String, Symbol>);

impl Interner {
    fn get(&mut self, s: &str) -> Symbol {
        if let Some(sym) = self.0.get(s) {
            return sym.clone();
        }
        let sym: Symbol = Arc::from(s);
        self.0.insert(s.to_owned(), sym.clone());
        sym
    }
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str, String> {
    rec.get(i)
        .map(str::trim)
        .ok_or_else(|| format!("missing field {name}"))
}

fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    s.parse::<i64>()
        .map_err(|_| format!("bad timestamp {s:?}"))
}

fn parse_positive_price(s: &str, name: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad {name} {s:?}"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(format!("{name} must be positive, got {s}"));
    }
    Ok(v)
}

fn parse_size(s: &str, name: &str) -> Result<u64, String> {
    s.parse::<u64>()
        .map_err(|_| format!("bad {name} {s:?}"))
}

fn parse_exchange(s: &str) -> Result<char, String> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(format!("exchange must be a single character, got {s:?}")),
    }
}

fn parse_symbol(s: &str) -> Result<&str, String> {
    if s.is_empty() {
        Err("empty symbol".to_owned())
    } else {
        Ok(s)
    }
}

fn parse_flag(s: &str) -> Result<bool, String> {
    match s {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        _ => Err(format!("bad is_nbbo flag {s:?}")),
    }
}

/// Reads a trades CSV. Output is grouped by symbol and time-sorted within
/// each symbol; ties keep file order.
pub fn parse_trades(path: impl AsRef<Path>) -> Result<Parsed<TradeRecord>> {
    let path = path.as_ref();
    let mut rdr = open_reader(path, &TRADES_HEADER)?;
    let mut interner = Interner::default();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<TradeRecord, String> {
            let timestamp = parse_timestamp(field(&row, 0, "timestamp_ns")?)?;
            let symbol = parse_symbol(field(&row, 1, "symbol")?)?;
            let price = parse_positive_price(field(&row, 2, "price")?, "price")?;
            let size = parse_size(field(&row, 3, "size")?, "size")?;
            if size == 0 {
                return Err("size must be positive, got 0".to_owned());
            }
            let exchange = parse_exchange(field(&row, 4, "exchange")?)?;
            Ok(TradeRecord {
                timestamp,
                symbol: interner.get(symbol),
                price,
                size,
                exchange,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(message) => rejected.push(RowError { line, message }),
        }
    }
    records.sort_by(|a: &TradeRecord, b| {
        a.symbol
            .cmp(&b.symbol)
            .then(a.timestamp.cmp(&b.timestamp))
    });
    Ok(Parsed { records, rejected })
}

/// Reads a quotes CSV. Crossed quotes are accepted here; use
/// [`QuoteRecord::is_crossed`] to exclude them.
pub fn parse_quotes(path: impl AsRef<Path>) -> Result<Parsed<QuoteRecord>> {
    let path = path.as_ref();
    let mut rdr = open_reader(path, &QUOTES_HEADER)?;
    let mut interner = Interner::default();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<QuoteRecord, String> {
            Ok(QuoteRecord {
                timestamp: parse_timestamp(field(&row, 0, "timestamp_ns")?)?,
                symbol: interner.get(parse_symbol(field(&row, 1, "symbol")?)?),
                bid_price: parse_positive_price(field(&row, 2, "bid_price")?, "bid_price")?,
                bid_size: parse_size(field(&row, 3, "bid_size")?, "bid_size")?,
                ask_price: parse_positive_price(field(&row, 4, "ask_price")?, "ask_price")?,
                ask_size: parse_size(field(&row, 5, "ask_size")?, "ask_size")?,
                exchange: parse_exchange(field(&row, 6, "exchange")?)?,
                is_nbbo: parse_flag(field(&row, 7, "is_nbbo")?)?,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(message) => rejected.push(RowError { line, message }),
        }
    }
    records.sort_by(|a: &QuoteRecord, b| {
        a.symbol
            .cmp(&b.symbol)
            .then(a.timestamp.cmp(&b.timestamp))
    });
    Ok(Parsed { records, rejected })
}

/// Reads a daily reference CSV. Rows with `ask_high < bid_low` are rejected.
pub fn parse_daily(path: impl AsRef<Path>) -> Result<Parsed<DailyRow>> {
    let path = path.as_ref();
    let mut rdr = open_reader(path, &DAILY_HEADER)?;
    let mut interner = Interner::default();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<DailyRow, String> {
            let symbol = interner.get(parse_symbol(field(&row, 0, "symbol")?)?);
            let date_s = field(&row, 1, "date")?;
            let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
                .map_err(|_| format!("bad date {date_s:?}"))?;
            let vol_s = field(&row, 2, "share_volume")?;
            let share_volume: f64 = vol_s
                .parse()
                .map_err(|_| format!("bad share_volume {vol_s:?}"))?;
            if !share_volume.is_finite() || share_volume < 0.0 {
                return Err(format!("share_volume must be non-negative, got {vol_s}"));
            }
            let ask_high = parse_positive_price(field(&row, 3, "ask_high")?, "ask_high")?;
            let bid_low = parse_positive_price(field(&row, 4, "bid_low")?, "bid_low")?;
            if ask_high < bid_low {
                return Err(format!("ask_high {ask_high} below bid_low {bid_low}"));
            }
            Ok(DailyRow {
                symbol,
                date,
                share_volume,
                ask_high,
                bid_low,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(message) => rejected.push(RowError { line, message }),
        }
    }
    Ok(Parsed { records, rejected })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_trades(path: impl AsRef<Path>, trades: &[TradeRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", TRADES_HEADER.join(",")).map_err(io)?;
    for t in trades {
        writeln!(
            w,
            "{},{},{},{},{}",
            t.timestamp, t.symbol, t.price, t.size, t.exchange
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_quotes(path: impl AsRef<Path>, quotes: &[QuoteRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", QUOTES_HEADER.join(",")).map_err(io)?;
    for q in quotes {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            q.timestamp,
            q.symbol,
            q.bid_price,
            q.bid_size,
            q.ask_price,
            q.ask_size,
            q.exchange,
            u8::from(q.is_nbbo)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_daily(path: impl AsRef<Path>, rows: &[DailyRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", DAILY_HEADER.join(",")).map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.symbol,
            r.date.format("%Y-%m-%d"),
            r.share_volume,
            r.ask_high,
            r.bid_low
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// The month of daily data preceding `day`: from one month and one day
/// before it through the day before it, inclusive. For 2018-04-03 this is
/// 2018-03-02 ..= 2018-04-02.
pub fn prevailing_month(day: NaiveDate) -> (NaiveDate, NaiveDate) {
    let end = day.pred_opt().expect("date underflow");
    let start = day
        .checked_sub_months(Months::new(1))
        .and_then(|d| d.pred_opt())
        .expect("date underflow");
    (start, end)
}

/// Means of daily share volume and daily (ask high - bid low) over the rows
/// of one symbol falling inside `window` (inclusive). `None` uses every row.
pub fn compute_daily_reference(
    rows: &[DailyRow],
    window: Option<(NaiveDate, NaiveDate)>,
) -> Result<DailyReference> {
    let mut n = 0usize;
    let mut volume = 0.0;
    let mut range = 0.0;
    let mut first: Option<NaiveDate> = None;
    let mut last: Option<NaiveDate> = None;
    let mut symbol = String::new();
    for row in rows {
        if let Some((lo, hi)) = window {
            if row.date < lo || row.date > hi {
                continue;
            }
        }
        if row.ask_high < row.bid_low {
            log::warn!(
                "{} {}: ask_high below bid_low, row ignored",
                row.symbol,
                row.date
            );
            continue;
        }
        if symbol.is_empty() {
            symbol = row.symbol.to_string();
        } else if symbol != *row.symbol {
            return Err(Error::Data(format!(
                "daily rows mix symbols {symbol} and {}",
                row.symbol
            )));
        }
        n += 1;
        volume += row.share_volume;
        range += row.ask_high - row.bid_low;
        first = Some(first.map_or(row.date, |d| d.min(row.date)));
        last = Some(last.map_or(row.date, |d| d.max(row.date)));
    }
    if n == 0 {
        return Err(Error::NoReferenceDays);
    }
    let adtv = volume / n as f64;
    let adrv = range / n as f64;
    if adtv <= 0.0 || adrv <= 0.0 {
        return Err(Error::Data(format!(
            "{symbol}: non-positive normalizer (adtv {adtv}, adrv {adrv})"
        )));
    }
    let (month_start, month_end) = match window {
        Some(w) => w,
        None => (first.unwrap(), last.unwrap()),
    };
    Ok(DailyReference {
        symbol,
        adtv,
        adrv,
        month_start,
        month_end,
    })
}

/// Groups daily rows by symbol and computes each symbol's reference.
pub fn daily_references(
    rows: &[DailyRow],
    window: Option<(NaiveDate, NaiveDate)>,
) -> BTreeMap<String, Result<DailyReference>> {
    let mut groups: BTreeMap<String, Vec<DailyRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(row.symbol.to_string())
            .or_default()
            .push(row.clone());
    }
    groups
        .into_iter()
        .map(|(sym, rows)| {
            let r = compute_daily_reference(&rows, window);
            (sym, r)
        })
        .collect()
}

/// Trades inside `[open, close)`.
pub fn session_clip_trades(trades: &[TradeRecord], session: Session) -> Vec<TradeRecord> {
    trades
        .iter()
        .filter(|t| session.contains(t.timestamp))
        .cloned()
        .collect()
}

/// In-session quotes plus, for each (symbol, exchange, nbbo flag) stream,
/// the last quote before the open as the opening prevailing state.
#[derive(Debug, Clone, Default)]
pub struct ClippedQuotes {
    pub seeds: Vec<QuoteRecord>,
    pub records: Vec<QuoteRecord>,
}

impl ClippedQuotes {
    /// Seeds followed by in-session records, grouped by symbol and in time
    /// order.
    pub fn into_stream(self) -> Vec<QuoteRecord> {
        let mut all = self.seeds;
        all.extend(self.records);
        all.sort_by(|a, b| a.symbol.cmp(&b.symbol).then(a.timestamp.cmp(&b.timestamp)));
        all
    }
}

pub fn session_clip_quotes(quotes: &[QuoteRecord], session: Session) -> ClippedQuotes {
    let mut seeds: BTreeMap<(Symbol, char, bool), &QuoteRecord> = BTreeMap::new();
    let mut records = Vec::new();
    for q in quotes {
        if q.timestamp < session.open {
            if q.is_crossed() {
                // a crossed quote cannot be the opening state
                continue;
            }
            let key = (q.symbol.clone(), q.exchange, q.is_nbbo);
            match seeds.get(&key) {
                Some(prev) if prev.timestamp > q.timestamp => {}
                _ => {
                    seeds.insert(key, q);
                }
            }
        } else if q.timestamp < session.close {
            records.push(q.clone());
        }
    }
    let mut seeds: Vec<QuoteRecord> = seeds.into_values().cloned().collect();
    seeds.sort_by(|a, b| a.symbol.cmp(&b.symbol).then(a.timestamp.cmp(&b.timestamp)));
    ClippedQuotes { seeds, records }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn daily(sym: &str, d: &str, vol: f64, hi: f64, lo: f64) -> DailyRow {
        DailyRow {
            symbol: Arc::from(sym),
            date: date(d),
            share_volume: vol,
            ask_high: hi,
            bid_low: lo,
        }
    }

    #[test]
    fn three_well_formed_trades() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            &dir,
            "t.csv",
            "timestamp_ns,symbol,price,size,exchange\n\
             300,AAA,10.01,100,N\n100,AAA,10.00,200,P\n200,AAA,10.02,300,Q\n",
        );
        let parsed = parse_trades(&p).unwrap();
        assert_eq!(parsed.rejected_count(), 0);
        let ts: Vec<_> = parsed.records.iter().map(|t| t.timestamp).collect();
        assert_eq!(ts, vec![100, 200, 300]);
    }

    #[test]
    fn zero_price_is_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            &dir,
            "t.csv",
            "timestamp_ns,symbol,price,size,exchange\n1,AAA,0,100,N\n2,AAA,10,100,N\n3,AAA,10,0,N\n",
        );
        let parsed = parse_trades(&p).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.rejected_count(), 2);
        assert_eq!(parsed.rejected[0].line, 2);
        assert_eq!(parsed.rejected[1].line, 4);
    }

    #[test]
    fn bad_header_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "t.csv", "ts,symbol,price,size,exchange\n");
        assert!(matches!(parse_trades(&p), Err(Error::Header { .. })));
        assert!(matches!(
            parse_trades(dir.path().join("nope.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn interleaved_symbols_are_grouped_and_sorted_stably() {
        let dir = tempfile::tempdir().unwrap();
        let body = "timestamp_ns,symbol,price,size,exchange\n\
                    5,BBB,1,1,N\n3,AAA,1,1,N\n5,AAA,2,1,N\n1,BBB,1,1,N\n5,AAA,3,1,N\n2,AAA,1,1,N\n";
        let p = write_file(&dir, "t.csv", body);
        let parsed = parse_trades(&p).unwrap();
        // reference sort of the same rows
        let mut rows: Vec<(usize, &str, i64, f64)> = body
            .lines()
            .skip(1)
            .enumerate()
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                (i, f[1], f[0].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect();
        rows.sort_by(|a, b| (a.1, a.2, a.0).cmp(&(b.1, b.2, b.0)).then(std::cmp::Ordering::Equal));
        let got: Vec<(&str, i64, f64)> = parsed
            .records
            .iter()
            .map(|t| (&*t.symbol, t.timestamp, t.price))
            .collect();
        let want: Vec<(&str, i64, f64)> = rows.iter().map(|r| (r.1, r.2, r.3)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn quotes_crossed_flag_and_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            &dir,
            "q.csv",
            "timestamp_ns,symbol,bid_price,bid_size,ask_price,ask_size,exchange,is_nbbo\n\
             1,AAA,10.00,100,10.05,100,N,1\n2,AAA,10.06,100,10.05,100,N,1\n3,AAA,10.05,100,10.05,100,N,0\n",
        );
        let parsed = parse_quotes(&p).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert!(!parsed.records[0].is_crossed());
        assert!(parsed.records[1].is_crossed());
        assert!(!parsed.records[2].is_crossed(), "locked is not crossed");

        let empty = write_file(&dir, "e.csv", "");
        let parsed = parse_quotes(&empty).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.rejected_count(), 0);
    }

    #[test]
    fn daily_reference_means() {
        let one = [daily("A", "2018-03-05", 1e6, 102.0, 100.0)];
        let r = compute_daily_reference(&one, None).unwrap();
        assert_eq!(r.adtv, 1e6);
        assert_eq!(r.adrv, 2.0);

        let two = [
            daily("A", "2018-03-05", 1e6, 102.0, 100.0),
            daily("A", "2018-03-06", 3e6, 102.0, 100.0),
        ];
        assert_eq!(compute_daily_reference(&two, None).unwrap().adtv, 2e6);
    }

    #[test]
    fn daily_reference_matches_naive_mean_over_21_days() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let start = date("2018-03-01");
        let rows: Vec<DailyRow> = (0..21)
            .map(|i| {
                let lo = rng.random_range(50.0..60.0);
                daily(
                    "A",
                    &(start + chrono::Days::new(i)).format("%Y-%m-%d").to_string(),
                    rng.random_range(1e5..1e7),
                    lo + rng.random_range(0.1..3.0),
                    lo,
                )
            })
            .collect();
        let r = compute_daily_reference(&rows, None).unwrap();
        // separate naive pass
        let mut vols = Vec::new();
        let mut ranges = Vec::new();
        for row in &rows {
            vols.push(row.share_volume);
            ranges.push(row.ask_high - row.bid_low);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((r.adtv - mean(&vols)).abs() <= 1e-9 * r.adtv);
        assert!((r.adrv - mean(&ranges)).abs() <= 1e-12 * r.adrv.max(1.0));
    }

    #[test]
    fn daily_reference_window_and_errors() {
        let rows = [
            daily("A", "2018-03-01", 5e6, 10.0, 9.0),
            daily("A", "2018-03-02", 1e6, 10.0, 9.0),
            daily("A", "2018-04-02", 3e6, 10.0, 8.0),
            daily("A", "2018-04-03", 9e6, 10.0, 9.0),
        ];
        let window = prevailing_month(date("2018-04-03"));
        assert_eq!(window, (date("2018-03-02"), date("2018-04-02")));
        let r = compute_daily_reference(&rows, Some(window)).unwrap();
        assert_eq!(r.adtv, 2e6);
        assert_eq!(r.adrv, 1.5);
        assert!(r.month_end < date("2018-04-03"));

        let outside = Some((date("2019-01-01"), date("2019-01-31")));
        assert!(matches!(
            compute_daily_reference(&rows, outside),
            Err(Error::NoReferenceDays)
        ));
        let inverted = [daily("A", "2018-03-05", 1e6, 9.0, 10.0)];
        assert!(matches!(
            compute_daily_reference(&inverted, None),
            Err(Error::NoReferenceDays)
        ));
    }

    fn quote(ts: i64, ex: char) -> QuoteRecord {
        QuoteRecord {
            timestamp: ts,
            symbol: Arc::from("AAA"),
            bid_price: 10.0,
            bid_size: 100,
            ask_price: 10.05,
            ask_size: 100,
            exchange: ex,
            is_nbbo: true,
        }
    }

    fn trade(ts: i64) -> TradeRecord {
        TradeRecord {
            timestamp: ts,
            symbol: Arc::from("AAA"),
            price: 10.0,
            size: 100,
            exchange: 'N',
        }
    }

    #[test]
    fn pre_open_quote_becomes_seed() {
        let s = Session::us_equities();
        let pre = parse_clock("09:29:59").unwrap();
        let earlier = parse_clock("09:00:00").unwrap();
        let inside = parse_clock("09:30:01").unwrap();
        let clipped =
            session_clip_quotes(&[quote(earlier, 'N'), quote(pre, 'N'), quote(inside, 'N')], s);
        assert_eq!(clipped.seeds.len(), 1);
        assert_eq!(clipped.seeds[0].timestamp, pre);
        assert_eq!(clipped.records.len(), 1);
        assert_eq!(clipped.records[0].timestamp, inside);
    }

    #[test]
    fn crossed_pre_open_quote_is_not_a_seed() {
        let s = Session::us_equities();
        let earlier = parse_clock("09:00:00").unwrap();
        let mut crossed = quote(parse_clock("09:29:59").unwrap(), 'N');
        crossed.bid_price = 10.10;
        let clipped = session_clip_quotes(&[quote(earlier, 'N'), crossed], s);
        assert_eq!(clipped.seeds.len(), 1);
        assert_eq!(clipped.seeds[0].timestamp, earlier);
    }

    #[test]
    fn close_is_exclusive_and_in_session_is_identity() {
        let s = Session::us_equities();
        let close = parse_clock("16:00:00.000").unwrap();
        assert!(session_clip_trades(&[trade(close)], s).is_empty());
        let inside: Vec<_> = [s.open, s.open + 5, close - 1]
            .iter()
            .map(|&t| trade(t))
            .collect();
        assert_eq!(session_clip_trades(&inside, s), inside);
    }

    #[test]
    fn clock_parsing() {
        assert_eq!(parse_clock("09:30:00").unwrap(), 34_200 * NANOS_PER_SEC);
        assert_eq!(parse_clock("00:00:01.5").unwrap(), 1_500_000_000);
        assert!(parse_clock("24:00:00").is_err());
        assert!(parse_clock("9:30").is_err());
    }
}

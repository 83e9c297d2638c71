//! Trade file parsing, order-id to trader-id mapping, and stock/time windowing.
//!
//! Input files are header-first CSV. Column names default to
//! `buyer_id,seller_id,stock_id,timestamp,price,volume` and can be remapped
//! through [`Schema`]. Row-level problems never abort a parse: they are
//! collected as [`RowError`]s carrying the offending line number.

use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};

use crate::error::{Error, Result, RowError};

pub const ORDER_ID_LEN: usize = 17;
pub const TRADER_PREFIX_LEN: usize = 6;

const SECONDS_PER_DAY: i64 = 86_400;

/// One executed trade. `timestamp` is UTC epoch seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub buyer_id: String,
    pub seller_id: String,
    pub stock_id: String,
    pub timestamp: i64,
    pub price: f64,
    pub volume: u64,
}

/// How raw buyer/seller column values become trader identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdMapping {
    /// Column values are trader identifiers already.
    #[default]
    Identity,
    /// Column values are 17-digit order ids; the trader is the 6-digit prefix.
    OrderIdPrefix,
}

/// Column-name mapping for the five required fields plus the stock column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub buyer_id: String,
    pub seller_id: String,
    pub stock_id: String,
    pub timestamp: String,
    pub price: String,
    pub volume: String,
    pub id_mapping: IdMapping,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            buyer_id: "buyer_id".into(),
            seller_id: "seller_id".into(),
            stock_id: "stock_id".into(),
            timestamp: "timestamp".into(),
            price: "price".into(),
            volume: "volume".into(),
            id_mapping: IdMapping::Identity,
        }
    }
}

impl Schema {
    /// Applies `field=column` overrides, e.g. `"price=px,volume=qty"`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, column) =
                part.split_once('=').ok_or_else(|| Error::Schema(format!("expected field=column, got {part:?}")))?;
            let column = column.trim().to_string();
            match field.trim() {
                "buyer_id" => self.buyer_id = column,
                "seller_id" => self.seller_id = column,
                "stock_id" => self.stock_id = column,
                "timestamp" => self.timestamp = column,
                "price" => self.price = column,
                "volume" => self.volume = column,
                other => return Err(Error::Schema(format!("unknown field {other:?}"))),
            }
        }
        Ok(self)
    }

    fn columns(&self) -> [(&'static str, &str); 6] {
        [
            ("buyer_id", &self.buyer_id),
            ("seller_id", &self.seller_id),
            ("stock_id", &self.stock_id),
            ("timestamp", &self.timestamp),
            ("price", &self.price),
            ("volume", &self.volume),
        ]
    }
}

/// Result of parsing a trade file: good records in file order plus row errors.
#[derive(Debug, Default)]
pub struct ParsedTrades {
    pub records: Vec<TradeRecord>,
    pub errors: Vec<RowError>,
    /// Number of data rows seen, good or bad.
    pub rows: u64,
}

/// The stock and half-open time interval `[start, start + duration)` to analyze.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub stock_id: String,
    pub start: i64,
    duration_secs: i64,
}

impl WindowSpec {
    pub fn new(stock_id: impl Into<String>, start: i64, duration_secs: i64) -> Result<Self> {
        if duration_secs <= 0 {
            return Err(Error::Parameter(format!("window duration must be positive, got {duration_secs}s")));
        }
        Ok(WindowSpec { stock_id: stock_id.into(), start, duration_secs })
    }

    pub fn from_days(stock_id: impl Into<String>, start: i64, days: f64) -> Result<Self> {
        if !days.is_finite() || days <= 0.0 {
            return Err(Error::Parameter(format!("window length must be positive, got {days} days")));
        }
        Self::new(stock_id, start, (days * SECONDS_PER_DAY as f64).round() as i64)
    }

    pub fn duration_secs(&self) -> i64 {
        self.duration_secs
    }

    pub fn end(&self) -> i64 {
        self.start.saturating_add(self.duration_secs)
    }

    pub fn contains(&self, trade: &TradeRecord) -> bool {
        trade.stock_id == self.stock_id && trade.timestamp >= self.start && trade.timestamp < self.end()
    }
}

/// Maps a 17-digit exchange order id to its trader: the first six digits.
pub fn trader_id_from_order_id(order_id: &str) -> Result<String> {
    if order_id.len() != ORDER_ID_LEN || !order_id.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::OrderIdFormat(order_id.to_string()));
    }
    Ok(order_id[..TRADER_PREFIX_LEN].to_string())
}

/// Parses an ISO-8601 instant or integer epoch seconds into epoch seconds.
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    // Offset-less forms are taken as UTC.
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(naive.and_utc().timestamp());
        }
    }
    if let Ok(date) = chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return date.and_hms_opt(0, 0, 0).map(|d| d.and_utc().timestamp());
    }
    None
}

pub fn format_timestamp(secs: i64) -> String {
    match DateTime::<Utc>::from_timestamp(secs, 0) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        None => secs.to_string(),
    }
}

/// Parses a header-first CSV trade stream.
///
/// A missing column is fatal. Everything else is a per-row error and the
/// remaining rows are still parsed.
pub fn parse_trades<R: Read>(reader: R, schema: &Schema) -> Result<ParsedTrades> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut idx = [0usize; 6];
    for (slot, (field, column)) in idx.iter_mut().zip(schema.columns()) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| Error::Schema(format!("missing column {column:?} for field {field}")))?;
    }
    let [buyer_ix, seller_ix, stock_ix, ts_ix, price_ix, vol_ix] = idx;

    let mut out = ParsedTrades::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                out.rows += 1;
                out.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        }
        out.rows += 1;
        let line = record.position().map_or(line, |p| p.line());
        let field = |i: usize| record.get(i).map(str::trim);
        let row = (|| -> std::result::Result<TradeRecord, String> {
            let get = |i: usize, name: &str| field(i).ok_or_else(|| format!("missing value for {name}"));
            let map_id = |raw: &str| match schema.id_mapping {
                IdMapping::Identity if raw.is_empty() => Err("empty trader id".to_string()),
                IdMapping::Identity => Ok(raw.to_string()),
                IdMapping::OrderIdPrefix => trader_id_from_order_id(raw).map_err(|e| e.to_string()),
            };
            let buyer_id = map_id(get(buyer_ix, "buyer_id")?)?;
            let seller_id = map_id(get(seller_ix, "seller_id")?)?;
            let stock_id = get(stock_ix, "stock_id")?.to_string();
            let ts_raw = get(ts_ix, "timestamp")?;
            let timestamp = parse_timestamp(ts_raw).ok_or_else(|| format!("bad timestamp {ts_raw:?}"))?;
            let price_raw = get(price_ix, "price")?;
            let price: f64 = price_raw.parse().map_err(|_| format!("non-numeric price {price_raw:?}"))?;
            if !price.is_finite() || price <= 0.0 {
                return Err(format!("price must be positive, got {price_raw}"));
            }
            let vol_raw = get(vol_ix, "volume")?;
            let volume: u64 = vol_raw.parse().map_err(|_| format!("non-numeric volume {vol_raw:?}"))?;
            if volume < 1 {
                return Err(format!("volume must be at least 1, got {volume}"));
            }
            if buyer_id == seller_id {
                return Err(format!("self-trade by trader {buyer_id:?}"));
            }
            Ok(TradeRecord { buyer_id, seller_id, stock_id, timestamp, price, volume })
        })();
        match row {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

/// Writes records with the default header. Inverse of [`parse_trades`] with
/// the default schema.
pub fn write_trades<W: Write>(writer: W, records: &[TradeRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["buyer_id", "seller_id", "stock_id", "timestamp", "price", "volume"])?;
    for r in records {
        wtr.write_record([
            r.buyer_id.as_str(),
            r.seller_id.as_str(),
            r.stock_id.as_str(),
            &format_timestamp(r.timestamp),
            &r.price.to_string(),
            &r.volume.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Trades of the window's stock with `start <= timestamp < start + duration`,
/// in input order.
pub fn filter_window(trades: &[TradeRecord], window: &WindowSpec) -> Vec<TradeRecord> {
    trades.iter().filter(|t| window.contains(t)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "buyer_id,seller_id,stock_id,timestamp,price,volume\n";

    fn parse(body: &str) -> ParsedTrades {
        parse_trades(format!("{HEADER}{body}").as_bytes(), &Schema::default()).unwrap()
    }

    fn trade(stock: &str, ts: i64) -> TradeRecord {
        TradeRecord {
            buyer_id: "B".into(),
            seller_id: "S".into(),
            stock_id: stock.into(),
            timestamp: ts,
            price: 1.0,
            volume: 1,
        }
    }

    #[test]
    fn one_valid_row() {
        let p = parse("B1,S1,XYZ,2011-03-01T10:00:00Z,10.0,5\n");
        assert!(p.errors.is_empty());
        assert_eq!(
            p.records,
            vec![TradeRecord {
                buyer_id: "B1".into(),
                seller_id: "S1".into(),
                stock_id: "XYZ".into(),
                timestamp: 1_298_973_600,
                price: 10.0,
                volume: 5,
            }]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let p = parse("");
        assert!(p.records.is_empty());
        assert!(p.errors.is_empty());
        assert_eq!(p.rows, 0);
    }

    #[test]
    fn zero_volume_reports_line_and_continues() {
        let p = parse("A,B,XYZ,100,1.0,0\nA,B,XYZ,101,2.0,3\n");
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.errors.len(), 1);
        assert_eq!(p.errors[0].line, 2);
        assert!(p.errors[0].message.contains("volume"));
    }

    #[test]
    fn bad_price_and_self_trade_are_row_errors() {
        let p = parse("A,B,XYZ,100,abc,1\nA,B,XYZ,100,0,1\nA,A,XYZ,100,1.0,1\nA,B,XYZ,100,1.0,x\n");
        assert!(p.records.is_empty());
        let lines: Vec<u64> = p.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = parse_trades("buyer_id,seller_id,stock_id,timestamp,price\n".as_bytes(), &Schema::default());
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn remapped_columns_and_order_ids() {
        let schema = Schema { id_mapping: IdMapping::OrderIdPrefix, ..Schema::default() }
            .with_overrides("buyer_id=buy_order,seller_id=sell_order,volume=qty")
            .unwrap();
        let input = "qty,buy_order,sell_order,stock_id,timestamp,price\n\
                     7,12345678901234567,65432178901234567,XYZ,1000,3.5\n\
                     7,12345678901234567,12345699999999999,XYZ,1000,3.5\n";
        let p = parse_trades(input.as_bytes(), &schema).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].buyer_id, "123456");
        assert_eq!(p.records[0].seller_id, "654321");
        // both orders map to trader 123456
        assert!(p.errors[0].message.contains("self-trade"));
    }

    #[test]
    fn order_id_prefix() {
        assert_eq!(trader_id_from_order_id("12345678901234567").unwrap(), "123456");
        assert_eq!(trader_id_from_order_id("00000100000000000").unwrap(), "000001");
        assert!(trader_id_from_order_id("1234567").is_err());
        assert!(trader_id_from_order_id("1234567890123456a").is_err());
        assert!(trader_id_from_order_id("123456789012345678").is_err());
    }

    #[test]
    fn timestamps_iso_and_epoch() {
        assert_eq!(parse_timestamp("0"), Some(0));
        assert_eq!(parse_timestamp("1970-01-02T00:00:00Z"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-01T01:00:00+01:00"), Some(0));
        assert_eq!(parse_timestamp("1970-01-01 00:01:00"), Some(60));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn window_covering_all() {
        let trades = vec![trade("XYZ", 0), trade("XYZ", 10), trade("XYZ", 20)];
        let w = WindowSpec::new("XYZ", 0, 100).unwrap();
        assert_eq!(filter_window(&trades, &w), trades);
    }

    #[test]
    fn window_end_is_exclusive() {
        let trades = vec![trade("XYZ", 0), trade("XYZ", 100)];
        let w = WindowSpec::new("XYZ", 0, 100).unwrap();
        assert_eq!(filter_window(&trades, &w), vec![trade("XYZ", 0)]);
    }

    #[test]
    fn window_selects_stock() {
        let trades = vec![trade("XYZ", 1), trade("ABC", 1), trade("XYZ", 2)];
        let w = WindowSpec::new("XYZ", 0, 100).unwrap();
        assert_eq!(filter_window(&trades, &w), vec![trade("XYZ", 1), trade("XYZ", 2)]);
    }

    #[test]
    fn window_rejects_nonpositive_duration() {
        assert!(WindowSpec::new("XYZ", 0, 0).is_err());
        assert!(WindowSpec::from_days("XYZ", 0, -1.0).is_err());
        assert_eq!(WindowSpec::from_days("XYZ", 0, 2.0).unwrap().duration_secs(), 172_800);
    }
}

//! File formats: prices CSV, metadata JSON and the versioned JSON artifacts
//! passed between pipeline stages.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backtest::PortfolioEntry;
use crate::error::{Error, Result};
use crate::granger::{GrangerResult, RankedCandidates};
use crate::semantic::{EventMetadata, MetadataMap, ScoringFailure};
use crate::ts::PriceSeries;
use crate::SCHEMA_VERSION;

const PRICE_COLUMNS: [&str; 3] = ["market_id", "date", "yes_price"];

/// Reads a `market_id,date,yes_price` CSV into one series per market, sorted by id.
/// Errors carry the 1-based line number of the offending row.
pub fn read_prices<R: Read>(reader: R) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| schema_error(1, e.to_string()))?.clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(PRICE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_error(1, format!("missing column `{name}`")))?;
    }

    let mut rows: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(idx[i]).unwrap_or_default();
        let market_id = field(0);
        if market_id.is_empty() {
            return Err(schema_error(line, "empty market_id".into()));
        }
        let date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
            .map_err(|e| schema_error(line, format!("bad date {:?}: {e}", field(1))))?;
        let price: f64 = field(2)
            .parse()
            .map_err(|_| schema_error(line, format!("bad yes_price {:?}", field(2))))?;
        if !(0.0..=100.0).contains(&price) {
            return Err(Error::RangeError {
                line,
                message: format!("yes_price {price} outside [0, 100]"),
            });
        }
        match rows.entry(market_id.to_string()).or_default().entry(date) {
            Entry::Occupied(_) => {
                return Err(Error::DuplicateRow {
                    line,
                    key: format!("{market_id},{date}"),
                })
            }
            Entry::Vacant(v) => {
                v.insert(price);
            }
        }
    }
    rows.into_iter()
        .map(|(id, obs)| {
            let (dates, prices) = obs.into_iter().unzip();
            PriceSeries::new(id, dates, prices)
        })
        .collect()
}

pub fn load_prices(path: &Path) -> Result<Vec<PriceSeries>> {
    read_prices(std::fs::File::open(path)?)
}

pub fn write_prices<W: Write>(prices: &[PriceSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PRICE_COLUMNS)?;
    for s in prices {
        for (d, p) in s.dates().iter().zip(s.prices()) {
            w.write_record([s.market_id(), &d.to_string(), &p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_prices(prices: &[PriceSeries], path: &Path) -> Result<()> {
    write_prices(prices, std::fs::File::create(path)?)
}

/// Parses a JSON array of metadata records. A duplicate `market_id` is
/// reported with the 1-based index of the second record in `line`.
pub fn parse_metadata(text: &str) -> Result<MetadataMap> {
    let records: Vec<EventMetadata> = serde_json::from_str(text).map_err(|e| schema_error(e.line() as u64, e.to_string()))?;
    let mut map = MetadataMap::new();
    for (i, rec) in records.into_iter().enumerate() {
        match map.entry(rec.market_id.clone()) {
            Entry::Occupied(_) => {
                return Err(Error::DuplicateRow {
                    line: i as u64 + 1,
                    key: rec.market_id,
                })
            }
            Entry::Vacant(v) => {
                v.insert(rec);
            }
        }
    }
    Ok(map)
}

pub fn load_metadata(path: &Path) -> Result<MetadataMap> {
    parse_metadata(&std::fs::read_to_string(path)?)
}

pub fn save_metadata(metadata: &MetadataMap, path: &Path) -> Result<()> {
    let records: Vec<&EventMetadata> = metadata.values().collect();
    write_json(path, &records)
}

fn schema_error(line: u64, message: String) -> Error {
    Error::SchemaError { line, message }
}

/// Output of `screen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesFile {
    pub schema_version: u32,
    pub window_id: Option<usize>,
    pub candidates: Vec<GrangerResult>,
}

impl From<RankedCandidates> for CandidatesFile {
    fn from(r: RankedCandidates) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            window_id: r.window_id,
            candidates: r.candidates,
        }
    }
}

impl From<CandidatesFile> for RankedCandidates {
    fn from(f: CandidatesFile) -> Self {
        Self {
            window_id: f.window_id,
            candidates: f.candidates,
        }
    }
}

/// Output of `rerank`, input of `backtest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioFile {
    pub schema_version: u32,
    pub window_id: Option<usize>,
    pub entries: Vec<PortfolioEntry>,
    #[serde(default)]
    pub scoring_failures: Vec<ScoringFailure>,
}

/// Artifacts that carry a `schema_version` field.
pub trait Versioned {
    fn schema_version(&self) -> u32;
}

impl Versioned for CandidatesFile {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl Versioned for PortfolioFile {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

/// Reads a versioned artifact, rejecting other schema versions.
pub fn read_artifact<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T> {
    let value: T = read_json(path)?;
    if value.schema_version() != SCHEMA_VERSION {
        return Err(schema_error(
            1,
            format!(
                "{} has schema_version {}, expected {SCHEMA_VERSION}",
                path.display(),
                value.schema_version()
            ),
        ));
    }
    Ok(value)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_error(e.line() as u64, format!("{}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices(text: &str) -> Result<Vec<PriceSeries>> {
        read_prices(text.as_bytes())
    }

    #[test]
    fn golden_three_rows() {
        let u = prices("market_id,date,yes_price\nA,2024-01-02,41.5\nA,2024-01-01,40\nA,2024-01-03,42\n").unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].prices(), [40.0, 41.5, 42.0]);
        assert_eq!(u[0].first_date(), NaiveDate::from_ymd_opt(2024, 1, 1));
    }

    #[test]
    fn column_order_is_free_and_output_round_trips() {
        let u = prices("date,yes_price,market_id\n2024-01-01,10,B\n2024-01-01,20,A\n").unwrap();
        assert_eq!(u.iter().map(|s| s.market_id()).collect::<Vec<_>>(), ["A", "B"]);
        let mut buf = Vec::new();
        write_prices(&u, &mut buf).unwrap();
        assert_eq!(prices(std::str::from_utf8(&buf).unwrap()).unwrap(), u);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            prices("market_id,date,price\nA,2024-01-01,1\n"),
            Err(Error::SchemaError { line: 1, .. })
        ));
        assert!(matches!(
            prices("market_id,date,yes_price\nA,2024-01-01,1\nA,2024-01-01,2\n"),
            Err(Error::DuplicateRow { line: 3, .. })
        ));
        assert!(matches!(
            prices("market_id,date,yes_price\nA,2024-01-01,1\nA,2024-01-02,100.5\n"),
            Err(Error::RangeError { line: 3, .. })
        ));
        assert!(matches!(
            prices("market_id,date,yes_price\nA,01/02/2024,1\n"),
            Err(Error::SchemaError { line: 2, .. })
        ));
        assert!(matches!(
            prices("market_id,date,yes_price\nA,2024-01-01,abc\n"),
            Err(Error::SchemaError { line: 2, .. })
        ));
        assert!(matches!(
            prices("market_id,date,yes_price\nA,2024-01-01\n"),
            Err(Error::SchemaError { line: 2, .. })
        ));
    }

    #[test]
    fn metadata_parsing() {
        let ok = r#"[
          {"market_id": "a", "title": "A", "description": "d", "event_group": "g"},
          {"market_id": "b", "title": "B", "description": "d", "event_group": "g"}
        ]"#;
        assert_eq!(parse_metadata(ok).unwrap().len(), 2);
        let missing = r#"[
          {"market_id": "a", "title": "A", "description": "d"}
        ]"#;
        assert!(matches!(parse_metadata(missing), Err(Error::SchemaError { line: 2, .. })));
        let dup = r#"[
          {"market_id": "a", "title": "A", "description": "d", "event_group": "g"},
          {"market_id": "a", "title": "B", "description": "d", "event_group": "g"}
        ]"#;
        assert!(matches!(parse_metadata(dup), Err(Error::DuplicateRow { line: 2, .. })));
    }

    #[test]
    fn artifacts_check_schema_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let mut file = PortfolioFile {
            schema_version: SCHEMA_VERSION,
            window_id: Some(3),
            entries: vec![],
            scoring_failures: vec![],
        };
        write_json(&path, &file).unwrap();
        assert_eq!(read_artifact::<PortfolioFile>(&path).unwrap(), file);
        file.schema_version = 99;
        write_json(&path, &file).unwrap();
        assert!(matches!(read_artifact::<PortfolioFile>(&path), Err(Error::SchemaError { .. })));
    }
}

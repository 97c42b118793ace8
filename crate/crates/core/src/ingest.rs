//! Record parsing and the account/content/location filters.
//!
//! Records are line-delimited JSON objects:
//!
//! ```text
//! {"lat":40.0,"lon":-77.0,"user_id":17,"text":"hello","followers_count":3,"friends_count":9}
//! ```
//!
//! `retweeted`, `retweeted_status`, `urls` and `geoid` are optional. Lines
//! starting with `#` are provenance comments and are skipped.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_FOLLOWERS: u64 = 1000;
pub const MAX_FRIENDS: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub latitude: f64,
    pub longitude: f64,
    pub user_id: u64,
    pub text: String,
    pub followers_count: u64,
    pub friends_count: u64,
    pub is_retweet: bool,
    pub has_url: bool,
    /// URLs attached to the record; non-empty iff `has_url`.
    pub urls: Vec<String>,
    /// Block geoid once the record has been spatially assigned.
    pub geoid: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WireUserId {
    Number(u64),
    Text(String),
}

#[derive(Deserialize)]
struct WireRecord {
    lat: f64,
    lon: f64,
    user_id: WireUserId,
    text: String,
    #[serde(default)]
    followers_count: Option<u64>,
    #[serde(default)]
    friends_count: Option<u64>,
    #[serde(default)]
    retweeted: Option<bool>,
    #[serde(default)]
    retweeted_status: Option<serde_json::Value>,
    #[serde(default)]
    urls: Option<Vec<String>>,
    #[serde(default)]
    geoid: Option<String>,
}

#[derive(Serialize)]
struct WireRecordOut<'a> {
    lat: f64,
    lon: f64,
    user_id: u64,
    text: &'a str,
    followers_count: u64,
    friends_count: u64,
    retweeted: bool,
    urls: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    geoid: Option<&'a str>,
}

fn starts_with_rt_token(text: &str) -> bool {
    text.split_whitespace().next() == Some("RT")
}

/// Substrings of `text` that look like http(s) links.
fn scan_urls(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|chunk| {
            let start = chunk.find("http://").or_else(|| chunk.find("https://"))?;
            Some(chunk[start..].to_string())
        })
        .collect()
}

/// Parse one record line. `line_no` is 1-based and only used for errors.
pub fn parse_record(line: &str, line_no: usize) -> Result<RawRecord> {
    let wire: WireRecord =
        serde_json::from_str(line).map_err(|e| Error::parse(line_no, e.to_string()))?;
    if !(-90.0..=90.0).contains(&wire.lat) {
        return Err(Error::parse(
            line_no,
            format!("latitude {} out of range", wire.lat),
        ));
    }
    if !(-180.0..=180.0).contains(&wire.lon) {
        return Err(Error::parse(
            line_no,
            format!("longitude {} out of range", wire.lon),
        ));
    }
    let user_id = match wire.user_id {
        WireUserId::Number(n) => n,
        WireUserId::Text(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("user_id {s:?} is not a 64-bit integer")))?,
    };
    let is_retweet = wire.retweeted.unwrap_or(false)
        || wire.retweeted_status.is_some_and(|v| !v.is_null())
        || starts_with_rt_token(&wire.text);
    let urls = match wire.urls {
        Some(urls) => urls,
        None => scan_urls(&wire.text),
    };
    Ok(RawRecord {
        latitude: wire.lat,
        longitude: wire.lon,
        user_id,
        followers_count: wire.followers_count.unwrap_or(0),
        friends_count: wire.friends_count.unwrap_or(0),
        is_retweet,
        has_url: !urls.is_empty(),
        urls,
        geoid: wire.geoid,
        text: wire.text,
    })
}

/// Serialize a record as one JSON line (without the trailing newline).
pub fn serialize_record(r: &RawRecord) -> String {
    let out = WireRecordOut {
        lat: r.latitude,
        lon: r.longitude,
        user_id: r.user_id,
        text: &r.text,
        followers_count: r.followers_count,
        friends_count: r.friends_count,
        retweeted: r.is_retweet,
        urls: &r.urls,
        geoid: r.geoid.as_deref(),
    };
    serde_json::to_string(&out).expect("record serialization cannot fail")
}

/// Geographic filter in degrees. West/east are signed longitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
}

impl BoundingBox {
    /// The contiguous United States: 125.0011W..66.9326W, 24.9493N..49.5904N.
    pub const CONTIGUOUS_US: BoundingBox = BoundingBox {
        west: -125.0011,
        east: -66.9326,
        south: 24.9493,
        north: 49.5904,
    };

    pub fn new(west: f64, east: f64, south: f64, north: f64) -> Result<Self> {
        if !(west < east) || !(south < north) {
            return Err(Error::Config(format!(
                "bounding box needs west < east and south < north, got {west},{east},{south},{north}"
            )));
        }
        Ok(BoundingBox {
            west,
            east,
            south,
            north,
        })
    }

    /// Inclusive on every edge.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lon >= self.west && lon <= self.east && lat >= self.south && lat <= self.north
    }
}

impl FromStr for BoundingBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("bad bounding box {s:?}: {e}")))?;
        match parts[..] {
            [w, e, s, n] => BoundingBox::new(w, e, s, n),
            _ => Err(Error::Config(format!("bounding box {s:?} needs W,E,S,N"))),
        }
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.west, self.east, self.south, self.north
        )
    }
}

pub fn passes_filters(r: &RawRecord, bbox: &BoundingBox) -> bool {
    r.followers_count <= MAX_FOLLOWERS
        && r.friends_count <= MAX_FRIENDS
        && !r.has_url
        && !r.is_retweet
        && bbox.contains(r.latitude, r.longitude)
}

/// Counts written to the ingest sidecar file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub lines: u64,
    pub kept: u64,
    pub filtered: u64,
    pub parse_errors: u64,
    pub invalid_utf8: u64,
}

impl IngestSummary {
    pub fn merge(&mut self, other: &IngestSummary) {
        self.lines += other.lines;
        self.kept += other.kept;
        self.filtered += other.filtered;
        self.parse_errors += other.parse_errors;
        self.invalid_utf8 += other.invalid_utf8;
    }
}

/// Outcome of reading a single physical line.
pub enum LineRecord {
    Record(RawRecord),
    Comment,
    InvalidUtf8 { line: usize },
    Malformed(Error),
}

/// Iterate over the records of a line-delimited source. Read errors end the
/// iteration with an `Err`.
pub fn read_records<R: BufRead>(mut reader: R) -> impl Iterator<Item = Result<LineRecord>> {
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    std::iter::from_fn(move || {
        buf.clear();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => {
                line_no += 1;
                let Ok(line) = std::str::from_utf8(&buf) else {
                    return Some(Ok(LineRecord::InvalidUtf8 { line: line_no }));
                };
                let line = line.trim_end_matches(['\n', '\r']);
                if line.trim().is_empty() || line.starts_with('#') {
                    return Some(Ok(LineRecord::Comment));
                }
                Some(Ok(match parse_record(line, line_no) {
                    Ok(r) => LineRecord::Record(r),
                    Err(e) => LineRecord::Malformed(e),
                }))
            }
            Err(e) => Some(Err(Error::io("<records>", e))),
        }
    })
}

/// Stream `input` through the filters, writing surviving records to `output`.
pub fn filter_stream<R: BufRead, W: Write + ?Sized>(
    input: R,
    output: &mut W,
    bbox: &BoundingBox,
) -> Result<IngestSummary> {
    let mut summary = IngestSummary::default();
    for item in read_records(input) {
        match item? {
            LineRecord::Comment => continue,
            LineRecord::InvalidUtf8 { line } => {
                log::debug!("line {line}: invalid UTF-8");
                summary.lines += 1;
                summary.invalid_utf8 += 1;
            }
            LineRecord::Malformed(e) => {
                log::debug!("{e}");
                summary.lines += 1;
                summary.parse_errors += 1;
            }
            LineRecord::Record(r) => {
                summary.lines += 1;
                if passes_filters(&r, bbox) {
                    summary.kept += 1;
                    writeln!(output, "{}", serialize_record(&r))
                        .map_err(|e| Error::io("<output>", e))?;
                } else {
                    summary.filtered += 1;
                }
            }
        }
    }
    Ok(summary)
}

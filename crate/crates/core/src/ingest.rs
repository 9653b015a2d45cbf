//! Event-log ingestion.
//!
//! Each source is a newline-delimited JSON file with one footprint per line:
//!
//! ```text
//! {"user":"u1","ts":"2013-05-04T10:00:00","lat":40.4168,"lon":-3.7038,"text":"...","src":"tweet"}
//! ```
//!
//! `text` and `src` are optional; `src`, when present, overrides the source
//! the file was declared with. Malformed lines are rejected individually and
//! reported, never fatal.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Platform an event was recorded on. `Checkin` events are extracted from
/// the tweet stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Photo,
    Checkin,
    Tweet,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Photo, Source::Checkin, Source::Tweet];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Photo => "photo",
            Source::Checkin => "checkin",
            Source::Tweet => "tweet",
        }
    }

    /// Single-letter code used in the hotspot typology.
    pub fn letter(self) -> char {
        match self {
            Source::Photo => 'P',
            Source::Checkin => 'F',
            Source::Tweet => 'T',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "photo" => Ok(Source::Photo),
            "checkin" => Ok(Source::Checkin),
            "tweet" => Ok(Source::Tweet),
            other => Err(Error::Config(format!("unknown source `{other}`"))),
        }
    }
}

/// How coordinates are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrsMode {
    /// Longitude/latitude in degrees.
    Geographic,
    /// Planar x/y in meters.
    Projected,
}

impl fmt::Display for CrsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrsMode::Geographic => "geographic",
            CrsMode::Projected => "projected",
        })
    }
}

impl FromStr for CrsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geographic" => Ok(CrsMode::Geographic),
            "projected" => Ok(CrsMode::Projected),
            other => Err(Error::Config(format!("unknown crs mode `{other}`"))),
        }
    }
}

/// One geolocated, user-stamped footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub source: Source,
    pub user_id: String,
    /// Local time of the study city; never converted.
    pub timestamp: NaiveDateTime,
    /// Longitude in degrees, or projected x in meters.
    pub lon: f64,
    /// Latitude in degrees, or projected y in meters.
    pub lat: f64,
    pub text: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    /// `(line_number, reason)`, 1-based line numbers.
    pub rejection_reasons: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEvent {
    user: Option<String>,
    ts: Option<String>,
    lat: Option<f64>,
    lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    src: Option<String>,
}

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff]`, the same with a space separator, an
/// RFC 3339 string (offset dropped, wall-clock kept) or a bare date.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_local());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn check_coordinates(lon: f64, lat: f64, crs: CrsMode) -> std::result::Result<(), &'static str> {
    if !lon.is_finite() || !lat.is_finite() {
        return Err("non-finite coordinate");
    }
    if crs == CrsMode::Geographic && (!(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon)) {
        return Err("coordinate out of range");
    }
    Ok(())
}

/// Parse a single non-blank line.
pub fn parse_line(line: &str, source: Source, crs: CrsMode) -> std::result::Result<EventRecord, String> {
    let raw: RawEvent = serde_json::from_str(line).map_err(|e| format!("malformed json: {e}"))?;
    let user_id = raw.user.ok_or("missing user")?;
    if user_id.trim().is_empty() {
        return Err("empty user".into());
    }
    let ts = raw.ts.ok_or("missing ts")?;
    let timestamp = parse_timestamp(&ts).ok_or_else(|| format!("invalid timestamp `{ts}`"))?;
    let lat = raw.lat.ok_or("missing lat")?;
    let lon = raw.lon.ok_or("missing lon")?;
    check_coordinates(lon, lat, crs)?;
    let source = match raw.src {
        Some(s) => s.parse::<Source>().map_err(|_| format!("unknown source `{s}`"))?,
        None => source,
    };
    Ok(EventRecord {
        source,
        user_id,
        timestamp,
        lon,
        lat,
        text: raw.text,
    })
}

/// Parse every line of `reader`. Input order is preserved.
pub fn parse_events_from_reader<R: BufRead>(
    reader: R,
    source: Source,
    crs: CrsMode,
) -> Result<(Vec<EventRecord>, IngestReport)> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Data(format!("read error at line {}: {e}", i + 1)))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let parsed: Vec<_> = lines
        .par_iter()
        .map(|(n, l)| (*n, parse_line(l, source, crs)))
        .collect();

    let mut events = Vec::with_capacity(parsed.len());
    let mut report = IngestReport::default();
    for (n, r) in parsed {
        match r {
            Ok(ev) => {
                report.accepted += 1;
                events.push(ev);
            }
            Err(reason) => {
                report.rejected += 1;
                report.rejection_reasons.push((n, reason));
            }
        }
    }
    Ok((events, report))
}

pub fn parse_events(path: &Path, source: Source, crs: CrsMode) -> Result<(Vec<EventRecord>, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events_from_reader(BufReader::new(file), source, crs)
}

/// Write events in the same NDJSON format [`parse_events`] reads.
pub fn write_events<W: Write>(writer: W, events: &[EventRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for ev in events {
        let raw = RawEvent {
            user: Some(ev.user_id.clone()),
            ts: Some(ev.timestamp.format(TS_FORMAT).to_string()),
            lat: Some(ev.lat),
            lon: Some(ev.lon),
            text: ev.text.clone(),
            src: Some(ev.source.as_str().to_string()),
        };
        serde_json::to_writer(&mut w, &raw)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_events_file(path: &Path, events: &[EventRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events(file, events).map_err(|e| Error::io(path, e))
}

/// Decides whether a tweet is a shared check-in.
#[derive(Debug, Clone)]
pub enum CheckinRule {
    /// Case-insensitive `4sq.com` or `swarmapp.com` in the text.
    VenueLink,
    Pattern(Regex),
}

impl Default for CheckinRule {
    fn default() -> Self {
        CheckinRule::VenueLink
    }
}

impl CheckinRule {
    pub fn pattern(re: &str) -> Result<Self> {
        Regex::new(re)
            .map(CheckinRule::Pattern)
            .map_err(|e| Error::Config(format!("invalid check-in pattern: {e}")))
    }

    pub fn is_checkin(&self, ev: &EventRecord) -> bool {
        let Some(text) = ev.text.as_deref() else {
            return false;
        };
        match self {
            CheckinRule::VenueLink => {
                let lower = text.to_ascii_lowercase();
                lower.contains("4sq.com") || lower.contains("swarmapp.com")
            }
            CheckinRule::Pattern(re) => re.is_match(text),
        }
    }
}

/// Partition a tweet stream into check-ins (relabelled `Checkin`) and
/// ordinary tweets. Order is preserved within each part.
pub fn split_checkins(tweets: Vec<EventRecord>, rule: &CheckinRule) -> (Vec<EventRecord>, Vec<EventRecord>) {
    let mut checkins = Vec::new();
    let mut ordinary = Vec::new();
    for mut ev in tweets {
        if rule.is_checkin(&ev) {
            ev.source = Source::Checkin;
            checkins.push(ev);
        } else {
            ordinary.push(ev);
        }
    }
    (checkins, ordinary)
}

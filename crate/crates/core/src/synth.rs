//! Deterministic synthetic city: a grid of square zones plus photo and tweet
//! streams with planted tourist hotspots and resident noise.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::{write_events_file, CrsMode, EventRecord, Source};
use crate::pipeline::{PipelineConfig, SourceKind, SourceSpec};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    /// Mean tourists per zone and source; each zone draws uniformly from
    /// `0..=2 * mean`.
    #[serde(default)]
    pub tourists_per_zone: u32,
    #[serde(default = "one")]
    pub events_per_tourist: u32,
    /// Residents per platform (photo stream, tweet stream).
    #[serde(default)]
    pub residents: u32,
    #[serde(default = "twelve")]
    pub resident_events: u32,
}

fn one() -> u32 {
    1
}
fn twelve() -> u32 {
    12
}

impl Default for Background {
    fn default() -> Self {
        Background {
            tourists_per_zone: 0,
            events_per_tourist: 1,
            residents: 0,
            resident_events: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hotspot {
    pub source: Source,
    /// Inclusive `[row0, col0, row1, col1]`.
    #[serde(default)]
    pub block: Option<[usize; 4]>,
    /// Individual `[row, col]` cells.
    #[serde(default)]
    pub cells: Vec<[usize; 2]>,
    /// Distinct tourists planted in every hotspot zone.
    pub tourists: u32,
    #[serde(default = "one")]
    pub events_per_tourist: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityScenario {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_cell")]
    pub cell_m: f64,
    /// Projected coordinates of the south-west corner.
    #[serde(default = "default_origin")]
    pub origin: [f64; 2],
    #[serde(default = "default_year")]
    pub year: i32,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub hotspots: Vec<Hotspot>,
}

fn default_cell() -> f64 {
    200.0
}
fn default_origin() -> [f64; 2] {
    [440_000.0, 4_470_000.0]
}
fn default_year() -> i32 {
    2013
}

impl CityScenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn zone_id(row: usize, col: usize) -> String {
        format!("r{row:03}c{col:03}")
    }

    pub fn zone_index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.cell_m,
            self.origin[1] + (row as f64 + 0.5) * self.cell_m,
        ]
    }

    /// Center of the whole grid.
    pub fn city_center(&self) -> [f64; 2] {
        [
            self.origin[0] + self.cols as f64 * self.cell_m / 2.0,
            self.origin[1] + self.rows as f64 * self.cell_m / 2.0,
        ]
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Config(format!("grid must be at least 2x2, got {}x{}", self.rows, self.cols)));
        }
        if !(self.cell_m > 0.0) || !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("cell size must be positive and origin finite".into()));
        }
        for (k, h) in self.hotspots.iter().enumerate() {
            for (r, c) in h.zones() {
                if r >= self.rows || c >= self.cols {
                    return Err(Error::Config(format!("hotspot #{k} cell ({r}, {c}) lies outside the {}x{} grid", self.rows, self.cols)));
                }
            }
            if h.block.is_some_and(|b| b[0] > b[2] || b[1] > b[3]) {
                return Err(Error::Config(format!("hotspot #{k} block corners are reversed")));
            }
        }
        Ok(())
    }
}

impl Hotspot {
    pub fn zones(&self) -> Vec<(usize, usize)> {
        let mut out: BTreeSet<(usize, usize)> = self.cells.iter().map(|&[r, c]| (r, c)).collect();
        if let Some([r0, c0, r1, c1]) = self.block {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    out.insert((r, c));
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `user_id -> "tourist" | "resident"`, per platform stream.
    pub photo_users: BTreeMap<String, String>,
    pub tweet_users: BTreeMap<String, String>,
    /// Planted hotspot zone ids per analysis source.
    pub hotspots: BTreeMap<Source, Vec<String>>,
    pub photo_events: usize,
    pub tweet_events: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub scenario: CityScenario,
    pub zones_geojson: String,
    pub photos: Vec<EventRecord>,
    /// Ordinary tweets and check-in tweets, interleaved per user.
    pub tweets: Vec<EventRecord>,
    pub truth: GroundTruth,
}

struct Generator<'a> {
    s: &'a CityScenario,
    rng: ChaCha8Rng,
    photos: Vec<EventRecord>,
    tweets: Vec<EventRecord>,
    truth: GroundTruth,
    next_user: u64,
}

impl Generator<'_> {
    fn point_in(&mut self, row: usize, col: usize) -> (f64, f64) {
        // Keep clear of cell edges so planted events never sit on a boundary.
        let m = 0.01;
        let x = self.s.origin[0] + (col as f64 + self.rng.gen_range(m..1.0 - m)) * self.s.cell_m;
        let y = self.s.origin[1] + (row as f64 + self.rng.gen_range(m..1.0 - m)) * self.s.cell_m;
        (x, y)
    }

    fn day(&self, offset: i64) -> NaiveDateTime {
        let start = NaiveDate::from_ymd_opt(self.s.year, 1, 1).expect("valid year");
        (start + Duration::days(offset)).and_hms_opt(0, 0, 0).expect("midnight")
    }

    fn text_for(&mut self, source: Source, zone: &str) -> Option<String> {
        match source {
            Source::Photo => None,
            Source::Checkin => Some(format!("I'm at Plaza {zone} https://4sq.com/{:08x}", self.rng.gen::<u32>())),
            Source::Tweet => Some(format!("walking around {zone} #{}", self.rng.gen_range(0..1000))),
        }
    }

    fn push(&mut self, source: Source, user: &str, row: usize, col: usize, ts: NaiveDateTime) {
        let (lon, lat) = self.point_in(row, col);
        let zone = CityScenario::zone_id(row, col);
        let text = self.text_for(source, &zone);
        let ev = EventRecord {
            source: if source == Source::Photo { Source::Photo } else { Source::Tweet },
            user_id: user.to_string(),
            timestamp: ts,
            lon,
            lat,
            text,
        };
        if source == Source::Photo {
            self.photos.push(ev);
        } else {
            self.tweets.push(ev);
        }
    }

    fn new_user(&mut self, source: Source, class: &str) -> String {
        self.next_user += 1;
        let id = format!("{}-{}{:07}", source.as_str(), &class[..1], self.next_user);
        let book = if source == Source::Photo { &mut self.truth.photo_users } else { &mut self.truth.tweet_users };
        book.insert(id.clone(), class.to_string());
        id
    }

    /// One tourist: all events within a week, inside one calendar year.
    fn tourist(&mut self, source: Source, row: usize, col: usize, events: u32) {
        let user = self.new_user(source, "tourist");
        let first = self.rng.gen_range(0..358);
        for _ in 0..events.max(1) {
            let offset = first + self.rng.gen_range(0..=6);
            let ts = self.day(offset)
                + Duration::hours(self.rng.gen_range(8..24))
                + Duration::minutes(self.rng.gen_range(0..60));
            self.push(source, &user, row, col, ts);
        }
    }

    /// One resident: first and last event more than a month apart.
    fn resident(&mut self, platform: Source) {
        let user = self.new_user(platform, "resident");
        let first = self.rng.gen_range(0..200);
        let last = first + 30 + self.rng.gen_range(0..130);
        let n = self.s.background.resident_events.max(2);
        for k in 0..n {
            let offset = match k {
                0 => first,
                1 => last,
                _ => self.rng.gen_range(first..=last),
            };
            let hour = self.rng.gen_range(0..24);
            let ts = self.day(offset) + Duration::hours(hour);
            let (row, col) = (self.rng.gen_range(0..self.s.rows), self.rng.gen_range(0..self.s.cols));
            let source = match platform {
                Source::Photo => Source::Photo,
                _ if self.rng.gen_bool(1.0 / 3.0) => Source::Checkin,
                _ => Source::Tweet,
            };
            self.push(source, &user, row, col, ts);
        }
    }
}

fn zones_geojson(s: &CityScenario) -> String {
    let mut features = Vec::with_capacity(s.rows * s.cols);
    for row in 0..s.rows {
        for col in 0..s.cols {
            let x0 = s.origin[0] + col as f64 * s.cell_m;
            let y0 = s.origin[1] + row as f64 * s.cell_m;
            let (x1, y1) = (x0 + s.cell_m, y0 + s.cell_m);
            features.push(json!({
                "type": "Feature",
                "properties": { "id": CityScenario::zone_id(row, col) },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]
                }
            }));
        }
    }
    let fc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string(&fc).expect("serializable") + "\n"
}

/// Generate a city. Output depends only on the scenario (seed included).
pub fn generate(scenario: &CityScenario) -> Result<SyntheticCity> {
    scenario.validate()?;
    let mut g = Generator {
        s: scenario,
        rng: rng::stream(scenario.seed, 0),
        photos: Vec::new(),
        tweets: Vec::new(),
        truth: GroundTruth {
            photo_users: BTreeMap::new(),
            tweet_users: BTreeMap::new(),
            hotspots: BTreeMap::new(),
            photo_events: 0,
            tweet_events: 0,
        },
        next_user: 0,
    };

    for h in &scenario.hotspots {
        let zones = h.zones();
        let ids = g.truth.hotspots.entry(h.source).or_default();
        ids.extend(zones.iter().map(|&(r, c)| CityScenario::zone_id(r, c)));
        ids.sort();
        ids.dedup();
        for (r, c) in zones {
            for _ in 0..h.tourists {
                g.tourist(h.source, r, c, h.events_per_tourist);
            }
        }
    }

    let bg = scenario.background.clone();
    if bg.tourists_per_zone > 0 {
        for source in Source::ALL {
            for r in 0..scenario.rows {
                for c in 0..scenario.cols {
                    let n = g.rng.gen_range(0..=2 * bg.tourists_per_zone);
                    for _ in 0..n {
                        g.tourist(source, r, c, bg.events_per_tourist);
                    }
                }
            }
        }
    }
    for platform in [Source::Photo, Source::Tweet] {
        for _ in 0..bg.residents {
            g.resident(platform);
        }
    }

    g.truth.photo_events = g.photos.len();
    g.truth.tweet_events = g.tweets.len();
    Ok(SyntheticCity {
        scenario: scenario.clone(),
        zones_geojson: zones_geojson(scenario),
        photos: g.photos,
        tweets: g.tweets,
        truth: g.truth,
    })
}

/// Paths written by [`SyntheticCity::write`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub zones: PathBuf,
    pub photos: PathBuf,
    pub tweets: PathBuf,
    pub truth: PathBuf,
    pub config: PathBuf,
}

impl SyntheticCity {
    /// Write `zones.geojson`, `photos.ndjson`, `tweets.ndjson`,
    /// `truth.json` and a ready-to-run `pipeline.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles {
            zones: dir.join("zones.geojson"),
            photos: dir.join("photos.ndjson"),
            tweets: dir.join("tweets.ndjson"),
            truth: dir.join("truth.json"),
            config: dir.join("pipeline.toml"),
        };
        fs::write(&files.zones, &self.zones_geojson).map_err(|e| Error::io(&files.zones, e))?;
        write_events_file(&files.photos, &self.photos)?;
        write_events_file(&files.tweets, &self.tweets)?;
        let truth = serde_json::to_string_pretty(&self.truth).expect("serializable") + "\n";
        fs::write(&files.truth, truth).map_err(|e| Error::io(&files.truth, e))?;

        let config = PipelineConfig {
            sources: vec![
                SourceSpec {
                    name: "photos".into(),
                    kind: SourceKind::Photo,
                    file: "photos.ndjson".into(),
                },
                SourceSpec {
                    name: "tweets".into(),
                    kind: SourceKind::Tweet,
                    file: "tweets.ndjson".into(),
                },
            ],
            zones: "zones.geojson".into(),
            crs: CrsMode::Projected,
            center: Some(self.scenario.city_center()),
            seed: self.scenario.seed,
            out: "out".into(),
            ..PipelineConfig::default()
        };
        fs::write(&files.config, config.to_toml()).map_err(|e| Error::io(&files.config, e))?;
        Ok(files)
    }
}

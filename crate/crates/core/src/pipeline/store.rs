use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::UserLabel;
use crate::error::{Error, Result};
use crate::ingest::{parse_events_from_reader, write_events_file, CrsMode, EventRecord, IngestReport, Source};
use crate::metrics::TemporalProfile;
use crate::spatial_stats::{LisaResult, LocalMoran, Quadrant};
use crate::typology::{Membership, TypologyClass};
use crate::zones::geometry::Coord;

use super::config::SourceKind;

/// Directory holding every intermediate and final output, one file per
/// stage and source.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

/// Per-zone counts and densities for every analyzed source.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneTable {
    pub crs: CrsMode,
    pub zone_ids: Vec<String>,
    pub area_ha: Vec<f64>,
    pub centroids: Vec<Coord>,
    /// Column order of `counts`, `density` and `rescaled`.
    pub sources: Vec<Source>,
    pub counts: Vec<Vec<u64>>,
    pub density: Vec<Vec<f64>>,
    pub rescaled: Vec<Vec<f64>>,
}

impl ZoneTable {
    pub fn len(&self) -> usize {
        self.zone_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zone_ids.is_empty()
    }

    fn column(&self, s: Source) -> Result<usize> {
        self.sources
            .iter()
            .position(|&c| c == s)
            .ok_or_else(|| Error::Data(format!("no {s} column in the zone table")))
    }

    pub fn counts_of(&self, s: Source) -> Result<&[u64]> {
        Ok(&self.counts[self.column(s)?])
    }

    pub fn density_of(&self, s: Source) -> Result<&[f64]> {
        Ok(&self.density[self.column(s)?])
    }

    pub fn rescaled_of(&self, s: Source) -> Result<&[f64]> {
        Ok(&self.rescaled[self.column(s)?])
    }

    /// Analysis variable: rescaled density, or raw density when `rescaled`
    /// is false.
    pub fn values(&self, s: Source, rescaled: bool) -> Result<&[f64]> {
        if rescaled {
            self.rescaled_of(s)
        } else {
            self.density_of(s)
        }
    }

    pub fn mean_centroid(&self) -> Coord {
        let n = self.centroids.len().max(1) as f64;
        let (x, y) = self.centroids.iter().fold((0.0, 0.0), |(x, y), c| (x + c[0], y + c[1]));
        [x / n, y / n]
    }
}

#[derive(Serialize, Deserialize)]
struct TableMeta {
    crs: CrsMode,
    sources: Vec<Source>,
}

/// One row of the global autocorrelation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranRow {
    pub source: Source,
    pub n: usize,
    pub i: f64,
    pub expected: f64,
    pub variance: Option<f64>,
    pub z_score: Option<f64>,
    pub p_value: Option<f64>,
    pub perm_p: Option<f64>,
    pub permutations: usize,
    pub seed: u64,
    pub threshold_m: f64,
    pub row_standardized: bool,
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Data(format!("bad {what} value `{s}`")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Store { dir })
    }

    /// A store that must already exist.
    pub fn existing(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::Data(format!("store {} does not exist", dir.display())));
        }
        Ok(Store { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.is_file() {
            return Err(Error::Data(format!("{} missing; run the earlier stage first", p.display())));
        }
        Ok(p)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn writer(&self, name: &str) -> Result<(PathBuf, csv::Writer<BufWriter<File>>)> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
        Ok((p, csv::Writer::from_writer(BufWriter::new(f))))
    }

    fn write_rows(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
        let (p, mut w) = self.writer(name)?;
        w.write_record(header).map_err(|e| csv_err(&p, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| csv_err(&p, e))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn read_rows(&self, name: &str) -> Result<(PathBuf, Vec<String>, Vec<csv::StringRecord>)> {
        let p = self.require(name)?;
        let mut r = csv::Reader::from_path(&p).map_err(|e| csv_err(&p, e))?;
        let header = r.headers().map_err(|e| csv_err(&p, e))?.iter().map(str::to_string).collect();
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(&p, e))?;
        Ok((p, header, rows))
    }

    // ingest

    pub fn ingest_name(kind: SourceKind) -> String {
        format!("ingest.{}.ndjson", kind.as_str())
    }

    pub fn write_ingest(&self, kind: SourceKind, events: &[EventRecord], report: &IngestReport) -> Result<()> {
        write_events_file(&self.path(&Self::ingest_name(kind)), events)?;
        let rows: Vec<Vec<String>> = report
            .rejection_reasons
            .iter()
            .map(|(line, reason)| vec![line.to_string(), reason.clone()])
            .collect();
        self.write_rows(&format!("ingest.{}.rejects.csv", kind.as_str()), &["line".into(), "reason".into()], &rows)?;
        Ok(())
    }

    /// Ingested events of one kind, or `None` when that kind was never
    /// ingested into this store.
    pub fn read_ingest(&self, kind: SourceKind) -> Result<Option<Vec<EventRecord>>> {
        let name = Self::ingest_name(kind);
        if !self.has(&name) {
            return Ok(None);
        }
        self.read_events(&name, kind.source()).map(Some)
    }

    fn read_events(&self, name: &str, source: Source) -> Result<Vec<EventRecord>> {
        let p = self.require(name)?;
        let f = File::open(&p).map_err(|e| Error::io(&p, e))?;
        // Stored events were validated on the way in; only finiteness is rechecked.
        let (events, report) = parse_events_from_reader(BufReader::new(f), source, CrsMode::Projected)?;
        if let Some((line, reason)) = report.rejection_reasons.first() {
            return Err(Error::Data(format!("{}:{line}: {reason}", p.display())));
        }
        Ok(events)
    }

    // classify

    pub fn write_labels(&self, labels: &[UserLabel]) -> Result<PathBuf> {
        let rows: Vec<Vec<String>> = labels
            .iter()
            .map(|l| {
                vec![
                    l.user_id.clone(),
                    l.source.as_str().into(),
                    l.label.as_str().into(),
                    l.max_span_days().to_string(),
                ]
            })
            .collect();
        let header = ["user_id", "source", "label", "max_span_days"].map(String::from);
        self.write_rows("classify.labels.csv", &header, &rows)
    }

    pub fn tourist_name(source: Source) -> String {
        format!("classify.{}.ndjson", source.as_str())
    }

    pub fn write_tourists(&self, source: Source, events: &[EventRecord]) -> Result<PathBuf> {
        let p = self.path(&Self::tourist_name(source));
        write_events_file(&p, events)?;
        Ok(p)
    }

    /// Tourist events per analysis source present in the store.
    pub fn read_tourists(&self) -> Result<Vec<(Source, Vec<EventRecord>)>> {
        let mut out = Vec::new();
        for s in Source::ALL {
            let name = Self::tourist_name(s);
            if self.has(&name) {
                out.push((s, self.read_events(&name, s)?));
            }
        }
        if out.is_empty() {
            return Err(Error::Data(format!("no classified events in {}", self.dir.display())));
        }
        Ok(out)
    }

    // aggregate

    pub const ZONES_COPY: &'static str = "aggregate.zones.geojson";

    pub fn write_table(&self, t: &ZoneTable) -> Result<PathBuf> {
        let meta = TableMeta {
            crs: t.crs,
            sources: t.sources.clone(),
        };
        self.write_text("aggregate.meta.json", &(serde_json::to_string_pretty(&meta).expect("serializable") + "\n"))?;
        let mut header: Vec<String> = ["zone_id", "area_ha", "centroid_x", "centroid_y"].map(String::from).to_vec();
        for s in &t.sources {
            header.extend(["count", "density", "rescaled"].map(|c| format!("{s}_{c}")));
        }
        let rows: Vec<Vec<String>> = (0..t.len())
            .map(|z| {
                let mut r = vec![
                    t.zone_ids[z].clone(),
                    t.area_ha[z].to_string(),
                    t.centroids[z][0].to_string(),
                    t.centroids[z][1].to_string(),
                ];
                for c in 0..t.sources.len() {
                    r.push(t.counts[c][z].to_string());
                    r.push(t.density[c][z].to_string());
                    r.push(t.rescaled[c][z].to_string());
                }
                r
            })
            .collect();
        self.write_rows("aggregate.metrics.csv", &header, &rows)
    }

    pub fn read_table(&self) -> Result<ZoneTable> {
        let meta_path = self.require("aggregate.meta.json")?;
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: TableMeta =
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", meta_path.display())))?;
        let (p, header, rows) = self.read_rows("aggregate.metrics.csv")?;
        let m = meta.sources.len();
        if header.len() != 4 + 3 * m {
            return Err(Error::Data(format!("{}: unexpected columns", p.display())));
        }
        let mut t = ZoneTable {
            crs: meta.crs,
            zone_ids: Vec::with_capacity(rows.len()),
            area_ha: Vec::with_capacity(rows.len()),
            centroids: Vec::with_capacity(rows.len()),
            sources: meta.sources,
            counts: vec![Vec::with_capacity(rows.len()); m],
            density: vec![Vec::with_capacity(rows.len()); m],
            rescaled: vec![Vec::with_capacity(rows.len()); m],
        };
        for r in &rows {
            t.zone_ids.push(r[0].to_string());
            t.area_ha.push(parse_f64(&r[1], "area_ha")?);
            t.centroids.push([parse_f64(&r[2], "centroid_x")?, parse_f64(&r[3], "centroid_y")?]);
            for c in 0..m {
                let base = 4 + 3 * c;
                t.counts[c].push(r[base].parse().map_err(|_| Error::Data(format!("bad count `{}`", &r[base])))?);
                t.density[c].push(parse_f64(&r[base + 1], "density")?);
                t.rescaled[c].push(parse_f64(&r[base + 2], "rescaled")?);
            }
        }
        Ok(t)
    }

    pub fn write_temporal(&self, profiles: &[TemporalProfile]) -> Result<PathBuf> {
        let mut rows = Vec::new();
        for p in profiles {
            for h in 0..24 {
                rows.push(vec![p.source.as_str().into(), h.to_string(), p.hour_counts[h].to_string(), p.hour_shares[h].to_string()]);
            }
        }
        self.write_rows("aggregate.temporal.csv", &["source", "hour", "count", "share"].map(String::from), &rows)
    }

    // generic tables

    pub fn write_table_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        self.write_rows(name, &header, rows)
    }

    pub fn read_table_csv(&self, name: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
        let (_, header, rows) = self.read_rows(name)?;
        Ok((header, rows.iter().map(|r| r.iter().map(str::to_string).collect()).collect()))
    }

    // moran

    const MORAN: &'static str = "moran.table4.csv";

    pub fn read_moran(&self) -> Result<Vec<MoranRow>> {
        if !self.has(Self::MORAN) {
            return Ok(Vec::new());
        }
        let p = self.path(Self::MORAN);
        let mut r = csv::Reader::from_path(&p).map_err(|e| csv_err(&p, e))?;
        r.deserialize().collect::<std::result::Result<Vec<MoranRow>, _>>().map_err(|e| csv_err(&p, e))
    }

    /// Insert or replace the row for `row.source`, keeping source order.
    pub fn upsert_moran(&self, row: MoranRow) -> Result<PathBuf> {
        let mut rows = self.read_moran()?;
        rows.retain(|r| r.source != row.source);
        rows.push(row);
        rows.sort_by_key(|r| r.source);
        let (p, mut w) = self.writer(Self::MORAN)?;
        for r in &rows {
            w.serialize(r).map_err(|e| csv_err(&p, e))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    // lisa

    pub fn lisa_name(source: Source) -> String {
        format!("lisa.{}.csv", source.as_str())
    }

    pub fn write_lisa(&self, source: Source, zone_ids: &[String], lisa: &LisaResult<f64>) -> Result<PathBuf> {
        let rows: Vec<Vec<String>> = zone_ids
            .iter()
            .zip(&lisa.zones)
            .map(|(id, z)| {
                vec![
                    id.clone(),
                    z.i.to_string(),
                    z.lag.to_string(),
                    z.quadrant.as_str().into(),
                    fmt_opt(z.pseudo_p),
                    z.significant.to_string(),
                    z.map_label().into(),
                    lisa.alpha.to_string(),
                    lisa.permutations.to_string(),
                    lisa.seed.to_string(),
                ]
            })
            .collect();
        self.write_table_csv(
            &Self::lisa_name(source),
            &["zone_id", "local_i", "lag", "quadrant", "pseudo_p", "significant", "label", "alpha", "permutations", "seed"],
            &rows,
        )
    }

    pub fn read_lisa(&self, source: Source) -> Result<Option<(Vec<String>, LisaResult<f64>)>> {
        let name = Self::lisa_name(source);
        if !self.has(&name) {
            return Ok(None);
        }
        let (_, rows) = self.read_table_csv(&name)?;
        let mut ids = Vec::with_capacity(rows.len());
        let mut zones = Vec::with_capacity(rows.len());
        let (mut alpha, mut permutations, mut seed) = (0.05, 0, 0);
        for r in &rows {
            if r.len() != 10 {
                return Err(Error::Data(format!("{name}: expected 10 columns")));
            }
            ids.push(r[0].clone());
            zones.push(LocalMoran {
                i: parse_f64(&r[1], "local_i")?,
                lag: parse_f64(&r[2], "lag")?,
                quadrant: Quadrant::parse(&r[3]).ok_or_else(|| Error::Data(format!("bad quadrant `{}`", r[3])))?,
                pseudo_p: parse_opt(&r[4], "pseudo_p")?,
                significant: r[5] == "true",
            });
            alpha = parse_f64(&r[7], "alpha")?;
            permutations = r[8].parse().map_err(|_| Error::Data("bad permutations".into()))?;
            seed = r[9].parse().map_err(|_| Error::Data("bad seed".into()))?;
        }
        Ok(Some((
            ids,
            LisaResult {
                zones,
                alpha,
                permutations,
                seed,
            },
        )))
    }

    // typology

    pub fn write_typology(&self, classes: &[TypologyClass]) -> Result<PathBuf> {
        let rows: Vec<Vec<String>> = classes
            .iter()
            .map(|c| vec![c.zone_id.clone(), c.membership.len().to_string(), c.class_label.into()])
            .collect();
        self.write_table_csv("typology.classes.csv", &["zone_id", "membership_count", "typology"], &rows)
    }

    pub fn read_typology(&self) -> Result<Vec<(String, String)>> {
        let (_, rows) = self.read_table_csv("typology.classes.csv")?;
        rows.into_iter()
            .map(|r| {
                if !Membership::LABELS.contains(&r[2].as_str()) {
                    return Err(Error::Data(format!("unknown typology class `{}`", r[2])));
                }
                Ok((r[0].clone(), r[2].clone()))
            })
            .collect()
    }

    pub fn write_json<V: Serialize>(&self, name: &str, value: &V) -> Result<PathBuf> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Data(e.to_string()))?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }
}

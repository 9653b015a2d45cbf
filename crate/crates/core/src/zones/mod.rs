//! Zone polygons (census tracts): loading, area and centroid, and the
//! point-to-zone spatial join.

pub mod geometry;
mod index;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use geojson::{GeoJson, Value};
use rayon::prelude::*;
use serde_json::Value as JsonValue;

use crate::error::{Error, Result};
use crate::ingest::{CrsMode, EventRecord};
use geometry::{BBox, Coord, LocalProjection, BOUNDARY_EPS};
pub use index::ZoneGrid;

/// One polygon: the outer ring followed by any holes. Rings are closed.
pub type Rings = Vec<Vec<Coord>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: String,
    pub polygons: Vec<Rings>,
    pub area_ha: f64,
    pub centroid: Coord,
    pub bbox: BBox,
}

impl Zone {
    /// Build a zone from raw polygons, validating rings and deriving area
    /// (unless `area_ha` is given) and the area-weighted centroid.
    pub fn new(zone_id: impl Into<String>, polygons: Vec<Rings>, area_ha: Option<f64>, crs: CrsMode) -> Result<Zone> {
        let zone_id = zone_id.into();
        let fail = |reason: String| Error::Zone {
            id: zone_id.clone(),
            reason,
        };
        if polygons.is_empty() {
            return Err(fail("no polygons".into()));
        }
        let mut bbox = BBox::empty();
        for rings in &polygons {
            if rings.is_empty() {
                return Err(fail("polygon without rings".into()));
            }
            for ring in rings {
                if ring.len() < 4 {
                    return Err(fail(format!("ring has {} vertices, need at least 4", ring.len())));
                }
                if ring.first() != ring.last() {
                    return Err(fail("unclosed ring".into()));
                }
                if ring.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(fail("non-finite vertex".into()));
                }
                ring.iter().for_each(|&p| bbox.extend(p));
            }
        }

        let proj = match crs {
            CrsMode::Projected => None,
            CrsMode::Geographic => {
                let (sum, n) = polygons
                    .iter()
                    .flatten()
                    .flatten()
                    .fold((0.0, 0usize), |(s, n), p| (s + p[1], n + 1));
                Some(LocalProjection::at_latitude(sum / n as f64))
            }
        };
        let planar = |p: Coord| proj.map_or(p, |pr| pr.forward(p));

        // Outer rings add, holes subtract, regardless of stored orientation.
        let mut area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for rings in &polygons {
            for (k, ring) in rings.iter().enumerate() {
                let pts: Vec<Coord> = ring.iter().map(|&p| planar(p)).collect();
                let a = geometry::signed_area(&pts).abs();
                let Some(c) = geometry::ring_centroid(&pts) else {
                    continue;
                };
                let sign = if k == 0 { 1.0 } else { -1.0 };
                area += sign * a;
                cx += sign * a * c[0];
                cy += sign * a * c[1];
            }
        }
        if !(area > 0.0) {
            return Err(fail("zero-area polygon".into()));
        }
        let centroid_planar = [cx / area, cy / area];
        let centroid = proj.map_or(centroid_planar, |pr| pr.inverse(centroid_planar));

        let area_ha = match area_ha {
            Some(a) if a > 0.0 && a.is_finite() => a,
            Some(a) => return Err(fail(format!("area_ha must be positive, got {a}"))),
            None => area / 10_000.0,
        };

        Ok(Zone {
            zone_id,
            polygons,
            area_ha,
            centroid,
            bbox,
        })
    }

    /// Closed containment: interior by even-odd rule, or within
    /// `BOUNDARY_EPS` of any ring edge.
    pub fn contains(&self, p: Coord) -> bool {
        if !self.bbox.contains(p, BOUNDARY_EPS) {
            return false;
        }
        self.polygons.iter().any(|rings| {
            rings.iter().any(|r| geometry::on_ring_boundary(p, r, BOUNDARY_EPS)) || geometry::even_odd(p, rings)
        })
    }
}

/// Distance between two coordinates in meters: haversine for geographic
/// coordinates, Euclidean for projected ones.
pub fn distance_m(a: Coord, b: Coord, crs: CrsMode) -> f64 {
    match crs {
        CrsMode::Geographic => geometry::haversine_m(a, b),
        CrsMode::Projected => geometry::euclidean(a, b),
    }
}

fn position(p: &[f64], id: &str) -> Result<Coord> {
    match p {
        [x, y, ..] => Ok([*x, *y]),
        _ => Err(Error::Zone {
            id: id.to_string(),
            reason: "position with fewer than two coordinates".into(),
        }),
    }
}

fn rings_of(poly: &[Vec<Vec<f64>>], id: &str) -> Result<Rings> {
    poly.iter()
        .map(|ring| ring.iter().map(|p| position(p, id)).collect())
        .collect()
}

fn id_string(v: &JsonValue) -> Option<String> {
    match v {
        JsonValue::String(s) => Some(s.clone()),
        JsonValue::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Parse a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
///
/// Every feature needs an `id` property (string or number; the feature-level
/// id is used as a fallback). An `area_ha` property overrides the computed
/// area.
pub fn parse_zones(text: &str, crs: CrsMode) -> Result<Vec<Zone>> {
    let gj: GeoJson = text
        .parse()
        .map_err(|e| Error::Data(format!("invalid GeoJSON: {e}")))?;
    let GeoJson::FeatureCollection(fc) = gj else {
        return Err(Error::Data("zones file must be a FeatureCollection".into()));
    };

    let mut seen = HashSet::new();
    let mut zones = Vec::with_capacity(fc.features.len());
    for (i, feat) in fc.features.iter().enumerate() {
        let id = feat
            .property("id")
            .and_then(id_string)
            .or_else(|| {
                feat.id.as_ref().map(|fid| match fid {
                    geojson::feature::Id::String(s) => s.clone(),
                    geojson::feature::Id::Number(n) => n.to_string(),
                })
            })
            .ok_or_else(|| Error::Data(format!("feature #{i} has no `id` property")))?;
        if !seen.insert(id.clone()) {
            return Err(Error::Zone {
                id,
                reason: "duplicate id".into(),
            });
        }
        let area_ha = match feat.property("area_ha") {
            None | Some(JsonValue::Null) => None,
            Some(v) => Some(v.as_f64().ok_or_else(|| Error::Zone {
                id: id.clone(),
                reason: "area_ha is not a number".into(),
            })?),
        };
        let polygons = match feat.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Polygon(p)) => vec![rings_of(p, &id)?],
            Some(Value::MultiPolygon(mp)) => mp.iter().map(|p| rings_of(p, &id)).collect::<Result<_>>()?,
            _ => {
                return Err(Error::Zone {
                    id,
                    reason: "geometry must be Polygon or MultiPolygon".into(),
                })
            }
        };
        zones.push(Zone::new(id, polygons, area_ha, crs)?);
    }
    Ok(zones)
}

pub fn load_zones(path: &Path, crs: CrsMode) -> Result<Vec<Zone>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_zones(&text, crs)
}

/// Zone for one event, by index into the zone slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointAssignment {
    pub event_index: usize,
    pub zone: Option<usize>,
}

impl PointAssignment {
    pub fn zone_id<'a>(&self, zones: &'a [Zone]) -> Option<&'a str> {
        self.zone.map(|z| zones[z].zone_id.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignReport {
    pub assigned: usize,
    pub unassigned: usize,
}

/// Among zones containing `p`, the one with the smallest id.
fn best_match<'a>(zones: &[Zone], p: Coord, candidates: impl Iterator<Item = &'a u32>) -> Option<usize> {
    candidates
        .map(|&z| z as usize)
        .filter(|&z| zones[z].contains(p))
        .min_by(|&a, &b| zones[a].zone_id.cmp(&zones[b].zone_id))
}

/// Grid-indexed spatial join. Points on a shared boundary go to the
/// matching zone with the lexicographically smallest id.
pub fn assign_points(events: &[EventRecord], zones: &[Zone]) -> (Vec<PointAssignment>, AssignReport) {
    let grid = ZoneGrid::build(zones);
    let assignments: Vec<PointAssignment> = events
        .par_iter()
        .enumerate()
        .map(|(i, ev)| {
            let p = [ev.lon, ev.lat];
            PointAssignment {
                event_index: i,
                zone: best_match(zones, p, grid.candidates(p).iter()),
            }
        })
        .collect();
    let report = report_of(&assignments);
    (assignments, report)
}

/// O(points × zones) reference join with the same containment and tie rule.
pub fn assign_points_naive(events: &[EventRecord], zones: &[Zone]) -> (Vec<PointAssignment>, AssignReport) {
    let all: Vec<u32> = (0..zones.len() as u32).collect();
    let assignments: Vec<PointAssignment> = events
        .iter()
        .enumerate()
        .map(|(i, ev)| PointAssignment {
            event_index: i,
            zone: best_match(zones, [ev.lon, ev.lat], all.iter()),
        })
        .collect();
    let report = report_of(&assignments);
    (assignments, report)
}

fn report_of(assignments: &[PointAssignment]) -> AssignReport {
    let assigned = assignments.iter().filter(|a| a.zone.is_some()).count();
    AssignReport {
        assigned,
        unassigned: assignments.len() - assigned,
    }
}

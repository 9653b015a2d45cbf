//! Fusion of the per-source significant High-High clusters into an
//! eight-class zone typology, and its radial profile around a center.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{CrsMode, Source};
use crate::scalar::Scalar;
use crate::spatial_stats::{LisaResult, Quadrant};
use crate::zones::distance_m;
use crate::zones::geometry::Coord;

/// Set of sources whose significant HH cluster contains a zone, as a bit
/// mask over `Source::index()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Membership(u8);

impl Membership {
    /// Every label, in the order used for report columns.
    pub const LABELS: [&'static str; 8] = ["PFT", "PF", "PT", "FT", "P", "F", "T", "none"];

    pub fn from_sources(sources: &[Source]) -> Self {
        Membership(sources.iter().fold(0, |m, s| m | (1 << s.index())))
    }

    pub fn contains(self, s: Source) -> bool {
        self.0 & (1 << s.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn sources(self) -> Vec<Source> {
        Source::ALL.into_iter().filter(|&s| self.contains(s)).collect()
    }

    pub fn label(self) -> &'static str {
        match (self.contains(Source::Photo), self.contains(Source::Checkin), self.contains(Source::Tweet)) {
            (true, true, true) => "PFT",
            (true, true, false) => "PF",
            (true, false, true) => "PT",
            (false, true, true) => "FT",
            (true, false, false) => "P",
            (false, true, false) => "F",
            (false, false, true) => "T",
            (false, false, false) => "none",
        }
    }

    fn label_index(self) -> usize {
        Self::LABELS.iter().position(|&l| l == self.label()).expect("every membership has a label")
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypologyClass {
    pub zone_id: String,
    #[serde(serialize_with = "ser_membership")]
    pub membership: Membership,
    pub class_label: &'static str,
}

fn ser_membership<S: serde::Serializer>(m: &Membership, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.sources())
}

/// Label each zone by the sources in which it is a significant HH zone.
///
/// `lisa` pairs each source with its LISA result over `zone_ids`; every
/// result must cover the same zones and use the same significance level.
pub fn combine_hh<T: Scalar>(zone_ids: &[String], lisa: &[(Source, &LisaResult<T>)]) -> Result<Vec<TypologyClass>> {
    for (source, result) in lisa {
        if result.len() != zone_ids.len() {
            return Err(Error::Data(format!(
                "LISA for {source} covers {} zones, expected {}",
                result.len(),
                zone_ids.len()
            )));
        }
    }
    if let Some((first, rest)) = lisa.split_first() {
        if let Some((s, _)) = rest.iter().find(|(_, r)| r.alpha != first.1.alpha) {
            return Err(Error::Data(format!("LISA for {s} uses a different significance level than {}", first.0)));
        }
    }
    Ok(zone_ids
        .iter()
        .enumerate()
        .map(|(z, id)| {
            let hh: Vec<Source> = lisa
                .iter()
                .filter(|(_, r)| r.zones[z].quadrant == Quadrant::HH && r.zones[z].significant)
                .map(|(s, _)| *s)
                .collect();
            let membership = Membership::from_sources(&hh);
            TypologyClass {
                zone_id: id.clone(),
                membership,
                class_label: membership.label(),
            }
        })
        .collect())
}

/// Class mix of one distance ring around the center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientRow {
    pub ring: usize,
    pub inner_m: f64,
    pub outer_m: f64,
    pub zones: usize,
    /// Zone counts per label, in `Membership::LABELS` order.
    pub label_counts: [usize; 8],
    /// Mean number of sources per zone over all zones in the ring.
    pub mean_membership: Option<f64>,
    /// Among zones in at least one HH cluster: share in two or more.
    pub mixed_share: Option<f64>,
    /// Among zones in at least one HH cluster: share in exactly one.
    pub single_share: Option<f64>,
}

impl GradientRow {
    pub fn share(&self, label: &str) -> Option<f64> {
        let k = Membership::LABELS.iter().position(|&l| l == label)?;
        (self.zones > 0).then(|| self.label_counts[k] as f64 / self.zones as f64)
    }
}

/// Class frequencies in concentric rings of width `ring_m` around `center`.
/// `centroids[i]` belongs to `typology[i]`. Rings from 0 to the outermost
/// occupied ring are all reported, empty ones included.
pub fn specialization_gradient(
    typology: &[TypologyClass],
    centroids: &[Coord],
    center: Coord,
    ring_m: f64,
    crs: CrsMode,
) -> Result<Vec<GradientRow>> {
    if !(ring_m > 0.0) {
        return Err(Error::Config(format!("ring width must be positive, got {ring_m}")));
    }
    if typology.len() != centroids.len() {
        return Err(Error::Data(format!("{} classes for {} centroids", typology.len(), centroids.len())));
    }
    let rings: Vec<usize> = centroids.iter().map(|&c| (distance_m(center, c, crs) / ring_m).floor() as usize).collect();
    let Some(&last) = rings.iter().max() else {
        return Ok(Vec::new());
    };
    let mut rows: Vec<GradientRow> = (0..=last)
        .map(|r| GradientRow {
            ring: r,
            inner_m: r as f64 * ring_m,
            outer_m: (r + 1) as f64 * ring_m,
            zones: 0,
            label_counts: [0; 8],
            mean_membership: None,
            mixed_share: None,
            single_share: None,
        })
        .collect();
    let mut membership_sum = vec![0usize; rows.len()];
    for (class, &r) in typology.iter().zip(&rings) {
        let row = &mut rows[r];
        row.zones += 1;
        row.label_counts[class.membership.label_index()] += 1;
        membership_sum[r] += class.membership.len();
    }
    for (row, &sum) in rows.iter_mut().zip(&membership_sum) {
        if row.zones == 0 {
            continue;
        }
        row.mean_membership = Some(sum as f64 / row.zones as f64);
        let single: usize = row.label_counts[4..7].iter().sum();
        let mixed: usize = row.label_counts[..4].iter().sum();
        if single + mixed > 0 {
            row.mixed_share = Some(mixed as f64 / (single + mixed) as f64);
            row.single_share = Some(single as f64 / (single + mixed) as f64);
        }
    }
    Ok(rows)
}

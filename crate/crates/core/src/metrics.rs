//! Per-zone variables: unique-tourist counts, densities, 0–1000 rescaling,
//! descriptive statistics and hour-of-day profiles.

use std::collections::HashSet;

use chrono::Timelike;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{EventRecord, Source};
use crate::scalar::Scalar;
use crate::zones::{PointAssignment, Zone};

/// Upper end of the rescaled range.
pub const RESCALE_MAX: f64 = 1000.0;

/// Distinct-user counts per zone, one column per source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneCounts {
    /// `counts[source.index()][zone]`.
    pub counts: [Vec<u64>; 3],
}

impl ZoneCounts {
    pub fn of(&self, source: Source) -> &[u64] {
        &self.counts[source.index()]
    }
}

/// Number of distinct users with at least one event of a source in each
/// zone. `assignments[i]` belongs to `events[i]`; unassigned events are
/// ignored.
pub fn unique_tourist_counts(events: &[EventRecord], assignments: &[PointAssignment], zone_count: usize) -> ZoneCounts {
    let mut seen: HashSet<(usize, Source, &str)> = HashSet::new();
    let mut counts: [Vec<u64>; 3] = std::array::from_fn(|_| vec![0; zone_count]);
    for a in assignments {
        let Some(z) = a.zone else { continue };
        let ev = &events[a.event_index];
        if seen.insert((z, ev.source, ev.user_id.as_str())) {
            counts[ev.source.index()][z] += 1;
        }
    }
    ZoneCounts { counts }
}

/// Tourists per hectare.
pub fn density<T: Scalar>(counts: &[u64], zones: &[Zone]) -> Result<Vec<T>> {
    if counts.len() != zones.len() {
        return Err(Error::Data(format!("{} counts for {} zones", counts.len(), zones.len())));
    }
    counts
        .iter()
        .zip(zones)
        .map(|(&c, z)| {
            if !(z.area_ha > 0.0) {
                return Err(Error::Zone {
                    id: z.zone_id.clone(),
                    reason: format!("non-positive area {}", z.area_ha),
                });
            }
            Ok(T::of(c as f64 / z.area_ha))
        })
        .collect()
}

/// Min-max map onto `[0, 1000]`. A constant vector cannot be rescaled.
pub fn rescale<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    let (min, max) = values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() || !(max > min) {
        return Err(Error::DegenerateRescale);
    }
    let range = max - min;
    let top = T::of(RESCALE_MAX);
    Ok(values.iter().map(|&v| top * ((v - min) / range)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats<T> {
    pub count: usize,
    pub min: T,
    pub max: T,
    pub sum: T,
    pub mean: T,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub sd: T,
    /// `100 · sd / mean`; `None` when the mean is 0.
    pub cv: Option<T>,
}

pub fn descriptive_stats<T: Scalar>(values: &[T]) -> Result<DescriptiveStats<T>> {
    if values.is_empty() {
        return Err(Error::Data("descriptive statistics of an empty vector".into()));
    }
    let n = values.len();
    let sum: T = values.iter().copied().sum();
    let mean = sum / T::of_usize(n);
    let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let sd = if n > 1 { (ss / T::of_usize(n - 1)).sqrt() } else { T::zero() };
    let (min, max) = values.iter().fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let cv = (mean != T::zero()).then(|| T::of(100.0) * sd / mean);
    Ok(DescriptiveStats {
        count: n,
        min,
        max,
        sum,
        mean,
        sd,
        cv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalProfile {
    pub source: Source,
    pub hour_counts: [u64; 24],
    /// Fractions of the total; all zero when there are no events.
    pub hour_shares: [f64; 24],
}

impl TemporalProfile {
    pub fn total(&self) -> u64 {
        self.hour_counts.iter().sum()
    }
}

/// Hour-of-day histogram (local time) for each source, in `Source::ALL` order.
pub fn temporal_profile(events: &[EventRecord]) -> Vec<TemporalProfile> {
    let mut counts = [[0u64; 24]; 3];
    for ev in events {
        counts[ev.source.index()][ev.timestamp.hour() as usize] += 1;
    }
    Source::ALL
        .iter()
        .map(|&source| {
            let hour_counts = counts[source.index()];
            let total: u64 = hour_counts.iter().sum();
            let hour_shares = if total == 0 {
                [0.0; 24]
            } else {
                hour_counts.map(|c| c as f64 / total as f64)
            };
            TemporalProfile {
                source,
                hour_counts,
                hour_shares,
            }
        })
        .collect()
}

//! Tourist / resident labelling from the yearly span of a user's activity.

use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EventRecord, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Tourist,
    Resident,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Tourist => "tourist",
            Label::Resident => "resident",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserLabel {
    pub user_id: String,
    pub source: Source,
    pub label: Label,
    /// `(year, span_days)` for every year with at least one event, ascending.
    pub yearly_spans: Vec<(i32, i64)>,
}

impl UserLabel {
    pub fn max_span_days(&self) -> i64 {
        self.yearly_spans.iter().map(|&(_, s)| s).max().unwrap_or(0)
    }
}

pub const DEFAULT_THRESHOLD_DAYS: i64 = 7;

/// Label every `(user, source)` pair.
///
/// Within each calendar year the span is the number of whole days between
/// the first and last event date. A user is a resident if any year's span
/// exceeds `threshold_days`; a span of exactly `threshold_days` is still a
/// tourist. Output is sorted by `(source, user_id)`.
pub fn label_users(events: &[EventRecord], threshold_days: i64) -> Vec<UserLabel> {
    let mut ranges: BTreeMap<(Source, &str), BTreeMap<i32, (NaiveDate, NaiveDate)>> = BTreeMap::new();
    for ev in events {
        let date = ev.timestamp.date();
        ranges
            .entry((ev.source, ev.user_id.as_str()))
            .or_default()
            .entry(date.year())
            .and_modify(|(lo, hi)| {
                *lo = (*lo).min(date);
                *hi = (*hi).max(date);
            })
            .or_insert((date, date));
    }

    ranges
        .into_iter()
        .map(|((source, user), years)| {
            let yearly_spans: Vec<(i32, i64)> = years
                .into_iter()
                .map(|(y, (lo, hi))| (y, (hi - lo).num_days()))
                .collect();
            let label = if yearly_spans.iter().any(|&(_, s)| s > threshold_days) {
                Label::Resident
            } else {
                Label::Tourist
            };
            UserLabel {
                user_id: user.to_string(),
                source,
                label,
                yearly_spans,
            }
        })
        .collect()
}

/// Keep only events whose `(user, source)` is labelled tourist, in input
/// order. A user without a label is a consistency error.
pub fn filter_tourist_events(events: &[EventRecord], labels: &[UserLabel]) -> Result<Vec<EventRecord>> {
    let lookup: HashMap<(Source, &str), Label> = labels
        .iter()
        .map(|l| ((l.source, l.user_id.as_str()), l.label))
        .collect();
    let mut out = Vec::new();
    for ev in events {
        match lookup.get(&(ev.source, ev.user_id.as_str())) {
            Some(Label::Tourist) => out.push(ev.clone()),
            Some(Label::Resident) => {}
            None => {
                return Err(Error::MissingLabel {
                    user_id: ev.user_id.clone(),
                    source_name: ev.source.to_string(),
                })
            }
        }
    }
    Ok(out)
}

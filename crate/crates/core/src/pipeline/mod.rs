//! End-to-end runs: configuration, the on-disk store, per-stage steps,
//! the run manifest and the text report.

mod config;
mod manifest;
mod report;
pub mod stages;
mod store;

pub use config::{DisplayNames, PipelineConfig, SourceKind, SourceSpec, WeightsConfig};
pub use manifest::{sha256_file, Manifest, StageRecord, Status, MANIFEST};
pub use report::report;
pub use store::{MoranRow, Store, ZoneTable};

use crate::error::{Error, Result};
use crate::modeling::KMeansConfig;

/// Stage names in execution order.
pub const STAGES: [&str; 9] = ["ingest", "classify", "aggregate", "stats", "ols", "kmeans", "moran", "lisa", "typology"];

/// Run every stage into `cfg.out` and write the manifest. A failing stage
/// leaves its predecessors' outputs in place and a manifest marked
/// incomplete; the returned error names the stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    with_jobs(cfg.jobs, || run_in_pool(cfg))?
}

/// Run `f` on a pool of `jobs` worker threads (0 = one per core).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn run_in_pool(cfg: &PipelineConfig) -> Result<Manifest> {
    let store = Store::open(&cfg.out)?;
    let mut manifest = Manifest::new(cfg.seed, cfg.hash());
    match run_stages(cfg, &store, &mut manifest) {
        Ok(()) => {
            manifest.status = Status::Complete;
            manifest.finish(&store)?;
            Ok(manifest)
        }
        Err((stage, e)) => {
            manifest.failed_stage = Some(stage.to_string());
            manifest.error = Some(e.to_string());
            manifest.finish(&store)?;
            Err(e.in_stage(stage))
        }
    }
}

fn run_stages(cfg: &PipelineConfig, store: &Store, manifest: &mut Manifest) -> Result<(), (&'static str, Error)> {
    fn at<T>(stage: &'static str, r: Result<T>) -> Result<T, (&'static str, Error)> {
        r.map_err(|e| (stage, e))
    }

    let mut sources = cfg.sources.clone();
    sources.sort_by_key(|s| s.kind);
    let mut platforms = Vec::new();
    for spec in &sources {
        let (events, record) = at("ingest", stages::ingest(store, spec.kind, &spec.file, cfg.crs))?;
        manifest.stages.push(record);
        platforms.push((spec.kind, events));
    }

    let rule = at("classify", cfg.checkin_rule())?;
    let (classified, records) = at("classify", stages::classify(store, platforms, cfg.threshold_days, &rule))?;
    manifest.stages.extend(records);
    drop(classified.labels);

    let (table, records) = at("aggregate", stages::aggregate(store, &cfg.zones, cfg.crs, &classified.tourists))?;
    drop(classified.tourists);
    manifest.stages.extend(records);
    at("aggregate", check_conservation(manifest))?;

    at("stats", stages::stats(store, &table))?;
    if table.sources.len() > 1 {
        at("ols", stages::ols(store, &table, cfg.rescale))?;
    }
    let kcfg = KMeansConfig {
        k: cfg.k,
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..KMeansConfig::default()
    };
    at("kmeans", stages::kmeans(store, &table, &kcfg, cfg.rescale))?;

    let w = at("moran", stages::weights(&table, &cfg.weights))?;
    for &s in &table.sources {
        at("moran", stages::moran(store, &table, s, &w, cfg.permutations, cfg.seed, cfg.rescale))?;
    }
    let mut lisa = Vec::new();
    for &s in &table.sources {
        let r = at("lisa", stages::lisa(store, &table, s, &w, cfg.permutations, cfg.alpha, cfg.seed, cfg.rescale))?;
        lisa.push((s, r));
    }
    let refs: Vec<_> = lisa.iter().map(|(s, r)| (*s, r)).collect();
    let (classes, _) = at("typology", stages::typology(store, &table, &refs, cfg.center, cfg.ring_m))?;
    manifest.stages.push(
        StageRecord::new("typology", None)
            .count("zones", classes.len())
            .count("in_any_hotspot", classes.iter().filter(|c| !c.membership.is_empty()).count()),
    );
    at("typology", stages::export_map(store))?;
    Ok(())
}

/// Every accepted event is either a tourist or a resident event, every
/// tourist tweet is either a check-in or an ordinary tweet, and every
/// tourist event is either assigned to a zone or dropped as unassigned.
pub fn check_conservation(m: &Manifest) -> Result<()> {
    let fail = |what: String| Err(Error::Data(format!("count conservation violated: {what}")));
    for kind in [SourceKind::Photo, SourceKind::Tweet] {
        let k = Some(kind.as_str());
        let (Some(ing), Some(cls)) = (m.stage("ingest", k), m.stage("classify", k)) else {
            continue;
        };
        let accepted = ing.get("accepted").unwrap_or(0);
        let tourist = cls.get("tourist_events").unwrap_or(0);
        if ing.get("lines") != Some(accepted + ing.get("rejected").unwrap_or(0)) {
            return fail(format!("{} lines", kind.as_str()));
        }
        if cls.get("events") != Some(accepted) || accepted != tourist + cls.get("resident_events").unwrap_or(0) {
            return fail(format!("{} classification", kind.as_str()));
        }
        let outputs: Vec<&str> = kind.analysis_sources().iter().map(|s| s.as_str()).collect();
        if let Some(split) = m.stage("split", k) {
            let parts: u64 = outputs.iter().filter_map(|s| split.get(s)).sum();
            if split.get("tourist_events") != Some(tourist) || parts != tourist {
                return fail(format!("{} check-in split", kind.as_str()));
            }
        }
        let mut aggregated = 0;
        for s in outputs {
            if let Some(a) = m.stage("aggregate", Some(s)) {
                let events = a.get("events").unwrap_or(0);
                if a.get("assigned").unwrap_or(0) + a.get("unassigned").unwrap_or(0) != events {
                    return fail(format!("{s} spatial join"));
                }
                aggregated += events;
            }
        }
        if aggregated != tourist {
            return fail(format!("{} aggregation", kind.as_str()));
        }
    }
    Ok(())
}

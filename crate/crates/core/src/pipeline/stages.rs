use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::classify::{filter_tourist_events, label_users, Label, UserLabel};
use crate::error::{Error, Result};
use crate::ingest::{parse_events, split_checkins, CheckinRule, CrsMode, EventRecord, Source};
use crate::metrics::{density, descriptive_stats, rescale, temporal_profile, unique_tourist_counts, DescriptiveStats};
use crate::modeling::{group_profiles, kmeans as fit_kmeans, ols_bivariate, ClusterModel, KMeansConfig, RegressionResult};
use crate::spatial_stats::{build_weights_from_points, global_moran, local_moran, LisaResult, SpatialWeights};
use crate::typology::{combine_hh, specialization_gradient, GradientRow, Membership, TypologyClass};
use crate::zones::geometry::Coord;
use crate::zones::{assign_points, load_zones};

use super::config::{SourceKind, WeightsConfig};
use super::manifest::StageRecord;
use super::store::{fmt_opt, MoranRow, Store, ZoneTable};

/// Parse one raw file and store the accepted events and rejects.
pub fn ingest(store: &Store, kind: SourceKind, file: &Path, crs: CrsMode) -> Result<(Vec<EventRecord>, StageRecord)> {
    let (events, report) = parse_events(file, kind.source(), crs)?;
    store.write_ingest(kind, &events, &report)?;
    let record = StageRecord::new("ingest", Some(kind.as_str()))
        .count("lines", report.total())
        .count("accepted", report.accepted)
        .count("rejected", report.rejected);
    Ok((events, record))
}

/// Tourist events per analysis source, after labelling each platform's
/// users and splitting check-ins out of the tourist tweets.
pub struct Classified {
    pub labels: Vec<UserLabel>,
    pub tourists: Vec<(Source, Vec<EventRecord>)>,
}

pub fn classify(
    store: &Store,
    platforms: Vec<(SourceKind, Vec<EventRecord>)>,
    threshold_days: i64,
    rule: &CheckinRule,
) -> Result<(Classified, Vec<StageRecord>)> {
    if platforms.iter().all(|(_, e)| e.is_empty()) {
        return Err(Error::Data("no accepted events to classify".into()));
    }
    let mut labels = Vec::new();
    let mut tourists = Vec::new();
    let mut records = Vec::new();
    for (kind, events) in platforms {
        let platform_labels = label_users(&events, threshold_days);
        let kept = filter_tourist_events(&events, &platform_labels)?;
        let tourist_users = platform_labels.iter().filter(|l| l.label == Label::Tourist).count();
        records.push(
            StageRecord::new("classify", Some(kind.as_str()))
                .count("events", events.len())
                .count("users", platform_labels.len())
                .count("tourists", tourist_users)
                .count("residents", platform_labels.len() - tourist_users)
                .count("tourist_events", kept.len())
                .count("resident_events", events.len() - kept.len()),
        );
        labels.extend(platform_labels);
        match kind {
            SourceKind::Photo => tourists.push((Source::Photo, kept)),
            SourceKind::Tweet => {
                let total = kept.len();
                let (checkins, ordinary) = split_checkins(kept, rule);
                records.push(
                    StageRecord::new("split", Some(kind.as_str()))
                        .count("tourist_events", total)
                        .count("checkin", checkins.len())
                        .count("tweet", ordinary.len()),
                );
                tourists.push((Source::Checkin, checkins));
                tourists.push((Source::Tweet, ordinary));
            }
        }
    }
    tourists.sort_by_key(|(s, _)| *s);
    labels.sort_by(|a, b| (a.source, &a.user_id).cmp(&(b.source, &b.user_id)));
    store.write_labels(&labels)?;
    for (s, events) in &tourists {
        store.write_tourists(*s, events)?;
    }
    Ok((Classified { labels, tourists }, records))
}

/// Spatial join, unique-tourist counts, densities and rescaling.
pub fn aggregate(
    store: &Store,
    zones_path: &Path,
    crs: CrsMode,
    tourists: &[(Source, Vec<EventRecord>)],
) -> Result<(ZoneTable, Vec<StageRecord>)> {
    let zones = load_zones(zones_path, crs)?;
    if zones.is_empty() {
        return Err(Error::Data(format!("{} contains no zones", zones_path.display())));
    }
    let copy = store.path(Store::ZONES_COPY);
    fs::copy(zones_path, &copy).map_err(|e| Error::io(&copy, e))?;

    let mut table = ZoneTable {
        crs,
        zone_ids: zones.iter().map(|z| z.zone_id.clone()).collect(),
        area_ha: zones.iter().map(|z| z.area_ha).collect(),
        centroids: zones.iter().map(|z| z.centroid).collect(),
        sources: Vec::new(),
        counts: Vec::new(),
        density: Vec::new(),
        rescaled: Vec::new(),
    };
    let mut records = Vec::new();
    for (source, events) in tourists {
        let (assignments, report) = assign_points(events, &zones);
        let counts = unique_tourist_counts(events, &assignments, zones.len()).of(*source).to_vec();
        let dens: Vec<f64> = density(&counts, &zones)?;
        let resc = rescale(&dens).map_err(|e| match e {
            Error::DegenerateRescale => Error::Numeric(format!("{source} density is identical in every zone; cannot rescale")),
            e => e,
        })?;
        records.push(
            StageRecord::new("aggregate", Some(source.as_str()))
                .count("events", events.len())
                .count("assigned", report.assigned)
                .count("unassigned", report.unassigned)
                .count("occupied_zones", counts.iter().filter(|&&c| c > 0).count())
                .count("user_zone_pairs", counts.iter().sum::<u64>() as usize),
        );
        table.sources.push(*source);
        table.counts.push(counts);
        table.density.push(dens);
        table.rescaled.push(resc);
    }
    store.write_table(&table)?;
    let all: Vec<EventRecord> = tourists.iter().flat_map(|(_, e)| e.iter().cloned()).collect();
    let profiles: Vec<_> = temporal_profile(&all)
        .into_iter()
        .filter(|p| table.sources.contains(&p.source))
        .collect();
    store.write_temporal(&profiles)?;
    Ok((table, records))
}

/// Descriptive statistics per source, raw and rescaled.
pub struct StatsRow {
    pub source: Source,
    pub raw: DescriptiveStats<f64>,
    pub rescaled: DescriptiveStats<f64>,
}

pub fn stats(store: &Store, table: &ZoneTable) -> Result<Vec<StatsRow>> {
    let rows: Vec<StatsRow> = table
        .sources
        .iter()
        .map(|&s| {
            Ok(StatsRow {
                source: s,
                raw: descriptive_stats(table.density_of(s)?)?,
                rescaled: descriptive_stats(table.rescaled_of(s)?)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut header = vec!["block", "statistic"];
    header.extend(table.sources.iter().map(|s| s.as_str()));
    let mut csv_rows = Vec::new();
    for (block, pick) in [("raw", 0), ("rescaled", 1)] {
        let stat = |r: &StatsRow| if pick == 0 { r.raw } else { r.rescaled };
        let lines: [(&str, Box<dyn Fn(&DescriptiveStats<f64>) -> String>); 7] = [
            ("count", Box::new(|d| d.count.to_string())),
            ("min", Box::new(|d| d.min.to_string())),
            ("max", Box::new(|d| d.max.to_string())),
            ("sum", Box::new(|d| d.sum.to_string())),
            ("mean", Box::new(|d| d.mean.to_string())),
            ("sd", Box::new(|d| d.sd.to_string())),
            ("cv", Box::new(|d| fmt_opt(d.cv))),
        ];
        for (name, f) in &lines {
            let mut r = vec![block.to_string(), name.to_string()];
            r.extend(rows.iter().map(|row| f(&stat(row))));
            csv_rows.push(r);
        }
    }
    store.write_table_csv("stats.table1.csv", &header, &csv_rows)?;
    Ok(rows)
}

/// Regression of `y` on `x` for one pair of sources.
pub struct PairFit {
    pub y: Source,
    pub x: Source,
    pub fit: RegressionResult<f64>,
}

/// All pairs with `y` earlier than `x` in source order.
pub fn ols(store: &Store, table: &ZoneTable, rescaled: bool) -> Result<Vec<PairFit>> {
    let mut fits = Vec::new();
    for (a, &y) in table.sources.iter().enumerate() {
        for &x in &table.sources[a + 1..] {
            let fit = ols_bivariate(table.values(x, rescaled)?, table.values(y, rescaled)?)?;
            fits.push(PairFit { y, x, fit });
        }
    }
    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|p| {
            vec![
                p.y.as_str().into(),
                p.x.as_str().into(),
                p.fit.n.to_string(),
                p.fit.slope.to_string(),
                p.fit.intercept.to_string(),
                p.fit.r2.to_string(),
                p.fit.adj_r2.to_string(),
                p.fit.slope_t.to_string(),
                p.fit.p_value.to_string(),
                (p.fit.p_value < 0.01).to_string(),
            ]
        })
        .collect();
    store.write_table_csv(
        "ols.table2.csv",
        &["y_source", "x_source", "n", "slope", "intercept", "r2", "adj_r2", "slope_t", "p_value", "significant_001"],
        &rows,
    )?;
    let mut header = vec!["zone_id".to_string()];
    for p in &fits {
        header.push(format!("residual_{}_{}", p.y, p.x));
        header.push(format!("stdres_{}_{}", p.y, p.x));
    }
    let rows: Vec<Vec<String>> = (0..table.len())
        .map(|z| {
            let mut r = vec![table.zone_ids[z].clone()];
            for p in &fits {
                r.push(p.fit.residuals[z].to_string());
                r.push(p.fit.standardized_residuals[z].to_string());
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    store.write_table_csv("ols.residuals.csv", &header, &rows)?;
    Ok(fits)
}

pub fn kmeans(store: &Store, table: &ZoneTable, cfg: &KMeansConfig, rescaled: bool) -> Result<ClusterModel<f64>> {
    let variables: Vec<Vec<f64>> = table
        .sources
        .iter()
        .map(|&s| table.values(s, rescaled).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    let points: Vec<Vec<f64>> = (0..table.len()).map(|z| variables.iter().map(|v| v[z]).collect()).collect();
    let model = fit_kmeans(&points, cfg)?;
    let rows: Vec<Vec<String>> = table
        .zone_ids
        .iter()
        .zip(&model.assignments)
        .map(|(id, g)| vec![id.clone(), g.to_string()])
        .collect();
    store.write_table_csv("kmeans.clusters.csv", &["zone_id", "cluster_group"], &rows)?;

    let profiles = group_profiles(&model, &variables)?;
    let mut header = vec!["group".to_string(), "count".to_string()];
    for s in &table.sources {
        header.push(format!("{s}_mean"));
        header.push(format!("{s}_sd"));
    }
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let mut r = vec![p.group.map_or("Total".into(), |g| g.to_string()), p.count.to_string()];
            for (m, sd) in p.means.iter().zip(&p.sds) {
                r.push(m.to_string());
                r.push(sd.to_string());
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    store.write_table_csv("kmeans.table3.csv", &header, &rows)?;
    store.write_json(
        "kmeans.model.json",
        &json!({
            "k": model.k,
            "restarts": model.restarts,
            "seed": model.seed,
            "best_restart": model.best_restart,
            "inertia": model.inertia,
            "inertia_trace": model.inertia_trace,
            "centers": model.centers,
            "variables": table.sources,
        }),
    )?;
    Ok(model)
}

pub fn weights(table: &ZoneTable, cfg: &WeightsConfig) -> Result<SpatialWeights<f64>> {
    build_weights_from_points(&table.centroids, table.crs, cfg.threshold_m, cfg.row_standardize)
}

pub fn moran(
    store: &Store,
    table: &ZoneTable,
    source: Source,
    w: &SpatialWeights<f64>,
    permutations: usize,
    seed: u64,
    rescaled: bool,
) -> Result<MoranRow> {
    let m = global_moran(table.values(source, rescaled)?, w, permutations, seed)?;
    let row = MoranRow {
        source,
        n: w.n(),
        i: m.i,
        expected: m.expected,
        variance: m.variance,
        z_score: m.z_score,
        p_value: m.p_value,
        perm_p: m.perm_p,
        permutations,
        seed,
        threshold_m: w.threshold_m,
        row_standardized: w.row_standardized,
    };
    store.upsert_moran(row.clone())?;
    Ok(row)
}

#[allow(clippy::too_many_arguments)]
pub fn lisa(
    store: &Store,
    table: &ZoneTable,
    source: Source,
    w: &SpatialWeights<f64>,
    permutations: usize,
    alpha: f64,
    seed: u64,
    rescaled: bool,
) -> Result<LisaResult<f64>> {
    let result = local_moran(table.values(source, rescaled)?, w, permutations, alpha, seed)?;
    store.write_lisa(source, &table.zone_ids, &result)?;
    Ok(result)
}

pub fn typology(
    store: &Store,
    table: &ZoneTable,
    lisa: &[(Source, &LisaResult<f64>)],
    center: Option<Coord>,
    ring_m: f64,
) -> Result<(Vec<TypologyClass>, Vec<GradientRow>)> {
    let classes = combine_hh(&table.zone_ids, lisa)?;
    let center = center.unwrap_or_else(|| table.mean_centroid());
    let gradient = specialization_gradient(&classes, &table.centroids, center, ring_m, table.crs)?;
    store.write_typology(&classes)?;

    let mut header = vec!["ring".to_string(), "inner_m".into(), "outer_m".into(), "zones".into()];
    header.extend(Membership::LABELS.iter().map(|l| format!("n_{l}")));
    header.extend(["mean_membership", "mixed_share", "single_share"].map(String::from));
    let rows: Vec<Vec<String>> = gradient
        .iter()
        .map(|g| {
            let mut r = vec![g.ring.to_string(), g.inner_m.to_string(), g.outer_m.to_string(), g.zones.to_string()];
            r.extend(g.label_counts.iter().map(|c| c.to_string()));
            r.extend([g.mean_membership, g.mixed_share, g.single_share].map(fmt_opt));
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    store.write_table_csv("typology.gradient.csv", &header, &rows)?;
    store.write_json("typology.center.json", &json!({ "center": center, "ring_m": ring_m }))?;
    Ok((classes, gradient))
}

/// Load the LISA results present in the store, in source order.
pub fn stored_lisa(store: &Store, table: &ZoneTable) -> Result<Vec<(Source, LisaResult<f64>)>> {
    let mut out = Vec::new();
    for &s in &table.sources {
        if let Some((ids, result)) = store.read_lisa(s)? {
            if ids != table.zone_ids {
                return Err(Error::Data(format!("LISA for {s} was computed over different zones")));
            }
            out.push((s, result));
        }
    }
    if out.is_empty() {
        return Err(Error::Data("no LISA results in the store; run lisa first".into()));
    }
    Ok(out)
}

/// Zones GeoJSON carrying every per-zone result currently in the store.
pub fn export_map(store: &Store) -> Result<PathBuf> {
    let table = store.read_table()?;
    let copy = store.path(Store::ZONES_COPY);
    let text = fs::read_to_string(&copy).map_err(|e| Error::io(&copy, e))?;
    let mut gj: Value = serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", copy.display())))?;
    let features = gj
        .get_mut("features")
        .and_then(Value::as_array_mut)
        .filter(|f| f.len() == table.len())
        .ok_or_else(|| Error::Data(format!("{} does not match the zone table", copy.display())))?;

    let mut columns: Vec<(String, Vec<Value>)> = Vec::new();
    let num = |v: f64| serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number);
    for (c, s) in table.sources.iter().enumerate() {
        columns.push((format!("{s}_count"), table.counts[c].iter().map(|&v| json!(v)).collect()));
        columns.push((format!("{s}_density"), table.density[c].iter().map(|&v| num(v)).collect()));
        columns.push((format!("{s}_rescaled"), table.rescaled[c].iter().map(|&v| num(v)).collect()));
    }
    let mut by_file = |name: &str, keep: &dyn Fn(&str) -> Option<String>, parse: &dyn Fn(&str) -> Value| -> Result<()> {
        if !store.has(name) {
            return Ok(());
        }
        let (header, rows) = store.read_table_csv(name)?;
        if rows.len() != table.len() || rows.iter().zip(&table.zone_ids).any(|(r, id)| &r[0] != id) {
            return Err(Error::Data(format!("{name} does not match the zone table")));
        }
        for (k, col) in header.iter().enumerate().skip(1) {
            if let Some(prop) = keep(col) {
                columns.push((prop, rows.iter().map(|r| parse(&r[k])).collect()));
            }
        }
        Ok(())
    };
    let float = |s: &str| s.parse::<f64>().map_or(Value::Null, num);
    let text_value = |s: &str| Value::String(s.to_string());
    by_file("kmeans.clusters.csv", &|c| Some(c.to_string()), &|s| s.parse::<u64>().map_or(Value::Null, |v| json!(v)))?;
    by_file("ols.residuals.csv", &|c| c.starts_with("stdres_").then(|| c.to_string()), &float)?;
    for s in &table.sources {
        let prop = format!("lisa_{s}");
        by_file(&Store::lisa_name(*s), &|c| (c == "label").then(|| prop.clone()), &text_value)?;
    }
    by_file("typology.classes.csv", &|c| (c == "typology").then(|| c.to_string()), &text_value)?;

    for (z, feature) in features.iter_mut().enumerate() {
        let props = feature
            .as_object_mut()
            .ok_or_else(|| Error::Data("feature is not an object".into()))?
            .entry("properties")
            .or_insert_with(|| json!({}));
        if props.is_null() {
            *props = json!({});
        }
        let props = props.as_object_mut().ok_or_else(|| Error::Data("properties is not an object".into()))?;
        props.insert("zone_id".into(), Value::String(table.zone_ids[z].clone()));
        props.insert("area_ha".into(), num(table.area_ha[z]));
        for (name, values) in &columns {
            props.insert(name.clone(), values[z].clone());
        }
    }
    let text = serde_json::to_string(&gj).expect("serializable") + "\n";
    store.write_text("map.geojson", &text)
}

/// Counts per class label, for summaries.
pub fn typology_counts(classes: &[(String, String)]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (_, label) in classes {
        *out.entry(label.clone()).or_insert(0) += 1;
    }
    out
}

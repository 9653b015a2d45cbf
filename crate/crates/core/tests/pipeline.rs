mod common;

use std::fs;

use footprint::pipeline::{run_pipeline, Manifest, Status, Store, STAGES};
use footprint::ErrorKind;

#[test]
fn run_writes_every_stage_and_conserves_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::city_config(&common::typology_city(), dir.path());
    cfg.permutations = 199;
    cfg.restarts = 5;
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(m.status, Status::Complete);
    for name in [
        "ingest.photo.ndjson",
        "ingest.tweet.ndjson",
        "classify.labels.csv",
        "classify.checkin.ndjson",
        "aggregate.metrics.csv",
        "stats.table1.csv",
        "ols.table2.csv",
        "ols.residuals.csv",
        "kmeans.table3.csv",
        "moran.table4.csv",
        "lisa.photo.csv",
        "lisa.tweet.csv",
        "typology.classes.csv",
        "typology.gradient.csv",
        "map.geojson",
        "manifest.json",
    ] {
        assert!(cfg.out.join(name).is_file(), "{name}");
    }
    let store = Store::existing(&cfg.out).unwrap();
    assert_eq!(Manifest::load(&store).unwrap(), m);
    let photo = m.stage("ingest", Some("photo")).unwrap();
    let cls = m.stage("classify", Some("photo")).unwrap();
    assert_eq!(photo.get("accepted"), cls.get("events"));
    assert!(cls.get("resident_events").unwrap() > 0);

    let map: serde_json::Value = serde_json::from_str(&fs::read_to_string(cfg.out.join("map.geojson")).unwrap()).unwrap();
    let props = &map["features"][0]["properties"];
    for key in ["lisa_photo", "lisa_checkin", "lisa_tweet", "cluster_group", "typology", "stdres_photo_checkin", "photo_rescaled"] {
        assert!(!props[key].is_null(), "{key}");
    }
    assert_eq!(STAGES.len(), 9);
}

#[test]
fn identical_runs_have_identical_manifests() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = common::city_config(&common::typology_city(), dir.path());
        cfg.permutations = 99;
        cfg.restarts = 3;
        let m = run_pipeline(&cfg).unwrap();
        let bytes = fs::read(cfg.out.join("manifest.json")).unwrap();
        (m.outputs, bytes)
    };
    let (a, a_bytes) = run();
    let (b, b_bytes) = run();
    assert_eq!(a, b);
    assert_eq!(a_bytes, b_bytes);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let run = |jobs| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = common::city_config(&common::typology_city(), dir.path());
        cfg.permutations = 99;
        cfg.restarts = 3;
        cfg.jobs = jobs;
        run_pipeline(&cfg).unwrap().outputs
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn missing_zones_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::city_config(&common::typology_city(), dir.path());
    cfg.zones = dir.path().join("nope.geojson");
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
    assert_eq!(err.kind().exit_code(), 2);
    assert!(!cfg.out.join("manifest.json").exists());
}

#[test]
fn failing_stage_leaves_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::city_config(&common::typology_city(), dir.path());
    // More groups than distinct zone profiles.
    cfg.k = 100_000;
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.kind().exit_code(), 4);
    assert!(err.to_string().contains("kmeans"));
    let m = Manifest::load(&Store::existing(&cfg.out).unwrap()).unwrap();
    assert_eq!(m.status, Status::Incomplete);
    assert_eq!(m.failed_stage.as_deref(), Some("kmeans"));
    assert!(m.outputs.contains_key("stats.table1.csv"));
    assert!(!m.outputs.contains_key("lisa.photo.csv"));
}

#[test]
fn zones_outside_data_give_numeric_error_for_constant_density() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::city_config(&common::typology_city(), dir.path());
    let far = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"id":"a"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
        {"type":"Feature","properties":{"id":"b"},"geometry":{"type":"Polygon","coordinates":[[[2,0],[3,0],[3,1],[2,1],[2,0]]]}}]}"#;
    fs::write(&cfg.zones, far).unwrap();
    cfg.out = dir.path().join("out2");
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.kind().exit_code(), 4);
    let m = Manifest::load(&Store::existing(&cfg.out).unwrap()).unwrap();
    assert_eq!(m.failed_stage.as_deref(), Some("aggregate"));
}

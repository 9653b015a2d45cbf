#![allow(dead_code)]

use std::path::{Path, PathBuf};

use footprint::pipeline::PipelineConfig;
use footprint::synth::{generate, CityScenario};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn typology_city() -> CityScenario {
    CityScenario::load(&data("typology_city.toml")).unwrap()
}

/// Write a synthetic city into `dir` and return its pipeline config with
/// paths resolved.
pub fn city_config(scenario: &CityScenario, dir: &Path) -> PipelineConfig {
    let files = generate(scenario).unwrap().write(dir).unwrap();
    PipelineConfig::load(&files.config).unwrap()
}

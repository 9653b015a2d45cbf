//! Tourist footprint analysis from geotagged social media.
//!
//! Events from photo and microblog platforms are split into tourist and
//! resident activity, counted per zone as unique tourists per hectare, and
//! analyzed with pairwise regressions, K-means, global Moran's I and local
//! Moran (LISA). Significant High-High clusters from each source are fused
//! into a zone typology.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`, which the pipeline uses throughout.

pub mod classify;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod modeling;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod spatial_stats;
pub mod synth;
pub mod typology;
pub mod zones;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type SpatialWeights64 = spatial_stats::SpatialWeights<f64>;
pub type MoranResult64 = spatial_stats::MoranResult<f64>;
pub type LisaResult64 = spatial_stats::LisaResult<f64>;
pub type LocalMoran64 = spatial_stats::LocalMoran<f64>;
pub type RegressionResult64 = modeling::RegressionResult<f64>;
pub type ClusterModel64 = modeling::ClusterModel<f64>;
pub type GroupProfile64 = modeling::GroupProfile<f64>;
pub type DescriptiveStats64 = metrics::DescriptiveStats<f64>;

pub type SpatialWeights32 = spatial_stats::SpatialWeights<f32>;
pub type MoranResult32 = spatial_stats::MoranResult<f32>;
pub type LisaResult32 = spatial_stats::LisaResult<f32>;

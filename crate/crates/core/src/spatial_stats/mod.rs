//! Inverse-distance band weights, global Moran's I and local Moran (LISA).

mod lisa;
mod moran;
mod weights;

pub use lisa::{local_moran, local_statistics, LisaResult, LocalMoran, Quadrant};
pub use moran::{global_moran, moran_statistic, permutation_draws, MoranResult};
pub use weights::{build_weights, build_weights_from_points, SpatialWeights, MIN_DISTANCE_M};

#[cfg(test)]
mod tests;

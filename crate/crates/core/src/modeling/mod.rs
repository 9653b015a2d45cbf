//! Bivariate OLS between sources and K-means zone typology.

mod kmeans;
mod ols;

pub use kmeans::{group_profiles, kmeans, nearest, ClusterModel, GroupProfile, KMeansConfig};
pub use ols::{ols_bivariate, RegressionResult};

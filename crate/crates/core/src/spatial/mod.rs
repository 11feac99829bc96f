//! Nearest cost-optimal charging lookup and spatio-temporal delivery clustering.

mod dbscan;
mod kdtree;

pub use dbscan::{cluster_instance, st_dbscan, st_dbscan_indexed, DbscanParams, DeliveryCluster};
pub use kdtree::{squared_distance, Normalization, NormalizedKdTree, SpatialError, TreePoint};

pub mod cloud;
pub mod cloud_prep;
pub mod codebook;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
mod json;
pub mod knn;
pub mod matching;
pub mod model_ingest;
pub mod pipeline;
pub mod raster;
pub mod synthetic;

pub use cloud::{Point, PointCloud};
pub use error::{Error, Result};

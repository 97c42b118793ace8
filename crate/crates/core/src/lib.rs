//! Estimating demographic counts of geographic units from the text of
//! geotagged short messages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod features;
pub mod geomap;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod tokenize;

pub use error::{Error, ErrorKind, Result};
pub use eval::{Split, SplitAssignment};
pub use features::{FeatureConfig, Scheme, SparseVector, Transform};
pub use geomap::{GeoUnit, Point, Resolution};
pub use ingest::{BoundingBox, RawRecord};
pub use model::{RegressionModel, TrainConfig, Variant};

//! Correlation dimension for sparse 0/1 data.
//!
//! The crate estimates the distribution of the L1 distance between two random
//! rows of a binary dataset, fits the log-log slope of its CDF (the correlation
//! dimension), and rescales that slope into a column count by matching it
//! against datasets with independent columns (the normalized correlation
//! dimension). PCA, average correlation and k-means are provided as baselines,
//! and [`harness`] drives the synthetic and real-data experiments.
//!
//! ```
//! use cordim::{dataset, distdist, dimension};
//!
//! let d = dataset::load_dataset("0 2\n1\n0 1 2\n".as_bytes(), dataset::Format::Fimi).unwrap();
//! let cdf = distdist::exact_cdf(&d).unwrap();
//! let est = dimension::cd_r(&cdf, 1.0, 3.0, 2).unwrap();
//! assert!(est.slope > 0.0);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod dimension;
pub mod distdist;
mod error;
pub mod harness;
pub mod normal;
pub mod rng;
pub mod stats;

pub use baselines::{Clustering, PcaSummary};
pub use dataset::{BinaryDataset, Format, MarginProfile, ProfileKind};
pub use dimension::{DimConfig, DimensionEstimate, NormalizedResult};
pub use distdist::{CdfBasis, DistanceCdf};
pub use error::{Error, Result};

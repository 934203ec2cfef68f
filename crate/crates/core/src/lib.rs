//! Variable-density Poisson-disc sampling for k-space undersampling masks.
//!
//! The fast generator sizes a background grid from the smallest threshold
//! distance `r_min` and lets every cell list the points whose threshold ball
//! reaches it, so a candidate is tested against a single cell list. The crate
//! also carries the constant-radius and `r_max` list-grid baselines, a dart
//! throwing oracle, direction-dependent density by axis scaling, a bisection
//! search for a target acceleration rate, quality metrics and file formats.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod grid;
pub mod mask;
pub mod rate;
pub mod radius;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use geometry::{Domain, Point};
pub use radius::{ConstantField, CustomField, GammaFamily, ParametricField, RadiusBounds, RadiusField};
pub use rng::RngState;
pub use sampler::{Algorithm, ConflictRule, GenerateOptions, PatternMeta, PointSet, SamplePattern};

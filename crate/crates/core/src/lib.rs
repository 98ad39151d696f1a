//! Stereo disparity estimation fused with sparse range measurements.
//!
//! The pipeline builds census-transform matching costs over a disparity
//! search range, optionally rewrites the cost volume from sparse LIDAR/ToF
//! style seeds (naive injection, neighborhood promotion, or a bilateral
//! interpolation field with confidence gating), aggregates costs along 4 or
//! 8 scanline directions, and selects disparities winner-take-all. A
//! seed-only anisotropic diffusion baseline, dataset loaders, synthetic
//! scene generation, and evaluation metrics round out the toolkit.

pub mod census;
pub mod datasets;
pub mod disparity;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod gray;
pub mod params;
pub mod pipeline;
pub mod seeds;
pub mod sgm;
pub mod synthetic;
pub mod volume;

pub use census::{build_cost_volume, census_transform, hamming, BitVector, CensusImage};
pub use disparity::{DisparityMap, INVALID_DISPARITY};
pub use error::{Error, Result};
pub use fusion::{
    anisotropic_baseline, diffusion_update, interpolate_seeds, naive_update, neighborhood_update,
    InterpolationField,
};
pub use gray::GrayImage;
pub use params::FusionParams;
pub use pipeline::{run_method, Method, PipelineOptions, StageTimings};
pub use seeds::{Seed, SeedSet};
pub use sgm::{aggregate_all, aggregate_path, select_disparity, AggregatedVolume, PathDirection};
pub use volume::{CostVolume, COST_CAP};

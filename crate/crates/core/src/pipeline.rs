//! End-to-end disparity estimation: census costs, optional seed fusion,
//! scanline aggregation, winner-take-all selection.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::census::{build_cost_volume, census_transform};
use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::fusion::{
    anisotropic_baseline, diffusion_update, interpolate_seeds, naive_update, neighborhood_update,
};
use crate::gray::GrayImage;
use crate::params::FusionParams;
use crate::seeds::SeedSet;
use crate::sgm::{aggregate_all, select_disparity};

/// Disparity estimation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sgm,
    Naive,
    Neighborhood,
    Diffusion,
    AnisoBaseline,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Sgm,
        Method::Naive,
        Method::Neighborhood,
        Method::Diffusion,
        Method::AnisoBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgm => "sgm",
            Method::Naive => "naive",
            Method::Neighborhood => "neighborhood",
            Method::Diffusion => "diffusion",
            Method::AnisoBaseline => "aniso-baseline",
        }
    }

    /// Whether the strategy consumes sparse seeds.
    pub fn uses_seeds(self) -> bool {
        !matches!(self, Method::Sgm)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown method {s:?}, expected one of sgm | naive | neighborhood | diffusion | aniso-baseline"
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings for the monocular diffusion baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnisoOptions {
    pub iterations: usize,
    pub kappa: f32,
    pub lambda: f32,
}

impl Default for AnisoOptions {
    fn default() -> Self {
        Self {
            iterations: 500,
            kappa: 10.0,
            lambda: 0.2,
        }
    }
}

/// Stage settings that sit outside [`FusionParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub census_radius: usize,
    pub aniso: AnisoOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            census_radius: 2,
            aniso: AnisoOptions::default(),
        }
    }
}

/// Wall-clock milliseconds per stage; `total_ms` is the sum of the parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub census_ms: f64,
    pub agg_ms: f64,
    pub fusion_ms: f64,
    pub total_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Runs one strategy end to end. Seed-consuming methods require `seeds`;
/// an empty seed set degrades them to plain aggregation.
pub fn run_method(
    left: &GrayImage,
    right: &GrayImage,
    seeds: Option<&SeedSet>,
    method: Method,
    params: &FusionParams,
    opts: &PipelineOptions,
) -> Result<(DisparityMap, StageTimings)> {
    params.validate()?;
    let seeds = match (method.uses_seeds(), seeds) {
        (true, None) => {
            return Err(Error::EmptyInput(format!(
                "method {method} requires a seed set"
            )))
        }
        (true, Some(s)) => Some(s),
        (false, _) => None,
    };

    let mut timings = StageTimings::default();
    if method == Method::AnisoBaseline {
        let t = Instant::now();
        let map = anisotropic_baseline(
            left,
            seeds.unwrap(),
            opts.aniso.iterations,
            opts.aniso.kappa,
            opts.aniso.lambda,
        )?;
        timings.fusion_ms = ms_since(t);
        timings.total_ms = timings.fusion_ms;
        return Ok((map, timings));
    }

    let t = Instant::now();
    let census_left = census_transform(left, opts.census_radius)?;
    let census_right = census_transform(right, opts.census_radius)?;
    let mut volume = build_cost_volume(&census_left, &census_right, params.d_max)?;
    timings.census_ms = ms_since(t);

    if let Some(seeds) = seeds.filter(|s| !s.is_empty()) {
        let t = Instant::now();
        match method {
            Method::Naive => naive_update(&mut volume, seeds)?,
            Method::Neighborhood => neighborhood_update(&mut volume, seeds, left, params)?,
            Method::Diffusion => {
                let field = interpolate_seeds(seeds, left, params)?;
                diffusion_update(&mut volume, &field, params)?;
            }
            Method::Sgm | Method::AnisoBaseline => unreachable!(),
        }
        timings.fusion_ms = ms_since(t);
    }

    let t = Instant::now();
    let aggregated = aggregate_all(&volume, params)?;
    let map = select_disparity(&aggregated);
    timings.agg_ms = ms_since(t);

    timings.total_ms = timings.census_ms + timings.fusion_ms + timings.agg_ms;
    Ok((map, timings))
}

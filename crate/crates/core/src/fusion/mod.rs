//! Injection of sparse range seeds into the cost volume: the naive
//! single-cell rewrite, neighborhood promotion, the interpolation-driven
//! diffusion update, and a seeds-only anisotropic diffusion baseline.

mod aniso;
mod diffusion;
mod interpolate;
mod neighborhood;

pub use aniso::anisotropic_baseline;
pub use diffusion::diffusion_update;
pub use interpolate::{interpolate_seeds, InterpolationField};
pub use neighborhood::{neighborhood_update, weight_window, WeightWindow};

use crate::error::{Error, Result};
use crate::seeds::{Seed, SeedSet};
use crate::volume::CostVolume;

/// Nearest disparity level, ties toward the lower level, clamped to the
/// volume's range.
pub(crate) fn round_to_level(d: f32, d_max: usize) -> usize {
    ((d - 0.5).ceil().max(0.0) as usize).min(d_max)
}

pub(crate) fn check_seed_dims(seeds: &SeedSet, width: usize, height: usize) -> Result<()> {
    if seeds.width() != width || seeds.height() != height {
        return Err(Error::DimensionMismatch(format!(
            "seed set built for {}x{} applied to a {}x{} image",
            seeds.width(),
            seeds.height(),
            width,
            height
        )));
    }
    Ok(())
}

pub(crate) fn check_guide_dims(guide: &crate::gray::GrayImage, width: usize, height: usize) -> Result<()> {
    if guide.width() != width || guide.height() != height {
        return Err(Error::DimensionMismatch(format!(
            "guide image is {}x{}, expected {}x{}",
            guide.width(),
            guide.height(),
            width,
            height
        )));
    }
    Ok(())
}

/// Uniform grid over seed positions so a pixel's nearby seeds are found by
/// inspecting at most the 3x3 surrounding buckets.
pub(crate) struct SeedGrid<'a> {
    seeds: &'a [Seed],
    cell: usize,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> SeedGrid<'a> {
    /// `cell` must be at least the query radius so 3x3 buckets cover it.
    pub fn new(seeds: &'a [Seed], width: usize, height: usize, cell: usize) -> Self {
        let cols = width.div_ceil(cell).max(1);
        let rows = height.div_ceil(cell).max(1);
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, s) in seeds.iter().enumerate() {
            buckets[(s.y / cell) * cols + s.x / cell].push(i as u32);
        }
        Self {
            seeds,
            cell,
            cols,
            rows,
            buckets,
        }
    }

    /// Seeds in the 3x3 bucket neighborhood of `(x, y)`, in a fixed
    /// (bucket-major, then seed-order) sequence.
    pub fn candidates(&self, x: usize, y: usize) -> impl Iterator<Item = &Seed> + '_ {
        let bx = x / self.cell;
        let by = y / self.cell;
        let x0 = bx.saturating_sub(1);
        let y0 = by.saturating_sub(1);
        let x1 = (bx + 1).min(self.cols - 1);
        let y1 = (by + 1).min(self.rows - 1);
        (y0..=y1).flat_map(move |gy| {
            (x0..=x1).flat_map(move |gx| {
                self.buckets[gy * self.cols + gx]
                    .iter()
                    .map(|&i| &self.seeds[i as usize])
            })
        })
    }
}

/// Zeroes the cost at each seed's measured disparity level and touches
/// nothing else.
pub fn naive_update(volume: &mut CostVolume, seeds: &SeedSet) -> Result<()> {
    check_seed_dims(seeds, volume.width(), volume.height())?;
    let d_max = volume.d_max();
    for s in seeds.seeds() {
        let level = round_to_level(s.d, d_max);
        volume.set(s.x, s.y, level, 0);
    }
    Ok(())
}

//! Bilateral interpolation of sparse seeds into a dense disparity field with
//! a per-pixel confidence weight.

use rayon::prelude::*;

use crate::disparity::INVALID_DISPARITY;
use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::params::FusionParams;
use crate::seeds::SeedSet;

use super::{check_seed_dims, SeedGrid};

/// Interpolated disparity and confidence per pixel. Pixels with no seed
/// within the interpolation radius hold the invalid marker and confidence 0.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationField {
    width: usize,
    height: usize,
    disparity: Vec<f32>,
    confidence: Vec<f32>,
    weight_sum: Vec<f32>,
}

impl InterpolationField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn disparity(&self, x: usize, y: usize) -> f32 {
        self.disparity[y * self.width + x]
    }

    /// Largest single-seed bilateral weight at the pixel, in [0, 1].
    #[inline]
    pub fn confidence(&self, x: usize, y: usize) -> f32 {
        self.confidence[y * self.width + x]
    }

    /// Raw sum of contributing weights, kept for diagnostics.
    #[inline]
    pub fn weight_sum(&self, x: usize, y: usize) -> f32 {
        self.weight_sum[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.disparity[y * self.width + x].is_finite()
    }

    pub fn disparity_data(&self) -> &[f32] {
        &self.disparity
    }

    pub fn confidence_data(&self) -> &[f32] {
        &self.confidence
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        disparity: Vec<f32>,
        confidence: Vec<f32>,
    ) -> Self {
        assert_eq!(disparity.len(), width * height);
        assert_eq!(confidence.len(), width * height);
        let weight_sum = confidence.clone();
        Self {
            width,
            height,
            disparity,
            confidence,
            weight_sum,
        }
    }

    /// Field with every pixel invalid; used to express "no seed input".
    pub fn all_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            disparity: vec![INVALID_DISPARITY; width * height],
            confidence: vec![0.0; width * height],
            weight_sum: vec![0.0; width * height],
        }
    }
}

/// Interpolates every pixel from the seeds within `k_interp` pixels
/// (Euclidean) as a bilateral-weighted average; the confidence is the
/// largest single-seed weight.
pub fn interpolate_seeds(
    seeds: &SeedSet,
    guide: &GrayImage,
    params: &FusionParams,
) -> Result<InterpolationField> {
    params.validate()?;
    check_seed_dims(seeds, guide.width(), guide.height())?;
    if seeds.is_empty() {
        return Err(Error::EmptyInput(
            "seed interpolation requires at least one seed".to_string(),
        ));
    }

    let (w, h) = (guide.width(), guide.height());
    let k = params.k_interp;
    let grid = SeedGrid::new(seeds.seeds(), w, h, k);

    // Both Gaussian kernels are exact memoizations: intensity differences
    // and squared pixel distances only take integer values.
    let denom_r = 2.0 * (params.sigma_r as f64) * (params.sigma_r as f64);
    let intensity_lut: Vec<f64> = (0..256)
        .map(|d| (-((d * d) as f64) / denom_r).exp())
        .collect();
    let denom_d = 2.0 * (params.sigma_d as f64) * (params.sigma_d as f64);
    let spatial_lut: Vec<f64> = (0..=k * k)
        .map(|r2| (-(r2 as f64) / denom_d).exp())
        .collect();
    let k2 = k * k;

    let mut disparity = vec![INVALID_DISPARITY; w * h];
    let mut confidence = vec![0.0f32; w * h];
    let mut weight_sum = vec![0.0f32; w * h];

    disparity
        .par_chunks_mut(w)
        .zip(confidence.par_chunks_mut(w))
        .zip(weight_sum.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((disp_row, conf_row), sum_row))| {
            for x in 0..w {
                let center = guide.get(x, y) as i64;
                let mut sum = 0.0f64;
                let mut weighted = 0.0f64;
                let mut peak = 0.0f64;
                for s in grid.candidates(x, y) {
                    let r2 = s.x.abs_diff(x).pow(2) + s.y.abs_diff(y).pow(2);
                    if r2 > k2 {
                        continue;
                    }
                    let di = (guide.get(s.x, s.y) as i64 - center).unsigned_abs() as usize;
                    let weight = intensity_lut[di] * spatial_lut[r2];
                    sum += weight;
                    weighted += weight * s.d as f64;
                    peak = peak.max(weight);
                }
                if sum > 0.0 {
                    disp_row[x] = (weighted / sum) as f32;
                    conf_row[x] = peak.min(1.0) as f32;
                    sum_row[x] = sum as f32;
                }
            }
        });

    Ok(InterpolationField {
        width: w,
        height: h,
        disparity,
        confidence,
        weight_sum,
    })
}

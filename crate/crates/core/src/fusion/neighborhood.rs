//! Neighborhood promotion: each seed rewrites its own pixel's disparity
//! column and promotes its measured level at similar-intensity neighbors.

use rayon::prelude::*;

use crate::error::Result;
use crate::gray::GrayImage;
use crate::params::FusionParams;
use crate::seeds::{Seed, SeedSet};
use crate::volume::CostVolume;

use super::{check_seed_dims, round_to_level, SeedGrid};

/// The intensity-similarity weights of one seed's promotion window,
/// row-major over the `(2 k_w + 1)ˆ2` neighborhood (edge-replicated at the
/// image border).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightWindow {
    center: (usize, usize),
    radius: usize,
    weights: Vec<f32>,
}

impl WeightWindow {
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    /// Weight at window offset `(dx, dy)` from the center.
    pub fn at(&self, dx: i64, dy: i64) -> f32 {
        let side = (2 * self.radius + 1) as i64;
        let ix = dx + self.radius as i64;
        let iy = dy + self.radius as i64;
        self.weights[(iy * side + ix) as usize]
    }
}

/// Unnormalized intensity Gaussian: exp(-delta^2 / (2 sigma_r^2)), so a zero
/// intensity difference weighs exactly 1.
fn intensity_lut(sigma_r: f32) -> [f64; 256] {
    let denom = 2.0 * (sigma_r as f64) * (sigma_r as f64);
    let mut lut = [0.0; 256];
    for (delta, slot) in lut.iter_mut().enumerate() {
        *slot = (-((delta * delta) as f64) / denom).exp();
    }
    lut
}

/// Intensity-similarity weights of the promotion window around one seed.
pub fn weight_window(guide: &GrayImage, seed: &Seed, params: &FusionParams) -> WeightWindow {
    let lut = intensity_lut(params.sigma_r);
    let r = params.k_w as i64;
    let center = guide.get(seed.x, seed.y);
    let mut weights = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for dy in -r..=r {
        for dx in -r..=r {
            let n = guide.get_clamped(seed.x as i64 + dx, seed.y as i64 + dy);
            weights.push(lut[n.abs_diff(center) as usize] as f32);
        }
    }
    WeightWindow {
        center: (seed.x, seed.y),
        radius: params.k_w,
        weights,
    }
}

/// Applies the seed-band rewrite at every seed pixel and the measured-level
/// promotion at its window neighbors; where windows overlap, the lowest
/// competing update wins.
pub fn neighborhood_update(
    volume: &mut CostVolume,
    seeds: &SeedSet,
    guide: &GrayImage,
    params: &FusionParams,
) -> Result<()> {
    params.validate()?;
    check_seed_dims(seeds, volume.width(), volume.height())?;
    super::check_guide_dims(guide, volume.width(), volume.height())?;
    if seeds.is_empty() {
        return Ok(());
    }

    let (w, d_max) = (volume.width(), volume.d_max());
    let levels = d_max + 1;
    let row_stride = w * levels;
    let k_w = params.k_w;
    let grid = SeedGrid::new(seeds.seeds(), w, volume.height(), k_w);
    let lut = intensity_lut(params.sigma_r);
    let beta = params.beta as f64;
    let eps = params.epsilon.round() as u16;
    let beta_r = params.beta.round() as u16;
    let tau_n = params.tau_n as f64;
    let tau_d = params.tau_d;
    let mask_words = levels.div_ceil(64);

    volume
        .costs_mut()
        .par_chunks_mut(row_stride)
        .enumerate()
        .for_each_init(
            || vec![0u64; mask_words],
            |touched, (y, row)| {
                for x in 0..w {
                    let mut any = false;
                    // The seed band replaces the whole column first; neighbor
                    // promotions then compete level-by-level.
                    for s in grid.candidates(x, y) {
                        if s.x == x && s.y == y {
                            let slice = &mut row[x * levels..(x + 1) * levels];
                            for (d, c) in slice.iter_mut().enumerate() {
                                *c = if (d as f32 - s.d).abs() < tau_d {
                                    eps
                                } else {
                                    beta_r
                                };
                            }
                            touched.fill(u64::MAX);
                            any = true;
                            break;
                        }
                    }
                    if !any {
                        touched.fill(0);
                    }
                    let center = guide.get(x, y);
                    for s in grid.candidates(x, y) {
                        if (s.x == x && s.y == y) || s.x.abs_diff(x) > k_w || s.y.abs_diff(y) > k_w
                        {
                            continue;
                        }
                        let weight = lut[guide.get(s.x, s.y).abs_diff(center) as usize];
                        let value = if weight >= tau_n {
                            eps
                        } else {
                            ((1.0 - weight) * beta).round() as u16
                        };
                        let level = round_to_level(s.d, d_max);
                        let cell = &mut row[x * levels + level];
                        let (word, bit) = (level / 64, 1u64 << (level % 64));
                        if touched[word] & bit != 0 {
                            *cell = (*cell).min(value);
                        } else {
                            *cell = value;
                            touched[word] |= bit;
                        }
                    }
                }
            },
        );
    Ok(())
}

//! Dataset ingestion, ground-truth seed sampling, and depth projection.

mod kitti;
mod loaders;
mod pfm;

pub use kitti::{read_kitti_disparity_png, write_kitti_disparity_png};
pub use loaders::{
    load_gray_image, load_kitti_dataset, load_kitti_sample, load_middlebury_dataset,
    load_middlebury_sample, read_calib, to_gray,
};
pub use pfm::{read_pfm, write_pfm};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disparity::{DisparityMap, INVALID_DISPARITY};
use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::seeds::{Seed, SeedSet};

/// Rectified-rig geometry needed to project depths into disparities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calib {
    pub focal_px: f32,
    pub baseline_m: f32,
}

/// One stereo pair with its ground-truth disparities.
#[derive(Debug, Clone)]
pub struct StereoSample {
    pub name: String,
    pub left: GrayImage,
    pub right: GrayImage,
    pub ground_truth: DisparityMap,
    pub calib: Option<Calib>,
}

impl StereoSample {
    pub fn new(
        name: String,
        left: GrayImage,
        right: GrayImage,
        ground_truth: DisparityMap,
        calib: Option<Calib>,
    ) -> Result<Self> {
        if !left.same_dims(&right)
            || left.width() != ground_truth.width()
            || left.height() != ground_truth.height()
        {
            return Err(Error::DimensionMismatch(format!(
                "sample {name}: left {}x{}, right {}x{}, ground truth {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height(),
                ground_truth.width(),
                ground_truth.height()
            )));
        }
        if let Some(c) = calib {
            if !(c.focal_px > 0.0) || !(c.baseline_m > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "sample {name}: focal and baseline must be positive, got f={}, B={}",
                    c.focal_px, c.baseline_m
                )));
            }
        }
        Ok(Self {
            name,
            left,
            right,
            ground_truth,
            calib,
        })
    }
}

/// How to split ground truth into seed input and held-out evaluation pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed_fraction: f64,
    pub noise_fraction: f64,
    pub rng_seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.seed_fraction > 0.0 && self.seed_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "seed_fraction in (0, 1) violated: {}",
                self.seed_fraction
            )));
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "noise_fraction in [0, 1) violated: {}",
                self.noise_fraction
            )));
        }
        Ok(())
    }
}

/// Picks `round(seed_fraction * valid)` ground-truth pixels as noisy seeds and
/// returns the untouched remainder as the evaluation map. Selection uses RNG
/// stream 0 and noise stream 1, so identical specs reproduce identical splits
/// and smaller fractions are prefixes of larger ones.
pub fn sample_split(
    gt: &DisparityMap,
    spec: &SplitSpec,
    d_max: usize,
) -> Result<(SeedSet, DisparityMap)> {
    spec.validate()?;
    let valid: Vec<(usize, usize, f32)> = gt.iter_valid().collect();
    if valid.is_empty() {
        return Err(Error::EmptyInput(
            "ground truth has no valid pixels to split".to_string(),
        ));
    }
    let n = valid.len();
    let k = (spec.seed_fraction * n as f64).round() as usize;

    let mut pick_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    pick_rng.set_stream(0);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    noise_rng.set_stream(1);

    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut seeds = Vec::with_capacity(k);
    let mut eval = gt.clone();
    for i in 0..k {
        let j = pick_rng.random_range(i..n);
        order.swap(i, j);
        let (x, y, d) = valid[order[i] as usize];
        let d = if spec.noise_fraction > 0.0 {
            let u = noise_rng.random_range(-spec.noise_fraction..=spec.noise_fraction);
            (d as f64 * (1.0 + u)).clamp(0.0, d_max as f64) as f32
        } else {
            d
        };
        seeds.push(Seed { x, y, d });
        eval.set(x, y, INVALID_DISPARITY);
    }
    Ok((SeedSet::new(gt.width(), gt.height(), seeds, d_max)?, eval))
}

/// Projects a metric depth to a disparity: `f * B / depth`.
pub fn depth_to_disparity(depth_m: f32, focal_px: f32, baseline_m: f32) -> Result<f32> {
    if !(focal_px > 0.0) || !(baseline_m > 0.0) {
        return Err(Error::InvalidParams(format!(
            "focal and baseline must be positive, got f={focal_px}, B={baseline_m}"
        )));
    }
    if !(depth_m > 0.0) {
        return Err(Error::InvalidParams(format!(
            "depth > 0 violated: {depth_m}"
        )));
    }
    Ok(focal_px * baseline_m / depth_m)
}

/// What to do with ground-truth disparities beyond the search range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapPolicy {
    /// Drop the pixel from seeds and evaluation (Middlebury-style ingestion).
    InvalidateAbove,
    /// Clamp to the top of the range (KITTI-style ingestion).
    ClampAbove,
}

/// Applies the range cap in place; negative disparities are always dropped.
pub fn cap_disparities(map: &mut DisparityMap, d_max: usize, policy: CapPolicy) {
    let lim = d_max as f32;
    for d in map.data_mut() {
        if !d.is_finite() {
            continue;
        }
        if *d < 0.0 {
            *d = INVALID_DISPARITY;
        } else if *d > lim {
            *d = match policy {
                CapPolicy::InvalidateAbove => INVALID_DISPARITY,
                CapPolicy::ClampAbove => lim,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn dense_gt(w: usize, h: usize) -> DisparityMap {
        let mut gt = DisparityMap::invalid(w, h);
        for y in 0..h {
            for x in 0..w {
                gt.set(x, y, ((x * 3 + y * 7) % 40 + 5) as f32);
            }
        }
        gt
    }

    fn spec(fraction: f64, noise: f64, seed: u64) -> SplitSpec {
        SplitSpec {
            seed_fraction: fraction,
            noise_fraction: noise,
            rng_seed: seed,
        }
    }

    #[test]
    fn split_counts_and_disjointness() {
        let gt = dense_gt(40, 25);
        let (seeds, eval) = sample_split(&gt, &spec(0.15, 0.0, 7), 64).unwrap();
        assert_eq!(seeds.len(), 150);
        assert_eq!(eval.valid_count(), 850);
        for s in seeds.seeds() {
            assert!(!eval.is_valid(s.x, s.y), "seed ({}, {}) leaked into eval", s.x, s.y);
        }
    }

    #[test]
    fn zero_noise_keeps_ground_truth_values_exactly() {
        let gt = dense_gt(20, 20);
        let (seeds, _) = sample_split(&gt, &spec(0.2, 0.0, 3), 64).unwrap();
        for s in seeds.seeds() {
            assert_eq!(s.d, gt.get(s.x, s.y));
        }
    }

    #[test]
    fn noise_is_bounded_and_multiplicative() {
        let gt = dense_gt(30, 30);
        let (seeds, _) = sample_split(&gt, &spec(0.3, 0.05, 11), 64).unwrap();
        let mut moved = 0;
        for s in seeds.seeds() {
            let base = gt.get(s.x, s.y);
            assert!(s.d >= base * 0.95 - 1e-4 && s.d <= base * 1.05 + 1e-4);
            assert!(s.d >= 0.0 && s.d <= 64.0);
            if s.d != base {
                moved += 1;
            }
        }
        assert!(moved > seeds.len() / 2, "noise applied to only {moved} seeds");
    }

    #[test]
    fn identical_specs_reproduce_the_split() {
        let gt = dense_gt(25, 16);
        let (a, ea) = sample_split(&gt, &spec(0.1, 0.05, 99), 64).unwrap();
        let (b, eb) = sample_split(&gt, &spec(0.1, 0.05, 99), 64).unwrap();
        assert_eq!(a.seeds(), b.seeds());
        assert_eq!(ea.data(), eb.data());
    }

    #[test]
    fn different_rng_seeds_pick_different_pixels() {
        let gt = dense_gt(40, 25);
        let pick = |seed| -> HashSet<(usize, usize)> {
            let (s, _) = sample_split(&gt, &spec(0.15, 0.0, seed), 64).unwrap();
            s.seeds().iter().map(|s| (s.x, s.y)).collect()
        };
        assert_ne!(pick(1), pick(2));
    }

    #[test]
    fn smaller_fractions_are_prefixes_of_larger_ones() {
        let gt = dense_gt(32, 32);
        let sel = |fraction| -> HashSet<(usize, usize)> {
            let (s, _) = sample_split(&gt, &spec(fraction, 0.0, 5), 64).unwrap();
            s.seeds().iter().map(|s| (s.x, s.y)).collect()
        };
        let five = sel(0.05);
        let quarter = sel(0.25);
        assert!(five.is_subset(&quarter));
    }

    #[test]
    fn fraction_rounding_to_zero_gives_empty_seed_set() {
        let mut gt = DisparityMap::invalid(10, 1);
        for x in 0..10 {
            gt.set(x, 0, 3.0);
        }
        let (seeds, eval) = sample_split(&gt, &spec(0.04, 0.0, 1), 64).unwrap();
        assert!(seeds.is_empty());
        assert_eq!(eval.data(), gt.data());
    }

    #[test]
    fn split_validates_inputs() {
        let gt = dense_gt(4, 4);
        assert!(sample_split(&gt, &spec(0.0, 0.0, 1), 64).is_err());
        assert!(sample_split(&gt, &spec(1.0, 0.0, 1), 64).is_err());
        assert!(sample_split(&gt, &spec(0.5, 1.0, 1), 64).is_err());
        let empty = DisparityMap::invalid(4, 4);
        assert!(matches!(
            sample_split(&empty, &spec(0.5, 0.0, 1), 64),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn depth_projection_matches_hand_values() {
        assert_eq!(depth_to_disparity(10.0, 500.0, 0.2).unwrap(), 10.0);
        assert_eq!(depth_to_disparity(0.5, 500.0, 0.2).unwrap(), 200.0);
        assert!(depth_to_disparity(1.0e12, 500.0, 0.2).unwrap() < 1e-6);
        assert!(depth_to_disparity(0.0, 500.0, 0.2).is_err());
        assert!(depth_to_disparity(-1.0, 500.0, 0.2).is_err());
        assert!(depth_to_disparity(1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn cap_policies_differ_above_the_range() {
        let mut a = DisparityMap::invalid(3, 1);
        a.set(0, 0, 70.0);
        a.set(1, 0, -0.5);
        a.set(2, 0, 64.0);
        let mut b = a.clone();
        cap_disparities(&mut a, 64, CapPolicy::InvalidateAbove);
        assert!(!a.is_valid(0, 0));
        assert!(!a.is_valid(1, 0));
        assert_eq!(a.get(2, 0), 64.0);
        cap_disparities(&mut b, 64, CapPolicy::ClampAbove);
        assert_eq!(b.get(0, 0), 64.0);
        assert!(!b.is_valid(1, 0));
    }

    #[test]
    fn sample_dimensions_must_agree() {
        let l = GrayImage::filled(4, 4, 0).unwrap();
        let r = GrayImage::filled(4, 4, 0).unwrap();
        let small = GrayImage::filled(3, 4, 0).unwrap();
        let gt = DisparityMap::invalid(4, 4);
        assert!(StereoSample::new("a".into(), l.clone(), small, gt.clone(), None).is_err());
        assert!(StereoSample::new(
            "b".into(),
            l,
            r,
            gt,
            Some(Calib { focal_px: 0.0, baseline_m: 0.2 })
        )
        .is_err());
    }
}

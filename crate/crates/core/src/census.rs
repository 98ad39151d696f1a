//! Census transform and the Hamming-distance matching cost volume.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::volume::{CostVolume, COST_CAP};

/// A census descriptor: `len` comparison bits packed LSB-first into `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitVector {
    pub bits: u64,
    pub len: u8,
}

/// Number of differing bit positions between two descriptors of equal length.
pub fn hamming(a: BitVector, b: BitVector) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::DimensionMismatch(format!(
            "bit-vector lengths differ: {} vs {}",
            a.len, b.len
        )));
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// Per-pixel census descriptors of a grayscale image.
///
/// Bit `k` of a descriptor (LSB-first) is 1 iff the `k`-th window neighbor in
/// row-major order, center excluded, is strictly darker than the center
/// pixel. Windows that exit the image read edge-replicated intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusImage {
    width: usize,
    height: usize,
    window_radius: usize,
    bits: Vec<u64>,
}

impl CensusImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    /// Descriptor length in bits: window area minus the center.
    pub fn descriptor_len(&self) -> u8 {
        let side = 2 * self.window_radius + 1;
        (side * side - 1) as u8
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> BitVector {
        BitVector {
            bits: self.bits[y * self.width + x],
            len: self.descriptor_len(),
        }
    }

    pub fn raw_bits(&self) -> &[u64] {
        &self.bits
    }
}

/// Computes the census transform over a `(2r+1)²` window at every pixel.
pub fn census_transform(image: &GrayImage, window_radius: usize) -> Result<CensusImage> {
    if !(1..=3).contains(&window_radius) {
        return Err(Error::InvalidParams(format!(
            "census window_radius must lie in [1, 3], got {window_radius}"
        )));
    }
    let (w, h) = (image.width(), image.height());
    let r = window_radius as i64;
    let data = image.data();

    // Row-major neighbor offsets relative to the center, center excluded.
    let mut offsets = Vec::with_capacity((2 * window_radius + 1).pow(2) - 1);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx != 0 || dy != 0 {
                offsets.push((dx, dy));
            }
        }
    }
    let flat: Vec<isize> = offsets
        .iter()
        .map(|&(dx, dy)| (dy * w as i64 + dx) as isize)
        .collect();

    let mut bits = vec![0u64; w * h];
    bits.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let interior_y = y as i64 >= r && y as i64 + r < h as i64;
        for (x, out) in row.iter_mut().enumerate() {
            let center = data[y * w + x];
            let mut v = 0u64;
            if interior_y && x as i64 >= r && x as i64 + r < w as i64 {
                let base = (y * w + x) as isize;
                for (k, &off) in flat.iter().enumerate() {
                    let n = data[(base + off) as usize];
                    v |= u64::from(n < center) << k;
                }
            } else {
                for (k, &(dx, dy)) in offsets.iter().enumerate() {
                    let n = image.get_clamped(x as i64 + dx, y as i64 + dy);
                    v |= u64::from(n < center) << k;
                }
            }
            *out = v;
        }
    });

    Ok(CensusImage {
        width: w,
        height: h,
        window_radius,
        bits,
    })
}

/// Builds the matching cost volume: the cost at `(x, y, d)` is the Hamming
/// distance between the left descriptor at `x` and the right descriptor `d`
/// columns to the left; disparities that reach outside the right image cost
/// [`COST_CAP`].
pub fn build_cost_volume(left: &CensusImage, right: &CensusImage, d_max: usize) -> Result<CostVolume> {
    if left.width != right.width || left.height != right.height {
        return Err(Error::DimensionMismatch(format!(
            "census image dimensions differ: {}x{} vs {}x{}",
            left.width, left.height, right.width, right.height
        )));
    }
    if left.window_radius != right.window_radius {
        return Err(Error::DimensionMismatch(format!(
            "census window radii differ: {} vs {}",
            left.window_radius, right.window_radius
        )));
    }
    let (w, h) = (left.width, left.height);
    let mut volume = CostVolume::zeroed(w, h, d_max);
    let levels = d_max + 1;
    let row_stride = w * levels;

    volume
        .costs_mut()
        .par_chunks_mut(row_stride)
        .enumerate()
        .for_each(|(y, out_row)| {
            let lrow = &left.bits[y * w..(y + 1) * w];
            let rrow = &right.bits[y * w..(y + 1) * w];
            for x in 0..w {
                let l = lrow[x];
                let out = &mut out_row[x * levels..(x + 1) * levels];
                let in_range = d_max.min(x);
                for d in 0..=in_range {
                    out[d] = (l ^ rrow[x - d]).count_ones() as u16;
                }
                for slot in out.iter_mut().skip(in_range + 1) {
                    *slot = COST_CAP;
                }
            }
        });

    Ok(volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise_image(w: usize, h: usize, seed: u64, lo: u8, hi: u8) -> GrayImage {
        let data: Vec<u8> = (0..w * h)
            .map(|i| {
                let mut z = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                lo + ((z >> 33) % (hi as u64 - lo as u64 + 1)) as u8
            })
            .collect();
        GrayImage::new(w, h, data).unwrap()
    }

    #[test]
    fn constant_image_has_all_zero_descriptors() {
        let img = GrayImage::filled(9, 7, 50).unwrap();
        let cen = census_transform(&img, 2).unwrap();
        assert!(cen.raw_bits().iter().all(|&b| b == 0));
    }

    #[test]
    fn center_of_ascending_patch_matches_hand_evaluation() {
        let img = GrayImage::new(3, 3, vec![10, 20, 30, 40, 50, 60, 70, 80, 90]).unwrap();
        let cen = census_transform(&img, 1).unwrap();
        // Neighbors 10,20,30,40 are darker than 50; 60,70,80,90 are not.
        assert_eq!(cen.get(1, 1).bits, 0b0000_1111);
        assert_eq!(cen.get(1, 1).len, 8);
    }

    #[test]
    fn invariant_under_strictly_increasing_remap() {
        let img = noise_image(17, 11, 3, 0, 120);
        let remapped = GrayImage::new(
            17,
            11,
            img.data().iter().map(|&v| 2 * v + 8).collect(),
        )
        .unwrap();
        for r in 1..=3 {
            assert_eq!(census_transform(&img, r).unwrap(), census_transform(&remapped, r).unwrap());
        }
    }

    #[test]
    fn rejects_out_of_range_radius() {
        let img = GrayImage::filled(8, 8, 1).unwrap();
        assert!(census_transform(&img, 0).is_err());
        assert!(census_transform(&img, 4).is_err());
    }

    #[test]
    fn hamming_counts_differing_bits() {
        let v = |bits, len| BitVector { bits, len };
        assert_eq!(hamming(v(0b1011, 4), v(0b1011, 4)).unwrap(), 0);
        assert_eq!(hamming(v(0x5A, 8), v(!0x5Au64 & 0xFF, 8)).unwrap(), 8);
        assert_eq!(hamming(v(0b1010, 4), v(0b0110, 4)).unwrap(), 2);
        assert!(hamming(v(0b1010, 4), v(0b1010, 8)).is_err());
    }

    #[test]
    fn identical_pair_has_zero_cost_plane() {
        let img = noise_image(20, 12, 7, 0, 255);
        let cen = census_transform(&img, 2).unwrap();
        let vol = build_cost_volume(&cen, &cen, 6).unwrap();
        for y in 0..12 {
            for x in 0..20 {
                assert_eq!(vol.get(x, y, 0), 0);
            }
        }
    }

    #[test]
    fn out_of_bounds_disparities_cost_the_cap() {
        let img = noise_image(10, 6, 9, 0, 255);
        let cen = census_transform(&img, 1).unwrap();
        let vol = build_cost_volume(&cen, &cen, 8).unwrap();
        for y in 0..6 {
            for x in 0..10usize {
                for d in 0..=8usize {
                    if d > x {
                        assert_eq!(vol.get(x, y, d), COST_CAP);
                    } else {
                        assert!(vol.get(x, y, d) <= cen.descriptor_len() as u16);
                    }
                }
            }
        }
    }

    #[test]
    fn argmin_recovers_known_shift() {
        // right(x) = tex(x + 4), so the match of left x is right x - 4.
        let (w, h, shift) = (64usize, 32usize, 4usize);
        let tex = noise_image(w + shift, h, 21, 0, 255);
        let mut left = Vec::with_capacity(w * h);
        let mut right = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                left.push(tex.get(x, y));
                right.push(tex.get(x + shift, y));
            }
        }
        let left = GrayImage::new(w, h, left).unwrap();
        let right = GrayImage::new(w, h, right).unwrap();
        let r = 2usize;
        let lc = census_transform(&left, r).unwrap();
        let rc = census_transform(&right, r).unwrap();
        let vol = build_cost_volume(&lc, &rc, 8).unwrap();
        let mut total = 0usize;
        let mut recovered = 0usize;
        for y in r..h - r {
            for x in (shift + r)..(w - r) {
                let costs = vol.pixel(x, y);
                // Interior windows line up exactly, so the true shift always
                // costs zero. Unrelated windows can still collide when both
                // centers are local extrema (all-zero descriptors), so the
                // argmin is only almost-always unique; collisions must be
                // zero-cost ties, never a strictly better match.
                assert_eq!(costs[shift], 0, "pixel ({x}, {y})");
                let best = costs
                    .iter()
                    .enumerate()
                    .min_by_key(|&(d, &c)| (c, d))
                    .unwrap()
                    .0;
                if best == shift {
                    recovered += 1;
                } else {
                    assert_eq!(costs[best], 0, "pixel ({x}, {y}) beat the true shift");
                }
                total += 1;
            }
        }
        assert!(
            recovered * 100 >= total * 98,
            "recovered {recovered} of {total}"
        );
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let a = census_transform(&GrayImage::filled(8, 8, 1).unwrap(), 1).unwrap();
        let b = census_transform(&GrayImage::filled(9, 8, 1).unwrap(), 1).unwrap();
        let c = census_transform(&GrayImage::filled(8, 8, 1).unwrap(), 2).unwrap();
        assert!(build_cost_volume(&a, &b, 4).is_err());
        assert!(build_cost_volume(&a, &c, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn census_depends_only_on_intensity_order(
            seed in 0u64..1000,
            increments in proptest::collection::vec(1u16..=3, 64),
        ) {
            // A strictly increasing lookup table over the value range [0, 63].
            let mut lut = [0u8; 64];
            let mut acc = 0u16;
            for (slot, inc) in lut.iter_mut().zip(&increments) {
                acc += inc;
                *slot = acc.min(255) as u8;
            }
            let img = noise_image(13, 9, seed, 0, 63);
            let mapped = GrayImage::new(
                13,
                9,
                img.data().iter().map(|&v| lut[v as usize]).collect(),
            ).unwrap();
            prop_assert_eq!(
                census_transform(&img, 2).unwrap(),
                census_transform(&mapped, 2).unwrap()
            );
        }

        #[test]
        fn hamming_is_symmetric_and_bounded(a in proptest::num::u64::ANY, b in proptest::num::u64::ANY) {
            let len = 48u8;
            let mask = (1u64 << len) - 1;
            let va = BitVector { bits: a & mask, len };
            let vb = BitVector { bits: b & mask, len };
            let ab = hamming(va, vb).unwrap();
            prop_assert_eq!(ab, hamming(vb, va).unwrap());
            prop_assert!(ab <= len as u32);
            prop_assert_eq!(ab == 0, va.bits == vb.bits);
        }
    }
}

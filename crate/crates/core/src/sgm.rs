//! Semi-global cost aggregation along 4 or 8 scanline directions and
//! winner-take-all disparity selection.
//!
//! Each scanline applies the standard recurrence: the aggregated cost is the
//! raw cost plus the cheapest of (same disparity, a +-1 step paying `p1`, any
//! jump paying `p2`), minus the predecessor's minimum so values stay bounded
//! on long paths.

use rayon::prelude::*;

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::params::FusionParams;
use crate::volume::CostVolume;

/// Sentinel padded around each scanline buffer so the `d - 1` / `d + 1`
/// cases vanish at the disparity range ends without branching. Large enough
/// to never win a minimum, small enough to never overflow when a penalty is
/// added.
const BIG: u32 = 1 << 30;

/// A scanline step offset; both components lie in {-1, 0, 1} and never both 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathDirection {
    dx: i32,
    dy: i32,
}

impl PathDirection {
    pub fn new(dx: i32, dy: i32) -> Result<Self> {
        if !(-1..=1).contains(&dx) || !(-1..=1).contains(&dy) || (dx == 0 && dy == 0) {
            return Err(Error::InvalidParams(format!(
                "path direction components must lie in {{-1, 0, 1}} and not both be 0, got ({dx}, {dy})"
            )));
        }
        Ok(Self { dx, dy })
    }

    pub fn dx(&self) -> i32 {
        self.dx
    }

    pub fn dy(&self) -> i32 {
        self.dy
    }
}

/// The two horizontal and two vertical directions.
pub const FOUR_PATHS: [PathDirection; 4] = [
    PathDirection { dx: 1, dy: 0 },
    PathDirection { dx: -1, dy: 0 },
    PathDirection { dx: 0, dy: 1 },
    PathDirection { dx: 0, dy: -1 },
];

/// The four-path set plus the four diagonals.
pub const EIGHT_PATHS: [PathDirection; 8] = [
    PathDirection { dx: 1, dy: 0 },
    PathDirection { dx: -1, dy: 0 },
    PathDirection { dx: 0, dy: 1 },
    PathDirection { dx: 0, dy: -1 },
    PathDirection { dx: 1, dy: 1 },
    PathDirection { dx: -1, dy: 1 },
    PathDirection { dx: 1, dy: -1 },
    PathDirection { dx: -1, dy: -1 },
];

/// Path-summed costs, same shape as the source volume but held in a wide
/// accumulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedVolume {
    width: usize,
    height: usize,
    d_max: usize,
    sums: Vec<u32>,
}

impl AggregatedVolume {
    pub fn from_sums(width: usize, height: usize, d_max: usize, sums: Vec<u32>) -> Result<Self> {
        let expected = width * height * (d_max + 1);
        if sums.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "sum buffer has {} entries, expected {expected}",
                sums.len()
            )));
        }
        Ok(Self {
            width,
            height,
            d_max,
            sums,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn levels(&self) -> usize {
        self.d_max + 1
    }

    pub fn sums(&self) -> &[u32] {
        &self.sums
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> u32 {
        self.sums[(y * self.width + x) * (self.d_max + 1) + d]
    }

    /// All disparity levels of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u32] {
        let levels = self.d_max + 1;
        let base = (y * self.width + x) * levels;
        &self.sums[base..base + levels]
    }
}

/// Copies raw costs into a padded scanline buffer (the first pixel of every
/// path has no predecessor) and returns their minimum.
#[inline]
fn seed_scanline(cost: &[u16], cur: &mut [u32]) -> u32 {
    debug_assert_eq!(cur.len(), cost.len() + 2);
    let mut min = u32::MAX;
    for (d, &c) in cost.iter().enumerate() {
        let v = c as u32;
        cur[d + 1] = v;
        min = min.min(v);
    }
    min
}

/// One recurrence step along a scanline. `prev` and `cur` are padded with a
/// [`BIG`] sentinel at both ends; returns the minimum of the new values.
#[inline]
fn relax_step(cost: &[u16], prev: &[u32], prev_min: u32, p1: u32, p2: u32, cur: &mut [u32]) -> u32 {
    let levels = cost.len();
    assert_eq!(prev.len(), levels + 2);
    assert_eq!(cur.len(), levels + 2);
    let jump = prev_min + p2;
    let mut min = u32::MAX;
    for d in 0..levels {
        let step = prev[d].min(prev[d + 2]) + p1;
        let best = prev[d + 1].min(step).min(jump);
        let v = cost[d] as u32 + (best - prev_min);
        cur[d + 1] = v;
        min = min.min(v);
    }
    min
}

/// All scanline start pixels for a direction: the pixels whose predecessor
/// falls outside the image, in row-major order.
fn scanline_starts(width: usize, height: usize, dir: PathDirection) -> Vec<(usize, usize)> {
    let mut starts = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let px = x as i64 - dir.dx as i64;
            let py = y as i64 - dir.dy as i64;
            if px < 0 || px >= width as i64 || py < 0 || py >= height as i64 {
                starts.push((x, y));
            }
        }
    }
    starts
}

struct SendPtr(*mut u32);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// Aggregates the volume along every scanline of one direction.
pub fn aggregate_path(volume: &CostVolume, dir: PathDirection, p1: u32, p2: u32) -> AggregatedVolume {
    let (w, h) = (volume.width(), volume.height());
    let levels = volume.levels();
    let mut out = vec![0u32; w * h * levels];
    let out_ptr = SendPtr(out.as_mut_ptr());
    let starts = scanline_starts(w, h, dir);

    starts.par_iter().for_each(|&(sx, sy)| {
        let out_ptr = &out_ptr;
        let mut prev = vec![BIG; levels + 2];
        let mut cur = vec![BIG; levels + 2];
        let mut prev_min = 0u32;
        let (mut x, mut y) = (sx as i64, sy as i64);
        let mut first = true;
        while x >= 0 && x < w as i64 && y >= 0 && y < h as i64 {
            let cost = volume.pixel(x as usize, y as usize);
            let min = if first {
                first = false;
                seed_scanline(cost, &mut cur)
            } else {
                relax_step(cost, &prev, prev_min, p1, p2, &mut cur)
            };
            let base = (y as usize * w + x as usize) * levels;
            // Safety: every pixel belongs to exactly one scanline of this
            // direction, so writes from concurrent scanlines are disjoint.
            unsafe {
                std::ptr::copy_nonoverlapping(cur.as_ptr().add(1), out_ptr.0.add(base), levels);
            }
            std::mem::swap(&mut prev, &mut cur);
            prev_min = min;
            x += dir.dx as i64;
            y += dir.dy as i64;
        }
    });

    AggregatedVolume {
        width: w,
        height: h,
        d_max: volume.d_max(),
        sums: out,
    }
}

/// Per-direction scanline state for one image sweep: the previous row's
/// padded path values and their per-column minima.
struct SweepState {
    prev: Vec<u32>,
    cur: Vec<u32>,
    prev_min: Vec<u32>,
    cur_min: Vec<u32>,
    stride: usize,
}

impl SweepState {
    fn new(width: usize, levels: usize) -> Self {
        let stride = levels + 2;
        Self {
            prev: vec![BIG; width * stride],
            cur: vec![BIG; width * stride],
            prev_min: vec![0; width],
            cur_min: vec![0; width],
            stride,
        }
    }

    #[inline]
    fn step(&mut self, cost: &[u16], pred_x: Option<usize>, x: usize, p1: u32, p2: u32) {
        let col = &mut self.cur[x * self.stride..(x + 1) * self.stride];
        self.cur_min[x] = match pred_x {
            Some(px) => {
                let prev = &self.prev[px * self.stride..(px + 1) * self.stride];
                relax_step(cost, prev, self.prev_min[px], p1, p2, col)
            }
            None => seed_scanline(cost, col),
        };
    }

    #[inline]
    fn values(&self, x: usize) -> &[u32] {
        &self.cur[x * self.stride + 1..(x + 1) * self.stride - 1]
    }

    fn advance_row(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.cur);
        std::mem::swap(&mut self.prev_min, &mut self.cur_min);
    }
}

/// Accumulates the three downward (or upward) directions in one image sweep.
fn vertical_sweep(
    volume: &CostVolume,
    sums: &mut [u32],
    p1: u32,
    p2: u32,
    diagonals: bool,
    downward: bool,
) {
    let (w, h) = (volume.width(), volume.height());
    let levels = volume.levels();
    let mut vert = SweepState::new(w, levels);
    let mut diag_a = diagonals.then(|| SweepState::new(w, levels)); // predecessor one column left
    let mut diag_b = diagonals.then(|| SweepState::new(w, levels)); // predecessor one column right

    let rows: Vec<usize> = if downward {
        (0..h).collect()
    } else {
        (0..h).rev().collect()
    };
    for (i, &y) in rows.iter().enumerate() {
        let first_row = i == 0;
        let cost_row = volume.row(y);
        let sum_row = &mut sums[y * w * levels..(y + 1) * w * levels];
        for x in 0..w {
            let cost = &cost_row[x * levels..(x + 1) * levels];
            vert.step(cost, (!first_row).then_some(x), x, p1, p2);
            if let Some(a) = diag_a.as_mut() {
                let pred = (!first_row && x > 0).then(|| x - 1);
                a.step(cost, pred, x, p1, p2);
            }
            if let Some(b) = diag_b.as_mut() {
                let pred = (!first_row && x + 1 < w).then(|| x + 1);
                b.step(cost, pred, x, p1, p2);
            }

            let sums_px = &mut sum_row[x * levels..(x + 1) * levels];
            let v = vert.values(x);
            match (diag_a.as_ref(), diag_b.as_ref()) {
                (Some(a), Some(b)) => {
                    let (av, bv) = (a.values(x), b.values(x));
                    for d in 0..levels {
                        sums_px[d] += v[d] + av[d] + bv[d];
                    }
                }
                _ => {
                    for d in 0..levels {
                        sums_px[d] += v[d];
                    }
                }
            }
        }
        vert.advance_row();
        if let Some(a) = diag_a.as_mut() {
            a.advance_row();
        }
        if let Some(b) = diag_b.as_mut() {
            b.advance_row();
        }
    }
}

/// Both horizontal directions of one row, accumulated into the row's sums.
fn horizontal_pass(cost_row: &[u16], sum_row: &mut [u32], width: usize, levels: usize, p1: u32, p2: u32) {
    let mut prev = vec![BIG; levels + 2];
    let mut cur = vec![BIG; levels + 2];
    for sweep in 0..2 {
        let mut prev_min = 0u32;
        for i in 0..width {
            let x = if sweep == 0 { i } else { width - 1 - i };
            let cost = &cost_row[x * levels..(x + 1) * levels];
            let min = if i == 0 {
                seed_scanline(cost, &mut cur)
            } else {
                relax_step(cost, &prev, prev_min, p1, p2, &mut cur)
            };
            let sums_px = &mut sum_row[x * levels..(x + 1) * levels];
            for d in 0..levels {
                sums_px[d] += cur[d + 1];
            }
            std::mem::swap(&mut prev, &mut cur);
            prev_min = min;
        }
    }
}

/// Sums the per-path aggregation over the 4- or 8-direction set.
///
/// Equal to adding up [`aggregate_path`] over the direction set, but computed
/// in three image sweeps (rows, downward, upward) so each direction's state
/// stays in a single row buffer.
pub fn aggregate_all(volume: &CostVolume, params: &FusionParams) -> Result<AggregatedVolume> {
    params.validate()?;
    let (w, h) = (volume.width(), volume.height());
    let levels = volume.levels();
    let (p1, p2) = (params.p1, params.p2);
    let diagonals = params.num_paths == 8;

    let mut sums = vec![0u32; w * h * levels];
    sums.par_chunks_mut(w * levels)
        .enumerate()
        .for_each(|(y, sum_row)| {
            horizontal_pass(volume.row(y), sum_row, w, levels, p1, p2);
        });
    vertical_sweep(volume, &mut sums, p1, p2, diagonals, true);
    vertical_sweep(volume, &mut sums, p1, p2, diagonals, false);

    Ok(AggregatedVolume {
        width: w,
        height: h,
        d_max: volume.d_max(),
        sums,
    })
}

/// Winner-take-all selection: per pixel, the lowest disparity achieving the
/// minimum path-summed cost.
pub fn select_disparity(agg: &AggregatedVolume) -> DisparityMap {
    let (w, h) = (agg.width, agg.height);
    let levels = agg.d_max + 1;
    let mut data = vec![0f32; w * h];
    data.par_chunks_mut(w)
        .zip(agg.sums.par_chunks(w * levels))
        .for_each(|(out_row, sum_row)| {
            for (x, out) in out_row.iter_mut().enumerate() {
                let sums_px = &sum_row[x * levels..(x + 1) * levels];
                let mut best_d = 0usize;
                let mut best = sums_px[0];
                for (d, &s) in sums_px.iter().enumerate().skip(1) {
                    if s < best {
                        best = s;
                        best_d = d;
                    }
                }
                *out = best_d as f32;
            }
        });
    DisparityMap::from_vec(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_volume(rng: &mut ChaCha8Rng, w: usize, h: usize, d_max: usize, hi: u16) -> CostVolume {
        let costs = (0..w * h * (d_max + 1))
            .map(|_| rng.random_range(0..=hi))
            .collect();
        CostVolume::from_costs(w, h, d_max, costs).unwrap()
    }

    /// Direct recursive evaluation of the scanline recurrence, memoized per
    /// pixel along each path.
    fn oracle_path(volume: &CostVolume, dir: PathDirection, p1: u32, p2: u32) -> Vec<u32> {
        let (w, h) = (volume.width(), volume.height());
        let levels = volume.levels();
        let mut memo: Vec<Option<Vec<u32>>> = vec![None; w * h];

        fn eval(
            volume: &CostVolume,
            dir: PathDirection,
            p1: u32,
            p2: u32,
            x: i64,
            y: i64,
            memo: &mut Vec<Option<Vec<u32>>>,
        ) -> Vec<u32> {
            let (w, h) = (volume.width() as i64, volume.height() as i64);
            let idx = (y * w + x) as usize;
            if let Some(v) = &memo[idx] {
                return v.clone();
            }
            let cost = volume.pixel(x as usize, y as usize);
            let (px, py) = (x - dir.dx as i64, y - dir.dy as i64);
            let vals: Vec<u32> = if px < 0 || px >= w || py < 0 || py >= h {
                cost.iter().map(|&c| c as u32).collect()
            } else {
                let prev = eval(volume, dir, p1, p2, px, py, memo);
                let m = *prev.iter().min().unwrap();
                cost.iter()
                    .enumerate()
                    .map(|(d, &c)| {
                        let mut best = prev[d].min(m + p2);
                        if d > 0 {
                            best = best.min(prev[d - 1] + p1);
                        }
                        if d + 1 < prev.len() {
                            best = best.min(prev[d + 1] + p1);
                        }
                        c as u32 + best - m
                    })
                    .collect()
            };
            memo[idx] = Some(vals.clone());
            vals
        }

        let mut out = vec![0u32; w * h * levels];
        for y in 0..h {
            for x in 0..w {
                let vals = eval(volume, dir, p1, p2, x as i64, y as i64, &mut memo);
                out[(y * w + x) * levels..(y * w + x + 1) * levels].copy_from_slice(&vals);
            }
        }
        out
    }

    #[test]
    fn three_pixel_scanline_matches_hand_unrolled_recurrence() {
        let costs = vec![0, 5, 5, 5, 5, 0, 5, 5, 0];
        let vol = CostVolume::from_costs(3, 1, 2, costs).unwrap();
        let agg = aggregate_path(&vol, PathDirection::new(1, 0).unwrap(), 1, 2);
        assert_eq!(agg.pixel(0, 0), &[0, 5, 5]);
        assert_eq!(agg.pixel(1, 0), &[5, 6, 2]);
        assert_eq!(agg.pixel(2, 0), &[7, 6, 0]);
    }

    #[test]
    fn zero_volume_aggregates_to_zero_in_every_direction() {
        let vol = CostVolume::zeroed(5, 4, 3);
        for dir in EIGHT_PATHS {
            let agg = aggregate_path(&vol, dir, 7, 100);
            assert!(agg.sums().iter().all(|&s| s == 0), "direction {dir:?}");
        }
        let agg = aggregate_all(&vol, &FusionParams::default()).unwrap();
        assert!(agg.sums().iter().all(|&s| s == 0));
    }

    #[test]
    fn single_pixel_image_keeps_raw_costs() {
        let vol = CostVolume::from_costs(1, 1, 3, vec![4, 2, 9, 1]).unwrap();
        for dir in EIGHT_PATHS {
            assert_eq!(aggregate_path(&vol, dir, 1, 2).pixel(0, 0), &[4, 2, 9, 1]);
        }
        for num_paths in [4u32, 8] {
            let params = FusionParams {
                num_paths,
                ..FusionParams::default()
            };
            let agg = aggregate_all(&vol, &params).unwrap();
            let n = num_paths;
            assert_eq!(agg.pixel(0, 0), &[4 * n, 2 * n, 9 * n, 1 * n]);
        }
    }

    #[test]
    fn matches_recursive_oracle_on_small_volumes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w = rng.random_range(1..=6);
            let h = rng.random_range(1..=6);
            let d_max = rng.random_range(0..=5);
            let vol = rand_volume(&mut rng, w, h, d_max, 40);
            for dir in EIGHT_PATHS {
                let got = aggregate_path(&vol, dir, 2, 9);
                let want = oracle_path(&vol, dir, 2, 9);
                assert_eq!(got.sums(), &want[..], "{w}x{h} d_max={d_max} dir {dir:?}");
            }
        }
    }

    #[test]
    fn fused_sweep_equals_per_path_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let vol = rand_volume(&mut rng, 9, 7, 6, 60);
        for num_paths in [4u32, 8] {
            let params = FusionParams {
                p1: 3,
                p2: 21,
                num_paths,
                ..FusionParams::default()
            };
            let dirs: &[PathDirection] = if num_paths == 4 {
                &FOUR_PATHS
            } else {
                &EIGHT_PATHS
            };
            let mut want = vec![0u32; vol.costs().len()];
            for &dir in dirs {
                for (acc, v) in want.iter_mut().zip(aggregate_path(&vol, dir, 3, 21).sums()) {
                    *acc += v;
                }
            }
            let got = aggregate_all(&vol, &params).unwrap();
            assert_eq!(got.sums(), &want[..], "num_paths={num_paths}");
        }
    }

    #[test]
    fn selection_takes_lowest_cost_then_lowest_disparity() {
        let agg = AggregatedVolume::from_sums(2, 1, 2, vec![3, 1, 7, 2, 2, 5]).unwrap();
        let map = select_disparity(&agg);
        assert_eq!(map.get(0, 0), 1.0);
        assert_eq!(map.get(1, 0), 0.0);
    }

    #[test]
    fn identical_pair_selects_zero_everywhere() {
        use crate::census::{build_cost_volume, census_transform};
        use crate::gray::GrayImage;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<u8> = (0..32 * 32).map(|_| rng.random()).collect();
        let img = GrayImage::new(32, 32, data).unwrap();
        let cen = census_transform(&img, 2).unwrap();
        let vol = build_cost_volume(&cen, &cen, 12).unwrap();
        let agg = aggregate_all(&vol, &FusionParams::default()).unwrap();
        let map = select_disparity(&agg);
        let mut wrong = 0;
        for y in 2..30 {
            for x in 2..30 {
                if map.get(x, y) != 0.0 {
                    wrong += 1;
                }
            }
        }
        assert_eq!(wrong, 0);
    }

    #[test]
    fn aggregation_is_identical_across_worker_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let vol = rand_volume(&mut rng, 23, 19, 9, 80);
        let params = FusionParams::default();
        let reference = aggregate_all(&vol, &params).unwrap();
        for workers in [1usize, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let agg = pool.install(|| aggregate_all(&vol, &params).unwrap());
            assert_eq!(agg, reference, "workers={workers}");
            let path = pool.install(|| {
                aggregate_path(&vol, PathDirection::new(-1, 1).unwrap(), 7, 100)
            });
            let path_ref = aggregate_path(&vol, PathDirection::new(-1, 1).unwrap(), 7, 100);
            assert_eq!(path, path_ref, "workers={workers}");
        }
    }

    #[test]
    fn larger_jump_penalty_smooths_away_a_disparity_jump() {
        // Two pixels whose raw winners sit at opposite ends of the level
        // range. A cheap jump penalty lets the second pixel keep its own
        // winner; an expensive one pulls it back onto the first pixel's
        // level through the recurrence, with the tie resolved downward.
        let costs: Vec<u16> = vec![0, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 0];
        let vol = CostVolume::from_costs(2, 1, 5, costs).unwrap();
        let dir = PathDirection::new(1, 0).unwrap();

        let cheap = aggregate_path(&vol, dir, 1, 1);
        let got: Vec<u32> = (0..6).map(|d| cheap.get(1, 0, d)).collect();
        assert_eq!(got, [2, 3, 3, 3, 3, 1]);
        let map = select_disparity(&cheap);
        assert_eq!((map.get(0, 0), map.get(1, 0)), (0.0, 5.0));

        let expensive = aggregate_path(&vol, dir, 1, 10);
        let got: Vec<u32> = (0..6).map(|d| expensive.get(1, 0, d)).collect();
        assert_eq!(got, [2, 3, 4, 4, 4, 2]);
        let map = select_disparity(&expensive);
        assert_eq!((map.get(0, 0), map.get(1, 0)), (0.0, 0.0));
    }

    #[test]
    fn rejects_invalid_directions() {
        assert!(PathDirection::new(0, 0).is_err());
        assert!(PathDirection::new(2, 0).is_err());
        assert!(PathDirection::new(1, 1).is_ok());
    }
}

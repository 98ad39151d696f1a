//! Deterministic synthetic stereo scenes with dense integer ground truth,
//! for tests, benchmarks, and fixture generation.

use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::datasets::{write_kitti_disparity_png, write_pfm, Calib, StereoSample};
use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::gray::GrayImage;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stateless white-noise texture defined on the whole integer lattice.
fn tex(x: i64, y: i64, salt: u64) -> u8 {
    let k = (x as u64)
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add((y as u64).wrapping_mul(0xC2B2AE3D27D4EB4F))
        ^ salt;
    (splitmix(k) >> 32) as u8
}

/// Full-frame white-noise image.
pub fn textured_image(width: usize, height: usize, salt: u64) -> GrayImage {
    let data = (0..width * height)
        .map(|i| tex((i % width) as i64, (i / width) as i64, salt))
        .collect();
    GrayImage::new(width, height, data).unwrap()
}

/// A textured pair where the right view is the left shifted by a uniform
/// integer disparity, with dense ground truth.
pub fn shifted_pair(
    width: usize,
    height: usize,
    shift: usize,
    salt: u64,
) -> (GrayImage, GrayImage, DisparityMap) {
    let left = textured_image(width, height, salt);
    let right_data = (0..width * height)
        .map(|i| tex((i % width + shift) as i64, (i / width) as i64, salt))
        .collect();
    let right = GrayImage::new(width, height, right_data).unwrap();
    let gt = DisparityMap::from_vec(width, height, vec![shift as f32; width * height]);
    (left, right, gt)
}

/// Smooth value noise on the infinite lattice: bilinear interpolation of
/// per-node hashes with the given period, mapped into `base +- amp`. Local
/// intensity differences stay small, so similarity-gated methods see the
/// same surface as similar, while the census transform still gets a usable
/// ordering signal.
fn smooth_tex(x: i64, y: i64, salt: u64, period: i64, base: u8, amp: u8) -> u8 {
    let node = |cx: i64, cy: i64| -> f32 {
        let k = (cx as u64)
            .wrapping_mul(0x9E3779B97F4A7C15)
            .wrapping_add((cy as u64).wrapping_mul(0xC2B2AE3D27D4EB4F))
            ^ salt;
        ((splitmix(k) >> 32) as u8) as f32 / 255.0
    };
    let cx = x.div_euclid(period);
    let cy = y.div_euclid(period);
    let fx = x.rem_euclid(period) as f32 / period as f32;
    let fy = y.rem_euclid(period) as f32 / period as f32;
    let v = node(cx, cy) * (1.0 - fx) * (1.0 - fy)
        + node(cx + 1, cy) * fx * (1.0 - fy)
        + node(cx, cy + 1) * (1.0 - fx) * fy
        + node(cx + 1, cy + 1) * fx * fy;
    let lo = base as f32 - amp as f32;
    (lo + v * (2.0 * amp as f32)).round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy)]
enum Style {
    Flat(u8),
    Smooth { salt: u64, base: u8 },
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
    d: usize,
    style: Style,
}

impl Layer {
    fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    fn sample(&self, x: i64, y: i64) -> u8 {
        match self.style {
            Style::Flat(v) => v,
            Style::Smooth { salt, base } => smooth_tex(x, y, salt, 4, base, 12),
        }
    }
}

/// Scene generation knobs.
#[derive(Debug, Clone, Copy)]
pub struct SceneOptions {
    /// Fronto-parallel rectangles in front of the background.
    pub rect_count: usize,
    /// Additive per-view sensor noise, uniform in `[-amplitude, amplitude]`.
    /// Independent between the views, so constant-intensity regions carry no
    /// usable matching signal.
    pub noise_amplitude: u8,
    /// Background plane disparity.
    pub background_d: usize,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            rect_count: 5,
            noise_amplitude: 2,
            background_d: 2,
        }
    }
}

/// Base intensities assigned to consecutive layers, spaced so neighboring
/// surfaces contrast while the smooth texture stays within 8-bit range.
const LAYER_BASES: [u8; 6] = [150, 35, 200, 120, 225, 50];

/// Builds a photo-consistent stereo pair over layered fronto-parallel planes:
/// a smoothly textured background plus rectangles at larger disparities, half
/// of them deliberately texture-free so plain stereo has nothing to match
/// there. Each layer gets its own base intensity. Ground truth is dense and
/// integer-valued.
pub fn fusion_scene(
    width: usize,
    height: usize,
    d_max: usize,
    opts: &SceneOptions,
    seed: u64,
) -> Result<StereoSample> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidParams(format!(
            "scene needs at least 16x16 pixels, got {width}x{height}"
        )));
    }
    if opts.background_d + 2 > d_max {
        return Err(Error::InvalidParams(format!(
            "scene needs d_max >= background_d + 2, got {} vs {}",
            d_max, opts.background_d
        )));
    }

    let mut ctr = 0u64;
    let mut next = |span: u64| -> u64 {
        ctr += 1;
        splitmix(seed.wrapping_mul(0x9E3779B97F4A7C15) ^ ctr) % span.max(1)
    };

    let mut layers = vec![Layer {
        x0: i64::MIN / 4,
        y0: i64::MIN / 4,
        x1: i64::MAX / 4,
        y1: i64::MAX / 4,
        d: opts.background_d,
        style: Style::Smooth {
            salt: splitmix(seed ^ 0xB0),
            base: 80,
        },
    }];
    let d_lo = opts.background_d + 2;
    let d_span = (d_max - d_lo + 1) as u64;
    for i in 0..opts.rect_count {
        let rw = (width as u64 / 6 + next(width as u64 / 4)) as i64;
        let rh = (height as u64 / 6 + next(height as u64 / 4)) as i64;
        let x0 = next((width as i64 - rw).max(1) as u64) as i64;
        let y0 = next((height as i64 - rh).max(1) as u64) as i64;
        let d = d_lo + next(d_span) as usize;
        let base = LAYER_BASES[i % LAYER_BASES.len()];
        let style = if i % 2 == 0 {
            Style::Flat(base)
        } else {
            Style::Smooth {
                salt: splitmix(seed ^ (0xC0 + i as u64)),
                base,
            }
        };
        layers.push(Layer {
            x0,
            y0,
            x1: x0 + rw,
            y1: y0 + rh,
            d,
            style,
        });
    }
    // Painter's order: nearest (largest disparity) last so it wins overlaps.
    layers.sort_by_key(|l| l.d);

    let mut left = vec![0u8; width * height];
    let mut right = vec![0u8; width * height];
    let mut gt = vec![0.0f32; width * height];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let i = (y as usize) * width + x as usize;
            for layer in &layers {
                if layer.contains(x, y) {
                    left[i] = layer.sample(x, y);
                    gt[i] = layer.d as f32;
                }
                // The right view sees the layer shifted left by its
                // disparity; texture is sampled in left-view coordinates so
                // correspondences are photo-consistent.
                let xs = x + layer.d as i64;
                if layer.contains(xs, y) {
                    right[i] = layer.sample(xs, y);
                }
            }
            if opts.noise_amplitude > 0 {
                let a = opts.noise_amplitude as i64;
                let nl = (tex(x, y, seed ^ 0x5EED_1EF7) as i64) % (2 * a + 1) - a;
                let nr = (tex(x, y, seed ^ 0x5EED_817) as i64) % (2 * a + 1) - a;
                left[i] = (left[i] as i64 + nl).clamp(0, 255) as u8;
                right[i] = (right[i] as i64 + nr).clamp(0, 255) as u8;
            }
        }
    }

    StereoSample::new(
        format!("synth-{seed}"),
        GrayImage::new(width, height, left)?,
        GrayImage::new(width, height, right)?,
        DisparityMap::from_vec(width, height, gt),
        Some(Calib {
            focal_px: 500.0,
            baseline_m: 0.2,
        }),
    )
}

fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
            .expect("buffer length matches dimensions");
    buf.save(path)
        .map_err(|e| Error::malformed("PNG", path, e.to_string()))
}

/// Writes `im0.png`, `im1.png`, `disp0.pfm`, and `calib.txt` into `dir`.
pub fn write_middlebury_fixture(dir: &Path, sample: &StereoSample) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_gray(&sample.left, &dir.join("im0.png"))?;
    save_gray(&sample.right, &dir.join("im1.png"))?;
    write_pfm(&sample.ground_truth, dir.join("disp0.pfm"))?;
    let calib = sample.calib.unwrap_or(Calib {
        focal_px: 500.0,
        baseline_m: 0.2,
    });
    let (w, h) = (sample.left.width(), sample.left.height());
    let f = calib.focal_px;
    let text = format!(
        "cam0=[{f} 0 {cx}; 0 {f} {cy}; 0 0 1]\ncam1=[{f} 0 {cx}; 0 {f} {cy}; 0 0 1]\nbaseline={b}\nwidth={w}\nheight={h}\n",
        cx = w / 2,
        cy = h / 2,
        b = calib.baseline_m * 1000.0,
    );
    let path = dir.join("calib.txt");
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Writes the sample into `image_2/`, `image_3/`, and `disp_occ_0/` under
/// `root`, named `<sample name>.png`.
pub fn write_kitti_fixture(root: &Path, sample: &StereoSample) -> Result<()> {
    for sub in ["image_2", "image_3", "disp_occ_0"] {
        let d = root.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(d, e))?;
    }
    let file = format!("{}.png", sample.name);
    save_gray(&sample.left, &root.join("image_2").join(&file))?;
    save_gray(&sample.right, &root.join("image_3").join(&file))?;
    write_kitti_disparity_png(&sample.ground_truth, root.join("disp_occ_0").join(&file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{load_kitti_dataset, load_middlebury_sample};

    #[test]
    fn shifted_pair_is_exactly_consistent() {
        let (left, right, gt) = shifted_pair(32, 8, 4, 99);
        for y in 0..8 {
            for x in 0..28 {
                assert_eq!(right.get(x, y), left.get(x + 4, y));
            }
            assert_eq!(gt.get(3, y), 4.0);
        }
    }

    #[test]
    fn scenes_are_deterministic_per_seed() {
        let opts = SceneOptions::default();
        let a = fusion_scene(48, 40, 24, &opts, 7).unwrap();
        let b = fusion_scene(48, 40, 24, &opts, 7).unwrap();
        assert_eq!(a.left.data(), b.left.data());
        assert_eq!(a.right.data(), b.right.data());
        assert_eq!(a.ground_truth.data(), b.ground_truth.data());
        let c = fusion_scene(48, 40, 24, &opts, 8).unwrap();
        assert_ne!(a.left.data(), c.left.data());
    }

    #[test]
    fn background_only_scene_is_fully_photo_consistent() {
        let opts = SceneOptions {
            rect_count: 0,
            noise_amplitude: 0,
            background_d: 3,
        };
        let s = fusion_scene(40, 20, 16, &opts, 1).unwrap();
        for y in 0..20 {
            for x in 3..40usize {
                assert_eq!(
                    s.right.get(x - 3, y),
                    s.left.get(x, y),
                    "({x}, {y})"
                );
                assert_eq!(s.ground_truth.get(x, y), 3.0);
            }
        }
    }

    #[test]
    fn layered_scene_is_photo_consistent_outside_occlusions() {
        let opts = SceneOptions {
            rect_count: 4,
            noise_amplitude: 0,
            background_d: 2,
        };
        let s = fusion_scene(64, 48, 24, &opts, 5).unwrap();
        let (mut tested, mut matched) = (0u32, 0u32);
        for y in 0..48 {
            for x in 0..64usize {
                let d = s.ground_truth.get(x, y) as usize;
                if x >= d {
                    tested += 1;
                    if s.right.get(x - d, y) == s.left.get(x, y) {
                        matched += 1;
                    }
                }
            }
        }
        assert!(
            matched * 100 >= tested * 75,
            "only {matched}/{tested} correspondences are photo-consistent"
        );
        assert!(matched < tested, "expected some occlusion mismatches");
    }

    #[test]
    fn sensor_noise_stays_within_its_amplitude() {
        let quiet = SceneOptions {
            noise_amplitude: 0,
            ..SceneOptions::default()
        };
        let noisy = SceneOptions {
            noise_amplitude: 2,
            ..SceneOptions::default()
        };
        let a = fusion_scene(48, 32, 20, &quiet, 3).unwrap();
        let b = fusion_scene(48, 32, 20, &noisy, 3).unwrap();
        for (pa, pb) in a.left.data().iter().zip(b.left.data()) {
            assert!((*pa as i16 - *pb as i16).abs() <= 2);
        }
        assert_ne!(a.left.data(), b.left.data());
        assert_ne!(b.left.data(), b.right.data());
    }

    #[test]
    fn ground_truth_spans_multiple_planes() {
        let s = fusion_scene(64, 48, 24, &SceneOptions::default(), 11).unwrap();
        let mut levels: Vec<i32> = s
            .ground_truth
            .data()
            .iter()
            .map(|d| *d as i32)
            .collect();
        levels.sort_unstable();
        levels.dedup();
        assert!(levels.len() >= 3, "only {levels:?}");
        assert_eq!(levels[0], 2);
        assert!(*levels.last().unwrap() <= 24);
    }

    #[test]
    fn middlebury_fixture_round_trips_through_the_loader() {
        let dir = tempfile::tempdir().unwrap();
        let s = fusion_scene(40, 32, 20, &SceneOptions::default(), 21).unwrap();
        let sub = dir.path().join(&s.name);
        write_middlebury_fixture(&sub, &s).unwrap();
        let back = load_middlebury_sample(&sub, 20).unwrap();
        assert_eq!(back.left.data(), s.left.data());
        assert_eq!(back.right.data(), s.right.data());
        assert_eq!(back.ground_truth.data(), s.ground_truth.data());
        let c = back.calib.unwrap();
        assert_eq!(c.focal_px, 500.0);
        assert!((c.baseline_m - 0.2).abs() < 1e-7);
    }

    #[test]
    fn kitti_fixture_round_trips_through_the_loader() {
        let dir = tempfile::tempdir().unwrap();
        let s = fusion_scene(40, 32, 20, &SceneOptions::default(), 22).unwrap();
        write_kitti_fixture(dir.path(), &s).unwrap();
        let back = load_kitti_dataset(dir.path(), 20).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].name, s.name);
        assert_eq!(back[0].left.data(), s.left.data());
        assert_eq!(back[0].ground_truth.data(), s.ground_truth.data());
    }
}

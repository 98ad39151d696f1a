//! Directory loaders for the two supported dataset layouts.

use std::fs;
use std::path::Path;

use image::DynamicImage;

use crate::error::{Error, Result};
use crate::gray::GrayImage;

use super::kitti::{open, read_kitti_disparity_png};
use super::pfm::read_pfm;
use super::{cap_disparities, Calib, CapPolicy, StereoSample};

/// Collapses any decoded image to 8-bit grayscale with ITU-R 601 luma
/// weights, rounded to nearest.
pub fn to_gray(img: &DynamicImage) -> Result<GrayImage> {
    let rgb = img.to_rgb8();
    let data = rgb
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32).round() as u8
        })
        .collect();
    GrayImage::new(rgb.width() as usize, rgb.height() as usize, data)
}

/// Opens any supported image file as 8-bit grayscale.
pub fn load_gray_image<P: AsRef<Path>>(path: P) -> Result<GrayImage> {
    to_gray(&open(path.as_ref())?)
}

/// Reads a `calib.txt` with `cam0=[f 0 cx; ...]` and `baseline=<mm>` lines.
pub fn read_calib<P: AsRef<Path>>(path: P) -> Result<Calib> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut focal = None;
    let mut baseline_mm = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("cam0=") {
            // cam0=[f 0 cx; 0 f cy; 0 0 1]: the first entry is the focal length.
            let tok = rest
                .trim_start_matches('[')
                .split_whitespace()
                .next()
                .ok_or_else(|| Error::malformed("calib", path, "empty cam0 matrix"))?;
            focal = Some(tok.parse::<f32>().map_err(|_| {
                Error::malformed("calib", path, format!("bad cam0 focal {tok:?}"))
            })?);
        } else if let Some(rest) = line.strip_prefix("baseline=") {
            let rest = rest.trim();
            baseline_mm = Some(rest.parse::<f32>().map_err(|_| {
                Error::malformed("calib", path, format!("bad baseline {rest:?}"))
            })?);
        }
    }
    match (focal, baseline_mm) {
        (Some(focal_px), Some(mm)) => Ok(Calib {
            focal_px,
            baseline_m: mm / 1000.0,
        }),
        _ => Err(Error::malformed(
            "calib",
            path,
            "missing cam0 or baseline key",
        )),
    }
}

/// Loads one `im0.png` / `im1.png` / `disp0.pfm` / `calib.txt` directory.
/// Ground truth beyond `d_max` is excluded from evaluation entirely.
pub fn load_middlebury_sample<P: AsRef<Path>>(dir: P, d_max: usize) -> Result<StereoSample> {
    let dir = dir.as_ref();
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sample".to_string());
    let left = to_gray(&open(&dir.join("im0.png"))?)?;
    let right = to_gray(&open(&dir.join("im1.png"))?)?;
    let mut gt = read_pfm(dir.join("disp0.pfm"))?;
    cap_disparities(&mut gt, d_max, CapPolicy::InvalidateAbove);
    let calib_path = dir.join("calib.txt");
    let calib = if calib_path.exists() {
        Some(read_calib(&calib_path)?)
    } else {
        None
    };
    StereoSample::new(name, left, right, gt, calib)
}

/// Loads every subdirectory of `root` that contains `im0.png`, sorted by name.
pub fn load_middlebury_dataset<P: AsRef<Path>>(root: P, d_max: usize) -> Result<Vec<StereoSample>> {
    let root = root.as_ref();
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join("im0.png").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no sample directories with im0.png under {}",
            root.display()
        )));
    }
    dirs.into_iter()
        .map(|d| load_middlebury_sample(&d, d_max))
        .collect()
}

/// Loads one frame id from an `image_2/` + `image_3/` + `disp_occ_0/` tree.
/// Ground truth beyond `d_max` is clamped to the top of the range.
pub fn load_kitti_sample<P: AsRef<Path>>(root: P, id: &str, d_max: usize) -> Result<StereoSample> {
    let root = root.as_ref();
    let left = to_gray(&open(&root.join("image_2").join(format!("{id}.png")))?)?;
    let right = to_gray(&open(&root.join("image_3").join(format!("{id}.png")))?)?;
    let mut gt = read_kitti_disparity_png(root.join("disp_occ_0").join(format!("{id}.png")))?;
    cap_disparities(&mut gt, d_max, CapPolicy::ClampAbove);
    StereoSample::new(id.to_string(), left, right, gt, None)
}

/// Loads every frame listed under `disp_occ_0/`, sorted by id.
pub fn load_kitti_dataset<P: AsRef<Path>>(root: P, d_max: usize) -> Result<Vec<StereoSample>> {
    let root = root.as_ref();
    let gt_dir = root.join("disp_occ_0");
    let mut ids = Vec::new();
    for entry in fs::read_dir(&gt_dir).map_err(|e| Error::io(&gt_dir, e))? {
        let entry = entry.map_err(|e| Error::io(&gt_dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "png") {
            if let Some(stem) = path.file_stem() {
                ids.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no disparity PNGs under {}",
            gt_dir.display()
        )));
    }
    ids.iter().map(|id| load_kitti_sample(root, id, d_max)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{write_kitti_disparity_png, write_pfm};
    use crate::disparity::DisparityMap;
    use image::{ImageBuffer, Luma, Rgb};

    #[test]
    fn luma_weights_match_hand_values() {
        let rgb: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(3, 1, vec![100, 150, 200, 255, 255, 255, 10, 10, 10]).unwrap();
        let gray = to_gray(&DynamicImage::ImageRgb8(rgb)).unwrap();
        assert_eq!(gray.get(0, 0), 141);
        assert_eq!(gray.get(1, 0), 255);
        assert_eq!(gray.get(2, 0), 10);
    }

    #[test]
    fn calib_parsing_extracts_focal_and_meter_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("calib.txt");
        fs::write(
            &p,
            "cam0=[3997.684 0 1176.728; 0 3997.684 1011.728; 0 0 1]\n\
             cam1=[3997.684 0 1307.839; 0 3997.684 1011.728; 0 0 1]\n\
             doffs=131.111\nbaseline=193.001\nwidth=2964\nheight=1988\nndisp=280\n",
        )
        .unwrap();
        let c = read_calib(&p).unwrap();
        assert_eq!(c.focal_px, 3997.684);
        assert!((c.baseline_m - 0.193001).abs() < 1e-7);
    }

    #[test]
    fn calib_without_baseline_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("calib.txt");
        fs::write(&p, "cam0=[500 0 10; 0 500 10; 0 0 1]\n").unwrap();
        assert!(matches!(read_calib(&p), Err(Error::Malformed { .. })));
    }

    fn write_gray_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) {
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(w, h, |x, y| Luma([f(x, y)]));
        buf.save(path).unwrap();
    }

    #[test]
    fn middlebury_layout_round_trips() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("toy");
        fs::create_dir(&dir).unwrap();
        write_gray_png(&dir.join("im0.png"), 6, 4, |x, y| (x * 10 + y) as u8);
        write_gray_png(&dir.join("im1.png"), 6, 4, |x, y| (x * 10 + y + 1) as u8);
        let mut gt = DisparityMap::invalid(6, 4);
        gt.set(0, 0, 3.5);
        gt.set(1, 0, 80.0);
        gt.set(2, 3, 12.0);
        write_pfm(&gt, dir.join("disp0.pfm")).unwrap();
        fs::write(dir.join("calib.txt"), "cam0=[500 0 3; 0 500 2; 0 0 1]\nbaseline=200\n").unwrap();

        let samples = load_middlebury_dataset(root.path(), 64).unwrap();
        assert_eq!(samples.len(), 1);
        let s = &samples[0];
        assert_eq!(s.name, "toy");
        assert_eq!(s.left.get(3, 2), 32);
        assert_eq!(s.right.get(3, 2), 33);
        assert_eq!(s.ground_truth.get(0, 0), 3.5);
        assert!(!s.ground_truth.is_valid(1, 0), "80 exceeds d_max and must drop");
        let c = s.calib.unwrap();
        assert_eq!(c.focal_px, 500.0);
        assert_eq!(c.baseline_m, 0.2);
    }

    #[test]
    fn kitti_layout_round_trips_with_clamping() {
        let root = tempfile::tempdir().unwrap();
        for sub in ["image_2", "image_3", "disp_occ_0"] {
            fs::create_dir(root.path().join(sub)).unwrap();
        }
        write_gray_png(&root.path().join("image_2/000000_10.png"), 5, 3, |x, _| x as u8);
        write_gray_png(&root.path().join("image_3/000000_10.png"), 5, 3, |x, _| x as u8 + 2);
        let mut gt = DisparityMap::invalid(5, 3);
        gt.set(0, 0, 100.0);
        gt.set(4, 2, 7.25);
        write_kitti_disparity_png(&gt, root.path().join("disp_occ_0/000000_10.png")).unwrap();

        let samples = load_kitti_dataset(root.path(), 64).unwrap();
        assert_eq!(samples.len(), 1);
        let s = &samples[0];
        assert_eq!(s.name, "000000_10");
        assert_eq!(s.ground_truth.get(0, 0), 64.0, "beyond-range gt clamps");
        assert_eq!(s.ground_truth.get(4, 2), 7.25);
        assert!(s.calib.is_none());
    }

    #[test]
    fn empty_roots_are_reported() {
        let root = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_middlebury_dataset(root.path(), 64),
            Err(Error::EmptyInput(_))
        ));
        fs::create_dir(root.path().join("disp_occ_0")).unwrap();
        assert!(matches!(
            load_kitti_dataset(root.path(), 64),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn missing_image_error_names_the_path() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("s1");
        fs::create_dir(&dir).unwrap();
        let err = load_middlebury_sample(&dir, 64).unwrap_err();
        assert!(err.to_string().contains("im0.png"), "{err}");
    }
}

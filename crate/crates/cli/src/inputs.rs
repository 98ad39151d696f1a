//! Input resolution: locating stereo samples on disk and obtaining seeds.

use std::path::Path;

use anyhow::{bail, Context};
use stereofuse::datasets::{
    cap_disparities, load_gray_image, load_kitti_dataset, load_middlebury_dataset,
    read_kitti_disparity_png, read_pfm, sample_split, CapPolicy, StereoSample,
};
use stereofuse::{DisparityMap, SeedSet};

use crate::config::{DatasetKind, RunConfig};

/// Reads a disparity file by extension: `.pfm` or 16-bit KITTI `.png`.
pub fn read_disparity_file(path: &Path) -> anyhow::Result<DisparityMap> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    match ext.as_str() {
        "pfm" => Ok(read_pfm(path)?),
        "png" => Ok(read_kitti_disparity_png(path)?),
        _ => bail!(
            "unsupported disparity format for {} (expected .pfm or .png)",
            path.display()
        ),
    }
}

/// Resolves the input layout, probing the dataset directory when the config
/// names none explicitly.
pub fn resolve_kind(cfg: &RunConfig) -> anyhow::Result<DatasetKind> {
    if let Some(kind) = cfg.kind {
        return Ok(kind);
    }
    if cfg.left.is_some() || cfg.right.is_some() {
        return Ok(DatasetKind::RawPair);
    }
    let Some(dir) = &cfg.dataset else {
        bail!("no input given: pass --pair LEFT RIGHT or --dataset DIR");
    };
    if dir.join("disp_occ_0").is_dir() {
        return Ok(DatasetKind::KittiStyle);
    }
    let has_middlebury_sample = std::fs::read_dir(dir)
        .with_context(|| format!("probing dataset directory {}", dir.display()))?
        .filter_map(|e| e.ok())
        .any(|e| e.path().join("im0.png").is_file());
    if has_middlebury_sample {
        return Ok(DatasetKind::MiddleburyStyle);
    }
    bail!(
        "cannot infer the layout of {}: found neither disp_occ_0/ nor a subdirectory with im0.png (pass --kind)",
        dir.display()
    );
}

fn load_raw_pair(cfg: &RunConfig) -> anyhow::Result<StereoSample> {
    let (Some(left_path), Some(right_path)) = (&cfg.left, &cfg.right) else {
        bail!("raw-pair input needs --pair LEFT RIGHT");
    };
    let left = load_gray_image(left_path).context("loading left image")?;
    let right = load_gray_image(right_path).context("loading right image")?;
    let ground_truth = match &cfg.gt {
        Some(path) => {
            let mut gt = read_disparity_file(path).context("loading ground truth")?;
            cap_disparities(&mut gt, cfg.params.d_max, CapPolicy::InvalidateAbove);
            gt
        }
        None => DisparityMap::invalid(left.width(), left.height()),
    };
    let name = left_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pair".to_string());
    Ok(StereoSample::new(name, left, right, ground_truth, None)?)
}

/// Loads every input sample according to the configured dataset kind.
pub fn load_samples(cfg: &RunConfig) -> anyhow::Result<Vec<StereoSample>> {
    match resolve_kind(cfg)? {
        DatasetKind::RawPair => Ok(vec![load_raw_pair(cfg)?]),
        DatasetKind::MiddleburyStyle => {
            let dir = require_dataset_dir(cfg)?;
            Ok(load_middlebury_dataset(dir, cfg.params.d_max)
                .context("loading middlebury-style dataset")?)
        }
        DatasetKind::KittiStyle => {
            let dir = require_dataset_dir(cfg)?;
            Ok(load_kitti_dataset(dir, cfg.params.d_max).context("loading kitti-style dataset")?)
        }
    }
}

fn require_dataset_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    cfg.dataset
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("this input layout needs --dataset DIR"))
}

/// A short label for the CSV `dataset` column.
pub fn dataset_label(cfg: &RunConfig) -> String {
    cfg.dataset
        .as_deref()
        .and_then(Path::file_name)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pair".to_string())
}

/// Seeds for one sample plus the pixels left for evaluation.
///
/// An explicit seed file wins; otherwise the configured fraction of the
/// sample's ground truth is sampled and those pixels leave the evaluation
/// map. Methods without seed input keep the full ground truth for scoring.
pub fn resolve_seeds(
    cfg: &RunConfig,
    sample: &StereoSample,
) -> anyhow::Result<(Option<SeedSet>, DisparityMap)> {
    if !cfg.method.uses_seeds() {
        return Ok((None, sample.ground_truth.clone()));
    }
    if let Some(path) = &cfg.seeds {
        let seeds = SeedSet::load(path, cfg.params.d_max).context("reading seed file")?;
        if seeds.width() != sample.left.width() || seeds.height() != sample.left.height() {
            bail!(
                "seed file {} is {}x{} but sample {} is {}x{}",
                path.display(),
                seeds.width(),
                seeds.height(),
                sample.name,
                sample.left.width(),
                sample.left.height()
            );
        }
        return Ok((Some(seeds), sample.ground_truth.clone()));
    }
    if sample.ground_truth.valid_count() == 0 {
        bail!(
            "method {} needs seeds for sample {}: pass --seeds FILE or ground truth to sample from",
            cfg.method,
            sample.name
        );
    }
    let (seeds, eval) = sample_split(&sample.ground_truth, &cfg.split_spec(), cfg.params.d_max)
        .with_context(|| format!("splitting seeds for sample {}", sample.name))?;
    Ok((Some(seeds), eval))
}

//! Outlier-rate metrics, the seed-fraction sweep, and report rendering.

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::Serialize;

use crate::datasets::{sample_split, SplitSpec, StereoSample};
use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::params::FusionParams;
use crate::pipeline::{run_method, Method, PipelineOptions, StageTimings};

/// Percentage of evaluated pixels whose absolute disparity error exceeds each
/// threshold (strict `>`). INVALID estimates count as outliers everywhere.
/// With `relative`, a pixel is an outlier only if the error also exceeds 5%
/// of the ground-truth value.
pub fn error_rates(
    est: &DisparityMap,
    eval: &DisparityMap,
    thresholds: &[f32],
    relative: bool,
) -> Result<Vec<f64>> {
    if est.width() != eval.width() || est.height() != eval.height() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, evaluation map is {}x{}",
            est.width(),
            est.height(),
            eval.width(),
            eval.height()
        )));
    }
    let mut evaluated = 0u64;
    let mut outliers = vec![0u64; thresholds.len()];
    for (x, y, gt) in eval.iter_valid() {
        evaluated += 1;
        let e = est.get(x, y);
        if !e.is_finite() {
            for o in &mut outliers {
                *o += 1;
            }
            continue;
        }
        let err = (e - gt).abs();
        for (o, &t) in outliers.iter_mut().zip(thresholds) {
            if err > t && (!relative || err > 0.05 * gt) {
                *o += 1;
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyInput(
            "no valid pixels to evaluate".to_string(),
        ));
    }
    Ok(outliers
        .iter()
        .map(|&o| 100.0 * o as f64 / evaluated as f64)
        .collect())
}

/// Outlier percentages at the standard 1/2/3 px thresholds for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub method: Method,
    pub err1: f64,
    pub err2: f64,
    pub err3: f64,
    pub eval_count: usize,
    pub timings: StageTimings,
}

impl ErrorReport {
    pub fn from_maps(
        method: Method,
        est: &DisparityMap,
        eval: &DisparityMap,
        relative: bool,
        timings: StageTimings,
    ) -> Result<Self> {
        let rates = error_rates(est, eval, &[1.0, 2.0, 3.0], relative)?;
        Ok(Self {
            method,
            err1: rates[0],
            err2: rates[1],
            err3: rates[2],
            eval_count: eval.valid_count(),
            timings,
        })
    }
}

/// One CSV row of a sweep: a (sample, method, fraction) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub dataset: String,
    pub sample: String,
    pub method: Method,
    pub fraction: f64,
    pub rng_seed: u64,
    pub report: ErrorReport,
}

/// What a sweep varies and how it evaluates.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub noise_fraction: f64,
    pub rng_seed: u64,
    pub relative_tolerance: bool,
    /// When false, all ms columns are reported as zero so reruns and
    /// different worker counts produce byte-identical CSV.
    pub collect_timings: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.05, 0.10, 0.15, 0.25],
            methods: Method::ALL.to_vec(),
            noise_fraction: 0.0,
            rng_seed: 42,
            relative_tolerance: false,
            collect_timings: true,
        }
    }
}

/// Splits, runs, and scores every (method, fraction) cell on one sample.
pub fn sample_sweep(
    sample: &StereoSample,
    dataset: &str,
    cfg: &SweepConfig,
    params: &FusionParams,
    opts: &PipelineOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.fractions.len());
    for &fraction in &cfg.fractions {
        let spec = SplitSpec {
            seed_fraction: fraction,
            noise_fraction: cfg.noise_fraction,
            rng_seed: cfg.rng_seed,
        };
        let (seeds, eval) = sample_split(&sample.ground_truth, &spec, params.d_max)?;
        for &method in &cfg.methods {
            let (est, mut timings) = run_method(
                &sample.left,
                &sample.right,
                Some(&seeds),
                method,
                params,
                opts,
            )?;
            if !cfg.collect_timings {
                timings = StageTimings::default();
            }
            let report =
                ErrorReport::from_maps(method, &est, &eval, cfg.relative_tolerance, timings)?;
            rows.push(SweepRow {
                dataset: dataset.to_string(),
                sample: sample.name.clone(),
                method,
                fraction,
                rng_seed: cfg.rng_seed,
                report,
            });
        }
    }
    Ok(rows)
}

/// Sweeps samples concurrently, sorts rows canonically, and appends one
/// `mean` aggregate row per (method, fraction).
pub fn bench_sweep(
    samples: &[StereoSample],
    dataset: &str,
    cfg: &SweepConfig,
    params: &FusionParams,
    opts: &PipelineOptions,
) -> Result<Vec<SweepRow>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to bench".to_string()));
    }
    let per_sample: Vec<Vec<SweepRow>> = samples
        .par_iter()
        .map(|sample| sample_sweep(sample, dataset, cfg, params, opts))
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = per_sample.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.dataset, &a.sample, a.method.name(), a.fraction)
            .partial_cmp(&(&b.dataset, &b.sample, b.method.name(), b.fraction))
            .unwrap()
    });

    let mut means = Vec::new();
    for &method in &cfg.methods {
        for &fraction in &cfg.fractions {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.method == method && r.fraction == fraction)
                .collect();
            let n = cell.len() as f64;
            let mean = |f: &dyn Fn(&SweepRow) -> f64| cell.iter().map(|r| f(r)).sum::<f64>() / n;
            means.push(SweepRow {
                dataset: dataset.to_string(),
                sample: "mean".to_string(),
                method,
                fraction,
                rng_seed: cfg.rng_seed,
                report: ErrorReport {
                    method,
                    err1: mean(&|r| r.report.err1),
                    err2: mean(&|r| r.report.err2),
                    err3: mean(&|r| r.report.err3),
                    eval_count: cell.iter().map(|r| r.report.eval_count).sum(),
                    timings: StageTimings {
                        census_ms: mean(&|r| r.report.timings.census_ms),
                        agg_ms: mean(&|r| r.report.timings.agg_ms),
                        fusion_ms: mean(&|r| r.report.timings.fusion_ms),
                        total_ms: mean(&|r| r.report.timings.total_ms),
                    },
                },
            });
        }
    }
    means.sort_by(|a, b| {
        (a.method.name(), a.fraction)
            .partial_cmp(&(b.method.name(), b.fraction))
            .unwrap()
    });
    rows.extend(means);
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "dataset,sample,method,fraction,seed,gt_eval_count,err1,err2,err3,ms_census,ms_agg,ms_fusion,ms_total";

/// Renders rows to CSV with fixed float formatting so equal inputs yield
/// byte-identical output.
pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let t = &r.report.timings;
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.3},{:.3},{:.3},{:.3}\n",
            r.dataset,
            r.sample,
            r.method,
            r.fraction,
            r.rng_seed,
            r.report.eval_count,
            r.report.err1,
            r.report.err2,
            r.report.err3,
            t.census_ms,
            t.agg_ms,
            t.fusion_ms,
            t.total_ms,
        ));
    }
    out
}

const RAMP: [(f32, [f32; 3]); 5] = [
    (0.00, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.50, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.00, [253.0, 231.0, 37.0]),
];

/// Maps disparities linearly onto a perceptual dark-violet-to-yellow ramp;
/// INVALID pixels render black.
pub fn colorize(map: &DisparityMap, d_min: f32, d_max: f32) -> Result<RgbImage> {
    if !(d_min < d_max) {
        return Err(Error::InvalidParams(format!(
            "colorize range requires d_min < d_max, got [{d_min}, {d_max}]"
        )));
    }
    let mut img = RgbImage::new(map.width() as u32, map.height() as u32);
    for y in 0..map.height() {
        for x in 0..map.width() {
            let d = map.get(x, y);
            let px = if d.is_finite() {
                let t = ((d - d_min) / (d_max - d_min)).clamp(0.0, 1.0);
                ramp_color(t)
            } else {
                [0, 0, 0]
            };
            img.put_pixel(x as u32, y as u32, Rgb(px));
        }
    }
    Ok(img)
}

fn ramp_color(t: f32) -> [u8; 3] {
    let (mut lo, mut hi) = (RAMP[0], RAMP[RAMP.len() - 1]);
    for win in RAMP.windows(2) {
        if t >= win[0].0 && t <= win[1].0 {
            (lo, hi) = (win[0], win[1]);
            break;
        }
    }
    let span = hi.0 - lo.0;
    let f = if span > 0.0 { (t - lo.0) / span } else { 0.0 };
    let mut px = [0u8; 3];
    for c in 0..3 {
        px[c] = (lo.1[c] + (hi.1[c] - lo.1[c]) * f).round() as u8;
    }
    px
}

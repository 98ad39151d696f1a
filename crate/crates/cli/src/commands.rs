//! The five subcommands: run, bench, sweep, convert, and inspect.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use stereofuse::datasets::{depth_to_disparity, read_calib, read_pfm, write_pfm};
use stereofuse::eval::{bench_sweep, colorize, sample_sweep, write_csv, ErrorReport, SweepRow};
use stereofuse::pipeline::{run_method, StageTimings};
use stereofuse::{Seed, SeedSet};

use crate::config::{ReportFormat, RunConfig};
use crate::inputs::{dataset_label, load_samples, resolve_seeds};
use crate::{ConvertArgs, InspectArgs};

#[derive(Serialize)]
struct SampleReport {
    name: String,
    pfm: PathBuf,
    png: PathBuf,
    report: Option<ErrorReport>,
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    samples: &'a [SampleReport],
}

/// Estimates disparity for every input sample and writes a PFM, a colorized
/// PNG, and the configured report files.
pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.params.validate().context("validating parameters")?;
    let samples = load_samples(cfg)?;
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    let opts = cfg.pipeline_options();
    let mut reports = Vec::with_capacity(samples.len());
    for sample in &samples {
        let (seeds, eval) = resolve_seeds(cfg, sample)?;
        let (map, mut timings) = run_method(
            &sample.left,
            &sample.right,
            seeds.as_ref(),
            cfg.method,
            &cfg.params,
            &opts,
        )
        .with_context(|| format!("estimating sample {}", sample.name))?;
        if cfg.no_timings {
            timings = StageTimings::default();
        }

        let pfm = cfg.out.join(format!("{}-disp.pfm", sample.name));
        write_pfm(&map, &pfm).context("writing disparity PFM")?;
        let png = cfg.out.join(format!("{}-disp.png", sample.name));
        colorize(&map, 0.0, cfg.params.d_max as f32)
            .context("colorizing disparity map")?
            .save(&png)
            .with_context(|| format!("writing colorized PNG {}", png.display()))?;

        let report = if eval.valid_count() > 0 {
            let r = ErrorReport::from_maps(cfg.method, &map, &eval, cfg.relative_tolerance, timings)
                .with_context(|| format!("scoring sample {}", sample.name))?;
            println!(
                "{}: wrote {} (err1 {:.4}%, err2 {:.4}%, err3 {:.4}%)",
                sample.name,
                pfm.display(),
                r.err1,
                r.err2,
                r.err3
            );
            Some(r)
        } else {
            println!(
                "{}: wrote {} (no ground truth to score)",
                sample.name,
                pfm.display()
            );
            None
        };
        reports.push(SampleReport {
            name: sample.name.clone(),
            pfm,
            png,
            report,
        });
    }

    for format in &cfg.report_formats {
        match format {
            ReportFormat::Json => {
                let path = cfg.out.join("report.json");
                let report = RunReport {
                    config: cfg,
                    samples: &reports,
                };
                let mut text = serde_json::to_string_pretty(&report)
                    .context("serializing the run report")?;
                text.push('\n');
                fs::write(&path, text)
                    .with_context(|| format!("writing report {}", path.display()))?;
                println!("report: {}", path.display());
            }
            ReportFormat::Csv => {
                let path = cfg.out.join("report.csv");
                let dataset = dataset_label(cfg);
                let rows: Vec<SweepRow> = reports
                    .iter()
                    .filter_map(|s| {
                        s.report.clone().map(|report| SweepRow {
                            dataset: dataset.clone(),
                            sample: s.name.clone(),
                            method: cfg.method,
                            fraction: cfg.fraction,
                            rng_seed: cfg.rng,
                            report,
                        })
                    })
                    .collect();
                fs::write(&path, write_csv(&rows))
                    .with_context(|| format!("writing report {}", path.display()))?;
                println!("report: {}", path.display());
            }
        }
    }
    Ok(())
}

/// Sweeps every sample over the configured methods and fractions and writes
/// the aggregate CSV, one `mean` row per (method, fraction).
pub fn bench(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.params.validate().context("validating parameters")?;
    let samples = load_samples(cfg)?;
    let rows = bench_sweep(
        &samples,
        &dataset_label(cfg),
        &cfg.sweep_config(),
        &cfg.params,
        &cfg.pipeline_options(),
    )
    .context("benchmarking the dataset")?;
    let path = write_rows(cfg, "bench.csv", &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    for row in rows.iter().filter(|r| r.sample == "mean") {
        println!(
            "mean {} @ {}: err1 {:.4} err2 {:.4} err3 {:.4}",
            row.method, row.fraction, row.report.err1, row.report.err2, row.report.err3
        );
    }
    Ok(())
}

/// Writes the per-sample sweep table without aggregate rows, optionally
/// restricted to one sample by name.
pub fn sweep(cfg: &RunConfig, sample_filter: Option<&str>) -> anyhow::Result<()> {
    cfg.params.validate().context("validating parameters")?;
    let mut samples = load_samples(cfg)?;
    if let Some(name) = sample_filter {
        let available: Vec<String> = samples.iter().map(|s| s.name.clone()).collect();
        samples.retain(|s| s.name == name);
        if samples.is_empty() {
            bail!("no sample named {name:?}; available: {}", available.join(", "));
        }
    }
    let dataset = dataset_label(cfg);
    let sweep_cfg = cfg.sweep_config();
    let opts = cfg.pipeline_options();
    let mut rows = Vec::new();
    for sample in &samples {
        rows.extend(
            sample_sweep(sample, &dataset, &sweep_cfg, &cfg.params, &opts)
                .with_context(|| format!("sweeping sample {}", sample.name))?,
        );
    }
    rows.sort_by(|a, b| {
        (&a.dataset, &a.sample, a.method.name(), a.fraction)
            .partial_cmp(&(&b.dataset, &b.sample, b.method.name(), b.fraction))
            .unwrap()
    });
    let path = write_rows(cfg, "sweep.csv", &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn write_rows(cfg: &RunConfig, file: &str, rows: &[SweepRow]) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    let path = cfg.out.join(file);
    fs::write(&path, write_csv(rows)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Projects a 16-bit depth image through the rig calibration into a plain
/// text seed file.
pub fn convert(args: &ConvertArgs) -> anyhow::Result<()> {
    anyhow::ensure!(args.step >= 1, "--step must be at least 1");
    let calib = args.calib.as_ref().map(read_calib).transpose()?;
    let focal = args
        .focal
        .or(calib.map(|c| c.focal_px))
        .context("convert needs --focal or a --calib file")?;
    let baseline = args
        .baseline
        .or(calib.map(|c| c.baseline_m))
        .context("convert needs --baseline or a --calib file")?;

    let img = image::open(&args.input)
        .with_context(|| format!("reading depth image {}", args.input.display()))?;
    let image::DynamicImage::ImageLuma16(depth) = img else {
        bail!(
            "depth image {} must be 16-bit grayscale, got {:?}",
            args.input.display(),
            img.color()
        );
    };

    let (w, h) = depth.dimensions();
    let mut seeds = Vec::new();
    let mut valid = 0usize;
    for y in 0..h {
        for x in 0..w {
            // Raw 0 is the sensor's no-return marker.
            let raw = depth.get_pixel(x, y).0[0];
            if raw == 0 {
                continue;
            }
            valid += 1;
            if (valid - 1) % args.step != 0 {
                continue;
            }
            let d = depth_to_disparity(raw as f32 * args.depth_unit, focal, baseline)
                .context("projecting depth to disparity")?;
            if d > args.dmax as f32 {
                continue;
            }
            seeds.push(Seed {
                x: x as usize,
                y: y as usize,
                d,
            });
        }
    }
    let set = SeedSet::new(w as usize, h as usize, seeds, args.dmax)
        .context("assembling the seed set")?;
    set.save(&args.out).context("writing the seed file")?;
    println!("wrote {} seeds ({}x{}) to {}", set.len(), w, h, args.out.display());
    Ok(())
}

/// Prints one header-summary line per input file.
pub fn inspect(args: &InspectArgs) -> anyhow::Result<()> {
    for path in &args.files {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        let line = match ext.as_str() {
            "pfm" => describe_pfm(path)?,
            "png" => describe_png(path)?,
            _ => bail!("cannot inspect {} (expected .pfm or .png)", path.display()),
        };
        println!("{}: {line}", path.display());
    }
    Ok(())
}

fn describe_pfm(path: &Path) -> anyhow::Result<String> {
    let (magic, width, height, scale) =
        pfm_header(path).with_context(|| format!("parsing PFM header of {}", path.display()))?;
    let endian = if scale < 0.0 { "little-endian" } else { "big-endian" };
    let map = read_pfm(path)?;
    let valid: Vec<f32> = map.iter_valid().map(|(_, _, d)| d).collect();
    let range = match (
        valid.iter().cloned().reduce(f32::min),
        valid.iter().cloned().reduce(f32::max),
    ) {
        (Some(lo), Some(hi)) => format!("range [{lo}, {hi}]"),
        _ => "no valid pixels".to_string(),
    };
    Ok(format!(
        "PFM ({magic}) {width}x{height}, {endian}, scale {}, {}/{} valid, {range}",
        scale.abs(),
        valid.len(),
        width * height
    ))
}

/// Parses the three-token PFM text header: magic, dimensions, scale.
fn pfm_header(path: &Path) -> anyhow::Result<(String, usize, usize, f32)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut tokens = Vec::with_capacity(4);
    let mut start = None;
    for (i, b) in bytes.iter().enumerate() {
        if b.is_ascii_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(String::from_utf8_lossy(&bytes[s..i]).into_owned());
                if tokens.len() == 4 {
                    break;
                }
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    let [magic, w, h, scale] = tokens.as_slice() else {
        bail!("truncated header");
    };
    Ok((
        magic.clone(),
        w.parse().with_context(|| format!("bad width {w:?}"))?,
        h.parse().with_context(|| format!("bad height {h:?}"))?,
        scale.parse().with_context(|| format!("bad scale {scale:?}"))?,
    ))
}

fn describe_png(path: &Path) -> anyhow::Result<String> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(format!(
        "PNG {}x{}, {:?}",
        img.width(),
        img.height(),
        img.color()
    ))
}

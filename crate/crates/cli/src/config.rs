//! Layered run configuration: built-in defaults, then an optional TOML file,
//! then command-line flags, with later layers winning field by field.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use stereofuse::datasets::SplitSpec;
use stereofuse::eval::SweepConfig;
use stereofuse::pipeline::{AnisoOptions, Method, PipelineOptions};
use stereofuse::FusionParams;

/// Directory layout of the input data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    /// Sample subdirectories holding `im0.png`, `im1.png`, `disp0.pfm`.
    MiddleburyStyle,
    /// `image_2/`, `image_3/`, and `disp_occ_0/` trees keyed by frame id.
    KittiStyle,
    /// A single left/right image pair given directly.
    RawPair,
}

/// Report files the `run` command writes next to the disparity artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// One fully resolved invocation: inputs, strategy, parameters, outputs.
///
/// Nested tables (`aniso`, `params`) must stay after the scalar fields so the
/// TOML form serializes values before tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Option<DatasetKind>,
    pub dataset: Option<PathBuf>,
    pub left: Option<PathBuf>,
    pub right: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub method: Method,
    pub fraction: f64,
    pub noise: f64,
    pub rng: u64,
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub relative_tolerance: bool,
    pub no_timings: bool,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub report_formats: Vec<ReportFormat>,
    pub census_radius: usize,
    pub aniso: AnisoOptions,
    pub params: FusionParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: None,
            dataset: None,
            left: None,
            right: None,
            gt: None,
            seeds: None,
            method: Method::Sgm,
            fraction: 0.15,
            noise: 0.0,
            rng: 42,
            fractions: vec![0.05, 0.10, 0.15, 0.25],
            methods: Method::ALL.to_vec(),
            relative_tolerance: false,
            no_timings: false,
            workers: None,
            out: PathBuf::from("out"),
            report_formats: vec![ReportFormat::Json],
            census_radius: 2,
            aniso: AnisoOptions::default(),
            params: FusionParams::default(),
        }
    }
}

/// Flags shared by `run`, `bench`, and `sweep`. Every value is optional so
/// only flags the user actually passed override the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Read defaults from a TOML config file before applying flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Left and right image of a raw pair.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"])]
    pub pair: Option<Vec<PathBuf>>,

    /// Dataset directory (middlebury-style or kitti-style layout).
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,

    /// Input layout; inferred from the directory contents when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<DatasetKind>,

    /// Ground-truth disparities for a raw pair (.pfm or 16-bit .png).
    #[arg(long, value_name = "FILE")]
    pub gt: Option<PathBuf>,

    /// Seed file: a '<width> <height>' header, then one 'x y d' per line.
    #[arg(long, value_name = "FILE")]
    pub seeds: Option<PathBuf>,

    /// Estimation strategy: sgm | naive | neighborhood | diffusion | aniso-baseline.
    #[arg(long)]
    pub method: Option<Method>,

    /// Fraction of valid ground-truth pixels sampled as seeds.
    #[arg(long)]
    pub fraction: Option<f64>,

    /// Multiplicative seed noise amplitude (0.05 reads as +/-5%).
    #[arg(long)]
    pub noise: Option<f64>,

    /// Seed for the sampling and noise RNG streams.
    #[arg(long)]
    pub rng: Option<u64>,

    /// Comma-separated seed fractions swept by bench and sweep.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,

    /// Comma-separated methods swept by bench and sweep.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,

    /// Number of scanline aggregation directions, 4 or 8.
    #[arg(long)]
    pub paths: Option<u32>,

    /// Aggregation penalty for a one-level disparity change.
    #[arg(long)]
    pub p1: Option<u32>,

    /// Aggregation penalty for larger disparity jumps.
    #[arg(long)]
    pub p2: Option<u32>,

    /// Largest disparity level searched.
    #[arg(long)]
    pub dmax: Option<usize>,

    /// Census window radius in pixels.
    #[arg(long)]
    pub census_radius: Option<usize>,

    /// Seed agreement band half-width, in disparity levels.
    #[arg(long)]
    pub tau_d: Option<f32>,

    /// Intensity-similarity threshold for promoting a neighbor, in (0, 1).
    #[arg(long)]
    pub tau_n: Option<f32>,

    /// Lower confidence cutoff for diffusion rewrites.
    #[arg(long)]
    pub tau_l: Option<f32>,

    /// Upper confidence cutoff for diffusion rewrites.
    #[arg(long)]
    pub tau_u: Option<f32>,

    /// Width of the intensity Gaussian, in intensity units.
    #[arg(long)]
    pub sigma_r: Option<f32>,

    /// Width of the spatial Gaussian, in pixels.
    #[arg(long)]
    pub sigma_d: Option<f32>,

    /// Neighborhood promotion window radius, in pixels.
    #[arg(long)]
    pub kw: Option<usize>,

    /// Seed interpolation radius, in pixels.
    #[arg(long)]
    pub kinterp: Option<usize>,

    /// Score outliers with the relative rule: >t px and >5% of ground truth.
    #[arg(long)]
    pub relative_tolerance: bool,

    /// Report all stage timings as zero so reruns are byte-identical.
    #[arg(long)]
    pub no_timings: bool,

    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output directory for artifacts and reports.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Parses a TOML config file.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Loads `--config` when given, then layers the remaining flags on top.
    pub fn resolve(args: &CommonArgs) -> anyhow::Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply(args);
        Ok(cfg)
    }

    /// Applies command-line flags over this config; passed flags win.
    pub fn apply(&mut self, args: &CommonArgs) {
        if let Some(pair) = &args.pair {
            self.kind = Some(DatasetKind::RawPair);
            self.left = Some(pair[0].clone());
            self.right = Some(pair[1].clone());
        }
        if let Some(v) = &args.dataset {
            self.dataset = Some(v.clone());
        }
        if let Some(v) = args.kind {
            self.kind = Some(v);
        }
        if let Some(v) = &args.gt {
            self.gt = Some(v.clone());
        }
        if let Some(v) = &args.seeds {
            self.seeds = Some(v.clone());
        }
        if let Some(v) = args.method {
            self.method = v;
        }
        if let Some(v) = args.fraction {
            self.fraction = v;
        }
        if let Some(v) = args.noise {
            self.noise = v;
        }
        if let Some(v) = args.rng {
            self.rng = v;
        }
        if let Some(v) = &args.fractions {
            self.fractions = v.clone();
        }
        if let Some(v) = &args.methods {
            self.methods = v.clone();
        }
        if let Some(v) = args.paths {
            self.params.num_paths = v;
        }
        if let Some(v) = args.p1 {
            self.params.p1 = v;
        }
        if let Some(v) = args.p2 {
            self.params.p2 = v;
        }
        if let Some(v) = args.dmax {
            self.params.d_max = v;
        }
        if let Some(v) = args.census_radius {
            self.census_radius = v;
        }
        if let Some(v) = args.tau_d {
            self.params.tau_d = v;
        }
        if let Some(v) = args.tau_n {
            self.params.tau_n = v;
        }
        if let Some(v) = args.tau_l {
            self.params.tau_l = v;
        }
        if let Some(v) = args.tau_u {
            self.params.tau_u = v;
        }
        if let Some(v) = args.sigma_r {
            self.params.sigma_r = v;
        }
        if let Some(v) = args.sigma_d {
            self.params.sigma_d = v;
        }
        if let Some(v) = args.kw {
            self.params.k_w = v;
        }
        if let Some(v) = args.kinterp {
            self.params.k_interp = v;
        }
        if args.relative_tolerance {
            self.relative_tolerance = true;
        }
        if args.no_timings {
            self.no_timings = true;
        }
        if let Some(v) = args.workers {
            self.workers = Some(v);
        }
        if let Some(v) = &args.out {
            self.out = v.clone();
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            census_radius: self.census_radius,
            aniso: self.aniso,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            seed_fraction: self.fraction,
            noise_fraction: self.noise,
            rng_seed: self.rng,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            fractions: self.fractions.clone(),
            methods: self.methods.clone(),
            noise_fraction: self.noise,
            rng_seed: self.rng,
            relative_tolerance: self.relative_tolerance,
            collect_timings: !self.no_timings,
        }
    }
}

//! Python bindings: thin wrappers over the core image, disparity, and seed
//! types plus the end-to-end estimation entry point and the file formats.

use std::str::FromStr;

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stereofuse::datasets::{
    read_pfm as read_pfm_rs, sample_split as sample_split_rs, write_pfm as write_pfm_rs, SplitSpec,
};
use stereofuse::eval::{colorize, error_rates as error_rates_rs};
use stereofuse::pipeline::{
    run_method as run_method_rs, AnisoOptions, Method, PipelineOptions, StageTimings,
};
use stereofuse::synthetic::{fusion_scene as fusion_scene_rs, SceneOptions};
use stereofuse::{DisparityMap, FusionParams, Seed, SeedSet, COST_CAP, INVALID_DISPARITY};

fn to_py(e: stereofuse::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Row-major 8-bit grayscale image.
#[pyclass(name = "GrayImage", module = "stereofuse_py", from_py_object)]
#[derive(Clone)]
struct PyGrayImage {
    inner: stereofuse::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(Self {
            inner: stereofuse::GrayImage::new(width, height, data).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Intensities in row-major order.
    fn data(&self) -> Vec<u8> {
        self.inner.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyIndexError::new_err(format!(
                "({x}, {y}) outside {}x{}",
                self.inner.width(),
                self.inner.height()
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Row-major subpixel disparity map; invalid pixels hold infinity.
#[pyclass(name = "DisparityMap", module = "stereofuse_py", from_py_object)]
#[derive(Clone)]
struct PyDisparityMap {
    inner: DisparityMap,
}

#[pymethods]
impl PyDisparityMap {
    /// Without `values` every pixel starts invalid.
    #[new]
    #[pyo3(signature = (width, height, values=None))]
    fn new(width: usize, height: usize, values: Option<Vec<f32>>) -> PyResult<Self> {
        let inner = match values {
            Some(v) => {
                if v.len() != width * height {
                    return Err(PyValueError::new_err(format!(
                        "got {} values, expected {width}x{height} = {}",
                        v.len(),
                        width * height
                    )));
                }
                DisparityMap::from_vec(width, height, v)
            }
            None => DisparityMap::invalid(width, height),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Disparities in row-major order, infinity where invalid.
    fn values(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f32> {
        self.check(x, y)?;
        Ok(self.inner.get(x, y))
    }

    fn set(&mut self, x: usize, y: usize, d: f32) -> PyResult<()> {
        self.check(x, y)?;
        self.inner.set(x, y, d);
        Ok(())
    }

    fn valid_count(&self) -> usize {
        self.inner.valid_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "DisparityMap({}x{}, {} valid)",
            self.inner.width(),
            self.inner.height(),
            self.inner.valid_count()
        )
    }
}

impl PyDisparityMap {
    fn check(&self, x: usize, y: usize) -> PyResult<()> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyIndexError::new_err(format!(
                "({x}, {y}) outside {}x{}",
                self.inner.width(),
                self.inner.height()
            )));
        }
        Ok(())
    }
}

/// Validated sparse disparity seeds for one image.
#[pyclass(name = "SeedSet", module = "stereofuse_py", from_py_object)]
#[derive(Clone)]
struct PySeedSet {
    inner: SeedSet,
}

#[pymethods]
impl PySeedSet {
    /// Builds a set from `(x, y, d)` triples; duplicate pixels keep the last.
    #[new]
    fn new(width: usize, height: usize, seeds: Vec<(usize, usize, f32)>, d_max: usize) -> PyResult<Self> {
        let seeds = seeds.into_iter().map(|(x, y, d)| Seed { x, y, d }).collect();
        Ok(Self {
            inner: SeedSet::new(width, height, seeds, d_max).map_err(to_py)?,
        })
    }

    /// Reads the plain-text seed format.
    #[staticmethod]
    fn load(path: &str, d_max: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SeedSet::load(path, d_max).map_err(to_py)?,
        })
    }

    /// Writes the plain-text seed format.
    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Seeds as `(x, y, d)` triples in `(y, x)` order.
    fn seeds(&self) -> Vec<(usize, usize, f32)> {
        self.inner.seeds().iter().map(|s| (s.x, s.y, s.d)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SeedSet({} seeds over {}x{})",
            self.inner.len(),
            self.inner.width(),
            self.inner.height()
        )
    }
}

/// The pipeline's tunable scalars; unspecified keywords keep their defaults.
#[pyclass(name = "FusionParams", module = "stereofuse_py", from_py_object)]
#[derive(Clone)]
struct PyFusionParams {
    inner: FusionParams,
}

#[pymethods]
impl PyFusionParams {
    #[new]
    #[pyo3(signature = (p1=None, p2=None, beta=None, epsilon=None, gamma=None, tau_d=None,
        tau_n=None, tau_l=None, tau_u=None, sigma_r=None, sigma_d=None, k_w=None,
        k_interp=None, d_max=None, num_paths=None, literal_low_confidence=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        p1: Option<u32>,
        p2: Option<u32>,
        beta: Option<f32>,
        epsilon: Option<f32>,
        gamma: Option<f32>,
        tau_d: Option<f32>,
        tau_n: Option<f32>,
        tau_l: Option<f32>,
        tau_u: Option<f32>,
        sigma_r: Option<f32>,
        sigma_d: Option<f32>,
        k_w: Option<usize>,
        k_interp: Option<usize>,
        d_max: Option<usize>,
        num_paths: Option<u32>,
        literal_low_confidence: Option<bool>,
    ) -> PyResult<Self> {
        let d = FusionParams::default();
        let inner = FusionParams {
            p1: p1.unwrap_or(d.p1),
            p2: p2.unwrap_or(d.p2),
            beta: beta.unwrap_or(d.beta),
            epsilon: epsilon.unwrap_or(d.epsilon),
            gamma: gamma.unwrap_or(d.gamma),
            tau_d: tau_d.unwrap_or(d.tau_d),
            tau_n: tau_n.unwrap_or(d.tau_n),
            tau_l: tau_l.unwrap_or(d.tau_l),
            tau_u: tau_u.unwrap_or(d.tau_u),
            sigma_r: sigma_r.unwrap_or(d.sigma_r),
            sigma_d: sigma_d.unwrap_or(d.sigma_d),
            k_w: k_w.unwrap_or(d.k_w),
            k_interp: k_interp.unwrap_or(d.k_interp),
            d_max: d_max.unwrap_or(d.d_max),
            num_paths: num_paths.unwrap_or(d.num_paths),
            literal_low_confidence: literal_low_confidence.unwrap_or(d.literal_low_confidence),
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn d_max(&self) -> usize {
        self.inner.d_max
    }

    #[getter]
    fn num_paths(&self) -> u32 {
        self.inner.num_paths
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyDict>> {
        let p = &self.inner;
        let d = PyDict::new(py);
        d.set_item("p1", p.p1)?;
        d.set_item("p2", p.p2)?;
        d.set_item("beta", p.beta)?;
        d.set_item("epsilon", p.epsilon)?;
        d.set_item("gamma", p.gamma)?;
        d.set_item("tau_d", p.tau_d)?;
        d.set_item("tau_n", p.tau_n)?;
        d.set_item("tau_l", p.tau_l)?;
        d.set_item("tau_u", p.tau_u)?;
        d.set_item("sigma_r", p.sigma_r)?;
        d.set_item("sigma_d", p.sigma_d)?;
        d.set_item("k_w", p.k_w)?;
        d.set_item("k_interp", p.k_interp)?;
        d.set_item("d_max", p.d_max)?;
        d.set_item("num_paths", p.num_paths)?;
        d.set_item("literal_low_confidence", p.literal_low_confidence)?;
        Ok(d.into())
    }

    fn __repr__(&self) -> String {
        format!(
            "FusionParams(d_max={}, num_paths={}, p1={}, p2={})",
            self.inner.d_max, self.inner.num_paths, self.inner.p1, self.inner.p2
        )
    }
}

fn timings_dict(py: Python<'_>, t: &StageTimings) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("census_ms", t.census_ms)?;
    d.set_item("agg_ms", t.agg_ms)?;
    d.set_item("fusion_ms", t.fusion_ms)?;
    d.set_item("total_ms", t.total_ms)?;
    Ok(d.into())
}

/// Runs one strategy end to end; returns the disparity map and a dict of
/// per-stage wall-clock milliseconds.
#[pyfunction]
#[pyo3(signature = (left, right, method, params=None, seeds=None, census_radius=2,
    aniso_iterations=500, aniso_kappa=10.0, aniso_lambda=0.2))]
#[allow(clippy::too_many_arguments)]
fn run_method(
    py: Python<'_>,
    left: &PyGrayImage,
    right: &PyGrayImage,
    method: &str,
    params: Option<PyFusionParams>,
    seeds: Option<PySeedSet>,
    census_radius: usize,
    aniso_iterations: usize,
    aniso_kappa: f32,
    aniso_lambda: f32,
) -> PyResult<(PyDisparityMap, Py<PyDict>)> {
    let method = Method::from_str(method).map_err(to_py)?;
    let params = params.map(|p| p.inner).unwrap_or_default();
    let opts = PipelineOptions {
        census_radius,
        aniso: AnisoOptions {
            iterations: aniso_iterations,
            kappa: aniso_kappa,
            lambda: aniso_lambda,
        },
    };
    let left = left.inner.clone();
    let right = right.inner.clone();
    let seeds = seeds.map(|s| s.inner);
    let (map, timings) = py
        .detach(move || run_method_rs(&left, &right, seeds.as_ref(), method, &params, &opts))
        .map_err(to_py)?;
    Ok((PyDisparityMap { inner: map }, timings_dict(py, &timings)?))
}

/// Percentage of evaluated pixels whose error exceeds each threshold.
#[pyfunction]
#[pyo3(signature = (est, ground_truth, thresholds, relative=false))]
fn error_rates(
    est: &PyDisparityMap,
    ground_truth: &PyDisparityMap,
    thresholds: Vec<f32>,
    relative: bool,
) -> PyResult<Vec<f64>> {
    error_rates_rs(&est.inner, &ground_truth.inner, &thresholds, relative).map_err(to_py)
}

/// Splits ground truth into noisy seeds and a held-out evaluation map.
#[pyfunction]
#[pyo3(signature = (ground_truth, fraction, noise=0.0, rng_seed=42, d_max=256))]
fn sample_split(
    ground_truth: &PyDisparityMap,
    fraction: f64,
    noise: f64,
    rng_seed: u64,
    d_max: usize,
) -> PyResult<(PySeedSet, PyDisparityMap)> {
    let spec = SplitSpec {
        seed_fraction: fraction,
        noise_fraction: noise,
        rng_seed,
    };
    let (seeds, eval) = sample_split_rs(&ground_truth.inner, &spec, d_max).map_err(to_py)?;
    Ok((PySeedSet { inner: seeds }, PyDisparityMap { inner: eval }))
}

/// Builds a photo-consistent synthetic stereo pair with dense ground truth.
#[pyfunction]
#[pyo3(signature = (width, height, d_max, seed, rect_count=5, noise_amplitude=2, background_d=2))]
fn fusion_scene(
    width: usize,
    height: usize,
    d_max: usize,
    seed: u64,
    rect_count: usize,
    noise_amplitude: u8,
    background_d: usize,
) -> PyResult<(PyGrayImage, PyGrayImage, PyDisparityMap)> {
    let opts = SceneOptions {
        rect_count,
        noise_amplitude,
        background_d,
    };
    let sample = fusion_scene_rs(width, height, d_max, &opts, seed).map_err(to_py)?;
    Ok((
        PyGrayImage { inner: sample.left },
        PyGrayImage { inner: sample.right },
        PyDisparityMap {
            inner: sample.ground_truth,
        },
    ))
}

/// Reads a PFM disparity file.
#[pyfunction]
fn read_pfm(path: &str) -> PyResult<PyDisparityMap> {
    Ok(PyDisparityMap {
        inner: read_pfm_rs(path).map_err(to_py)?,
    })
}

/// Writes a PFM disparity file.
#[pyfunction]
fn write_pfm(map: &PyDisparityMap, path: &str) -> PyResult<()> {
    write_pfm_rs(&map.inner, path).map_err(to_py)
}

/// Writes a colorized PNG of the map over `[d_min, d_max]`.
#[pyfunction]
#[pyo3(signature = (map, path, d_min=0.0, d_max=256.0))]
fn write_color_png(map: &PyDisparityMap, path: &str, d_min: f32, d_max: f32) -> PyResult<()> {
    colorize(&map.inner, d_min, d_max)
        .map_err(to_py)?
        .save(path)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn stereofuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyDisparityMap>()?;
    m.add_class::<PySeedSet>()?;
    m.add_class::<PyFusionParams>()?;
    m.add_function(wrap_pyfunction!(run_method, m)?)?;
    m.add_function(wrap_pyfunction!(error_rates, m)?)?;
    m.add_function(wrap_pyfunction!(sample_split, m)?)?;
    m.add_function(wrap_pyfunction!(fusion_scene, m)?)?;
    m.add_function(wrap_pyfunction!(read_pfm, m)?)?;
    m.add_function(wrap_pyfunction!(write_pfm, m)?)?;
    m.add_function(wrap_pyfunction!(write_color_png, m)?)?;
    m.add("INVALID_DISPARITY", INVALID_DISPARITY)?;
    m.add("COST_CAP", COST_CAP)?;
    m.add("METHODS", Method::ALL.map(|m| m.name()).to_vec())?;
    Ok(())
}

//! Seed densification by edge-stopping diffusion over a guide image. This is
//! the monocular baseline: it never looks at a second view.

use rayon::prelude::*;

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::seeds::SeedSet;

use super::check_seed_dims;

/// Diffuses seed disparities across the image with 4-neighbor conductances
/// `g = exp(-(dI / kappa)^2)`, re-clamping seeds after every iteration.
/// Implemented as normalized convolution: a value field and a mass field
/// diffuse together and the output is their ratio, INVALID where no mass
/// ever arrived.
pub fn anisotropic_baseline(
    guide: &GrayImage,
    seeds: &SeedSet,
    iterations: usize,
    kappa: f32,
    lambda: f32,
) -> Result<DisparityMap> {
    if iterations < 1 {
        return Err(Error::InvalidParams("iterations >= 1 violated".to_string()));
    }
    if !(lambda > 0.0 && lambda <= 0.25) {
        return Err(Error::InvalidParams(format!(
            "lambda in (0, 0.25] violated: {lambda}"
        )));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParams(format!("kappa > 0 violated: {kappa}")));
    }
    check_seed_dims(seeds, guide.width(), guide.height())?;

    let (w, h) = (guide.width(), guide.height());
    // Mass fields shrink geometrically with distance from the seeds, so the
    // diffusion state is kept in f64 to avoid premature underflow to zero.
    let lut: Vec<f64> = (0..256)
        .map(|d| {
            let r = d as f64 / kappa as f64;
            (-(r * r)).exp()
        })
        .collect();
    // Per-edge conductances; the entry at (x, y) covers the edge to the
    // right (gh) or below (gv). Border entries are zero flux.
    let mut gh = vec![0.0f64; w * h];
    let mut gv = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let c = guide.get(x, y);
            if x + 1 < w {
                gh[y * w + x] = lut[(guide.get(x + 1, y) as i32 - c as i32).unsigned_abs() as usize];
            }
            if y + 1 < h {
                gv[y * w + x] = lut[(guide.get(x, y + 1) as i32 - c as i32).unsigned_abs() as usize];
            }
        }
    }

    let mut value = vec![0.0f64; w * h];
    let mut mass = vec![0.0f64; w * h];
    let clamp = |value: &mut [f64], mass: &mut [f64]| {
        for s in seeds.seeds() {
            value[s.y * w + s.x] = s.d as f64;
            mass[s.y * w + s.x] = 1.0;
        }
    };
    clamp(&mut value, &mut mass);

    let mut value_next = vec![0.0f64; w * h];
    let mut mass_next = vec![0.0f64; w * h];
    let lambda = lambda as f64;
    for _ in 0..iterations {
        diffuse_once(&value, &mass, &gh, &gv, lambda, w, &mut value_next, &mut mass_next);
        clamp(&mut value_next, &mut mass_next);
        std::mem::swap(&mut value, &mut value_next);
        std::mem::swap(&mut mass, &mut mass_next);
    }

    let mut out = DisparityMap::invalid(w, h);
    for (i, d) in out.data_mut().iter_mut().enumerate() {
        if mass[i] > 0.0 {
            *d = (value[i] / mass[i]).max(0.0) as f32;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn diffuse_once(
    value: &[f64],
    mass: &[f64],
    gh: &[f64],
    gv: &[f64],
    lambda: f64,
    w: usize,
    value_next: &mut [f64],
    mass_next: &mut [f64],
) {
    let h = value.len() / w;
    value_next
        .par_chunks_mut(w)
        .zip(mass_next.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (vrow, mrow))| {
            let base = y * w;
            for x in 0..w {
                let i = base + x;
                let (v, m) = (value[i], mass[i]);
                let mut dv = 0.0f64;
                let mut dm = 0.0f64;
                if x > 0 {
                    let g = gh[i - 1];
                    dv += g * (value[i - 1] - v);
                    dm += g * (mass[i - 1] - m);
                }
                if x + 1 < w {
                    let g = gh[i];
                    dv += g * (value[i + 1] - v);
                    dm += g * (mass[i + 1] - m);
                }
                if y > 0 {
                    let g = gv[i - w];
                    dv += g * (value[i - w] - v);
                    dm += g * (mass[i - w] - m);
                }
                if y + 1 < h {
                    let g = gv[i];
                    dv += g * (value[i + w] - v);
                    dm += g * (mass[i + w] - m);
                }
                vrow[x] = v + lambda * dv;
                mrow[x] = m + lambda * dm;
            }
        });
}

//! Confidence-gated volume rewrite from an interpolated disparity field.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::FusionParams;
use crate::volume::CostVolume;

use super::interpolate::InterpolationField;
use super::round_to_level;

/// Rewrites the costs of every confidently interpolated pixel: levels within
/// `tau_d` of the interpolated disparity become cheap (`epsilon`, or
/// `(1 - W) * gamma` at middling confidence), all other levels become `beta`.
/// Pixels with confidence at or below `tau_l` keep their stereo costs.
pub fn diffusion_update(
    volume: &mut CostVolume,
    field: &InterpolationField,
    params: &FusionParams,
) -> Result<()> {
    params.validate()?;
    if field.width() != volume.width() || field.height() != volume.height() {
        return Err(Error::DimensionMismatch(format!(
            "interpolation field is {}x{}, volume is {}x{}",
            field.width(),
            field.height(),
            volume.width(),
            volume.height()
        )));
    }

    let w = volume.width();
    let d_max = volume.d_max();
    let levels = volume.levels();
    let eps_r = params.epsilon.round() as u16;
    let beta_r = params.beta.round() as u16;
    let gamma_r = params.gamma.round() as u16;
    let gamma = params.gamma;
    let (tau_l, tau_u, tau_d) = (params.tau_l, params.tau_u, params.tau_d);
    let literal = params.literal_low_confidence;

    volume
        .costs_mut()
        .par_chunks_mut(w * levels)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                if !field.is_valid(x, y) {
                    continue;
                }
                let pixel = &mut row[x * levels..(x + 1) * levels];
                let conf = field.confidence(x, y);
                if conf <= tau_l {
                    if literal {
                        pixel.fill(gamma_r);
                    }
                    continue;
                }
                let d_v = round_to_level(field.disparity(x, y), d_max) as f32;
                let lo = (((d_v - tau_d).floor() as i64) + 1).max(0) as usize;
                let hi = ((((d_v + tau_d).ceil() as i64) - 1) as usize).min(d_max);
                let band = if conf >= tau_u {
                    eps_r
                } else {
                    (((1.0 - conf) * gamma).round() as u16).max(eps_r)
                };
                pixel.fill(beta_r);
                pixel[lo..=hi].fill(band);
            }
        });
    Ok(())
}

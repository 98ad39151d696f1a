//! The scalar parameter bundle shared by aggregation and all fusion
//! strategies, with validation and a config-file representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::COST_CAP;

/// Every tunable scalar of the pipeline. All fields are config-overridable;
/// see [`FusionParams::default`] for the values used when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    /// Aggregation penalty for a disparity change of exactly 1.
    pub p1: u32,
    /// Aggregation penalty for larger disparity jumps.
    pub p2: u32,
    /// Large constant cost written outside a seed's agreement band.
    pub beta: f32,
    /// Minimum cost written at promoted disparity levels.
    pub epsilon: f32,
    /// Large penalty scaled by interpolation confidence.
    pub gamma: f32,
    /// Half-width of the disparity agreement band, in disparity levels.
    pub tau_d: f32,
    /// Intensity-similarity threshold for promoting a neighbor, in (0, 1).
    pub tau_n: f32,
    /// Lower confidence cutoff; below it stereo costs are kept as-is.
    pub tau_l: f32,
    /// Upper confidence cutoff; at or above it the band cost drops to epsilon.
    pub tau_u: f32,
    /// Width of the intensity Gaussian, in intensity units.
    pub sigma_r: f32,
    /// Width of the spatial Gaussian, in pixels.
    pub sigma_d: f32,
    /// Neighborhood promotion window radius, in pixels.
    pub k_w: usize,
    /// Seed interpolation radius, in pixels.
    pub k_interp: usize,
    /// Largest disparity level searched.
    pub d_max: usize,
    /// Number of aggregation directions, 4 or 8.
    pub num_paths: u32,
    /// Apply the uniform low-confidence penalty verbatim instead of keeping
    /// stereo costs where confidence is at most tau_l.
    pub literal_low_confidence: bool,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            p1: 7,
            p2: 100,
            beta: COST_CAP as f32 / 2.0,
            epsilon: 0.0,
            gamma: COST_CAP as f32 / 2.0,
            tau_d: 2.0,
            tau_n: 0.5,
            tau_l: 0.1,
            tau_u: 0.9,
            sigma_r: 10.0,
            sigma_d: 7.5,
            k_w: 7,
            k_interp: 15,
            d_max: 256,
            num_paths: 8,
            literal_low_confidence: false,
        }
    }
}

impl FusionParams {
    /// Checks every invariant, reporting the first violated constraint.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
            ("tau_d", self.tau_d),
            ("tau_n", self.tau_n),
            ("tau_l", self.tau_l),
            ("tau_u", self.tau_u),
            ("sigma_r", self.sigma_r),
            ("sigma_d", self.sigma_d),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite, got {v}"));
            }
        }
        if self.p1 > self.p2 {
            return fail(format!("p1 <= p2 violated (p1={}, p2={})", self.p1, self.p2));
        }
        if self.p2 > COST_CAP as u32 {
            return fail(format!("p2 <= {COST_CAP} violated (p2={})", self.p2));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < self.beta) {
            return fail(format!(
                "0 <= epsilon < beta violated (epsilon={}, beta={})",
                self.epsilon, self.beta
            ));
        }
        if self.epsilon >= self.gamma {
            return fail(format!(
                "0 <= epsilon < gamma violated (epsilon={}, gamma={})",
                self.epsilon, self.gamma
            ));
        }
        if self.beta > COST_CAP as f32 || self.gamma > COST_CAP as f32 {
            return fail(format!(
                "beta and gamma must not exceed the cost cap {COST_CAP} (beta={}, gamma={})",
                self.beta, self.gamma
            ));
        }
        if self.tau_l >= self.tau_u {
            return fail(format!(
                "tau_l < tau_u violated (tau_l={}, tau_u={})",
                self.tau_l, self.tau_u
            ));
        }
        if !(0.0..=1.0).contains(&self.tau_l) || !(0.0..=1.0).contains(&self.tau_u) {
            return fail(format!(
                "tau_l and tau_u must lie in [0, 1] (tau_l={}, tau_u={})",
                self.tau_l, self.tau_u
            ));
        }
        if !(self.tau_n > 0.0 && self.tau_n < 1.0) {
            return fail(format!("tau_n in (0, 1) violated (tau_n={})", self.tau_n));
        }
        if self.sigma_r <= 0.0 {
            return fail(format!("sigma_r > 0 violated (sigma_r={})", self.sigma_r));
        }
        if self.sigma_d <= 0.0 {
            return fail(format!("sigma_d > 0 violated (sigma_d={})", self.sigma_d));
        }
        if self.tau_d < 1.0 {
            return fail(format!("tau_d >= 1 violated (tau_d={})", self.tau_d));
        }
        if self.k_w == 0 {
            return fail("k_w must be at least 1".to_string());
        }
        if self.k_interp == 0 {
            return fail("k_interp must be at least 1".to_string());
        }
        if self.d_max == 0 {
            return fail("d_max must be at least 1".to_string());
        }
        if self.num_paths != 4 && self.num_paths != 8 {
            return fail(format!(
                "num_paths must be one of {{4, 8}}, got {}",
                self.num_paths
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let p = FusionParams::default();
        assert_eq!((p.p1, p.p2, p.d_max, p.num_paths), (7, 100, 256, 8));
        p.validate().unwrap();
    }

    #[test]
    fn reports_confidence_cutoff_order() {
        let p = FusionParams {
            tau_l: 0.8,
            tau_u: 0.3,
            ..FusionParams::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("tau_l < tau_u"), "{msg}");
    }

    #[test]
    fn reports_bad_path_count() {
        let p = FusionParams {
            num_paths: 16,
            ..FusionParams::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("num_paths"), "{msg}");
    }

    #[test]
    fn reports_first_failed_constraint() {
        let p = FusionParams {
            p1: 9,
            p2: 3,
            num_paths: 16,
            ..FusionParams::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("p1 <= p2"), "{msg}");
    }

    #[test]
    fn default_config_round_trips() {
        let p = FusionParams::default();
        let text = toml::to_string(&p).unwrap();
        let back: FusionParams = toml::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    proptest! {
        // Bit-exact parse/serialize identity over the config format, not
        // just over valid parameter combinations.
        #[test]
        fn config_round_trip_is_identity(
            p1 in 0u32..200_000,
            p2 in 0u32..200_000,
            beta in -1.0e6f32..1.0e6,
            epsilon in -1.0e6f32..1.0e6,
            gamma in -1.0e6f32..1.0e6,
            tau_d in -10.0f32..10.0,
            tau_n in -2.0f32..2.0,
            tau_l in -2.0f32..2.0,
            tau_u in -2.0f32..2.0,
            sigma_r in -100.0f32..100.0,
            sigma_d in -100.0f32..100.0,
            k_w in 0usize..64,
            k_interp in 0usize..64,
            d_max in 0usize..512,
            num_paths in 0u32..16,
            literal in proptest::bool::ANY,
        ) {
            let p = FusionParams {
                p1, p2, beta, epsilon, gamma, tau_d, tau_n, tau_l, tau_u,
                sigma_r, sigma_d, k_w, k_interp, d_max, num_paths,
                literal_low_confidence: literal,
            };
            let text = toml::to_string(&p).unwrap();
            let back: FusionParams = toml::from_str(&text).unwrap();
            prop_assert_eq!(p, back);
        }
    }
}

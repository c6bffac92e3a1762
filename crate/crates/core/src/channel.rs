//! Pair connectedness functions `H(r)`: the probability that two nodes a
//! distance `r` apart share a direct link.
//!
//! All three families are written as `H(r) = 1 - F(beta r^eta)` for the CDF
//! `F` of the normalized channel power, so `beta` carries transmit power,
//! noise and rate threshold, and `r0 = beta^(-1/eta)` is the effective range.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quadrature::adaptive::{integrate_with_breaks, Tolerance};
use crate::{Error, Result};

/// `H` below this is treated as exactly zero when truncating integrals.
pub const NEGLIGIBLE_H: f64 = 1e-18;

/// Minimum value of `beta r^eta` at the truncation radius.
const MIN_TRUNCATION_EXPONENT: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// 2x2 MIMO with transmit beamforming and maximum ratio combining, `eta = 2`.
    MimoMrc2x2,
    /// Single-antenna Rayleigh fading, exponential channel power.
    RayleighSiso,
    /// Deterministic on/off link within `r0`.
    HardDisk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityModel {
    family: Family,
    beta: f64,
    eta: f64,
    r0: f64,
}

impl ConnectivityModel {
    pub fn mimo_mrc(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            family: Family::MimoMrc2x2,
            beta,
            eta: 2.0,
            r0: beta.powf(-0.5),
        })
    }

    pub fn rayleigh(beta: f64, eta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(eta >= 2.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must be finite and >= 2, got {eta}"
            )));
        }
        Ok(Self {
            family: Family::RayleighSiso,
            beta,
            eta,
            r0: beta.powf(-1.0 / eta),
        })
    }

    /// The `eta -> infinity` limit: links exist exactly when `r <= r0`.
    pub fn hard_disk(r0: f64) -> Result<Self> {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hard-disk range must be finite and non-negative, got {r0}"
            )));
        }
        Ok(Self {
            family: Family::HardDisk,
            beta: 0.0,
            eta: f64::INFINITY,
            r0,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// `None` for the hard disk, whose `beta` degenerates in the limit.
    pub fn beta(&self) -> Option<f64> {
        (self.family != Family::HardDisk).then_some(self.beta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Whether closed-form boundary terms are registered for this model.
    pub fn has_closed_forms(&self) -> bool {
        self.family == Family::MimoMrc2x2
    }

    pub fn h(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.eval(r))
    }

    #[inline]
    pub(crate) fn eval(&self, r: f64) -> f64 {
        match self.family {
            Family::MimoMrc2x2 => {
                let x = self.beta * r * r;
                if x < 1.0 {
                    1.0 - mrc_deficit(x)
                } else {
                    let e = (-x).exp();
                    e * (x * x + 2.0 - e)
                }
            }
            Family::RayleighSiso => (-self.beta * r.powf(self.eta)).exp(),
            Family::HardDisk => {
                if r <= self.r0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `dH/dr`, or `None` where `H` is discontinuous.
    pub fn h_prime(&self, r: f64) -> Option<f64> {
        match self.family {
            Family::MimoMrc2x2 => {
                let x = self.beta * r * r;
                let e = (-x).exp();
                Some(e * (2.0 * x - x * x - 2.0 + 2.0 * e) * 2.0 * self.beta * r)
            }
            Family::RayleighSiso => {
                let x = self.beta * r.powf(self.eta);
                Some(-self.eta * x * (-x).exp() / r.max(f64::MIN_POSITIVE))
            }
            Family::HardDisk => None,
        }
    }

    /// Radius beyond which `H` is negligible: `r0` for the hard disk,
    /// otherwise the smallest radius with `beta r^eta >= 45` and `H < 1e-18`.
    pub fn truncation_radius(&self) -> f64 {
        match self.family {
            Family::HardDisk => self.r0,
            _ => {
                let mut r = (MIN_TRUNCATION_EXPONENT / self.beta).powf(1.0 / self.eta);
                while self.eval(r) >= NEGLIGIBLE_H {
                    r *= 1.01;
                }
                r
            }
        }
    }

    /// Full-space connection mass `M = 4 pi ∫ r² H(r) dr`.
    pub fn bulk_mass(&self) -> Result<f64> {
        match self.family {
            Family::MimoMrc2x2 => Ok((23.0 - SQRT_2) / 4.0 * (PI / self.beta).powf(1.5)),
            Family::HardDisk => Ok(4.0 / 3.0 * PI * self.r0.powi(3)),
            Family::RayleighSiso => self.radial_moment(2),
        }
    }

    /// `4 pi ∫_0^R r^k H(r) dr`, truncated at [`Self::truncation_radius`].
    pub(crate) fn radial_moment(&self, k: i32) -> Result<f64> {
        let r_max = self.truncation_radius();
        if r_max == 0.0 {
            return Ok(0.0);
        }
        let tol = Tolerance::relative(1e-12);
        let est = integrate_with_breaks(
            |r| Ok(r.powi(k) * self.eval(r)),
            0.0,
            r_max,
            &[self.r0],
            &tol,
        )?;
        let value = 4.0 * PI * est.value;
        if !value.is_finite() {
            return Err(Error::Divergent("connection mass".into()));
        }
        Ok(value)
    }

    pub fn sample_link<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> Result<bool> {
        check_distance(r)?;
        Ok(self.draw_link(r, rng))
    }

    #[inline]
    pub(crate) fn draw_link<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> bool {
        rng.random::<f64>() < self.eval(r)
    }
}

/// Serialized model description, e.g. `{"family":"mimo_mrc_2x2","beta":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "mimo_mrc_2x2")]
    MimoMrc2x2 { beta: f64 },
    Rayleigh {
        beta: f64,
        #[serde(default = "default_eta")]
        eta: f64,
    },
    HardDisk { r0: f64 },
}

fn default_eta() -> f64 {
    2.0
}

impl ModelSpec {
    pub fn build(&self) -> Result<ConnectivityModel> {
        match *self {
            ModelSpec::MimoMrc2x2 { beta } => ConnectivityModel::mimo_mrc(beta),
            ModelSpec::Rayleigh { beta, eta } => ConnectivityModel::rayleigh(beta, eta),
            ModelSpec::HardDisk { r0 } => ConnectivityModel::hard_disk(r0),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")))
    }
}

/// `1 - H` for the MIMO-MRC function at `x = beta r²`, written as
/// `e^(-x/2) (2 sinh(x/2) - x) (1 - e^(-x) + x e^(-x/2))` to avoid the
/// `1 - O(x⁴)` cancellation near the origin.
fn mrc_deficit(x: f64) -> f64 {
    let half = (-0.5 * x).exp();
    let gap = if x < 0.1 {
        let x2 = x * x;
        x * x2 / 24.0 * (1.0 + x2 / 80.0 * (1.0 + x2 / 168.0))
    } else {
        2.0 * (0.5 * x).sinh() - x
    };
    half * gap * (-(-x).exp_m1() + x * half)
}

fn check_distance(r: f64) -> Result<()> {
    if r >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("distance must be non-negative, got {r}")))
    }
}

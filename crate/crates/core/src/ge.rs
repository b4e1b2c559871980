//! Exponential and generalized exponential (GE) variates.
//!
//! A GE variate with rate `ν` and squared coefficient of variation `C² ≥ 1`
//! has CDF `F(t) = 1 − τ·exp(−τνt)` with `τ = 2/(C² + 1)`: an atom of mass
//! `1 − τ` at zero plus an exponential of rate `τν`. Its mean is `1/ν` and
//! its SCV is `C²`. Sampling is by inversion of a single uniform, so a
//! stream of uniforms fully determines the sample sequence.

use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Branch probability `τ = 2/(scv + 1)` of the GE distribution.
pub fn ge_tau(scv: f64) -> Result<f64> {
    if !(scv.is_finite() && scv >= 1.0) {
        return Err(domain(format!("GE requires scv >= 1, got {scv}")));
    }
    Ok(2.0 / (scv + 1.0))
}

/// Rate and SCV of a GE process, with the derived branch probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeParams {
    rate: f64,
    scv: f64,
    tau: f64,
}

impl GeParams {
    pub fn new(rate: f64, scv: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(domain(format!("GE rate must be > 0, got {rate}")));
        }
        let tau = ge_tau(scv)?;
        Ok(Self { rate, scv, tau })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(rate, 1.0)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn scv(&self) -> f64 {
        self.scv
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    /// Inverse-CDF of the GE law evaluated at survival level `u ∈ (0, 1)`.
    #[inline]
    pub fn quantile_survival(&self, u: f64) -> f64 {
        if u >= self.tau {
            0.0
        } else {
            // u/τ is uniform on (0, 1) given the exponential branch
            -(u / self.tau).ln() / (self.tau * self.rate)
        }
    }
}

/// Draws one GE variate.
#[inline]
pub fn ge_sample(params: &GeParams, rng: &mut RngStream) -> f64 {
    params.quantile_survival(rng.uniform())
}

/// Exponential variate for survival level `u ∈ (0, 1)`: `−ln(u)/rate`.
#[inline]
pub fn exp_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Draws one exponential variate with the given rate.
pub fn exp_sample(rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(domain(format!("exponential rate must be > 0, got {rate}")));
    }
    Ok(exp_from_uniform(rate, rng.uniform()))
}

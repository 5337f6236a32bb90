//! Special functions and quadrature shared by the estimators and the test.

mod bessel;
mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

pub use bessel::{
    log_bessel_i, log_bessel_i_over_power, log_bessel_i_scaled, mean_resultant_length,
};
pub use quadrature::{
    gauss_legendre, make_quadrature, Domain, QuadratureRule, Resolution, MIN_CIRCLE_NODES,
    MIN_LINE_NODES, MIN_SPHERE_AZIMUTH, MIN_SPHERE_POLAR,
};

/// Dimension `q` of the sphere `Ω_q ⊂ ℝ^{q+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SphereDim(usize);

impl SphereDim {
    pub const CIRCLE: SphereDim = SphereDim(1);
    pub const SPHERE: SphereDim = SphereDim(2);

    pub fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(invalid("sphere dimension q must be at least 1"));
        }
        Ok(SphereDim(q))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Number of coordinates of a point on the sphere.
    pub fn ambient(self) -> usize {
        self.0 + 1
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// `ln ω_q(Ω_q)`, the log surface area: `ln(2 π^{(q+1)/2} / Γ((q+1)/2))`.
    pub fn log_area(self) -> f64 {
        let a = 0.5 * (self.as_f64() + 1.0);
        (2.0f64).ln() + a * PI.ln() - statrs::function::gamma::ln_gamma(a)
    }
}

impl TryFrom<usize> for SphereDim {
    type Error = crate::error::Error;

    fn try_from(q: usize) -> Result<Self> {
        SphereDim::new(q)
    }
}

impl From<SphereDim> for usize {
    fn from(q: SphereDim) -> usize {
        q.0
    }
}

impl std::fmt::Display for SphereDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `ln C_q(kappa)` for the von Mises–Fisher normalizer
/// `C_q(kappa) = kappa^{(q-1)/2} / ((2 pi)^{(q+1)/2} I_{(q-1)/2}(kappa))`.
///
/// At `kappa = 0` this is the uniform value `-ln ω_q(Ω_q)`.
pub fn log_cq(q: SphereDim, kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(domain(format!(
            "concentration must be finite and nonnegative, got {kappa}"
        )));
    }
    let nu = 0.5 * (q.as_f64() - 1.0);
    let half_ambient = 0.5 * (q.as_f64() + 1.0);
    Ok(-half_ambient * (2.0 * PI).ln() - log_bessel_i_over_power(nu, kappa)?)
}

/// `ln c_{h,q}(L) = ln C_q(1/h²) + 1/h²` for the von Mises kernel.
pub fn log_chq(q: SphereDim, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain(format!(
            "bandwidth must be finite and positive, got {h}"
        )));
    }
    let kappa = 1.0 / (h * h);
    if q.get() == 2 {
        // C_2(k) e^k = k / (2 pi (1 - e^{-2k}))
        return Ok(kappa.ln() - (2.0 * PI).ln() - (-(-2.0 * kappa).exp_m1()).ln());
    }
    let nu = 0.5 * (q.as_f64() - 1.0);
    let half_ambient = 0.5 * (q.as_f64() + 1.0);
    Ok(nu * kappa.ln() - half_ambient * (2.0 * PI).ln() - log_bessel_i_scaled(nu, kappa)?)
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density of `N(mean, sd²)` at `x`.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(domain(format!(
            "standard deviation must be finite and positive, got {sd}"
        )));
    }
    Ok(normal_pdf_unchecked(x, mean, sd))
}

#[inline]
pub(crate) fn normal_pdf_unchecked(x: f64, mean: f64, sd: f64) -> f64 {
    let u = (x - mean) / sd;
    INV_SQRT_2PI / sd * (-0.5 * u * u).exp()
}

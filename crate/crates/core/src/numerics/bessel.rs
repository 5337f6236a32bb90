//! Modified Bessel functions of the first kind, evaluated in log space.
//!
//! Small arguments use the ascending power series, large arguments the
//! Hankel asymptotic expansion of `e^{-z} I_nu(z)`. For half-integer orders the
//! asymptotic series terminates, so that branch is exact; `nu = 1/2` has its own
//! closed form since it backs every spherical (`q = 2`) normalizer.

// reference coefficients are kept at their published precision
#![allow(clippy::excessive_precision)]

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

const SERIES_LIMIT: f64 = 20.0;

fn check(nu: f64, z: f64) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(format!(
            "Bessel order must be a finite nonnegative number, got {nu}"
        )));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain(format!(
            "Bessel argument must be a finite nonnegative number, got {z}"
        )));
    }
    Ok(())
}

fn use_series(nu: f64, z: f64) -> bool {
    z <= SERIES_LIMIT.max(2.0 * nu * nu)
}

/// `ln Σ_k (z²/4)^k / (k! (nu+1)_k)`, so that `I_nu(z) = (z/2)^nu / Γ(nu+1) · Σ`.
fn ln_series_sum(nu: f64, z: f64) -> f64 {
    let quarter_z2 = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= quarter_z2 / (k * (k + nu));
        sum += term;
        if term < f64::EPSILON * 1e-2 * sum {
            break;
        }
        k += 1.0;
    }
    sum.ln()
}

/// `ln(sqrt(2 pi z) e^{-z} I_nu(z))` from the Hankel expansion.
fn ln_asymptotic_sum(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * z);
        if next == 0.0 || next.abs() < f64::EPSILON * 1e-2 * sum.abs() {
            sum += next;
            break;
        }
        if next.abs() > term.abs() {
            // divergent tail; the smallest term is below machine precision for z > 20
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum.ln()
}

/// `ln sinh(z)` for `z > 0` without overflow.
pub(crate) fn ln_sinh(z: f64) -> f64 {
    if z < 1e-4 {
        // sinh z = z (1 + z²/6 + z⁴/120)
        let z2 = z * z;
        z.ln() + (z2 / 6.0 + z2 * z2 / 120.0).ln_1p()
    } else {
        z + (-(-2.0 * z).exp_m1()).ln() - LN_2
    }
}

/// `ln(sinh(z)/z)`, continuous at zero.
pub(crate) fn ln_sinhc(z: f64) -> f64 {
    if z < 1e-4 {
        let z2 = z * z;
        (z2 / 6.0 + z2 * z2 / 120.0).ln_1p()
    } else {
        ln_sinh(z) - z.ln()
    }
}

/// `ln(e^{-z} I_nu(z))`, the log of the exponentially scaled Bessel function.
pub fn log_bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    check(nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if nu == 0.5 {
        // I_{1/2}(z) = sqrt(2/(pi z)) sinh z
        return Ok(0.5 * (2.0 / (PI * z)).ln() + ln_sinh(z) - z);
    }
    if use_series(nu, z) {
        Ok(nu * (0.5 * z).ln() - ln_gamma(nu + 1.0) + ln_series_sum(nu, z) - z)
    } else {
        Ok(ln_asymptotic_sum(nu, z) - 0.5 * (2.0 * PI * z).ln())
    }
}

/// `ln I_nu(z)` for `nu, z >= 0`.
pub fn log_bessel_i(nu: f64, z: f64) -> Result<f64> {
    Ok(log_bessel_i_scaled(nu, z)? + z)
}

/// `ln(I_nu(z) / z^nu)`, finite at `z = 0` where it equals `-nu ln 2 - ln Γ(nu+1)`.
pub fn log_bessel_i_over_power(nu: f64, z: f64) -> Result<f64> {
    check(nu, z)?;
    if nu == 0.5 {
        return Ok(0.5 * (2.0 / PI).ln() + ln_sinhc(z));
    }
    if use_series(nu, z) {
        let series = if z == 0.0 { 0.0 } else { ln_series_sum(nu, z) };
        Ok(-nu * LN_2 - ln_gamma(nu + 1.0) + series)
    } else {
        Ok(log_bessel_i(nu, z)? - nu * z.ln())
    }
}

/// Mean resultant length of a von Mises–Fisher law on the `q`-sphere,
/// `A_q(kappa) = I_{(q+1)/2}(kappa) / I_{(q-1)/2}(kappa)`.
pub fn mean_resultant_length(q: usize, kappa: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let nu = 0.5 * (q as f64 - 1.0);
    if q == 2 {
        // coth(kappa) - 1/kappa
        return Ok(if kappa < 1e-3 {
            kappa / 3.0 - kappa.powi(3) / 45.0
        } else {
            1.0 / kappa.tanh() - 1.0 / kappa
        });
    }
    Ok((log_bessel_i_scaled(nu + 1.0, kappa)? - log_bessel_i_scaled(nu, kappa)?).exp())
}

//! Pilot bandwidths, the exact bootstrap MISE surface, and the selectors built on it.

use std::cell::RefCell;
use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::directional::dot;
use crate::error::{invalid, Error, Result};
use crate::kde::{
    inner_products, normal_gram, psi_from_inner, select_cv_bandwidths, BandwidthPair, CvObjective,
    DirLinSample,
};
use crate::numerics::{
    log_bessel_i_scaled, log_cq, make_quadrature, mean_resultant_length, Domain, QuadratureRule,
    Resolution, SphereDim,
};
use crate::optimize::{minimize, Optimum, SearchBox, H_MAX};

/// Resampling bandwidths `(h_p, g_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotBandwidths {
    pub h_p: f64,
    pub g_p: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PilotBandwidths {
    pub fn new(h_p: f64, g_p: f64) -> Result<Self> {
        BandwidthPair::new(h_p, g_p)?;
        Ok(PilotBandwidths {
            h_p,
            g_p,
            warnings: Vec::new(),
        })
    }
}

/// Solves `A_q(kappa) = rbar` for the von Mises–Fisher concentration.
pub fn fit_concentration(q: SphereDim, rbar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rbar) {
        return Err(invalid(format!(
            "mean resultant length {rbar} is outside [0, 1]"
        )));
    }
    if rbar >= 1.0 - 1e-12 {
        return Err(Error::DegenerateData("all directions coincide".into()));
    }
    if rbar < 1e-12 {
        return Ok(0.0);
    }
    let qf = q.as_f64();
    // A_q(k) ~ k/(q+1) near zero and 1 - q/(2k) at infinity
    let (mut lo, mut hi) = (
        (rbar * (qf + 1.0) * 0.5).ln(),
        (10.0 * qf / (1.0 - rbar) + 10.0).ln(),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_resultant_length(q.get(), mid.exp())? < rbar {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// AMISE-optimal von Mises kernel bandwidth when the data follow a von
/// Mises–Fisher law with concentration `kappa`:
///
/// `[4 sqrt(pi) I_ν(κ)² / (κ^{(q+1)/2} (2q I_{ν+1}(2κ) + (2+q) κ I_{ν+2}(2κ)) n)]^{1/(4+q)}`, `ν = (q-1)/2`.
///
/// Infinite at `kappa = 0`.
pub fn h_amise_vmf(q: SphereDim, kappa: f64, n: usize) -> Result<f64> {
    if kappa == 0.0 {
        return Ok(f64::INFINITY);
    }
    let qf = q.as_f64();
    let nu = 0.5 * (qf - 1.0);
    // the e^{2κ} factors of numerator and denominator cancel in scaled form
    let num = 4.0f64.ln() + 0.5 * PI.ln() + 2.0 * log_bessel_i_scaled(nu, kappa)?;
    let a = (2.0 * qf).ln() + log_bessel_i_scaled(nu + 1.0, 2.0 * kappa)?;
    let b = ((2.0 + qf) * kappa).ln() + log_bessel_i_scaled(nu + 2.0, 2.0 * kappa)?;
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    let den = 0.5 * (qf + 1.0) * kappa.ln() + hi + (lo - hi).exp().ln_1p() + (n as f64).ln();
    Ok(((num - den) / (4.0 + qf)).exp())
}

/// Normal-reference linear bandwidth `1.06 sd n^{-1/5}`.
pub fn g_normal_reference(sd: f64, n: usize) -> f64 {
    1.06 * sd * (n as f64).powf(-0.2)
}

fn h_pilot_factor(q: SphereDim, n: usize) -> f64 {
    let qf = q.as_f64();
    (n as f64).powf(1.0 / (4.0 + qf) - 1.0 / (6.0 + qf))
}

fn g_pilot_factor(n: usize) -> f64 {
    (n as f64).powf(1.0 / 5.0 - 1.0 / 7.0)
}

/// Marginal pilots: the vMF rule of thumb scaled to order `n^{-1/(6+q)}`, and
/// the normal reference scaled to order `n^{-1/7}`.
pub fn pilot_bandwidths(sample: &DirLinSample) -> Result<PilotBandwidths> {
    sample.require_testable()?;
    let n = sample.len();
    let q = sample.q();
    let sd = sample.linear_sd()?;
    let mut mean = vec![0.0; q.ambient()];
    for x in sample.xs() {
        mean.iter_mut()
            .zip(x.as_slice())
            .for_each(|(m, c)| *m += c / n as f64);
    }
    let rbar = dot(&mean, &mean).sqrt().min(1.0);
    let kappa = fit_concentration(q, rbar)?;
    let mut warnings = Vec::new();
    let mut h_amise = h_amise_vmf(q, kappa, n)?;
    if !(h_amise <= H_MAX) {
        let msg = format!(
            "directions look uniform (fitted concentration {kappa:.3e}); rule-of-thumb bandwidth capped at {H_MAX}"
        );
        warn!("{msg}");
        warnings.push(msg);
        h_amise = H_MAX;
    }
    Ok(PilotBandwidths {
        h_p: h_amise * h_pilot_factor(q, n),
        g_p: g_normal_reference(sd, n) * g_pilot_factor(n),
        warnings,
    })
}

/// Rescales cross-validated bandwidths to pilot orders `(n^{-1/(6+q)}, n^{-1/7})`.
pub fn modified_pilots(q: SphereDim, n: usize, cv: BandwidthPair) -> PilotBandwidths {
    PilotBandwidths {
        h_p: cv.h * h_pilot_factor(q, n),
        g_p: cv.g * g_pilot_factor(n),
        warnings: Vec::new(),
    }
}

/// Node caps of [`default_rule`]: circle nodes, sphere polar nodes.
pub const MAX_QUADRATURE: (usize, usize) = (4096, 96);

/// Quadrature rule for the bootstrap matrices. The integrands are bumps of
/// width about `h_p`, so the node count grows like `1/h_p` above a floor of
/// 64 nodes on the circle and 24x48 on the sphere, up to [`MAX_QUADRATURE`].
pub fn default_rule(q: SphereDim, h_p: f64) -> Result<QuadratureRule> {
    if !(h_p > 0.0) || !h_p.is_finite() {
        return Err(invalid(format!(
            "pilot bandwidth must be finite and positive, got {h_p}"
        )));
    }
    match q.get() {
        1 => {
            let n = (16.0 / h_p).ceil().clamp(64.0, MAX_QUADRATURE.0 as f64) as usize;
            make_quadrature(Domain::Circle, Resolution::Nodes(n + n % 2))
        }
        2 => {
            let polar = (8.0 / h_p).ceil().clamp(24.0, MAX_QUADRATURE.1 as f64) as usize;
            make_quadrature(
                Domain::Sphere,
                Resolution::Grid {
                    polar,
                    azimuth: 2 * polar,
                },
            )
        }
        q => Err(invalid(format!(
            "bootstrap quadrature is available for q = 1, 2 only, got q = {q}"
        ))),
    }
}

/// The six matrices of the bootstrap MISE at one `(h, g)`.
#[derive(Debug, Clone)]
pub struct BootstrapGrams {
    pub psi0: DMatrix<f64>,
    pub psi1: DMatrix<f64>,
    pub psi2: DMatrix<f64>,
    pub omega0: DMatrix<f64>,
    pub omega1: DMatrix<f64>,
    pub omega2: DMatrix<f64>,
}

/// `MISE*_{h_p,g_p}(h, g)` as a function of `(h, g)`, with everything that
/// does not depend on `(h, g)` computed once.
pub struct MiseSurface<'a> {
    sample: &'a DirLinSample,
    pilots: PilotBandwidths,
    rule: &'a QuadratureRule,
    /// `x_k'X_i` for node `k` and datum `i`.
    node_inner: DMatrix<f64>,
    /// `W P`: quadrature weight times `C_q(1/h_p²) e^{x_k'X_j/h_p²}`.
    weighted_pilot: DMatrix<f64>,
    psi0: DMatrix<f64>,
    omega0: DMatrix<f64>,
    cache: RefCell<Option<CachedGrams>>,
}

/// `(h, Ψ₁, Ψ₂)` from the last evaluation.
type CachedGrams = (f64, DMatrix<f64>, DMatrix<f64>);

impl<'a> MiseSurface<'a> {
    pub fn new(
        sample: &'a DirLinSample,
        pilots: PilotBandwidths,
        rule: &'a QuadratureRule,
    ) -> Result<Self> {
        BandwidthPair::new(pilots.h_p, pilots.g_p)?;
        let q = sample.q();
        if rule.dim() != q.ambient() {
            return Err(Error::DimensionMismatch {
                expected: q.ambient(),
                found: rule.dim(),
            });
        }
        let (n, k) = (sample.len(), rule.len());
        let node_inner =
            DMatrix::from_fn(k, n, |a, i| dot(rule.node(a), sample.xs()[i].as_slice()));
        let kp = 1.0 / (pilots.h_p * pilots.h_p);
        let log_cp = log_cq(q, kp)?;
        let weighted_pilot = DMatrix::from_fn(k, n, |a, j| {
            rule.weights()[a] * (log_cp + kp * node_inner[(a, j)]).exp()
        });
        let psi0 = psi_from_inner(q, &inner_products(sample.xs()), n, pilots.h_p)?;
        let omega0 = normal_gram(sample.zs(), std::f64::consts::SQRT_2 * pilots.g_p)?;
        Ok(MiseSurface {
            sample,
            pilots,
            rule,
            node_inner,
            weighted_pilot,
            psi0,
            omega0,
            cache: RefCell::new(None),
        })
    }

    pub fn pilots(&self) -> &PilotBandwidths {
        &self.pilots
    }

    /// `(Ψ*_1(h), Ψ*_2(h))` by quadrature.
    fn directional_matrices(&self, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let q = self.sample.q();
        let (k, kp) = (1.0 / (h * h), 1.0 / (self.pilots.h_p * self.pilots.h_p));
        let base = log_cq(q, k)? + log_cq(q, kp)?;
        let (nodes, n) = (self.rule.len(), self.sample.len());
        // A_ai = C_q(k) C_q(k_p) / C_q(||k x_a + k_p X_i||)
        let mut a = DMatrix::zeros(nodes, n);
        for i in 0..n {
            for r in 0..nodes {
                let norm = (k * k + kp * kp + 2.0 * k * kp * self.node_inner[(r, i)])
                    .max(0.0)
                    .sqrt();
                a[(r, i)] = (base - log_cq(q, norm)?).exp();
            }
        }
        let psi1 = a.tr_mul(&self.weighted_pilot);
        let mut wa = a.clone();
        for (r, mut row) in wa.row_iter_mut().enumerate() {
            row *= self.rule.weights()[r];
        }
        let psi2 = a.tr_mul(&wa);
        Ok((psi1, psi2))
    }

    fn with_psi<T>(&self, h: f64, f: impl FnOnce(&DMatrix<f64>, &DMatrix<f64>) -> T) -> Result<T> {
        let mut cache = self.cache.borrow_mut();
        if cache.as_ref().is_none_or(|(ch, _, _)| *ch != h) {
            let (p1, p2) = self.directional_matrices(h)?;
            *cache = Some((h, p1, p2));
        }
        let (_, p1, p2) = cache.as_ref().expect("filled above");
        Ok(f(p1, p2))
    }

    pub fn grams(&self, bw: BandwidthPair) -> Result<BootstrapGrams> {
        let gp2 = self.pilots.g_p * self.pilots.g_p;
        let omega1 = normal_gram(self.sample.zs(), (bw.g * bw.g + 2.0 * gp2).sqrt())?;
        let omega2 = normal_gram(self.sample.zs(), (2.0 * bw.g * bw.g + 2.0 * gp2).sqrt())?;
        let (psi1, psi2) = self.with_psi(bw.h, |p1, p2| (p1.clone(), p2.clone()))?;
        Ok(BootstrapGrams {
            psi0: self.psi0.clone(),
            psi1,
            psi2,
            omega0: self.omega0.clone(),
            omega1,
            omega2,
        })
    }

    /// `C_q(1/h²)² / (C_q(2/h²) 2 sqrt(pi) g n)
    ///  + n^{-2} 1'[(1 - 1/n) Ψ*_2∘Ω*_2 - 2 Ψ*_1∘Ω*_1 + Ψ*_0∘Ω*_0]1`.
    pub fn evaluate(&self, bw: BandwidthPair) -> Result<f64> {
        BandwidthPair::new(bw.h, bw.g)?;
        let q = self.sample.q();
        let n = self.sample.len() as f64;
        let k = 1.0 / (bw.h * bw.h);
        let variance =
            (2.0 * log_cq(q, k)? - log_cq(q, 2.0 * k)?).exp() / (2.0 * PI.sqrt() * bw.g * n);
        let gp2 = self.pilots.g_p * self.pilots.g_p;
        let omega1 = normal_gram(self.sample.zs(), (bw.g * bw.g + 2.0 * gp2).sqrt())?;
        let omega2 = normal_gram(self.sample.zs(), (2.0 * bw.g * bw.g + 2.0 * gp2).sqrt())?;
        let (s1, s2) = self.with_psi(bw.h, |p1, p2| (p1.dot(&omega1), p2.dot(&omega2)))?;
        let s0 = self.psi0.dot(&self.omega0);
        let v = variance + ((1.0 - 1.0 / n) * s2 - 2.0 * s1 + s0) / (n * n);
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(v)
    }
}

/// One-shot evaluation of `MISE*_{h_p,g_p}(h, g)`.
pub fn bootstrap_mise(
    sample: &DirLinSample,
    pilots: &PilotBandwidths,
    bw: BandwidthPair,
    rule: &QuadratureRule,
) -> Result<f64> {
    MiseSurface::new(sample, pilots.clone(), rule)?.evaluate(bw)
}

/// `(h, g)_bo`, the minimizer of the bootstrap MISE for the given pilots.
pub fn select_bo(sample: &DirLinSample, pilots: &PilotBandwidths) -> Result<Optimum> {
    sample.require_testable()?;
    let rule = default_rule(sample.q(), pilots.h_p)?;
    let surface = MiseSurface::new(sample, pilots.clone(), &rule)?;
    let sd = sample.linear_sd()?;
    let mut opt = minimize(
        |h, g| surface.evaluate(BandwidthPair { h, g }),
        SearchBox::standard(sd),
    )?;
    let capped = match sample.q().get() {
        1 => 16.0 / pilots.h_p > MAX_QUADRATURE.0 as f64,
        _ => 8.0 / pilots.h_p > MAX_QUADRATURE.1 as f64,
    };
    if capped {
        opt.warnings.push(format!(
            "pilot h_p = {:.4} is below the quadrature resolution; bootstrap MISE is approximate",
            pilots.h_p
        ));
    }
    Ok(opt)
}

/// Bandwidth selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Lcv,
    Lscv,
    Blcv,
    Blscv,
    Bo,
    /// Bandwidths supplied by the caller.
    Fixed,
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lcv" => Ok(Selector::Lcv),
            "lscv" => Ok(Selector::Lscv),
            "blcv" => Ok(Selector::Blcv),
            "blscv" => Ok(Selector::Blscv),
            "bo" => Ok(Selector::Bo),
            "fixed" => Ok(Selector::Fixed),
            other => Err(invalid(format!("unknown selector '{other}'"))),
        }
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Selector::Lcv => "lcv",
            Selector::Lscv => "lscv",
            Selector::Blcv => "blcv",
            Selector::Blscv => "blscv",
            Selector::Bo => "bo",
            Selector::Fixed => "fixed",
        };
        f.write_str(s)
    }
}

/// Outcome of a selector: the bandwidths, the pilots that drove a bootstrap
/// selector, and any search warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub selector: Selector,
    pub bandwidths: BandwidthPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilots: Option<PilotBandwidths>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// BLCV / BLSCV: cross-validate, rescale the result into pilots, minimize the bootstrap MISE.
pub fn select_bootstrap_cv(sample: &DirLinSample, inner: CvObjective) -> Result<Selection> {
    let cv = select_cv_bandwidths(sample, inner)?;
    let pilots = modified_pilots(sample.q(), sample.len(), cv.bandwidths);
    let bo = select_bo(sample, &pilots)?;
    let selector = match inner {
        CvObjective::Lcv => Selector::Blcv,
        CvObjective::Lscv => Selector::Blscv,
    };
    Ok(Selection {
        selector,
        bandwidths: bo.bandwidths,
        pilots: Some(pilots),
        warnings: cv.warnings.into_iter().chain(bo.warnings).collect(),
    })
}

/// Runs `selector` on `sample`. [`Selector::Fixed`] has nothing to select and is rejected.
pub fn select_bandwidths(sample: &DirLinSample, selector: Selector) -> Result<Selection> {
    let from_cv = |objective| -> Result<Selection> {
        let opt = select_cv_bandwidths(sample, objective)?;
        Ok(Selection {
            selector,
            bandwidths: opt.bandwidths,
            pilots: None,
            warnings: opt.warnings,
        })
    };
    match selector {
        Selector::Lcv => from_cv(CvObjective::Lcv),
        Selector::Lscv => from_cv(CvObjective::Lscv),
        Selector::Blcv => select_bootstrap_cv(sample, CvObjective::Lcv),
        Selector::Blscv => select_bootstrap_cv(sample, CvObjective::Lscv),
        Selector::Bo => {
            let pilots = pilot_bandwidths(sample)?;
            let opt = select_bo(sample, &pilots)?;
            let warnings = pilots
                .warnings
                .iter()
                .cloned()
                .chain(opt.warnings)
                .collect();
            Ok(Selection {
                selector,
                bandwidths: opt.bandwidths,
                pilots: Some(pilots),
                warnings,
            })
        }
        Selector::Fixed => Err(invalid("the fixed selector needs explicit bandwidths")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directional::UnitVector;

    fn sample(angles: &[f64], zs: &[f64]) -> DirLinSample {
        DirLinSample::from_angles(angles, zs.to_vec()).unwrap()
    }

    #[test]
    fn concentration_inverts_mean_resultant_length() {
        for q in [SphereDim::CIRCLE, SphereDim::SPHERE] {
            for &k in &[0.01, 0.5, 2.0, 10.0, 300.0] {
                let r = mean_resultant_length(q.get(), k).unwrap();
                let got = fit_concentration(q, r).unwrap();
                assert!((got - k).abs() < 1e-8 * k.max(1.0), "q={q} k={k} got {got}");
            }
        }
        assert!(matches!(
            fit_concentration(SphereDim::CIRCLE, 1.0),
            Err(Error::DegenerateData(_))
        ));
        assert_eq!(fit_concentration(SphereDim::CIRCLE, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pilot_exponents() {
        let q = SphereDim::CIRCLE;
        let ratio = h_amise_vmf(q, 3.0, 200).unwrap() * h_pilot_factor(q, 200)
            / (h_amise_vmf(q, 3.0, 100).unwrap() * h_pilot_factor(q, 100));
        assert!((ratio - 2f64.powf(-1.0 / 7.0)).abs() < 1e-12);
        let q2 = SphereDim::SPHERE;
        let ratio = h_amise_vmf(q2, 3.0, 200).unwrap() * h_pilot_factor(q2, 200)
            / (h_amise_vmf(q2, 3.0, 100).unwrap() * h_pilot_factor(q2, 100));
        assert!((ratio - 2f64.powf(-1.0 / 8.0)).abs() < 1e-12);
        let g = g_normal_reference(1.3, 200) * g_pilot_factor(200)
            / (g_normal_reference(1.3, 100) * g_pilot_factor(100));
        assert!((g - 2f64.powf(-1.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn rescaling_factors() {
        assert!((g_pilot_factor(100) - 100f64.powf(2.0 / 35.0)).abs() < 1e-12);
        assert!((h_pilot_factor(SphereDim::CIRCLE, 100) - 1.30).abs() < 0.01);
        assert!((h_pilot_factor(SphereDim::SPHERE, 100) - 100f64.powf(1.0 / 24.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_directions_cap_the_pilot() {
        let n = 40;
        let angles: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let zs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = pilot_bandwidths(&sample(&angles, &zs)).unwrap();
        assert!(!p.warnings.is_empty());
        assert!((p.h_p - H_MAX * h_pilot_factor(SphereDim::CIRCLE, n)).abs() < 1e-12);
    }

    #[test]
    fn identical_directions_are_degenerate() {
        let s = sample(&[0.3; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            pilot_bandwidths(&s),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn bootstrap_matrices_are_positive_and_symmetric_where_expected() {
        let s = sample(&[0.1, 1.3, 2.9, 4.4, 5.0], &[0.2, -0.5, 1.1, 0.0, 0.7]);
        let pilots = PilotBandwidths::new(0.5, 0.6).unwrap();
        let rule = default_rule(s.q(), pilots.h_p).unwrap();
        let surface = MiseSurface::new(&s, pilots, &rule).unwrap();
        let g = surface
            .grams(BandwidthPair::new(0.4, 0.3).unwrap())
            .unwrap();
        for m in [&g.psi0, &g.psi2, &g.omega0, &g.omega1, &g.omega2] {
            assert!((m - m.transpose()).abs().max() < 1e-12);
            assert!(m.iter().all(|&v| v > 0.0));
        }
        // Ψ*_1 is a double kernel convolution K_hp * K_h * K_hp, hence symmetric too
        assert!(g.psi1.iter().all(|&v| v > 0.0));
        assert!((g.psi1.clone() - g.psi1.transpose()).abs().max() < 1e-10);
        let diag = 1.0 / (2.0 * PI.sqrt() * 0.6);
        assert!(g
            .omega0
            .diagonal()
            .iter()
            .all(|&d| (d - diag).abs() < 1e-14));
    }

    #[test]
    fn mise_is_positive_and_cached_consistently() {
        let s = sample(
            &[0.1, 1.3, 2.9, 4.4, 5.0, 0.8],
            &[0.2, -0.5, 1.1, 0.0, 0.7, 0.1],
        );
        let pilots = PilotBandwidths::new(0.5, 0.6).unwrap();
        let rule = default_rule(s.q(), pilots.h_p).unwrap();
        let surface = MiseSurface::new(&s, pilots.clone(), &rule).unwrap();
        for &(h, g) in &[(0.1, 0.1), (0.4, 0.3), (2.0, 1.0), (0.4, 0.9)] {
            let bw = BandwidthPair::new(h, g).unwrap();
            let v = surface.evaluate(bw).unwrap();
            assert!(v > 0.0);
            assert_eq!(v, bootstrap_mise(&s, &pilots, bw, &rule).unwrap());
        }
    }

    #[test]
    fn sphere_surface_runs() {
        let xs = vec![
            UnitVector::from_spherical(0.1, 0.4),
            UnitVector::from_spherical(2.0, 1.4),
            UnitVector::from_spherical(4.0, 2.2),
            UnitVector::from_spherical(5.5, 0.9),
        ];
        let s = DirLinSample::new(xs, vec![0.3, 1.0, -0.4, 0.8]).unwrap();
        let pilots = PilotBandwidths::new(0.6, 0.5).unwrap();
        let rule = default_rule(s.q(), pilots.h_p).unwrap();
        assert!(
            bootstrap_mise(&s, &pilots, BandwidthPair::new(0.5, 0.4).unwrap(), &rule).unwrap()
                > 0.0
        );
    }

    #[test]
    fn selector_names_round_trip() {
        for s in [
            Selector::Lcv,
            Selector::Lscv,
            Selector::Blcv,
            Selector::Blscv,
            Selector::Bo,
            Selector::Fixed,
        ] {
            assert_eq!(s.to_string().parse::<Selector>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("nope".parse::<Selector>().is_err());
    }
}

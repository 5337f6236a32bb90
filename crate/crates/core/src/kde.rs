//! Kernel density estimators with von Mises and normal kernels, and the
//! cross-validation objectives used to pick their bandwidths.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::directional::{dot, UnitVector};
use crate::error::{invalid, Error, Result};
use crate::numerics::{log_chq, log_cq, normal_pdf, normal_pdf_unchecked, SphereDim};
use crate::optimize::{maximize, Optimum, SearchBox};

/// Paired directions and linear values `(X_i, Z_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirLinSample {
    xs: Vec<UnitVector>,
    zs: Vec<f64>,
    q: SphereDim,
}

impl DirLinSample {
    pub fn new(xs: Vec<UnitVector>, zs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        if xs.len() != zs.len() {
            return Err(invalid(format!(
                "{} directions but {} linear values",
                xs.len(),
                zs.len()
            )));
        }
        let q = xs[0].sphere_dim();
        for x in &xs {
            if x.len() != q.ambient() {
                return Err(Error::DimensionMismatch {
                    expected: q.ambient(),
                    found: x.len(),
                });
            }
        }
        if let Some(z) = zs.iter().find(|z| !z.is_finite()) {
            return Err(invalid(format!("linear value {z} is not finite")));
        }
        Ok(DirLinSample { xs, zs, q })
    }

    /// Circular sample from angles in radians.
    pub fn from_angles(angles: &[f64], zs: Vec<f64>) -> Result<Self> {
        Self::new(
            angles.iter().map(|&t| UnitVector::from_angle(t)).collect(),
            zs,
        )
    }

    pub fn xs(&self) -> &[UnitVector] {
        &self.xs
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn q(&self) -> SphereDim {
        self.q
    }

    pub fn len(&self) -> usize {
        self.zs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zs.is_empty()
    }

    /// Same directions, linear values reordered as `z_{perm[i]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        DirLinSample {
            xs: self.xs.clone(),
            zs: perm.iter().map(|&i| self.zs[i]).collect(),
            q: self.q,
        }
    }

    pub(crate) fn require_testable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(invalid(format!(
                "at least 2 observations are required, got {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Sample standard deviation of the linear values; an error when it is zero.
    pub fn linear_sd(&self) -> Result<f64> {
        let sd = sample_sd(&self.zs);
        if !(sd > 0.0) {
            return Err(Error::DegenerateData("linear values are constant".into()));
        }
        Ok(sd)
    }
}

pub(crate) fn sample_sd(zs: &[f64]) -> f64 {
    let n = zs.len() as f64;
    if zs.len() < 2 {
        return 0.0;
    }
    let mean = zs.iter().sum::<f64>() / n;
    (zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Directional bandwidth `h` and linear bandwidth `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPair {
    pub h: f64,
    pub g: f64,
}

impl BandwidthPair {
    pub fn new(h: f64, g: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || !(g > 0.0) || !g.is_finite() {
            return Err(invalid(format!(
                "bandwidths must be finite and positive, got h={h}, g={g}"
            )));
        }
        Ok(BandwidthPair { h, g })
    }
}

fn check_point(q: SphereDim, x: &[f64]) -> Result<()> {
    if x.len() != q.ambient() {
        return Err(Error::DimensionMismatch {
            expected: q.ambient(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `(1/n) Σ φ_g(z - Z_i)`.
pub fn kde_linear(zs: &[f64], g: f64, z: f64) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::EmptySample);
    }
    normal_pdf(0.0, 0.0, g)?;
    Ok(zs
        .iter()
        .map(|&zi| normal_pdf_unchecked(z, zi, g))
        .sum::<f64>()
        / zs.len() as f64)
}

/// `(1/n) Σ f_vM(x; X_i, 1/h²)`.
pub fn kde_directional(xs: &[UnitVector], h: f64, x: &[f64]) -> Result<f64> {
    let first = xs.first().ok_or(Error::EmptySample)?;
    let q = first.sphere_dim();
    check_point(q, x)?;
    let kappa = 1.0 / (h * h);
    // ln C_q(kappa) + kappa, so each term is exp(kappa (x'X_i - 1)) and cannot overflow
    let log_c = log_chq(q, h)?;
    let mut total = 0.0;
    for xi in xs {
        check_point(q, xi.as_slice())?;
        total += (log_c + kappa * (dot(x, xi.as_slice()) - 1.0)).exp();
    }
    Ok(total / xs.len() as f64)
}

/// The same estimator written with the kernel `L(r) = e^{-r}` and the constant
/// `c_{h,q}(L)`: `(c_{h,q}/n) Σ L((1 - x'X_i)/h²)`.
pub fn kde_directional_kernel_form(xs: &[UnitVector], h: f64, x: &[f64]) -> Result<f64> {
    let first = xs.first().ok_or(Error::EmptySample)?;
    let q = first.sphere_dim();
    check_point(q, x)?;
    let c = log_chq(q, h)?.exp();
    let sum: f64 = xs
        .iter()
        .map(|xi| (-(1.0 - dot(x, xi.as_slice())) / (h * h)).exp())
        .sum();
    Ok(c * sum / xs.len() as f64)
}

/// `(1/n) Σ f_vM(x; X_i, 1/h²) φ_g(z - Z_i)`.
pub fn kde_dirlin(sample: &DirLinSample, bw: BandwidthPair, x: &[f64], z: f64) -> Result<f64> {
    check_point(sample.q, x)?;
    let kappa = 1.0 / (bw.h * bw.h);
    let log_c = log_chq(sample.q, bw.h)?;
    normal_pdf(0.0, 0.0, bw.g)?;
    let total: f64 = sample
        .xs
        .iter()
        .zip(&sample.zs)
        .map(|(xi, &zi)| {
            (log_c + kappa * (dot(x, xi.as_slice()) - 1.0)).exp()
                * normal_pdf_unchecked(z, zi, bw.g)
        })
        .sum();
    Ok(total / sample.len() as f64)
}

/// Pairwise inner products `X_i'X_j` (row-major, `n x n`).
pub(crate) fn inner_products(xs: &[UnitVector]) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        out[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let d = dot(xs[i].as_slice(), xs[j].as_slice()).clamp(-1.0, 1.0);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// `Ψ(h)_{ij} = C_q(1/h²)² / C_q(||X_i + X_j|| / h²)`, from precomputed inner products.
pub(crate) fn psi_from_inner(
    q: SphereDim,
    inner: &[f64],
    n: usize,
    h: f64,
) -> Result<DMatrix<f64>> {
    let kappa = 1.0 / (h * h);
    let two_log_c = 2.0 * log_cq(q, kappa)?;
    let mut psi = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let r = (2.0 + 2.0 * inner[i * n + j]).max(0.0).sqrt();
            let v = (two_log_c - log_cq(q, kappa * r)?).exp();
            psi[(i, j)] = v;
            psi[(j, i)] = v;
        }
    }
    Ok(psi)
}

/// `Ψ(h)` for a set of directions.
pub fn psi_matrix(xs: &[UnitVector], h: f64) -> Result<DMatrix<f64>> {
    let first = xs.first().ok_or(Error::EmptySample)?;
    psi_from_inner(first.sphere_dim(), &inner_products(xs), xs.len(), h)
}

/// `(φ_sd(Z_i - Z_j))_{ij}`; `Ω(g)` is the case `sd = √2 g`.
pub fn normal_gram(zs: &[f64], sd: f64) -> Result<DMatrix<f64>> {
    normal_pdf(0.0, 0.0, sd)?;
    let n = zs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = normal_pdf_unchecked(zs[i], zs[j], sd);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// `Ω(g) = (φ_{√2 g}(Z_i - Z_j))_{ij}`.
pub fn omega_matrix(zs: &[f64], g: f64) -> Result<DMatrix<f64>> {
    normal_gram(zs, std::f64::consts::SQRT_2 * g)
}

/// Cross-validation criterion for [`select_cv_bandwidths`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvObjective {
    Lcv,
    Lscv,
}

/// Inner products and squared linear differences shared by repeated
/// objective evaluations on one sample.
pub struct CvContext<'a> {
    sample: &'a DirLinSample,
    inner: Vec<f64>,
    psi_cache: RefCell<Option<(f64, DMatrix<f64>)>>,
}

impl<'a> CvContext<'a> {
    pub fn new(sample: &'a DirLinSample) -> Result<Self> {
        sample.require_testable()?;
        Ok(CvContext {
            sample,
            inner: inner_products(&sample.xs),
            psi_cache: RefCell::new(None),
        })
    }

    /// `ln f̂^{-i}(X_i, Z_i)` for every `i`, in log space.
    fn loo_log_densities(&self, bw: BandwidthPair) -> Result<Vec<f64>> {
        let s = self.sample;
        let n = s.len();
        let kappa = 1.0 / (bw.h * bw.h);
        let base = log_chq(s.q, bw.h)? - bw.g.ln() - 0.5 * (2.0 * PI).ln() - ((n - 1) as f64).ln();
        let inv_2g2 = 0.5 / (bw.g * bw.g);
        let mut out = Vec::with_capacity(n);
        let mut terms = vec![0.0; n];
        for i in 0..n {
            let mut max = f64::NEG_INFINITY;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dz = s.zs[i] - s.zs[j];
                let t = kappa * (self.inner[i * n + j] - 1.0) - dz * dz * inv_2g2;
                terms[j] = t;
                max = max.max(t);
            }
            let sum: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (terms[j] - max).exp())
                .sum();
            out.push(base + max + sum.ln());
        }
        Ok(out)
    }

    /// `Σ_i ln f̂^{-i}(X_i, Z_i)`.
    pub fn lcv(&self, bw: BandwidthPair) -> Result<f64> {
        let v: f64 = self.loo_log_densities(bw)?.into_iter().sum();
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(v)
    }

    /// `2/n Σ_i f̂^{-i}(X_i, Z_i) - ∬ f̂²`, with `∬ f̂² = n^{-2} Σ_ij Ψ(h)_ij Ω(g)_ij`.
    pub fn lscv(&self, bw: BandwidthPair) -> Result<f64> {
        let s = self.sample;
        let n = s.len() as f64;
        let loo: f64 = self.loo_log_densities(bw)?.into_iter().map(f64::exp).sum();
        let mut cache = self.psi_cache.borrow_mut();
        if cache.as_ref().is_none_or(|(h, _)| *h != bw.h) {
            *cache = Some((bw.h, psi_from_inner(s.q, &self.inner, s.len(), bw.h)?));
        }
        let psi = &cache.as_ref().expect("filled above").1;
        let omega = omega_matrix(&s.zs, bw.g)?;
        let square = psi.component_mul(&omega).sum() / (n * n);
        let v = 2.0 * loo / n - square;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(v)
    }

    pub fn evaluate(&self, objective: CvObjective, bw: BandwidthPair) -> Result<f64> {
        match objective {
            CvObjective::Lcv => self.lcv(bw),
            CvObjective::Lscv => self.lscv(bw),
        }
    }
}

/// Likelihood cross-validation objective `Σ_i ln f̂^{-i}_{h,g}(X_i, Z_i)`.
pub fn lcv_objective(sample: &DirLinSample, bw: BandwidthPair) -> Result<f64> {
    CvContext::new(sample)?.lcv(bw)
}

/// Least-squares cross-validation objective `2/n Σ_i f̂^{-i}_{h,g}(X_i, Z_i) - ∬ f̂²_{h,g}`.
pub fn lscv_objective(sample: &DirLinSample, bw: BandwidthPair) -> Result<f64> {
    CvContext::new(sample)?.lscv(bw)
}

/// Maximizes the chosen cross-validation objective over the standard search
/// box scaled by the sample standard deviation of the linear values.
pub fn select_cv_bandwidths(sample: &DirLinSample, objective: CvObjective) -> Result<Optimum> {
    let ctx = CvContext::new(sample)?;
    let sd = sample.linear_sd()?;
    maximize(
        |h, g| ctx.evaluate(objective, BandwidthPair { h, g }),
        SearchBox::standard(sd),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_sample(angles: &[f64], zs: &[f64]) -> DirLinSample {
        DirLinSample::from_angles(angles, zs.to_vec()).unwrap()
    }

    #[test]
    fn single_point_linear_estimate() {
        assert!(
            (kde_linear(&[2.0], 0.5, 2.0).unwrap() - 1.0 / ((2.0 * PI).sqrt() * 0.5)).abs() < 1e-15
        );
        assert!(matches!(kde_linear(&[], 0.5, 0.0), Err(Error::EmptySample)));
    }

    #[test]
    fn symmetric_pair_at_origin() {
        let v = kde_linear(&[-1.3, 1.3], 0.7, 0.0).unwrap();
        assert!((v - normal_pdf(1.3, 0.0, 0.7).unwrap()).abs() < 1e-16);
    }

    #[test]
    fn single_direction_at_its_own_location() {
        let x = UnitVector::from_angle(0.4);
        let v = kde_directional(std::slice::from_ref(&x), 1.0, x.as_slice()).unwrap();
        let want = 1f64.exp() / (2.0 * PI * 1.266_065_877_752_008_4);
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn flat_for_large_bandwidth() {
        let xs: Vec<_> = [0.1, 2.0, 4.0]
            .iter()
            .map(|&t| UnitVector::from_angle(t))
            .collect();
        for t in [0.0, 1.0, 3.0] {
            let v = kde_directional(&xs, 1e4, UnitVector::from_angle(t).as_slice()).unwrap();
            assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-8);
        }
    }

    #[test]
    fn single_observation_factorizes() {
        let s = circle_sample(&[0.3], &[1.0]);
        let bw = BandwidthPair::new(0.6, 0.4).unwrap();
        let x = UnitVector::from_angle(1.1);
        let joint = kde_dirlin(&s, bw, x.as_slice(), 0.2).unwrap();
        let prod = kde_directional(s.xs(), bw.h, x.as_slice()).unwrap()
            * kde_linear(s.zs(), bw.g, 0.2).unwrap();
        assert!((joint - prod).abs() < 1e-15);
    }

    #[test]
    fn common_direction_factorizes() {
        let s = circle_sample(&[0.5, 0.5, 0.5], &[1.0, -2.0, 0.3]);
        let bw = BandwidthPair::new(0.3, 0.8).unwrap();
        let x = UnitVector::from_angle(0.9);
        let joint = kde_dirlin(&s, bw, x.as_slice(), -0.4).unwrap();
        let prod = kde_directional(s.xs(), bw.h, x.as_slice()).unwrap()
            * kde_linear(s.zs(), bw.g, -0.4).unwrap();
        assert!((joint - prod).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_in_evaluation_point() {
        let s = circle_sample(&[0.3, 1.0], &[1.0, 2.0]);
        let bw = BandwidthPair::new(0.6, 0.4).unwrap();
        assert!(matches!(
            kde_dirlin(&s, bw, &[0.0, 0.0, 1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_validation() {
        assert!(DirLinSample::new(vec![], vec![]).is_err());
        assert!(DirLinSample::from_angles(&[0.0, 1.0], vec![1.0]).is_err());
        let mixed = vec![
            UnitVector::from_angle(0.0),
            UnitVector::north(SphereDim::SPHERE),
        ];
        assert!(DirLinSample::new(mixed, vec![0.0, 1.0]).is_err());
        let s = circle_sample(&[0.0, 1.0], &[2.0, 2.0]);
        assert!(matches!(s.linear_sd(), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn duplicate_pair_objective_grows_as_bandwidths_shrink() {
        let s = circle_sample(&[0.7, 0.7], &[1.5, 1.5]);
        let ctx = CvContext::new(&s).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for &h in &[5.0, 2.0, 1.0, 0.5, 0.2, 0.05] {
            let v = ctx.lcv(BandwidthPair::new(h, h).unwrap()).unwrap();
            assert!(v.is_finite());
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn lscv_reuses_cached_psi() {
        let s = circle_sample(&[0.0, 1.0, 2.5, 4.0], &[0.1, 0.4, -1.0, 2.0]);
        let ctx = CvContext::new(&s).unwrap();
        let a = ctx.lscv(BandwidthPair::new(0.5, 0.5).unwrap()).unwrap();
        let b = ctx.lscv(BandwidthPair::new(0.5, 0.9).unwrap()).unwrap();
        let fresh = lscv_objective(&s, BandwidthPair::new(0.5, 0.9).unwrap()).unwrap();
        assert_ne!(a, b);
        assert_eq!(b, fresh);
    }
}

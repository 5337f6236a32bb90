//! Points on the sphere, von Mises–Fisher laws, and axial orientations.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{log_cq, SphereDim};

const UNIT_TOL: f64 = 1e-12;

/// A point of `Ω_q`, stored with its `q + 1` Cartesian coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Accepts `coords` whose Euclidean norm is one within `1e-12`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("a unit vector needs at least two coordinates"));
        }
        let norm = norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(invalid(format!("vector norm {norm} is not 1")));
        }
        Ok(UnitVector(coords))
    }

    /// Rescales `coords` onto the sphere.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if coords.len() < 2 || !(n > 0.0) || !n.is_finite() {
            return Err(invalid(
                "cannot normalize a zero, non-finite or one-dimensional vector",
            ));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(UnitVector(coords))
    }

    /// `(cos angle, sin angle)` on the circle.
    pub fn from_angle(angle: f64) -> Self {
        UnitVector(vec![angle.cos(), angle.sin()])
    }

    /// The point with azimuth `azimuth` and polar angle `polar` on `S²`.
    pub fn from_spherical(azimuth: f64, polar: f64) -> Self {
        let s = polar.sin();
        UnitVector(vec![s * azimuth.cos(), s * azimuth.sin(), polar.cos()])
    }

    /// The point `(0, ..., 0, 1)` of `Ω_q`.
    pub fn north(q: SphereDim) -> Self {
        let mut c = vec![0.0; q.ambient()];
        c[q.get()] = 1.0;
        UnitVector(c)
    }

    /// `sign · e_axis`, the signed basis vector.
    pub fn basis(q: SphereDim, axis: usize, sign: f64) -> Self {
        let mut c = vec![0.0; q.ambient()];
        c[axis] = sign.signum();
        UnitVector(c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Number of coordinates, `q + 1`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sphere_dim(&self) -> SphereDim {
        SphereDim::new(self.0.len() - 1).expect("unit vectors have at least two coordinates")
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Polar angle on the circle, in `(-pi, pi]`.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Vec<f64> {
        v.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The von Mises–Fisher law `C_q(kappa) exp(kappa x'mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFisher {
    mu: UnitVector,
    kappa: f64,
    log_norm: f64,
}

impl VonMisesFisher {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid(format!(
                "concentration must be finite and nonnegative, got {kappa}"
            )));
        }
        let log_norm = log_cq(mu.sphere_dim(), kappa)?;
        Ok(VonMisesFisher {
            mu,
            kappa,
            log_norm,
        })
    }

    pub fn mu(&self) -> &UnitVector {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sphere_dim(&self) -> SphereDim {
        self.mu.sphere_dim()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.mu.len(), x.len())?;
        Ok(self.log_norm + self.kappa * dot(self.mu.as_slice(), x))
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<UnitVector> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// One draw by the tangent-normal decomposition: the cosine `w = x'mu` by
    /// envelope rejection, then a uniform tangent direction.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let w = sample_polar_cosine(self.mu.len(), self.kappa, rng);
        let v = uniform_tangent(self.mu.as_slice(), rng);
        let s = (1.0 - w * w).max(0.0).sqrt();
        let coords = self
            .mu
            .as_slice()
            .iter()
            .zip(&v)
            .map(|(m, t)| w * m + s * t)
            .collect();
        // renormalize away rounding so the result satisfies the unit invariant
        UnitVector::normalize(coords).expect("draw lies on the sphere")
    }
}

/// Draws `w = x'mu` for a vMF law in ambient dimension `m` (Wood's scheme).
fn sample_polar_cosine<R: Rng + ?Sized>(m: usize, kappa: f64, rng: &mut R) -> f64 {
    let dm1 = (m - 1) as f64;
    // b = (-2k + sqrt(4k² + (m-1)²)) / (m-1), written without cancellation
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * dm1, 0.5 * dm1).expect("positive shape");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w.clamp(-1.0, 1.0);
        }
    }
}

/// A uniformly distributed unit vector orthogonal to `mu`.
fn uniform_tangent<R: Rng + ?Sized>(mu: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..mu.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let proj = dot(&g, mu);
        let t: Vec<f64> = g.iter().zip(mu).map(|(g, m)| g - proj * m).collect();
        let n = norm(&t);
        if n > 1e-12 {
            return t.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Finite mixture of von Mises–Fisher laws on a common sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfMixture {
    components: Vec<(f64, VonMisesFisher)>,
}

impl VmfMixture {
    pub fn new(components: Vec<(f64, VonMisesFisher)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(invalid("a mixture needs at least one component"));
        };
        let dim = first.mu.len();
        for (w, c) in &components {
            if !(*w >= 0.0) {
                return Err(invalid(format!("mixture weight {w} is negative")));
            }
            check_dim(dim, c.mu.len())?;
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(VmfMixture { components })
    }

    pub fn components(&self) -> &[(f64, VonMisesFisher)] {
        &self.components
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (w, c) in &self.components {
            total += w * c.density(x)?;
        }
        Ok(total)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, c) in &self.components {
            acc += w;
            if u < acc {
                return c.sample_one(rng);
            }
        }
        self.components.last().expect("nonempty").1.sample_one(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<UnitVector> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

/// An undirected axis: planar angle `theta ∈ [0, pi)` and, for 3-D axes,
/// inclination `phi ∈ [0, pi/2]` with `pi/2` horizontal and `0` vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialOrientation {
    theta: f64,
    phi: Option<f64>,
}

impl AxialOrientation {
    pub fn planar(theta: f64) -> Result<Self> {
        Self::new(theta, None)
    }

    pub fn spatial(theta: f64, phi: f64) -> Result<Self> {
        Self::new(theta, Some(phi))
    }

    pub fn new(theta: f64, phi: Option<f64>) -> Result<Self> {
        if !(0.0..PI).contains(&theta) {
            return Err(invalid(format!("axial angle {theta} is outside [0, pi)")));
        }
        if let Some(p) = phi {
            if !(0.0..=PI / 2.0).contains(&p) {
                return Err(invalid(format!("inclination {p} is outside [0, pi/2]")));
            }
        }
        Ok(AxialOrientation { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> Option<f64> {
        self.phi
    }
}

/// Maps an axis to a direction by doubling its planar angle: `(cos 2θ, sin 2θ)`
/// on the circle, or `(sin φ cos 2θ, sin φ sin 2θ, cos φ)` on the upper hemisphere.
pub fn encode_axial(a: &AxialOrientation) -> UnitVector {
    let two_theta = 2.0 * a.theta;
    match a.phi {
        None => UnitVector::from_angle(two_theta),
        Some(phi) => UnitVector::from_spherical(two_theta, phi),
    }
}

/// Reduces an angle to `[0, pi)`.
pub(crate) fn wrap_axial(angle: f64) -> f64 {
    let t = angle.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Orientation of the first principal axis of a set of 2-D or 3-D vertices.
///
/// Vertices are centered and weighted equally. Fails with
/// [`Error::DegenerateOrientation`] when the two leading covariance
/// eigenvalues agree within relative `1e-9`.
pub fn pca_orientation<P: AsRef<[f64]>>(vertices: &[P]) -> Result<AxialOrientation> {
    let Some(first) = vertices.first() else {
        return Err(invalid("no vertices"));
    };
    let d = first.as_ref().len();
    if d != 2 && d != 3 {
        return Err(invalid(format!(
            "vertices must have 2 or 3 coordinates, got {d}"
        )));
    }
    let mut mean = [0.0; 3];
    for v in vertices {
        let v = v.as_ref();
        check_dim(d, v.len())?;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite vertex coordinate"));
        }
        for k in 0..d {
            mean[k] += v[k];
        }
    }
    let n = vertices.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = [[0.0; 3]; 3];
    for v in vertices {
        let v = v.as_ref();
        for a in 0..d {
            for b in a..d {
                cov[a][b] += (v[a] - mean[a]) * (v[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= n;
            cov[b][a] = cov[a][b];
        }
    }
    if d == 2 {
        let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
        let half_gap = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let mid = 0.5 * (a + c);
        let (l1, l2) = (mid + half_gap, mid - half_gap);
        if !(l1 > 0.0) || l1 - l2 <= 1e-9 * l1.abs() {
            return Err(Error::DegenerateOrientation);
        }
        return AxialOrientation::planar(wrap_axial(0.5 * (2.0 * b).atan2(a - c)));
    }
    let (values, top) = symmetric_eigen3(&cov);
    if !(values[0] > 0.0) || values[0] - values[1] <= 1e-9 * values[0].abs() {
        return Err(Error::DegenerateOrientation);
    }
    let theta = if top[0] == 0.0 && top[1] == 0.0 {
        0.0
    } else {
        wrap_axial(top[1].atan2(top[0]))
    };
    let phi = top[2].abs().min(1.0).acos().clamp(0.0, PI / 2.0);
    AxialOrientation::spatial(theta, phi)
}

/// Eigenvalues in decreasing order and a unit eigenvector of the largest one,
/// by the trigonometric solution of the characteristic cubic.
fn symmetric_eigen3(a: &[[f64; 3]; 3]) -> ([f64; 3], [f64; 3]) {
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let tr = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let values = if off == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| y.total_cmp(x));
        d
    } else {
        let p2 =
            (a[0][0] - tr).powi(2) + (a[1][1] - tr).powi(2) + (a[2][2] - tr).powi(2) + 2.0 * off;
        let p = (p2 / 6.0).sqrt();
        let mut bm = *a;
        for (i, row) in bm.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - if i == j { tr } else { 0.0 }) / p;
            }
        }
        let det = bm[0][0] * (bm[1][1] * bm[2][2] - bm[1][2] * bm[2][1])
            - bm[0][1] * (bm[1][0] * bm[2][2] - bm[1][2] * bm[2][0])
            + bm[0][2] * (bm[1][0] * bm[2][1] - bm[1][1] * bm[2][0]);
        let angle = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
        let l1 = tr + 2.0 * p * angle.cos();
        let l3 = tr + 2.0 * p * (angle + 2.0 * PI / 3.0).cos();
        [l1, 3.0 * tr - l1 - l3, l3]
    };
    // rows of (A - l1 I) span the orthogonal complement of the top eigenvector
    let mut rows = *a;
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] -= values[0];
    }
    let cross = |u: &[f64; 3], v: &[f64; 3]| {
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|x, y| norm(&x[..]).total_cmp(&norm(&y[..])))
        .copied()
        .expect("three candidates");
    let n = norm(&best);
    let vector = if n > 0.0 {
        [best[0] / n, best[1] / n, best[2] / n]
    } else {
        // A - l1 I has rank <= 1: take the diagonal direction with the largest variance
        let i = (0..3)
            .max_by(|&x, &y| a[x][x].total_cmp(&a[y][y]))
            .expect("three axes");
        let mut e = [0.0; 3];
        e[i] = 1.0;
        e
    };
    (values, vector)
}

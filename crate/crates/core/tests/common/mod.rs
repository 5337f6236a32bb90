//! Brute-force references shared by the integration tests: everything here is
//! computed by direct quadrature of the defining integrals.
#![allow(dead_code)]

use std::f64::consts::PI;

use dirlin::bandwidth::{MiseSurface, PilotBandwidths};
use dirlin::directional::UnitVector;
use dirlin::kde::{BandwidthPair, DirLinSample};
use dirlin::numerics::{
    gauss_legendre, log_cq, make_quadrature, Domain, QuadratureRule, Resolution, SphereDim,
};
use dirlin::rng::task_rng;
use dirlin::simulation::ModelSpec;

pub fn normal(z: f64, sd: f64) -> f64 {
    (-0.5 * (z / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())
}

/// `L_h(x, y)`, evaluated from its definition.
pub fn dir_kernel(q: SphereDim, h: f64, x: &[f64], y: &[f64]) -> f64 {
    let k = 1.0 / (h * h);
    let c = log_cq(q, k).unwrap();
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (c + k * (dot - 1.0) + k).exp()
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]`.
pub fn line_rule(a: f64, b: f64, panels: usize, per_panel: usize) -> Vec<(f64, f64)> {
    let (t, w) = gauss_legendre(per_panel);
    let step = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + p as f64 * step;
            t.iter()
                .zip(&w)
                .map(move |(t, w)| (lo + 0.5 * step * (t + 1.0), 0.5 * step * w))
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn dir_rule(q: SphereDim, res: usize) -> QuadratureRule {
    match q.get() {
        1 => make_quadrature(Domain::Circle, Resolution::Nodes(res)).unwrap(),
        _ => make_quadrature(
            Domain::Sphere,
            Resolution::Grid {
                polar: res,
                azimuth: 2 * res,
            },
        )
        .unwrap(),
    }
}

/// `∫∫ (f̂_{h,g}(x,z) - f̂_h(x) f̂_g(z))² dz dx` by product quadrature.
pub fn tn_by_quadrature(
    s: &DirLinSample,
    bw: BandwidthPair,
    dir_res: usize,
    z_panels: usize,
) -> f64 {
    let n = s.len() as f64;
    let zmin = s.zs().iter().cloned().fold(f64::INFINITY, f64::min) - 9.0 * bw.g;
    let zmax = s.zs().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 9.0 * bw.g;
    let zr = line_rule(zmin, zmax, z_panels, 10);
    let phi: Vec<Vec<f64>> = zr
        .iter()
        .map(|(z, _)| s.zs().iter().map(|zi| normal(z - zi, bw.g)).collect())
        .collect();
    let fz: Vec<f64> = phi.iter().map(|row| row.iter().sum::<f64>() / n).collect();
    dir_rule(s.q(), dir_res).integrate(|x| {
        let l: Vec<f64> = s
            .xs()
            .iter()
            .map(|xi| dir_kernel(s.q(), bw.h, x, xi.as_slice()))
            .collect();
        let fx = l.iter().sum::<f64>() / n;
        zr.iter()
            .zip(&phi)
            .zip(&fz)
            .map(|(((_, w), row), fz)| {
                let joint: f64 = l.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() / n;
                w * (joint - fx * fz).powi(2)
            })
            .sum()
    })
}

/// Bootstrap MISE on the circle from its definition: resamples drawn from the
/// joint pilot `f̂_{h_p,g_p}`, and
/// `∫∫ Var* f̂*(x,z) + (E* f̂*(x,z) - f̂_{h_p,g_p}(x,z))² dz dx`, with every
/// convolution done by nested quadrature.
pub fn circular_mise_by_quadrature(
    s: &DirLinSample,
    pilots: (f64, f64),
    bw: BandwidthPair,
    nodes: usize,
) -> f64 {
    assert_eq!(s.q(), SphereDim::CIRCLE);
    let q = s.q();
    let n = s.len();
    let (hp, gp) = pilots;
    let rule = dir_rule(q, nodes);
    let pts: Vec<Vec<f64>> = rule.nodes().map(|x| x.to_vec()).collect();
    let w = rule.weights();
    // per datum: pilot kernel, E L_h(x, Y) and E L_h(x, Y)² with Y ~ L_{h_p}(., X_i)
    let pilot_x: Vec<Vec<f64>> = s
        .xs()
        .iter()
        .map(|xi| {
            pts.iter()
                .map(|y| dir_kernel(q, hp, y, xi.as_slice()))
                .collect()
        })
        .collect();
    let mut a1 = vec![vec![0.0; pts.len()]; n];
    let mut a2 = vec![vec![0.0; pts.len()]; n];
    for (a, x) in pts.iter().enumerate() {
        for (b, y) in pts.iter().enumerate() {
            let l = dir_kernel(q, bw.h, x, y);
            for i in 0..n {
                a1[i][a] += w[b] * l * pilot_x[i][b];
                a2[i][a] += w[b] * l * l * pilot_x[i][b];
            }
        }
    }
    let zmin = s.zs().iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * (bw.g + gp);
    let zmax = s.zs().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * (bw.g + gp);
    let zr = line_rule(zmin, zmax, 60, 10);
    let pilot_z: Vec<Vec<f64>> = s
        .zs()
        .iter()
        .map(|zi| zr.iter().map(|(u, _)| normal(u - zi, gp)).collect())
        .collect();
    let mut b1 = vec![vec![0.0; zr.len()]; n];
    let mut b2 = vec![vec![0.0; zr.len()]; n];
    for (a, (z, _)) in zr.iter().enumerate() {
        for (b, (u, wu)) in zr.iter().enumerate() {
            let k = normal(z - u, bw.g);
            for i in 0..n {
                b1[i][a] += wu * k * pilot_z[i][b];
                b2[i][a] += wu * k * k * pilot_z[i][b];
            }
        }
    }
    let nf = n as f64;
    let mut total = 0.0;
    for a in 0..pts.len() {
        for (b, (_, wz)) in zr.iter().enumerate() {
            let (mut mean, mut second, mut target) = (0.0, 0.0, 0.0);
            for i in 0..n {
                mean += a1[i][a] * b1[i][b] / nf;
                second += a2[i][a] * b2[i][b] / nf;
                target += pilot_x[i][a] * pilot_z[i][b] / nf;
            }
            total += w[a] * wz * ((second - mean * mean) / nf + (mean - target).powi(2));
        }
    }
    total
}

/// Exact MISE of the directional estimator with bandwidth `h` for `n` draws
/// from a vMF with concentration `kappa`. The integrand depends on `x` only
/// through `t = x'mu`, integrated over the angle on the circle and over `t` on the sphere.
pub fn vmf_exact_mise(q: SphereDim, kappa: f64, n: usize, h: f64) -> f64 {
    let kh = 1.0 / (h * h);
    let (lch, lc) = (log_cq(q, kh).unwrap(), log_cq(q, kappa).unwrap());
    let integrand = |t: f64| {
        let f = (lc + kappa * t).exp();
        // E L_h(x, X) = C(kh) C(k) / C(||kh x + k mu||)
        let r = (kh * kh + kappa * kappa + 2.0 * kh * kappa * t)
            .max(0.0)
            .sqrt();
        let mean = (lch + lc - log_cq(q, r).unwrap()).exp();
        // E L_h(x, X)² = C(kh)² C(k) / C(||2 kh x + k mu||)
        let r2 = (4.0 * kh * kh + kappa * kappa + 4.0 * kh * kappa * t)
            .max(0.0)
            .sqrt();
        let second = (2.0 * lch + lc - log_cq(q, r2).unwrap()).exp();
        (second - mean * mean) / n as f64 + (mean - f).powi(2)
    };
    match q.get() {
        1 => {
            let m = 4096;
            let step = 2.0 * PI / m as f64;
            (0..m)
                .map(|k| step * integrand((k as f64 * step).cos()))
                .sum()
        }
        _ => line_rule(-1.0, 1.0, 400, 10)
            .into_iter()
            .map(|(t, w)| 2.0 * PI * w * integrand(t))
            .sum(),
    }
}

pub fn circle_sample(thetas: &[f64], zs: &[f64]) -> DirLinSample {
    DirLinSample::new(
        thetas.iter().map(|&t| UnitVector::from_angle(t)).collect(),
        zs.to_vec(),
    )
    .unwrap()
}

/// Pearson chi-square of `(x, z)` draws against the model density on a grid
/// of direction bins times `z` bins; returns `(statistic, degrees of freedom)`.
pub fn model_chi_square(spec: &ModelSpec, n: usize, seed: u64) -> (f64, usize) {
    let q = spec.q;
    let mut rng = task_rng(seed, 0);
    // z bin edges from an independent pilot draw
    let mut pilot: Vec<f64> = spec.sample(2000, &mut rng).unwrap().zs().to_vec();
    pilot.sort_by(f64::total_cmp);
    let mut edges = vec![-30.0];
    edges.extend(
        [0.2, 0.4, 0.6, 0.8]
            .iter()
            .map(|p| pilot[(p * 2000.0) as usize]),
    );
    edges.push(80.0);
    let dir_bins = 8;
    let dir_edges: Vec<f64> = match q.get() {
        1 => (0..=dir_bins)
            .map(|k| 2.0 * PI * k as f64 / dir_bins as f64)
            .collect(),
        _ => (0..=dir_bins)
            .map(|k| -1.0 + 2.0 * k as f64 / dir_bins as f64)
            .collect(),
    };
    let dir_cell = |x: &[f64]| -> usize {
        let v = match q.get() {
            1 => x[1].atan2(x[0]).rem_euclid(2.0 * PI),
            _ => x[2],
        };
        dir_edges[1..]
            .iter()
            .position(|&e| v < e)
            .unwrap_or(dir_bins - 1)
    };
    let z_cell = |z: f64| {
        edges[1..]
            .iter()
            .position(|&e| z < e)
            .unwrap_or(edges.len() - 2)
    };

    let sample = spec.sample(n, &mut rng).unwrap();
    let nz = edges.len() - 1;
    let mut observed = vec![0.0; dir_bins * nz];
    for (x, &z) in sample.xs().iter().zip(sample.zs()) {
        observed[dir_cell(x.as_slice()) * nz + z_cell(z)] += 1.0;
    }

    let mut expected = vec![0.0; dir_bins * nz];
    let azimuths = 64;
    for d in 0..dir_bins {
        for (v, wv) in line_rule(dir_edges[d], dir_edges[d + 1], 2, 10) {
            let points: Vec<(Vec<f64>, f64)> = match q.get() {
                1 => vec![(vec![v.cos(), v.sin()], wv)],
                _ => {
                    let s = (1.0 - v * v).max(0.0).sqrt();
                    (0..azimuths)
                        .map(|k| {
                            let a = 2.0 * PI * k as f64 / azimuths as f64;
                            (
                                vec![s * a.cos(), s * a.sin(), v],
                                wv * 2.0 * PI / azimuths as f64,
                            )
                        })
                        .collect()
                }
            };
            for (x, wx) in points {
                for b in 0..nz {
                    for (z, wz) in line_rule(edges[b], edges[b + 1], 40, 8) {
                        expected[d * nz + b] += wx * wz * spec.density(&x, z).unwrap();
                    }
                }
            }
        }
    }
    let total: f64 = expected.iter().sum();
    assert!(
        (total - 1.0).abs() < 1e-4,
        "model {} density mass {total}",
        spec.id
    );

    // pool sparse cells
    let (mut stat, mut cells, mut pool_o, mut pool_e) = (0.0, 0, 0.0, 0.0);
    for (o, p) in observed.iter().zip(&expected) {
        let e = p * n as f64;
        if e < 5.0 {
            pool_o += o;
            pool_e += e;
        } else {
            stat += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    (stat, cells - 1)
}

/// Largest entrywise relative change of Ψ*₁ and Ψ*₂ when the rule is refined.
pub fn doubling_change(s: &DirLinSample, pilots: &PilotBandwidths, coarse: usize, h: f64) -> f64 {
    let (r1, r2) = (dir_rule(s.q(), coarse), dir_rule(s.q(), 2 * coarse));
    let bw = BandwidthPair::new(h, 0.5).unwrap();
    let a = MiseSurface::new(s, pilots.clone(), &r1)
        .unwrap()
        .grams(bw)
        .unwrap();
    let b = MiseSurface::new(s, pilots.clone(), &r2)
        .unwrap()
        .grams(bw)
        .unwrap();
    let rel = |x: Vec<f64>, y: Vec<f64>| {
        let top = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.iter()
            .zip(&y)
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
            / top
    };
    let flat = |m: &dirlin::bandwidth::BootstrapGrams, first: bool| -> Vec<f64> {
        if first {
            m.psi1.iter().copied().collect()
        } else {
            m.psi2.iter().copied().collect()
        }
    };
    rel(flat(&a, true), flat(&b, true)).max(rel(flat(&a, false), flat(&b, false)))
}

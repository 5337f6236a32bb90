//! The statistic `T_n` in closed form and its calibrations: permutations,
//! smoothed bootstrap, and two classical circular–linear baselines.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{pilot_bandwidths, select_bandwidths, select_bo, PilotBandwidths, Selector};
use crate::directional::{UnitVector, VonMisesFisher};
use crate::error::{invalid, Error, Result};
use crate::kde::{omega_matrix, psi_matrix, BandwidthPair, DirLinSample};
use crate::numerics::SphereDim;
use crate::rng::task_rng;

/// `Ψ(h)` and `Ω(g)` for one sample.
#[derive(Debug, Clone)]
pub struct GramMatrices {
    pub psi: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub h: f64,
    pub g: f64,
}

pub fn gram_matrices(sample: &DirLinSample, bw: BandwidthPair) -> Result<GramMatrices> {
    sample.require_testable()?;
    BandwidthPair::new(bw.h, bw.g)?;
    Ok(GramMatrices {
        psi: psi_matrix(sample.xs(), bw.h)?,
        omega: omega_matrix(sample.zs(), bw.g)?,
        h: bw.h,
        g: bw.g,
    })
}

/// `1'(Ψ∘Ω/n² - 2ΨΩ/n³ + Ψ11'Ω/n⁴)1`.
pub fn t_statistic(grams: &GramMatrices) -> f64 {
    let n = grams.psi.nrows() as f64;
    let hadamard = grams.psi.dot(&grams.omega);
    // both matrices are symmetric, so 1'ΨΩ1 = (Ψ1)'(Ω1)
    let psi_rows = grams.psi.column_sum();
    let omega_rows = grams.omega.column_sum();
    let product = psi_rows.dot(&omega_rows);
    let rank_one = psi_rows.sum() * omega_rows.sum();
    hadamard / (n * n) - 2.0 * product / (n * n * n) + rank_one / (n * n * n * n)
}

/// `T_n` for `sample` at `bw`.
pub fn statistic(sample: &DirLinSample, bw: BandwidthPair) -> Result<f64> {
    Ok(t_statistic(&gram_matrices(sample, bw)?))
}

/// Evaluates `T_n^σ` from the unpermuted Gram matrices: `Ω^σ_ij = Ω_{σ(i)σ(j)}`,
/// the row sums of `Ω^σ` are the permuted row sums of `Ω`, and the rank-one
/// addend does not change.
pub struct PermutationEngine {
    n: usize,
    psi: Vec<f64>,
    omega: Vec<f64>,
    psi_rows: Vec<f64>,
    omega_rows: Vec<f64>,
    rank_one: f64,
}

impl PermutationEngine {
    pub fn new(grams: &GramMatrices) -> Self {
        let n = grams.psi.nrows();
        let psi_rows: Vec<f64> = grams.psi.column_sum().iter().copied().collect();
        let omega_rows: Vec<f64> = grams.omega.column_sum().iter().copied().collect();
        let rank_one = psi_rows.iter().sum::<f64>() * omega_rows.iter().sum::<f64>();
        PermutationEngine {
            n,
            psi: grams.psi.as_slice().to_vec(),
            omega: grams.omega.as_slice().to_vec(),
            psi_rows,
            omega_rows,
            rank_one,
        }
    }

    pub fn statistic(&self, perm: &[usize]) -> f64 {
        let n = self.n;
        let mut hadamard = 0.0;
        for i in 0..n {
            let (psi_i, omega_i) = (
                &self.psi[i * n..(i + 1) * n],
                &self.omega[perm[i] * n..(perm[i] + 1) * n],
            );
            let mut acc = 0.5 * psi_i[i] * omega_i[perm[i]];
            for j in (i + 1)..n {
                acc += psi_i[j] * omega_i[perm[j]];
            }
            hadamard += 2.0 * acc;
        }
        let product: f64 = (0..n)
            .map(|i| self.psi_rows[i] * self.omega_rows[perm[i]])
            .sum();
        let nf = n as f64;
        hadamard / (nf * nf) - 2.0 * product / (nf * nf * nf) + self.rank_one / (nf * nf * nf * nf)
    }
}

/// Calibration method of a [`TestReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Permutation,
    Bootstrap,
    BaselineR2,
    BaselineU,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "permutation" => Ok(Method::Permutation),
            "bootstrap" => Ok(Method::Bootstrap),
            "baseline-r2" | "r2" => Ok(Method::BaselineR2),
            "baseline-u" | "u" => Ok(Method::BaselineU),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    #[serde(rename = "B")]
    pub resamples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<BandwidthPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selector: Option<Selector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilots: Option<PilotBandwidths>,
    pub seed: u64,
    pub n: usize,
    pub q: SphereDim,
    /// Whether the p-value uses `(#{T <= T*} + 1) / (B + 1)`.
    pub plus_one: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `#{observed <= resampled_b} / B`, or `(# + 1) / (B + 1)` with `plus_one`.
pub fn p_value(observed: f64, resampled: &[f64], plus_one: bool) -> f64 {
    let exceed = resampled.iter().filter(|&&t| observed <= t).count() as f64;
    let b = resampled.len() as f64;
    if plus_one {
        (exceed + 1.0) / (b + 1.0)
    } else {
        exceed / b
    }
}

fn check_resamples(b: usize) -> Result<()> {
    if b == 0 {
        return Err(invalid("the number of resamples B must be at least 1"));
    }
    Ok(())
}

/// Draws one uniform permutation per resample, each from stream `b` of `seed`.
fn permuted_values<F>(n: usize, b: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    (0..b)
        .into_par_iter()
        .map(|k| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut task_rng(seed, k as u64));
            stat(&perm)
        })
        .collect()
}

/// Permutation calibration of `T_n` with fixed bandwidths.
pub fn permutation_test(
    sample: &DirLinSample,
    bw: BandwidthPair,
    resamples: usize,
    seed: u64,
    plus_one: bool,
) -> Result<TestReport> {
    check_resamples(resamples)?;
    let grams = gram_matrices(sample, bw)?;
    let engine = PermutationEngine::new(&grams);
    let observed = t_statistic(&grams);
    let stats = permuted_values(sample.len(), resamples, seed, |p| engine.statistic(p));
    Ok(TestReport {
        statistic: observed,
        p_value: p_value(observed, &stats, plus_one),
        method: Method::Permutation,
        resamples,
        bandwidths: Some(bw),
        selector: Some(Selector::Fixed),
        pilots: None,
        seed,
        n: sample.len(),
        q: sample.q(),
        plus_one,
        warnings: Vec::new(),
    })
}

/// `n` draws from `f̂_{X;h_p} × f̂_{Z;g_p}`: the direction kernel and the
/// linear kernel are centred at independently chosen data points.
pub fn smooth_bootstrap_sample<R: Rng + ?Sized>(
    sample: &DirLinSample,
    pilots: &PilotBandwidths,
    rng: &mut R,
) -> Result<DirLinSample> {
    BandwidthPair::new(pilots.h_p, pilots.g_p)?;
    let n = sample.len();
    let kappa = 1.0 / (pilots.h_p * pilots.h_p);
    let mut xs: Vec<UnitVector> = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        xs.push(VonMisesFisher::new(sample.xs()[i].clone(), kappa)?.sample_one(rng));
        let e: f64 = rng.sample(StandardNormal);
        zs.push(sample.zs()[j] + pilots.g_p * e);
    }
    DirLinSample::new(xs, zs)
}

/// Smoothed-bootstrap calibration: marginal pilots, `(h, g)_bo`, then `B`
/// statistics on resamples from the product of the marginal pilot estimates.
pub fn bootstrap_test(
    sample: &DirLinSample,
    resamples: usize,
    seed: u64,
    plus_one: bool,
) -> Result<TestReport> {
    check_resamples(resamples)?;
    let pilots = pilot_bandwidths(sample)?;
    let bo = select_bo(sample, &pilots)?;
    let bw = bo.bandwidths;
    let observed = statistic(sample, bw)?;
    let stats = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let boot = smooth_bootstrap_sample(sample, &pilots, &mut task_rng(seed, k as u64))?;
            statistic(&boot, bw)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TestReport {
        statistic: observed,
        p_value: p_value(observed, &stats, plus_one),
        method: Method::Bootstrap,
        resamples,
        bandwidths: Some(bw),
        selector: Some(Selector::Bo),
        warnings: pilots.warnings.iter().cloned().chain(bo.warnings).collect(),
        pilots: Some(pilots),
        seed,
        n: sample.len(),
        q: sample.q(),
        plus_one,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > 0.0) || !(sbb > 0.0) {
        return Err(Error::DegenerateData(
            "constant input to a correlation".into(),
        ));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Circular–linear correlation
/// `R² = (r_zc² + r_zs² - 2 r_zc r_zs r_cs) / (1 - r_cs²)`.
pub fn circular_linear_r2(thetas: &[f64], zs: &[f64]) -> Result<f64> {
    let c: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let s: Vec<f64> = thetas.iter().map(|t| t.sin()).collect();
    let (rzc, rzs, rcs) = (
        correlation(zs, &c)?,
        correlation(zs, &s)?,
        correlation(&c, &s)?,
    );
    if (1.0 - rcs * rcs) <= 0.0 {
        return Err(Error::DegenerateData(
            "cosines and sines are collinear".into(),
        ));
    }
    Ok((rzc * rzc + rzs * rzs - 2.0 * rzc * rzs * rcs) / (1.0 - rcs * rcs))
}

/// Average ranks, starting at 1.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let r = 0.5 * ((start + 1) + end) as f64;
        for &k in &idx[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

/// Rank circular–linear statistic `T_c² + T_s²` with uniform scores of the angles.
pub fn rank_circular_linear_u(thetas: &[f64], zs: &[f64]) -> f64 {
    let n = thetas.len() as f64;
    let beta: Vec<f64> = average_ranks(thetas)
        .into_iter()
        .map(|r| 2.0 * PI * r / n)
        .collect();
    rank_u_with_scores(&beta, &average_ranks(zs))
}

fn rank_u_with_scores(beta: &[f64], ranks: &[f64]) -> f64 {
    let (tc, ts) = beta.iter().zip(ranks).fold((0.0, 0.0), |(c, s), (b, r)| {
        (c + r * b.cos(), s + r * b.sin())
    });
    tc * tc + ts * ts
}

fn check_baseline_input(thetas: &[f64], zs: &[f64], resamples: usize) -> Result<()> {
    check_resamples(resamples)?;
    if thetas.len() != zs.len() {
        return Err(invalid(format!(
            "{} angles but {} linear values",
            thetas.len(),
            zs.len()
        )));
    }
    if thetas.len() < 2 {
        return Err(invalid("at least 2 observations are required"));
    }
    Ok(())
}

fn baseline_report(
    statistic: f64,
    stats: &[f64],
    method: Method,
    n: usize,
    seed: u64,
    plus_one: bool,
) -> TestReport {
    TestReport {
        statistic,
        p_value: p_value(statistic, stats, plus_one),
        method,
        resamples: stats.len(),
        bandwidths: None,
        selector: None,
        pilots: None,
        seed,
        n,
        q: SphereDim::CIRCLE,
        plus_one,
        warnings: Vec::new(),
    }
}

/// `R²_n` calibrated by permuting the linear values.
pub fn baseline_r2(
    thetas: &[f64],
    zs: &[f64],
    resamples: usize,
    seed: u64,
    plus_one: bool,
) -> Result<TestReport> {
    check_baseline_input(thetas, zs, resamples)?;
    let observed = circular_linear_r2(thetas, zs)?;
    let stats = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let mut z = zs.to_vec();
            z.shuffle(&mut task_rng(seed, k as u64));
            circular_linear_r2(thetas, &z)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(baseline_report(
        observed,
        &stats,
        Method::BaselineR2,
        zs.len(),
        seed,
        plus_one,
    ))
}

/// `U_n` calibrated by permuting the linear values.
pub fn baseline_rank_u(
    thetas: &[f64],
    zs: &[f64],
    resamples: usize,
    seed: u64,
    plus_one: bool,
) -> Result<TestReport> {
    check_baseline_input(thetas, zs, resamples)?;
    let n = thetas.len() as f64;
    let beta: Vec<f64> = average_ranks(thetas)
        .into_iter()
        .map(|r| 2.0 * PI * r / n)
        .collect();
    let ranks = average_ranks(zs);
    let observed = rank_u_with_scores(&beta, &ranks);
    let stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let mut r = ranks.clone();
            r.shuffle(&mut task_rng(seed, k as u64));
            rank_u_with_scores(&beta, &r)
        })
        .collect();
    Ok(baseline_report(
        observed,
        &stats,
        Method::BaselineU,
        zs.len(),
        seed,
        plus_one,
    ))
}

/// Everything needed to run one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: Method,
    /// Ignored by the bootstrap (always `(h, g)_bo`) and the baselines.
    pub selector: Selector,
    /// Required when `selector` is [`Selector::Fixed`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<BandwidthPair>,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub seed: u64,
    #[serde(default)]
    pub plus_one: bool,
}

/// Runs the configured test on `sample`.
pub fn run_test(sample: &DirLinSample, config: &TestConfig) -> Result<TestReport> {
    sample.require_testable()?;
    let circular = || -> Result<Vec<f64>> {
        if sample.q() != SphereDim::CIRCLE {
            return Err(invalid(
                "the classical baselines need circular data (q = 1)",
            ));
        }
        Ok(sample.xs().iter().map(UnitVector::angle).collect())
    };
    match config.method {
        Method::Permutation => {
            let (bw, selector, pilots, warnings) = match (config.selector, config.bandwidths) {
                (Selector::Fixed, Some(bw)) => (bw, Selector::Fixed, None, Vec::new()),
                (Selector::Fixed, None) => {
                    return Err(invalid("the fixed selector needs explicit bandwidths"))
                }
                (selector, _) => {
                    let s = select_bandwidths(sample, selector)?;
                    (s.bandwidths, selector, s.pilots, s.warnings)
                }
            };
            let mut report =
                permutation_test(sample, bw, config.resamples, config.seed, config.plus_one)?;
            report.selector = Some(selector);
            report.pilots = pilots;
            report.warnings = warnings;
            Ok(report)
        }
        Method::Bootstrap => bootstrap_test(sample, config.resamples, config.seed, config.plus_one),
        Method::BaselineR2 => baseline_r2(
            &circular()?,
            sample.zs(),
            config.resamples,
            config.seed,
            config.plus_one,
        ),
        Method::BaselineU => baseline_rank_u(
            &circular()?,
            sample.zs(),
            config.resamples,
            config.seed,
            config.plus_one,
        ),
    }
}

//! The six directional–linear models M1–M6 and a Monte Carlo harness for
//! size and power tables.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::Selector;
use crate::directional::{UnitVector, VmfMixture, VonMisesFisher};
use crate::error::{invalid, Error, Result};
use crate::independence::{run_test, Method, TestConfig};
use crate::kde::DirLinSample;
use crate::numerics::{normal_pdf, SphereDim};
use crate::rng::{derive_seed, task_rng};

/// One model at one deviation `delta` on `Ω_q`. `delta = 0` is independence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: u8,
    pub delta: f64,
    pub q: SphereDim,
}

fn lognormal_pdf(z: f64, m: f64, s: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let u = (z.ln() - m) / s;
    (-0.5 * u * u).exp() / (z * s * (2.0 * PI).sqrt())
}

fn normal<R: Rng + ?Sized>(rng: &mut R, m: f64, s: f64) -> f64 {
    m + s * rng.sample::<f64, _>(StandardNormal)
}

/// One branch of a conditional law of `Z` given `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch {
    Normal { m: f64, s: f64 },
    LogNormal { m: f64, s: f64 },
}

impl Branch {
    fn pdf(self, z: f64) -> f64 {
        match self {
            Branch::Normal { m, s } => normal_pdf(z, m, s).expect("positive scale"),
            Branch::LogNormal { m, s } => lognormal_pdf(z, m, s),
        }
    }

    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Branch::Normal { m, s } => normal(rng, m, s),
            Branch::LogNormal { m, s } => normal(rng, m, s).exp(),
        }
    }
}

impl ModelSpec {
    pub fn new(id: u8, delta: f64, q: SphereDim) -> Result<Self> {
        if !(1..=6).contains(&id) {
            return Err(invalid(format!("model id must be 1..6, got {id}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid(format!(
                "deviation must be finite and nonnegative, got {delta}"
            )));
        }
        // M5's shape (5 + δ(3x'μ2 - x'μ1))⁻¹ = (5 - 4δ x'μ1)⁻¹ must stay positive
        if id == 5 && delta >= 1.25 {
            return Err(invalid(format!("model 5 needs delta < 1.25, got {delta}")));
        }
        Ok(ModelSpec { id, delta, q })
    }

    /// `(0_q, 1)`.
    fn mu(&self) -> UnitVector {
        UnitVector::north(self.q)
    }

    /// `(-1, 0_q)`.
    fn mu_r(&self) -> UnitVector {
        UnitVector::basis(self.q, 0, -1.0)
    }

    /// Law of the directional component.
    pub fn directional(&self) -> VmfMixture {
        let north = self.mu();
        let south = UnitVector::basis(self.q, self.q.get(), -1.0);
        let vm =
            |mu: &UnitVector, k: f64| VonMisesFisher::new(mu.clone(), k).expect("valid constants");
        let parts = match self.id {
            // M1's mode sits at (1, 0_q), orthogonal to the regression direction μ;
            // with the two aligned the rejection rates of every test drop well
            // below the reference values
            1 => vec![(1.0, vm(&UnitVector::basis(self.q, 0, 1.0), 1.0))],
            4 | 6 => vec![(1.0, vm(&north, 1.0))],
            2 => vec![(1.0, vm(&self.mu_r(), 0.0))],
            3 => vec![(0.75, vm(&north, 2.0)), (0.25, vm(&south, 1.0))],
            5 => vec![(0.5, vm(&north, 2.0)), (0.5, vm(&south, 2.0))],
            _ => unreachable!("validated id"),
        };
        VmfMixture::new(parts).expect("weights sum to one")
    }

    /// Conditional law of `Z` given `x` as weighted branches.
    fn conditional(&self, x: &[f64]) -> Vec<(f64, Branch)> {
        let d = self.delta;
        let t = crate::directional::dot(x, self.mu().as_slice());
        let tr = crate::directional::dot(x, self.mu_r().as_slice());
        match self.id {
            1 => vec![(
                1.0,
                Branch::Normal {
                    m: d * (2.0 + t),
                    s: 1.0,
                },
            )],
            // M2 uses μ = (-1, 0_q)
            2 => vec![(
                1.0,
                Branch::LogNormal {
                    m: d * (1.0 + tr * tr),
                    s: 0.25,
                },
            )],
            // r = 1/4 weighs the normal branch; the log-normal carries 1 - r
            3 => vec![
                (
                    0.75,
                    Branch::LogNormal {
                        m: d * (1.0 + t.powi(3)),
                        s: 0.25,
                    },
                ),
                (0.25, Branch::Normal { m: 1.0, s: 0.25 }),
            ],
            4 => vec![(
                1.0,
                Branch::Normal {
                    m: 0.0,
                    s: 0.25 + d * (1.0 - tr.powi(3)),
                },
            )],
            // 3x'μ2 - x'μ1 = -4 x'μ1 with μ2 = -μ1
            5 => vec![(
                1.0,
                Branch::LogNormal {
                    m: 0.0,
                    s: 1.0 / (5.0 - 4.0 * d * t),
                },
            )],
            // r = 3/4 weighs the normal branch, as in M3
            6 => vec![
                (0.25, Branch::LogNormal { m: 0.0, s: 0.5 }),
                (
                    0.75,
                    Branch::Normal {
                        m: d * (2.0 + tr),
                        s: 0.25 + d * tr * tr,
                    },
                ),
            ],
            _ => unreachable!("validated id"),
        }
    }

    /// Joint density at `(x, z)`.
    pub fn density(&self, x: &[f64], z: f64) -> Result<f64> {
        if x.len() != self.q.ambient() {
            return Err(Error::DimensionMismatch {
                expected: self.q.ambient(),
                found: x.len(),
            });
        }
        let fz: f64 = self.conditional(x).iter().map(|(w, b)| w * b.pdf(z)).sum();
        Ok(self.directional().density(x)? * fz)
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, dir: &VmfMixture, rng: &mut R) -> (UnitVector, f64) {
        let x = dir.sample_one(rng);
        let branches = self.conditional(x.as_slice());
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = branches[branches.len() - 1].1;
        for (w, b) in &branches {
            acc += w;
            if u < acc {
                chosen = *b;
                break;
            }
        }
        let z = chosen.sample(rng);
        (x, z)
    }

    /// `n` draws of `(X, Z)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DirLinSample> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let dir = self.directional();
        let (xs, zs) = (0..n).map(|_| self.sample_pair(&dir, rng)).unzip();
        DirLinSample::new(xs, zs)
    }
}

/// Draws `n` observations from model `spec`.
pub fn model_sample<R: Rng + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<DirLinSample> {
    spec.sample(n, rng)
}

/// Joint density of model `spec` at `(x, z)`.
pub fn model_density(spec: &ModelSpec, x: &UnitVector, z: f64) -> Result<f64> {
    spec.density(x.as_slice(), z)
}

/// A test as compared in the study tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StudyMethod {
    #[serde(rename = "T-LCV")]
    TLcv,
    #[serde(rename = "T-LSCV")]
    TLscv,
    #[serde(rename = "T-BLCV")]
    TBlcv,
    #[serde(rename = "T-boot")]
    TBoot,
    R2,
    U,
}

impl StudyMethod {
    pub const ALL: [StudyMethod; 6] = [
        StudyMethod::TLcv,
        StudyMethod::TLscv,
        StudyMethod::TBlcv,
        StudyMethod::TBoot,
        StudyMethod::R2,
        StudyMethod::U,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyMethod::TLcv => "T-LCV",
            StudyMethod::TLscv => "T-LSCV",
            StudyMethod::TBlcv => "T-BLCV",
            StudyMethod::TBoot => "T-boot",
            StudyMethod::R2 => "R2",
            StudyMethod::U => "U",
        }
    }

    fn index(self) -> u64 {
        StudyMethod::ALL
            .iter()
            .position(|&m| m == self)
            .expect("listed") as u64
    }

    fn test_config(self, resamples: usize, seed: u64, plus_one: bool) -> TestConfig {
        let (method, selector) = match self {
            StudyMethod::TLcv => (Method::Permutation, Selector::Lcv),
            StudyMethod::TLscv => (Method::Permutation, Selector::Lscv),
            StudyMethod::TBlcv => (Method::Permutation, Selector::Blcv),
            StudyMethod::TBoot => (Method::Bootstrap, Selector::Bo),
            StudyMethod::R2 => (Method::BaselineR2, Selector::Fixed),
            StudyMethod::U => (Method::BaselineU, Selector::Fixed),
        };
        TestConfig {
            method,
            selector,
            bandwidths: None,
            resamples,
            seed,
            plus_one,
        }
    }
}

impl std::str::FromStr for StudyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown study method '{s}'")))
    }
}

/// A grid of cells: every model × q × n × method combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// `(model id, delta)` pairs.
    pub models: Vec<(u8, f64)>,
    pub qs: Vec<SphereDim>,
    pub ns: Vec<usize>,
    #[serde(rename = "M")]
    pub replicates: usize,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub alpha: f64,
    pub methods: Vec<StudyMethod>,
    pub seed: u64,
    #[serde(default)]
    pub plus_one: bool,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.resamples == 0 {
            return Err(invalid("M and B must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.models.is_empty()
            || self.qs.is_empty()
            || self.ns.is_empty()
            || self.methods.is_empty()
        {
            return Err(invalid("a study needs at least one model, q, n and method"));
        }
        for &(id, delta) in &self.models {
            for &q in &self.qs {
                ModelSpec::new(id, delta, q)?;
            }
        }
        if let Some(&n) = self.ns.iter().find(|&&n| n < 2) {
            return Err(invalid(format!("sample size must be at least 2, got {n}")));
        }
        if self.qs.iter().any(|&q| q != SphereDim::CIRCLE)
            && self
                .methods
                .iter()
                .any(|m| matches!(m, StudyMethod::R2 | StudyMethod::U))
        {
            return Err(invalid("the R2 and U baselines need q = 1"));
        }
        Ok(())
    }
}

/// One cell of the study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub model: u8,
    pub delta: f64,
    pub q: usize,
    pub n: usize,
    pub method: String,
    pub rejections: usize,
    #[serde(rename = "M")]
    pub replicates: usize,
    pub proportion: f64,
    pub se: f64,
    /// Wall-clock time of the cell; left empty unless timings are requested.
    pub seconds: Option<f64>,
    /// Replicates excluded because the test failed.
    pub failed: usize,
}

/// Seed of the sample used by every method in replicate `rep` of a cell.
fn sample_seed(seed: u64, spec: &ModelSpec, n: usize, rep: usize) -> u64 {
    derive_seed(
        seed,
        &[
            spec.id as u64,
            spec.delta.to_bits(),
            spec.q.get() as u64,
            n as u64,
            rep as u64,
        ],
    )
}

/// Whether replicate `rep` of the cell rejects at level `alpha`.
pub fn run_replicate(
    spec: &ModelSpec,
    n: usize,
    method: StudyMethod,
    config: &StudyConfig,
    rep: usize,
) -> Result<bool> {
    let s = sample_seed(config.seed, spec, n, rep);
    let sample = spec.sample(n, &mut task_rng(s, 0))?;
    let test = method.test_config(
        config.resamples,
        derive_seed(s, &[method.index()]),
        config.plus_one,
    );
    Ok(run_test(&sample, &test)?.p_value <= config.alpha)
}

/// Runs every cell of `config`. Rows come out in the order models × qs × ns × methods.
pub fn run_study(config: &StudyConfig, timings: bool) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &(id, delta) in &config.models {
        for &q in &config.qs {
            let spec = ModelSpec::new(id, delta, q)?;
            for &n in &config.ns {
                for &method in &config.methods {
                    let start = Instant::now();
                    let outcomes: Vec<Result<bool>> = (0..config.replicates)
                        .into_par_iter()
                        .map(|rep| run_replicate(&spec, n, method, config, rep))
                        .collect();
                    let mut rejections = 0;
                    let mut failed = 0;
                    for o in &outcomes {
                        match o {
                            Ok(true) => rejections += 1,
                            Ok(false) => {}
                            Err(e) => {
                                log::warn!("model {id} delta {delta} q {q} n {n} {}: replicate failed: {e}", method.name());
                                failed += 1;
                            }
                        }
                    }
                    let used = config.replicates - failed;
                    let proportion = if used > 0 {
                        rejections as f64 / used as f64
                    } else {
                        f64::NAN
                    };
                    let se = if used > 0 {
                        (proportion * (1.0 - proportion) / used as f64).sqrt()
                    } else {
                        f64::NAN
                    };
                    rows.push(StudyRow {
                        model: id,
                        delta,
                        q: q.get(),
                        n,
                        method: method.name().to_string(),
                        rejections,
                        replicates: config.replicates,
                        proportion,
                        se,
                        seconds: timings.then(|| start.elapsed().as_secs_f64()),
                        failed,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Runs several study grids and concatenates their rows.
pub fn run_plan(plan: &[StudyConfig], timings: bool) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for config in plan {
        rows.extend(run_study(config, timings)?);
    }
    Ok(rows)
}

/// The reduced grid behind the desk-scale size/power checks.
pub fn table1_desk(seed: u64) -> Vec<StudyConfig> {
    let cell =
        |model: (u8, f64), q: SphereDim, n: usize, replicates: usize, methods: Vec<StudyMethod>| {
            StudyConfig {
                models: vec![model],
                qs: vec![q],
                ns: vec![n],
                replicates,
                resamples: 199,
                alpha: 0.05,
                methods,
                seed,
                plus_one: false,
            }
        };
    vec![
        cell(
            (1, 0.0),
            SphereDim::CIRCLE,
            50,
            200,
            vec![StudyMethod::TLcv],
        ),
        cell(
            (3, 0.5),
            SphereDim::CIRCLE,
            100,
            100,
            vec![StudyMethod::TLcv],
        ),
        cell(
            (2, 0.5),
            SphereDim::CIRCLE,
            100,
            100,
            vec![StudyMethod::R2, StudyMethod::TLcv],
        ),
        cell(
            (1, 0.5),
            SphereDim::SPHERE,
            100,
            100,
            vec![StudyMethod::TLcv],
        ),
        cell(
            (3, 0.0),
            SphereDim::CIRCLE,
            50,
            200,
            vec![StudyMethod::TBoot],
        ),
    ]
}

/// Serializes study rows as CSV.
pub fn write_study_csv<W: std::io::Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Lower and upper ends of the central binomial band of probability `level`
/// for the proportion of successes in `m` trials with success probability `p`.
pub fn binomial_band(m: usize, p: f64, level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    let pmf = |k: usize| -> f64 {
        let ln = statrs::function::factorial::ln_binomial(m as u64, k as u64)
            + k as f64 * p.ln()
            + (m - k) as f64 * (1.0 - p).ln();
        ln.exp()
    };
    let (mut lo, mut acc) = (0, 0.0);
    while lo <= m {
        acc += pmf(lo);
        if acc > tail {
            break;
        }
        lo += 1;
    }
    let (mut hi, mut acc) = (m, 0.0);
    loop {
        acc += pmf(hi);
        if acc > tail || hi == 0 {
            break;
        }
        hi -= 1;
    }
    (lo as f64 / m as f64, hi as f64 / m as f64)
}

//! Bandwidth search: a log-spaced grid followed by Nelder–Mead refinement in
//! `(ln h, ln g)`.

use log::warn;

use crate::error::{Error, Result};
use crate::kde::BandwidthPair;

/// Largest directional bandwidth considered. Beyond it the von Mises kernel is
/// flat to within `1e-3` relative density variation.
pub const H_MAX: f64 = 5.0;

const GRID_POINTS: usize = 20;
const MAX_WIDENINGS: usize = 2;
const MAX_SIMPLEX_EVALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub h: (f64, f64),
    pub g: (f64, f64),
}

impl SearchBox {
    /// `[0.05, 5] x [0.05 s, 5 s]` for a linear scale `s`.
    pub fn standard(linear_scale: f64) -> Self {
        SearchBox {
            h: (0.05, H_MAX),
            g: (0.05 * linear_scale, 5.0 * linear_scale),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub bandwidths: BandwidthPair,
    pub value: f64,
    /// Box actually searched after any widening.
    pub search_box: SearchBox,
    pub warnings: Vec<String>,
}

fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Maximizes `objective(h, g)`.
///
/// Points where the objective is not finite, or fails with
/// [`Error::NonFiniteObjective`], are skipped. Grid ties go to the smallest `h`,
/// then the smallest `g`. When the grid winner sits on the box boundary the
/// box is widened on that side (never above [`H_MAX`] in `h`) and a warning is recorded.
pub fn maximize<F>(mut objective: F, start: SearchBox) -> Result<Optimum>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut eval = |h: f64, g: f64| -> Result<Option<f64>> {
        match objective(h, g) {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(_) | Err(Error::NonFiniteObjective) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut bx = start;
    let mut warnings = Vec::new();
    let mut widenings = 0;
    let (best_h, best_g, best_v, hs, gs) = loop {
        let hs = log_space(bx.h.0, bx.h.1, GRID_POINTS);
        let gs = log_space(bx.g.0, bx.g.1, GRID_POINTS);
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, &h) in hs.iter().enumerate() {
            for (j, &g) in gs.iter().enumerate() {
                if let Some(v) = eval(h, g)? {
                    if best.is_none_or(|(_, _, b)| v > b) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let Some((i, j, v)) = best else {
            return Err(Error::NonFiniteObjective);
        };
        let last = GRID_POINTS - 1;
        let mut widened = false;
        if widenings < MAX_WIDENINGS {
            let h_span = bx.h.1 / bx.h.0;
            let g_span = bx.g.1 / bx.g.0;
            if i == 0 {
                bx.h.0 /= h_span.sqrt();
                widened = true;
            } else if i == last && bx.h.1 < H_MAX {
                bx.h.1 = (bx.h.1 * h_span.sqrt()).min(H_MAX);
                widened = true;
            }
            if j == 0 {
                bx.g.0 /= g_span.sqrt();
                widened = true;
            } else if j == last {
                bx.g.1 *= g_span.sqrt();
                widened = true;
            }
        }
        if widened {
            widenings += 1;
            let msg = format!(
                "grid optimum (h={:.4e}, g={:.4e}) on the search boundary; widened to h in [{:.3e}, {:.3e}], g in [{:.3e}, {:.3e}]",
                hs[i], gs[j], bx.h.0, bx.h.1, bx.g.0, bx.g.1
            );
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        if i == 0 || j == 0 || j == last || (i == last && bx.h.1 < H_MAX) {
            let msg = format!(
                "optimum (h={:.4e}, g={:.4e}) remains on the search boundary",
                hs[i], gs[j]
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        break (hs[i], gs[j], v, hs, gs);
    };

    // simplex in log coordinates, started one grid step away along each axis
    let lo = [bx.h.0.ln(), bx.g.0.ln()];
    let hi = [bx.h.1.ln(), bx.g.1.ln()];
    let step = [(hs[1] / hs[0]).ln(), (gs[1] / gs[0]).ln()];
    let clamp = |p: [f64; 2]| [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
    let mut cost = |p: [f64; 2]| -> Result<f64> {
        Ok(eval(p[0].exp(), p[1].exp())?
            .map(|v| -v)
            .unwrap_or(f64::INFINITY))
    };
    let x0 = [best_h.ln(), best_g.ln()];
    let vertex = |axis: usize| {
        let mut p = x0;
        p[axis] += step[axis];
        if p[axis] > hi[axis] {
            p[axis] = x0[axis] - step[axis];
        }
        clamp(p)
    };
    let (v1, v2) = (vertex(0), vertex(1));
    let mut simplex = [(x0, -best_v), (v1, cost(v1)?), (v2, cost(v2)?)];
    let mut evals = 2;
    while evals < MAX_SIMPLEX_EVALS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0], simplex[2]);
        let spread = (worst.1 - best.1).abs();
        let diameter = simplex
            .iter()
            .map(|(p, _)| (p[0] - best.0[0]).abs().max((p[1] - best.0[1]).abs()))
            .fold(0.0, f64::max);
        if diameter < 1e-7
            || (spread.is_finite() && spread <= 1e-12 * (1.0 + best.1.abs()) && diameter < 1e-4)
        {
            break;
        }
        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let along = |t: f64| {
            clamp([
                centroid[0] + t * (worst.0[0] - centroid[0]),
                centroid[1] + t * (worst.0[1] - centroid[1]),
            ])
        };
        let reflected = along(-1.0);
        let fr = cost(reflected)?;
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = cost(expanded)?;
            evals += 1;
            simplex[2] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = cost(contracted)?;
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                for k in 1..3 {
                    let p = [
                        best.0[0] + 0.5 * (simplex[k].0[0] - best.0[0]),
                        best.0[1] + 0.5 * (simplex[k].0[1] - best.0[1]),
                    ];
                    simplex[k] = (p, cost(p)?);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, f) = simplex[0];
    let (h, g, value) = if f <= -best_v {
        (p[0].exp(), p[1].exp(), -f)
    } else {
        (best_h, best_g, best_v)
    };
    Ok(Optimum {
        bandwidths: BandwidthPair::new(h, g)?,
        value,
        search_box: bx,
        warnings,
    })
}

/// Minimizes `objective(h, g)`; see [`maximize`].
pub fn minimize<F>(mut objective: F, start: SearchBox) -> Result<Optimum>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let mut opt = maximize(|h, g| objective(h, g).map(|v| -v), start)?;
    opt.value = -opt.value;
    Ok(opt)
}

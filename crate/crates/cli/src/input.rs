//! Sample CSVs: `theta,z`, `theta,phi,z` (axial angles), or `x1,..,x{q+1},z`.

use std::f64::consts::PI;
use std::path::Path;

use dirlin::directional::{encode_axial, AxialOrientation, UnitVector};
use dirlin::kde::DirLinSample;
use dirlin::Error;

/// Norm deviations up to this are normalized silently.
const SILENT_TOL: f64 = 1e-6;
/// Beyond this a row is rejected.
const REJECT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Angle,
    Axial,
    Vector(usize),
}

fn layout(header: &csv::StringRecord, path: &str) -> Result<Layout, Error> {
    let cols: Vec<&str> = header.iter().collect();
    let bad = || Error::Schema {
        path: path.to_string(),
        line: 1,
        message: format!(
            "header '{}' is none of 'theta,z', 'theta,phi,z', 'x1,..,xk,z'",
            cols.join(",")
        ),
    };
    match cols.as_slice() {
        ["theta", "z"] => Ok(Layout::Angle),
        ["theta", "phi", "z"] => Ok(Layout::Axial),
        [xs @ .., "z"] if xs.len() >= 2 => {
            let numbered = xs
                .iter()
                .enumerate()
                .all(|(i, c)| *c == format!("x{}", i + 1));
            if numbered {
                Ok(Layout::Vector(xs.len()))
            } else {
                Err(bad())
            }
        }
        _ => Err(bad()),
    }
}

/// Reads a sample, returning it with any normalization warnings.
pub fn read_sample(path: &Path) -> Result<(DirLinSample, Vec<String>), Error> {
    let label = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let layout = layout(rdr.headers()?, &label)?;
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    let mut warnings = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Schema {
            path: label.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let schema = |message: String| Error::Schema {
            path: label.clone(),
            line,
            message,
        };
        let values = rec
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(schema(format!("'{s}' is not a finite number"))),
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        let (z, dir) = values.split_last().expect("header has a z column");
        let x = match layout {
            Layout::Angle => UnitVector::from_angle(dir[0]),
            Layout::Axial => {
                let theta = dir[0].rem_euclid(PI);
                let a = AxialOrientation::spatial(if theta < PI { theta } else { 0.0 }, dir[1])
                    .map_err(|e| schema(e.to_string()))?;
                encode_axial(&a)
            }
            Layout::Vector(_) => {
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dev = (norm - 1.0).abs();
                if dev > REJECT_TOL {
                    return Err(schema(format!("vector norm {norm} is not 1")));
                }
                if dev > SILENT_TOL {
                    let msg = format!("{label}: line {line}: normalized a vector of norm {norm}");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                UnitVector::normalize(dir.to_vec()).map_err(|e| schema(e.to_string()))?
            }
        };
        xs.push(x);
        zs.push(*z);
    }
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok((DirLinSample::new(xs, zs)?, warnings))
}

//! Fire-perimeter pipeline: vertex CSV in, perimeter orientations, per-watershed
//! independence tests with a Benjamini–Yekutieli adjustment, plot-ready CSVs out.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::Selector;
use crate::directional::{encode_axial, pca_orientation, AxialOrientation, UnitVector};
use crate::error::{invalid, Error, Result};
use crate::independence::{run_test, Method, TestConfig};
use crate::kde::DirLinSample;
use crate::numerics::SphereDim;
use crate::rng::derive_seed;
use crate::simulation::ModelSpec;

/// One perimeter. Vertices are `(lon, lat)` or `(lon, lat, alt)`, ordered by vertex index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireRecord {
    pub fire_id: String,
    pub watershed_id: String,
    pub vertices: Vec<Vertex>,
    /// Hectares.
    pub burnt_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub lon: f64,
    pub lat: f64,
    pub alt: Option<f64>,
}

impl FireRecord {
    pub fn has_altitude(&self) -> bool {
        self.vertices.iter().all(|v| v.alt.is_some())
    }

    /// The perimeter as points in the plane or in space.
    fn points(&self, dims: u8) -> Option<Vec<Vec<f64>>> {
        match dims {
            2 => Some(self.vertices.iter().map(|v| vec![v.lon, v.lat]).collect()),
            _ => self
                .vertices
                .iter()
                .map(|v| v.alt.map(|a| vec![v.lon, v.lat, a]))
                .collect(),
        }
    }
}

/// Loaded fires plus the count of fires dropped for each reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireSet {
    pub fires: Vec<FireRecord>,
    pub rows: usize,
    pub input_fires: usize,
    pub skipped_too_few_vertices: usize,
    pub skipped_nonpositive_area: usize,
}

#[derive(Debug, Deserialize)]
struct VertexRow {
    fire_id: String,
    watershed_id: String,
    vertex_index: i64,
    lon: f64,
    lat: f64,
    alt: Option<f64>,
    burnt_area_ha: f64,
}

const HEADER: [&str; 7] = [
    "fire_id",
    "watershed_id",
    "vertex_index",
    "lon",
    "lat",
    "alt",
    "burnt_area_ha",
];

/// Reads the vertex CSV at `path`.
pub fn load_fires(path: &Path) -> Result<FireSet> {
    read_fires(File::open(path)?, &path.display().to_string())
}

/// Reads vertex CSV from `reader`; `label` names the source in schema errors.
pub fn read_fires<R: Read>(reader: R, label: &str) -> Result<FireSet> {
    let schema = |line: u64, message: String| Error::Schema {
        path: label.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(schema(1, format!("expected header '{}'", HEADER.join(","))));
    }

    struct Building {
        watershed_id: String,
        area: f64,
        vertices: BTreeMap<i64, Vertex>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, Building> = HashMap::new();
    let mut rows = 0;
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: VertexRow = record
            .deserialize(Some(&header))
            .map_err(|e| schema(line, e.to_string()))?;
        rows += 1;
        let coords = [
            Some(row.lon),
            Some(row.lat),
            row.alt,
            Some(row.burnt_area_ha),
        ];
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(schema(line, "non-finite number".into()));
        }
        let vertex = Vertex {
            lon: row.lon,
            lat: row.lat,
            alt: row.alt,
        };
        match by_id.get_mut(&row.fire_id) {
            Some(b) => {
                if b.watershed_id != row.watershed_id {
                    return Err(schema(
                        line,
                        format!(
                            "fire '{}' is assigned to watersheds '{}' and '{}'",
                            row.fire_id, b.watershed_id, row.watershed_id
                        ),
                    ));
                }
                if b.area != row.burnt_area_ha {
                    return Err(schema(
                        line,
                        format!(
                            "fire '{}' has burnt areas {} and {}",
                            row.fire_id, b.area, row.burnt_area_ha
                        ),
                    ));
                }
                if b.vertices.insert(row.vertex_index, vertex).is_some() {
                    return Err(schema(
                        line,
                        format!(
                            "duplicate vertex {} of fire '{}'",
                            row.vertex_index, row.fire_id
                        ),
                    ));
                }
            }
            None => {
                order.push(row.fire_id.clone());
                by_id.insert(
                    row.fire_id,
                    Building {
                        watershed_id: row.watershed_id,
                        area: row.burnt_area_ha,
                        vertices: BTreeMap::from([(row.vertex_index, vertex)]),
                    },
                );
            }
        }
    }

    let mut set = FireSet {
        fires: Vec::new(),
        rows,
        input_fires: order.len(),
        skipped_too_few_vertices: 0,
        skipped_nonpositive_area: 0,
    };
    for id in order {
        let b = by_id.remove(&id).expect("collected above");
        if b.vertices.len() < 3 {
            log::warn!("fire '{id}' has {} vertices; skipped", b.vertices.len());
            set.skipped_too_few_vertices += 1;
        } else if b.area <= 0.0 {
            log::warn!("fire '{id}' has burnt area {}; skipped", b.area);
            set.skipped_nonpositive_area += 1;
        } else {
            set.fires.push(FireRecord {
                fire_id: id,
                watershed_id: b.watershed_id,
                vertices: b.vertices.into_values().collect(),
                burnt_area: b.area,
            });
        }
    }
    Ok(set)
}

/// Writes fires in the vertex CSV format read by [`read_fires`].
pub fn write_fires<W: Write>(fires: &[FireRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for f in fires {
        for (k, v) in f.vertices.iter().enumerate() {
            w.write_record([
                f.fire_id.clone(),
                f.watershed_id.clone(),
                k.to_string(),
                v.lon.to_string(),
                v.lat.to_string(),
                v.alt.map(|a| a.to_string()).unwrap_or_default(),
                f.burnt_area.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Orientation–size sample of a set of fires.
#[derive(Debug, Clone)]
pub struct OrientationSample {
    pub sample: DirLinSample,
    /// Fire ids in sample order.
    pub fire_ids: Vec<String>,
    pub orientations: Vec<AxialOrientation>,
    pub excluded_degenerate: usize,
    /// Fires without altitude on every vertex (3-D only).
    pub excluded_missing_altitude: usize,
}

fn check_dims(dims: u8) -> Result<()> {
    if dims == 2 || dims == 3 {
        Ok(())
    } else {
        Err(invalid(format!(
            "orientation dimension must be 2 or 3, got {dims}"
        )))
    }
}

/// PC1 axis of each perimeter, axially encoded on the circle (`dims = 2`) or
/// the sphere (`dims = 3`), paired with the log burnt area.
pub fn build_orientation_sample(fires: &[&FireRecord], dims: u8) -> Result<OrientationSample> {
    check_dims(dims)?;
    if fires.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut out = OrientationSample {
        sample: DirLinSample::new(vec![UnitVector::from_angle(0.0)], vec![0.0])?,
        fire_ids: Vec::new(),
        orientations: Vec::new(),
        excluded_degenerate: 0,
        excluded_missing_altitude: 0,
    };
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for f in fires {
        let Some(points) = f.points(dims) else {
            out.excluded_missing_altitude += 1;
            continue;
        };
        match pca_orientation(&points) {
            Ok(o) => {
                xs.push(encode_axial(&o));
                zs.push(f.burnt_area.ln());
                out.fire_ids.push(f.fire_id.clone());
                out.orientations.push(o);
            }
            Err(Error::DegenerateOrientation) => out.excluded_degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    if xs.is_empty() {
        return Err(Error::DegenerateData(format!(
            "none of {} fires has a usable {dims}-D orientation",
            fires.len()
        )));
    }
    out.sample = DirLinSample::new(xs, zs)?;
    Ok(out)
}

/// Benjamini–Yekutieli step-up adjustment: `min_{k>=i} min(1, m c(m) p_(k) / k)`
/// with `c(m) = Σ 1/i`, returned in the input order.
pub fn by_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    if m == 0 {
        return Vec::new();
    }
    let c: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &i) in idx.iter().enumerate().rev() {
        running = running.min(m as f64 * c * p[i] / (rank + 1) as f64);
        adjusted[i] = running.min(1.0).max(p[i]);
    }
    adjusted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WildfireConfig {
    /// Orientation dimensions to analyze, each 2 or 3.
    pub dims: Vec<u8>,
    pub selector: Selector,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub min_fires: usize,
    /// Also test the pooled sample of all fires.
    pub global_test: bool,
    /// Selector of the pooled test. Pooled samples are large, where the
    /// bootstrap selectors' quadrature dominates the run time.
    pub global_selector: Selector,
    #[serde(default)]
    pub plus_one: bool,
}

impl Default for WildfireConfig {
    fn default() -> Self {
        WildfireConfig {
            dims: vec![2, 3],
            selector: Selector::Blcv,
            resamples: 1000,
            alpha: 0.05,
            seed: 0,
            min_fires: 25,
            global_test: true,
            global_selector: Selector::Lcv,
            plus_one: false,
        }
    }
}

impl WildfireConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(invalid("at least one orientation dimension is needed"));
        }
        for &d in &self.dims {
            check_dims(d)?;
        }
        if self.resamples == 0 {
            return Err(invalid("B must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.min_fires < 3 {
            return Err(invalid("the fire-count threshold must be at least 3"));
        }
        Ok(())
    }

    fn test_config(&self, selector: Selector, seed: u64) -> TestConfig {
        TestConfig {
            method: Method::Permutation,
            selector,
            bandwidths: None,
            resamples: self.resamples,
            seed,
            plus_one: self.plus_one,
        }
    }
}

/// Test outcome for one watershed. Fields for an unanalyzed dimension are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatershedResult {
    pub watershed_id: String,
    pub n_fires: usize,
    pub n_circular: Option<usize>,
    pub p_circular: Option<f64>,
    pub adjusted_p_circular: Option<f64>,
    pub rejected_circular: Option<bool>,
    pub n_spherical: Option<usize>,
    pub p_spherical: Option<f64>,
    pub adjusted_p_spherical: Option<f64>,
    pub rejected_spherical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedWatershed {
    pub watershed_id: String,
    pub n_fires: usize,
}

/// Pooled and combined evidence for one orientation dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary {
    pub dims: u8,
    /// Smallest BY-adjusted watershed p-value.
    pub combined_p: Option<f64>,
    pub rejections: usize,
    /// Permutation p-value of the pooled sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_n: Option<usize>,
    /// Why the pooled test was not run, when requested but skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_skipped: Option<String>,
}

/// Largest pooled sample tested; its n x n Gram matrices are held in memory.
pub const MAX_POOLED: usize = 5000;

/// `(φ, log area)` of one fire, for slope-versus-size scatter plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub fire_id: String,
    pub watershed_id: String,
    pub phi: f64,
    pub log_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WildfireAnalysis {
    pub config: WildfireConfig,
    /// Ordered by watershed id.
    pub results: Vec<WatershedResult>,
    pub excluded_watersheds: Vec<ExcludedWatershed>,
    pub global: Vec<GlobalSummary>,
    /// Fires dropped from each dimension's samples: `(dims, degenerate, missing altitude)`.
    pub excluded_fires: Vec<(u8, usize, usize)>,
    #[serde(skip)]
    pub scatter: Vec<ScatterPoint>,
}

/// FNV-1a, so each watershed's seed depends only on its id.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Per-watershed tests for every configured dimension, BY adjustment across
/// watersheds, and the global summaries.
pub fn watershed_analysis(
    fires: &[FireRecord],
    config: &WildfireConfig,
) -> Result<WildfireAnalysis> {
    config.validate()?;
    if fires.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut groups: BTreeMap<&str, Vec<&FireRecord>> = BTreeMap::new();
    for f in fires {
        groups.entry(f.watershed_id.as_str()).or_default().push(f);
    }
    let (kept, small): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .partition(|(_, g)| g.len() >= config.min_fires);
    let excluded_watersheds = small
        .iter()
        .map(|(id, g)| ExcludedWatershed {
            watershed_id: id.to_string(),
            n_fires: g.len(),
        })
        .collect();

    let mut results: Vec<WatershedResult> = kept
        .iter()
        .map(|(id, g)| WatershedResult {
            watershed_id: id.to_string(),
            n_fires: g.len(),
            n_circular: None,
            p_circular: None,
            adjusted_p_circular: None,
            rejected_circular: None,
            n_spherical: None,
            p_spherical: None,
            adjusted_p_spherical: None,
            rejected_spherical: None,
        })
        .collect();

    let mut global = Vec::new();
    let mut excluded_fires = Vec::new();
    for &dims in &config.dims {
        let tested: Vec<(usize, f64, usize, usize)> = kept
            .par_iter()
            .map(|(id, g)| -> Result<_> {
                let os = build_orientation_sample(g, dims)?;
                let seed = derive_seed(config.seed, &[stable_hash(id), dims as u64]);
                let report = run_test(&os.sample, &config.test_config(config.selector, seed))?;
                Ok((
                    os.sample.len(),
                    report.p_value,
                    os.excluded_degenerate,
                    os.excluded_missing_altitude,
                ))
            })
            .collect::<Result<_>>()?;
        let raw: Vec<f64> = tested.iter().map(|t| t.1).collect();
        let adjusted = by_adjust(&raw);
        let mut rejections = 0;
        for (r, ((n, p, _, _), adj)) in results.iter_mut().zip(tested.iter().zip(&adjusted)) {
            let rejected = *adj <= config.alpha;
            rejections += rejected as usize;
            if dims == 2 {
                (r.n_circular, r.p_circular) = (Some(*n), Some(*p));
                (r.adjusted_p_circular, r.rejected_circular) = (Some(*adj), Some(rejected));
            } else {
                (r.n_spherical, r.p_spherical) = (Some(*n), Some(*p));
                (r.adjusted_p_spherical, r.rejected_spherical) = (Some(*adj), Some(rejected));
            }
        }

        let all: Vec<&FireRecord> = fires.iter().collect();
        let pooled = build_orientation_sample(&all, dims)?;
        excluded_fires.push((
            dims,
            pooled.excluded_degenerate,
            pooled.excluded_missing_altitude,
        ));
        let n_pooled = pooled.sample.len();
        let (pooled_p, pooled_n, pooled_skipped) = if !config.global_test {
            (None, None, None)
        } else if n_pooled > MAX_POOLED {
            let why = format!("pooled sample of {n_pooled} fires exceeds {MAX_POOLED}");
            log::warn!("{why}; pooled test skipped");
            (None, None, Some(why))
        } else {
            let seed = derive_seed(config.seed, &[u64::MAX, dims as u64]);
            let report = run_test(
                &pooled.sample,
                &config.test_config(config.global_selector, seed),
            )?;
            (Some(report.p_value), Some(n_pooled), None)
        };
        global.push(GlobalSummary {
            dims,
            combined_p: adjusted.iter().copied().reduce(f64::min),
            rejections,
            pooled_p,
            pooled_n,
            pooled_skipped,
        });
    }

    Ok(WildfireAnalysis {
        config: config.clone(),
        results,
        excluded_watersheds,
        global,
        excluded_fires,
        scatter: scatter_points(fires),
    })
}

/// `(φ, log area)` for every fire with a usable 3-D orientation.
pub fn scatter_points(fires: &[FireRecord]) -> Vec<ScatterPoint> {
    fires
        .iter()
        .filter_map(|f| {
            let o = pca_orientation(&f.points(3)?).ok()?;
            Some(ScatterPoint {
                fire_id: f.fire_id.clone(),
                watershed_id: f.watershed_id.clone(),
                phi: o.phi()?,
                log_area: f.burnt_area.ln(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ChoroplethRow<'a> {
    watershed_id: &'a str,
    dims: u8,
    p_value: f64,
    adjusted_p: f64,
}

/// Paths written by [`emit_reports`].
pub const REPORT_FILES: [&str; 4] = [
    "watersheds.csv",
    "manifest.json",
    "choropleth.csv",
    "scatter.csv",
];

/// Writes `watersheds.csv`, `manifest.json`, `choropleth.csv` (long format, one
/// row per watershed and dimension) and `scatter.csv` into `out_dir`.
pub fn emit_reports(
    analysis: &WildfireAnalysis,
    load: Option<&FireSet>,
    out_dir: &Path,
) -> Result<()> {
    if analysis.results.is_empty() {
        return Err(invalid("no watershed reached the fire-count threshold"));
    }
    std::fs::create_dir_all(out_dir)?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(out_dir.join(name))?))
    };

    let mut w = csv::Writer::from_writer(create(REPORT_FILES[0])?);
    for r in &analysis.results {
        w.serialize(r)?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Manifest<'a> {
        config: &'a WildfireConfig,
        seed: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        input: Option<InputSummary>,
        excluded_watersheds: &'a [ExcludedWatershed],
        excluded_fires: Vec<ExcludedFires>,
        global: &'a [GlobalSummary],
    }
    #[derive(Serialize)]
    struct InputSummary {
        rows: usize,
        input_fires: usize,
        loaded_fires: usize,
        skipped_too_few_vertices: usize,
        skipped_nonpositive_area: usize,
    }
    #[derive(Serialize)]
    struct ExcludedFires {
        dims: u8,
        degenerate_orientation: usize,
        missing_altitude: usize,
    }
    let manifest = Manifest {
        config: &analysis.config,
        seed: analysis.config.seed,
        input: load.map(|s| InputSummary {
            rows: s.rows,
            input_fires: s.input_fires,
            loaded_fires: s.fires.len(),
            skipped_too_few_vertices: s.skipped_too_few_vertices,
            skipped_nonpositive_area: s.skipped_nonpositive_area,
        }),
        excluded_watersheds: &analysis.excluded_watersheds,
        excluded_fires: analysis
            .excluded_fires
            .iter()
            .map(|&(dims, d, m)| ExcludedFires {
                dims,
                degenerate_orientation: d,
                missing_altitude: m,
            })
            .collect(),
        global: &analysis.global,
    };
    let mut m = create(REPORT_FILES[1])?;
    serde_json::to_writer_pretty(&mut m, &manifest)?;
    m.write_all(b"\n")?;
    m.flush()?;

    let mut w = csv::Writer::from_writer(create(REPORT_FILES[2])?);
    for r in &analysis.results {
        for (dims, p, adj) in [
            (2, r.p_circular, r.adjusted_p_circular),
            (3, r.p_spherical, r.adjusted_p_spherical),
        ] {
            if let (Some(p_value), Some(adjusted_p)) = (p, adj) {
                w.serialize(ChoroplethRow {
                    watershed_id: &r.watershed_id,
                    dims,
                    p_value,
                    adjusted_p,
                })?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(REPORT_FILES[3])?);
    for s in &analysis.scatter {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Layout of a synthetic atlas: watersheds whose orientation–size pairs follow
/// model 3 at deviation `delta` (dependent) or 0 (independent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAtlas {
    pub dependent: usize,
    pub independent: usize,
    pub fires_per_watershed: usize,
    pub delta: f64,
    pub vertices_per_fire: usize,
}

impl Default for SyntheticAtlas {
    fn default() -> Self {
        SyntheticAtlas {
            dependent: 3,
            independent: 7,
            fires_per_watershed: 100,
            delta: 0.5,
            vertices_per_fire: 12,
        }
    }
}

/// Elliptical perimeters whose doubled major-axis angle and log area are a draw
/// from model 3; altitude rises along the major axis at a random slope of up to 45°.
/// Watershed ids are `W00`, `W01`, ...; the dependent ones come first.
pub fn synthetic_fires<R: Rng + ?Sized>(
    atlas: &SyntheticAtlas,
    rng: &mut R,
) -> Result<Vec<FireRecord>> {
    if atlas.vertices_per_fire < 3 {
        return Err(invalid("a perimeter needs at least 3 vertices"));
    }
    let dependent = ModelSpec::new(3, atlas.delta, SphereDim::CIRCLE)?;
    let independent = ModelSpec::new(3, 0.0, SphereDim::CIRCLE)?;
    let mut fires = Vec::new();
    for w in 0..atlas.dependent + atlas.independent {
        let spec = if w < atlas.dependent {
            dependent
        } else {
            independent
        };
        let dir = spec.directional();
        let (cx, cy) = (w as f64, 40.0 + 0.1 * w as f64);
        for k in 0..atlas.fires_per_watershed {
            let (x, z) = spec.sample_pair(&dir, rng);
            let theta = 0.5 * x.angle();
            let (ox, oy) = (
                cx + rng.random::<f64>() * 0.5,
                cy + rng.random::<f64>() * 0.5,
            );
            let (a, b) = (0.01 * (1.5 + rng.random::<f64>()), 0.005);
            // terrain slope along the major axis, in altitude units per coordinate unit
            let slope = (rng.random::<f64>() * PI / 4.0).tan();
            let vertices = (0..atlas.vertices_per_fire)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / atlas.vertices_per_fire as f64;
                    let (u, v) = (a * t.cos(), b * t.sin());
                    Vertex {
                        lon: ox + u * theta.cos() - v * theta.sin(),
                        lat: oy + u * theta.sin() + v * theta.cos(),
                        alt: Some(0.5 + slope * u),
                    }
                })
                .collect();
            fires.push(FireRecord {
                fire_id: format!("F{w:02}-{k:04}"),
                watershed_id: format!("W{w:02}"),
                vertices,
                burnt_area: z.exp(),
            });
        }
    }
    Ok(fires)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;

    const HEAD: &str = "fire_id,watershed_id,vertex_index,lon,lat,alt,burnt_area_ha\n";

    fn load(body: &str) -> Result<FireSet> {
        read_fires(format!("{HEAD}{body}").as_bytes(), "mem")
    }

    #[test]
    fn triangle_fire_loads() {
        let s = load("a,w,0,0,0,,5\na,w,1,1,0,,5\na,w,2,0,1,,5\n").unwrap();
        assert_eq!(s.fires.len(), 1);
        assert_eq!(s.fires[0].vertices.len(), 3);
        assert!(!s.fires[0].has_altitude());
    }

    #[test]
    fn small_and_empty_fires_are_counted() {
        let s =
            load("a,w,0,0,0,,5\na,w,1,1,0,,5\nb,w,0,0,0,,0\nb,w,1,1,0,,0\nb,w,2,0,1,,0\n").unwrap();
        assert!(s.fires.is_empty());
        assert_eq!(
            (
                s.input_fires,
                s.skipped_too_few_vertices,
                s.skipped_nonpositive_area
            ),
            (2, 1, 1)
        );
    }

    #[test]
    fn schema_errors_name_the_line() {
        let dup = load("a,w,0,0,0,,5\na,w,0,1,0,,5\n").unwrap_err();
        assert!(matches!(dup, Error::Schema { line: 3, .. }), "{dup}");
        let area = load("a,w,0,0,0,,5\na,w,1,1,0,,6\n").unwrap_err();
        assert!(matches!(area, Error::Schema { line: 3, .. }), "{area}");
        let text = load("a,w,0,zero,0,,5\n").unwrap_err();
        assert!(matches!(text, Error::Schema { line: 2, .. }), "{text}");
        let header = read_fires("id,lon\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(header, Error::Schema { line: 1, .. }));
    }

    #[test]
    fn east_west_fire_maps_to_angle_zero() {
        let s = load("a,w,0,-2,0,,2.718281828459045\na,w,1,0,0.5,,2.718281828459045\na,w,2,2,0,,2.718281828459045\na,w,3,0,-0.5,,2.718281828459045\n").unwrap();
        let refs: Vec<&FireRecord> = s.fires.iter().collect();
        let os = build_orientation_sample(&refs, 2).unwrap();
        assert!(os.sample.xs()[0].angle().abs() < 1e-12);
        assert!((os.sample.zs()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_fires_sit_on_the_equator() {
        let fires = synthetic_fires(
            &SyntheticAtlas {
                fires_per_watershed: 5,
                ..Default::default()
            },
            &mut task_rng(1, 0),
        )
        .unwrap();
        let flat: Vec<FireRecord> = fires
            .into_iter()
            .map(|mut f| {
                f.vertices.iter_mut().for_each(|v| v.alt = Some(7.0));
                f
            })
            .collect();
        let refs: Vec<&FireRecord> = flat.iter().collect();
        let os = build_orientation_sample(&refs, 3).unwrap();
        assert!(os.sample.xs().iter().all(|x| x.as_slice()[2].abs() < 1e-9));
    }

    #[test]
    fn degenerate_fires_are_excluded() {
        let s = load("a,w,0,1,0,,5\na,w,1,0,1,,5\na,w,2,-1,0,,5\na,w,3,0,-1,,5\nb,w,0,0,0,,5\nb,w,1,2,0,,5\nb,w,2,1,0.1,,5\n").unwrap();
        let refs: Vec<&FireRecord> = s.fires.iter().collect();
        let os = build_orientation_sample(&refs, 2).unwrap();
        assert_eq!((os.sample.len(), os.excluded_degenerate), (1, 1));
        assert!(build_orientation_sample(&refs[..1], 2).is_err());
        assert!(build_orientation_sample(&refs, 3)
            .unwrap_err()
            .to_string()
            .contains("none of"));
    }

    #[test]
    fn by_adjustment_by_hand() {
        let adj = by_adjust(&[0.01, 0.02, 0.03]);
        for a in adj {
            assert!((a - 0.055).abs() < 1e-12);
        }
        let adj = by_adjust(&[0.5, 0.001, 0.2]);
        assert!(adj[1] <= adj[2] && adj[2] <= adj[0] && adj[0] <= 1.0);
        assert!(by_adjust(&[]).is_empty());
    }

    #[test]
    fn fire_csv_round_trips() {
        let fires = synthetic_fires(
            &SyntheticAtlas {
                fires_per_watershed: 3,
                ..Default::default()
            },
            &mut task_rng(2, 0),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_fires(&fires, &mut buf).unwrap();
        let back = read_fires(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.fires, fires);
    }

    #[test]
    fn small_watersheds_are_excluded() {
        let atlas = SyntheticAtlas {
            dependent: 1,
            independent: 1,
            fires_per_watershed: 30,
            ..Default::default()
        };
        let mut fires = synthetic_fires(&atlas, &mut task_rng(3, 0)).unwrap();
        fires.truncate(50);
        let config = WildfireConfig {
            dims: vec![2],
            selector: Selector::Lcv,
            resamples: 19,
            global_test: false,
            ..Default::default()
        };
        let a = watershed_analysis(&fires, &config).unwrap();
        assert_eq!(a.results.len(), 1);
        assert_eq!(
            a.excluded_watersheds,
            vec![ExcludedWatershed {
                watershed_id: "W01".into(),
                n_fires: 20
            }]
        );
        let r = &a.results[0];
        assert!(r.adjusted_p_circular.unwrap() >= r.p_circular.unwrap());
        assert!(r.p_spherical.is_none());
    }
}

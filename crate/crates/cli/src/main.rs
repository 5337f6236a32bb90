mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dirlin::bandwidth::{select_bandwidths, Selector};
use dirlin::independence::{run_test, Method, TestConfig};
use dirlin::kde::BandwidthPair;
use dirlin::numerics::SphereDim;
use dirlin::rng::task_rng;
use dirlin::simulation::{run_plan, table1_desk, write_study_csv, StudyConfig, StudyMethod};
use dirlin::wildfire::{
    emit_reports, load_fires, synthetic_fires, watershed_analysis, write_fires, SyntheticAtlas,
    WildfireConfig,
};
use dirlin::Error;

/// Independence tests between a direction and a real-valued response.
#[derive(Debug, Parser)]
#[command(name = "dirlin", version)]
struct Cli {
    /// Base seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test one sample and print the report as JSON.
    Test(TestArgs),
    /// Select bandwidths and print them as JSON.
    Bandwidth(BandwidthArgs),
    /// Monte Carlo size/power study, written as CSV.
    Simulate(SimulateArgs),
    /// Per-watershed tests on fire perimeters.
    Wildfire(WildfireArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV with columns `theta,z`, `theta,phi,z` or `x1,..,xk,z`.
    #[arg(long)]
    input: PathBuf,
    /// permutation, bootstrap, r2 or u.
    #[arg(long, default_value = "permutation")]
    method: Method,
    /// lcv, lscv, blcv, blscv, bo or fixed.
    #[arg(long, default_value = "lcv")]
    selector: Selector,
    /// Directional bandwidth for `--selector fixed`.
    #[arg(long)]
    h: Option<f64>,
    /// Linear bandwidth for `--selector fixed`.
    #[arg(long)]
    g: Option<f64>,
    /// Number of resamples.
    #[arg(long = "B", alias = "resamples", default_value_t = 1000)]
    resamples: usize,
    /// Use (#{T <= T*} + 1) / (B + 1) as the p-value.
    #[arg(long)]
    plus_one: bool,
}

#[derive(Debug, Args)]
struct BandwidthArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "lcv")]
    selector: Selector,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Run a named grid instead of the flags below (`table1-desk`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Rerun the grid stored in a manifest written by `--manifest`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model ids, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    models: Vec<u8>,
    /// Deviations, crossed with the models.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    q: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n: Vec<usize>,
    /// Replicates per cell.
    #[arg(long = "M", alias = "replicates", default_value_t = 1000)]
    replicates: usize,
    #[arg(long = "B", alias = "resamples", default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// T-LCV, T-LSCV, T-BLCV, T-boot, R2, U.
    #[arg(long, value_delimiter = ',', default_value = "T-LCV")]
    methods: Vec<StudyMethod>,
    #[arg(long)]
    plus_one: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the grid as JSON for later `--config` reruns.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Fill the `seconds` column with wall-clock times.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct WildfireArgs {
    /// Vertex CSV (`fire_id,watershed_id,vertex_index,lon,lat,alt,burnt_area_ha`).
    #[arg(long, required_unless_present = "generate")]
    input: Option<PathBuf>,
    /// Directory for the reports.
    #[arg(long, default_value = "wildfire-out")]
    out_dir: PathBuf,
    /// Orientation dimensions: 2 (circular), 3 (spherical).
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    dims: Vec<u8>,
    #[arg(long, default_value = "blcv")]
    selector: Selector,
    #[arg(long = "B", alias = "resamples", default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Watersheds with fewer fires are excluded.
    #[arg(long, default_value_t = 25)]
    min_fires: usize,
    /// Skip the test on the pooled sample of all fires.
    #[arg(long)]
    no_global: bool,
    /// Selector of the pooled test.
    #[arg(long, default_value = "lcv")]
    global_selector: Selector,
    #[arg(long)]
    plus_one: bool,
    /// Write a synthetic atlas (3 dependent, 7 independent watersheds) to this path and exit.
    #[arg(long)]
    generate: Option<PathBuf>,
    /// Fires per synthetic watershed.
    #[arg(long, default_value_t = 100)]
    fires_per_watershed: usize,
}

fn write_json<T: Serialize>(value: &T, out: impl Write) -> Result<(), Error> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_test(args: TestArgs, seed: u64) -> Result<(), Error> {
    let (sample, warnings) = input::read_sample(&args.input)?;
    let bandwidths = match (args.h, args.g) {
        (Some(h), Some(g)) => Some(BandwidthPair::new(h, g)?),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidParameter(
                "--h and --g must be given together".into(),
            ))
        }
    };
    let config = TestConfig {
        method: args.method,
        selector: args.selector,
        bandwidths,
        resamples: args.resamples,
        seed,
        plus_one: args.plus_one,
    };
    let mut report = run_test(&sample, &config)?;
    report.warnings.splice(0..0, warnings);
    write_json(&report, io::stdout().lock())
}

fn cmd_bandwidth(args: BandwidthArgs) -> Result<(), Error> {
    let (sample, mut warnings) = input::read_sample(&args.input)?;
    let mut selection = select_bandwidths(&sample, args.selector)?;
    warnings.append(&mut selection.warnings);
    selection.warnings = warnings;
    write_json(&selection, io::stdout().lock())
}

fn cmd_simulate(args: SimulateArgs, seed: u64) -> Result<(), Error> {
    let plan: Vec<StudyConfig> = match (&args.preset, &args.config) {
        (Some(name), _) if name == "table1-desk" => table1_desk(seed),
        (Some(name), _) => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset '{name}' (available: table1-desk)"
            )))
        }
        (None, Some(path)) => serde_json::from_reader(File::open(path)?)?,
        (None, None) => {
            let qs = args
                .q
                .iter()
                .map(|&q| SphereDim::new(q))
                .collect::<Result<Vec<_>, Error>>()?;
            let models = args
                .models
                .iter()
                .flat_map(|&m| args.delta.iter().map(move |&d| (m, d)))
                .collect();
            vec![StudyConfig {
                models,
                qs,
                ns: args.n.clone(),
                replicates: args.replicates,
                resamples: args.resamples,
                alpha: args.alpha,
                methods: args.methods.clone(),
                seed,
                plus_one: args.plus_one,
            }]
        }
    };
    for config in &plan {
        config.validate()?;
    }
    if let Some(path) = &args.manifest {
        write_json(&plan, create(path)?)?;
    }
    let rows = run_plan(&plan, args.timings)?;
    match &args.output {
        Some(path) => write_study_csv(&rows, create(path)?),
        None => write_study_csv(&rows, io::stdout().lock()),
    }
}

fn cmd_wildfire(args: WildfireArgs, seed: u64) -> Result<(), Error> {
    if let Some(path) = &args.generate {
        let atlas = SyntheticAtlas {
            fires_per_watershed: args.fires_per_watershed,
            ..SyntheticAtlas::default()
        };
        let fires = synthetic_fires(&atlas, &mut task_rng(seed, 0))?;
        return write_fires(&fires, create(path)?);
    }
    let input = args.input.as_ref().expect("clap requires --input");
    let set = load_fires(input)?;
    let config = WildfireConfig {
        dims: args.dims,
        selector: args.selector,
        resamples: args.resamples,
        alpha: args.alpha,
        seed,
        min_fires: args.min_fires,
        global_test: !args.no_global,
        global_selector: args.global_selector,
        plus_one: args.plus_one,
    };
    let analysis = watershed_analysis(&set.fires, &config)?;
    emit_reports(&analysis, Some(&set), &args.out_dir)?;
    write_json(&analysis.global, io::stdout().lock())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()
        {
            eprintln!("error: cannot start {w} workers: {e}");
            return ExitCode::from(3);
        }
    }
    let seed = cli.seed;
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(a, seed),
        Command::Bandwidth(a) => cmd_bandwidth(a),
        Command::Simulate(a) => cmd_simulate(a, seed),
        Command::Wildfire(a) => cmd_wildfire(a, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod inputs;
mod report;

use inputs::ConfigArgs;

/// Spectral and colorimetric comparison of multispectral cubes.
#[derive(Debug, Parser)]
#[command(name = "msicorr", version)]
struct Cli {
    /// Maximum worker threads (results do not depend on it)
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Space {
    Rgb,
    Xyz,
    Lab,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Paper,
    Measured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project a cube to RGB, XYZ or L*a*b* and write it as CSV
    Project {
        #[arg(long = "in", value_name = "CUBE")]
        input: PathBuf,
        #[arg(long, value_enum)]
        space: Space,
        /// Sensitivity table (camera RGB for rgb, colour matching functions otherwise)
        #[arg(long, value_name = "CSV")]
        sens: PathBuf,
        /// White spectrum CSV (columns wavelength,white)
        #[arg(long, value_name = "CSV")]
        white: Option<PathBuf>,
        /// Use a flat 255 white for lab when no white spectrum is given
        #[arg(long)]
        flat_white: bool,
        /// Output CSV with columns x,y,c1,c2,c3
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Optional JSON run report
        #[arg(long, value_name = "JSON")]
        report: Option<PathBuf>,
    },
    /// Distance between a reference and a candidate cube
    Distance {
        #[arg(long = "ref", value_name = "CUBE")]
        reference: PathBuf,
        #[arg(long = "cand", value_name = "CUBE")]
        candidate: PathBuf,
        /// rms, wrms, gfc, de-rgb, de-lab or mv
        #[arg(long)]
        metric: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Per-pixel values as CSV (x,y,value)
        #[arg(long, value_name = "CSV")]
        pixels: Option<PathBuf>,
        /// JSON run report
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Authenticate a candidate against a stored reference
    Authenticate {
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        #[arg(long, value_name = "ID")]
        ref_id: String,
        #[arg(long = "cand", value_name = "CUBE")]
        candidate: PathBuf,
        #[arg(long)]
        metric: String,
        /// Precision threshold P
        #[arg(long, value_name = "P")]
        precision: f64,
        /// Half-width of the undecided band around P
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
        /// Ascending band counts, comma separated (default 16,64,256,N)
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        schedule: Option<Vec<usize>>,
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON run report
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Per-pixel operation counts and latency estimate
    Cost {
        #[arg(long, required_unless_present = "custom")]
        metric: Option<String>,
        #[arg(long, value_name = "N", default_value_t = 400)]
        bands: usize,
        #[arg(long, value_enum, default_value_t = Source::Paper)]
        source: Source,
        /// Extra cycles per square root
        #[arg(long, default_value_t = 16)]
        sqrt_cycles: u64,
        /// Extra cycles per cube root
        #[arg(long, default_value_t = 32)]
        cbrt_cycles: u64,
        /// Illustrative stage instead of a metric, OP:COUNT:par|serial (repeatable)
        #[arg(long, value_name = "OP:COUNT:PAR")]
        custom: Vec<String>,
        /// Seed for the random pixels of a measured run
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON run report
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Compare fixed-point and floating-point kernels on random inputs
    FxpCompare {
        /// rms or de-rgb
        #[arg(long)]
        metric: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Spectrum length for rms (power of two up to 512)
        #[arg(long, value_name = "N", default_value_t = 64)]
        bands: usize,
        /// Compare every input with itself
        #[arg(long)]
        identical: bool,
        /// JSON run report
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Register a reference cube in a store
    AddReference {
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        #[arg(long, value_name = "ID")]
        ref_id: String,
        #[arg(long, value_name = "CUBE")]
        cube: PathBuf,
        /// White spectrum CSV stored with the reference
        #[arg(long, value_name = "CSV")]
        white: Option<PathBuf>,
        #[arg(long, default_value = "")]
        metadata: String,
    },
    /// List the references in a store
    ListReferences {
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        /// JSON run report
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
}

/// Exit status contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const REJECTED: u8 = 3;
    pub const UNDECIDED: u8 = 4;
    pub const TOLERANCE: u8 = 5;
}

/// A usage error that is not a library error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<u8> {
    use Command::*;
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(UsageError("--workers must be at least 1".into()).into());
    }
    match cli.command {
        Project {
            input,
            space,
            sens,
            white,
            flat_white,
            out,
            report,
        } => commands::project(&input, space, &sens, white.as_deref(), flat_white, &out, report.as_deref(), workers),
        Distance {
            reference,
            candidate,
            metric,
            config,
            pixels,
            out,
        } => commands::distance(&reference, &candidate, &metric, &config, pixels.as_deref(), out.as_deref(), workers),
        Authenticate {
            store,
            ref_id,
            candidate,
            metric,
            precision,
            margin,
            schedule,
            config,
            out,
        } => commands::authenticate(commands::AuthArgs {
            store: &store,
            ref_id: &ref_id,
            candidate: &candidate,
            metric: &metric,
            precision,
            margin,
            schedule,
            config: &config,
            out: out.as_deref(),
            workers,
        }),
        Cost {
            metric,
            bands,
            source,
            sqrt_cycles,
            cbrt_cycles,
            custom,
            seed,
            out,
        } => commands::cost(metric.as_deref(), bands, source, sqrt_cycles, cbrt_cycles, &custom, seed, out.as_deref()),
        FxpCompare {
            metric,
            trials,
            seed,
            bands,
            identical,
            out,
        } => commands::fxp_compare(&metric, trials, seed, bands, identical, out.as_deref()),
        AddReference {
            store,
            ref_id,
            cube,
            white,
            metadata,
        } => commands::add_reference(&store, &ref_id, &cube, white.as_deref(), &metadata),
        ListReferences { store, out } => commands::list_references(&store, out.as_deref()),
    }
}

fn error_name(err: &anyhow::Error) -> (&'static str, String) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<msicorr::Error>() {
            return (e.name(), e.to_string());
        }
        if let Some(UsageError(msg)) = cause.downcast_ref::<UsageError>() {
            return ("UsageError", msg.clone());
        }
    }
    ("Error", format!("{err:#}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let (name, detail) = error_name(&err);
            eprintln!("{name}: {detail}");
            ExitCode::from(exit::USAGE)
        }
    }
}

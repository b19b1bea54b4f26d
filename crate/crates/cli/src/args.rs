use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "scalelaws",
    version,
    about = "Multiscale entropy statistics and scale-law checks for images"
)]
pub struct Cli {
    /// Worker threads (default: SCALELAWS_THREADS, else available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic image as RAW + JSON sidecar.
    Generate {
        #[command(subcommand)]
        kind: Generator,
    },
    /// Export entropy surface, entropy production and Omega tables as CSV.
    Analyze(AnalyzeArgs),
    /// Run the full analysis and report the three law verdicts.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum Generator {
    /// Two-channel plane c+l, N+c-l.
    Plane {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Every channel pair placed once at a random position.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Hilbert fractal of side 2^m.
    Hilbert {
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fresh random sub-cell permutation for every cell.
        #[arg(long)]
        randomized: bool,
        /// One random permutation per refinement level instead.
        #[arg(long, conflicts_with = "randomized")]
        per_level: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Tiling of the seven-pattern 2x8 motif.
    Pavement {
        #[arg(long, default_value_t = 256)]
        rows: usize,
        #[arg(long, default_value_t = 256)]
        cols: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// PGM/PPM or RAW (.bin + .json sidecar) image.
    pub input: PathBuf,
    /// Analyze the window x y w h.
    #[arg(long, num_args = 4, value_names = ["X", "Y", "W", "H"])]
    pub crop: Option<Vec<usize>>,
    /// Crop to the largest top-left square (after --crop).
    #[arg(long)]
    pub crop_square: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Step of the dynamics grid 1, 1+step, ..., k_max.
    #[arg(long, default_value_t = 1)]
    pub k_step: u64,
    /// Largest scale of the surface and of the log-scale fit (default N/2).
    #[arg(long)]
    pub s_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(short, long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Abscissa {
    /// ln(s / N)
    Nominal,
    /// -ln floor(N / s), the side actually covered by the blocks
    Cropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Law {
    #[value(name = "L1")]
    L1,
    #[value(name = "L2")]
    L2,
    #[value(name = "L3")]
    L3,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Scales at which the maximum pattern entropy is probed.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    pub probe_scales: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub abundance_scale: usize,
    #[arg(long, value_enum, default_value_t = Abscissa::Cropped)]
    pub abscissa: Abscissa,
    /// Exit 4 when any expected law fails.
    #[arg(long)]
    pub strict: bool,
    /// Laws checked by --strict.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "L1,L2,L3")]
    pub expect: Vec<Law>,
    /// Start from the widened synthetic-image tolerances.
    #[arg(long)]
    pub tol_synthetic: bool,
    #[arg(long)]
    pub tol_l1_slope: Option<f64>,
    #[arg(long)]
    pub tol_l1_intercept: Option<f64>,
    #[arg(long)]
    pub tol_l2: Option<f64>,
    #[arg(long)]
    pub tol_l2_spread: Option<f64>,
    #[arg(long)]
    pub tol_l3: Option<f64>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "blochlab", version, about = "Dyadic martingales, Bloch functions and Beurling transforms")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Output directory (default: $BLOCHLAB_DATA_DIR/<subcommand>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on data-parallel threads; outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// key=value file of flag defaults; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Random p-adic martingale (or a saved one) and its statistics.
    Martingale(MartingaleArgs),
    /// Radial asymptotic variance ladder.
    Variance(LadderArgs),
    /// Integral means spectrum ladder.
    Ims(ImsArgs),
    /// Radial LIL ladder.
    Lil(LadderArgs),
    /// Green's-identity defects of box averages against the martingale.
    Box(BridgeArgs),
    /// Full bridge report: adjacency, fidelity, Green's and complexification defects.
    Bridge(BridgeArgs),
    /// Search for strip coefficients with a large box average.
    Search(SearchArgs),
    /// Central limit check of rescaled boundary values.
    Clt(CltArgs),
    /// Runs the acceptance criteria and prints a pass/fail table.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Martingale(_) => "martingale",
            Command::Variance(_) => "variance",
            Command::Ims(_) => "ims",
            Command::Lil(_) => "lil",
            Command::Box(_) => "box",
            Command::Bridge(_) => "bridge",
            Command::Search(_) => "search",
            Command::Clt(_) => "clt",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Martingale(a) => a.seed,
            Command::Variance(a) | Command::Lil(a) => a.family.seed,
            Command::Ims(a) => a.ladder.family.seed,
            Command::Box(a) | Command::Bridge(a) => a.family.seed,
            Command::Search(a) => a.seed,
            Command::Clt(a) => a.family.seed.or(Some(a.sample_seed)),
            Command::Selftest(a) => Some(a.seed),
        }
    }
}

pub const SUBCOMMANDS: [&str; 9] = ["martingale", "variance", "ims", "lil", "box", "bridge", "search", "clt", "selftest"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Zeros,
    Rademacher,
    UnitRoots,
    UniformReal,
    UniformComplex,
    Mixed,
}

#[derive(Debug, Args, Serialize)]
pub struct MartingaleArgs {
    /// Required unless --law zeros or --input.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 16)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = Law::Rademacher)]
    pub law: Law,
    /// Jump magnitude for the uniform laws.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Amplitude pattern seed of the mixed law (default: --seed).
    #[arg(long)]
    pub amplitude_seed: Option<u64>,
    /// Exponents of the integral means `β(t)`.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub taus: Vec<f64>,
    /// Load a martingale (`.json` record or binary) instead of drawing one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also write the martingale as `martingale.bin` and `martingale.json`.
    #[arg(long)]
    pub save: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `Σ_{k<terms} z^{2^k}`.
    Lacunary,
    /// `Σ_{k<terms} e^{iφ_k} z^{2^k}` with seeded phases.
    LacunaryRandom,
    /// The constant 1.
    Constant,
    Zero,
    /// `S#μ` for the strip coefficient in --coefficients.
    Search,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Number of lacunary terms.
    #[arg(long, default_value_t = 48)]
    pub terms: usize,
    /// Coefficient file for --family search.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    /// Phase seed for --family lacunary-random.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LadderArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Radii `r_j = 1 - 2^{-j}` for `j = rmin-j, rmin-j + step, …, rmax-j`.
    #[arg(long, default_value_t = 8)]
    pub rmin_j: u32,
    #[arg(long, default_value_t = 20)]
    pub rmax_j: u32,
    #[arg(long, default_value_t = 2)]
    pub step: u32,
    /// θ nodes per circle (default grows with j).
    #[arg(long)]
    pub n_theta: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ImsArgs {
    #[command(flatten)]
    pub ladder: LadderArgs,
    #[arg(long)]
    pub t: f64,
    /// Imaginary part of the exponent.
    #[arg(long, default_value_t = 0.0)]
    pub t_imag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelDomain {
    /// The family transplanted to ℍ by `z ↦ e^{2πiz}`.
    Halfplane,
    /// The family as a disk function (rejected by the bridge).
    Disk,
}

#[derive(Debug, Args, Serialize)]
pub struct BridgeArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = ModelDomain::Halfplane)]
    pub domain: ModelDomain,
    #[arg(long, default_value_t = 16)]
    pub depth: usize,
    /// Dyadic level of the intervals `I` in the tables.
    #[arg(long, default_value_t = 2)]
    pub level: usize,
    /// Box orders.
    #[arg(long = "n", value_delimiter = ',', default_value = "4,8,12")]
    pub orders: Vec<usize>,
    /// Gauss–Legendre order per 1-box.
    #[arg(long, default_value_t = 8)]
    pub quadrature: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Ascent,
    Anneal,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Required unless --resume.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid order: the tile is periodic for the `2^n`-adic grid.
    #[arg(long = "n", default_value_t = 4)]
    pub order: u32,
    /// Box order of the objective (default: n).
    #[arg(long)]
    pub box_order: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub tile_depth: u32,
    /// Iterations to run (further iterations with --resume).
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Ascent)]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 1e-3)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.99)]
    pub cooling: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Let cell magnitudes vary in `[0, 1]`.
    #[arg(long)]
    pub free_magnitude: bool,
    /// Continue from a checkpoint; its configuration wins.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Write `checkpoint.json` every k iterations (0: only at the end).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CltArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 20)]
    pub j: u32,
    /// Number of boundary samples.
    #[arg(long = "N", default_value_t = 65536)]
    pub samples: usize,
    /// `Σ̂²` (default: radial estimate at r_j).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Jitter seed of the θ nodes.
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    /// Uniform θ grid instead of jittered nodes.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Depth of the bridge martingale used for the bad-mass table (0: skip).
    #[arg(long, default_value_t = 14)]
    pub bad_mass_depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Comma-separated criterion ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u32>,
    #[arg(long, default_value_t = 20240611)]
    pub seed: u64,
}

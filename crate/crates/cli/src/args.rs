use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cone_iso_core::Initializer;

#[derive(Parser, Debug)]
#[command(
    name = "cone-iso",
    version,
    about = "Isoperimetric candidates, perimeter minimization and stability checks in Euclidean cones",
    color = clap::ColorChoice::Never
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Candidate-based profile of a cone over a list of volumes.
    Profile(VolumesArgs),
    /// Ranked comparison of vertex ball, boundary half-ball and interior ball.
    Compare(VolumesArgs),
    /// Sufficient criteria for existence of isoperimetric regions.
    Existence(ExistenceArgs),
    /// Minimize relative perimeter at fixed volume.
    Minimize(MinimizeArgs),
    /// One minimization per volume, with a power-law fit.
    Sweep(SweepArgs),
    /// Index-form report and per-vertex quantities of a surface.
    Stability(SurfaceArgs),
    /// Minkowski, boundary-identity and index-form checks plus classification.
    Checks(SurfaceArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Cone as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub cone: Option<String>,
    /// Output directory; a manifest is written there last.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VolumesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated volumes.
    #[arg(long, visible_alias = "volume", value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub volumes: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct ExistenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Known regions as `volume:perimeter` pairs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub probes: Vec<String>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum InitializerArg {
    VertexCap,
    BoundaryHalfBall,
    RandomBlob,
}

impl From<InitializerArg> for Initializer {
    fn from(a: InitializerArg) -> Self {
        match a {
            InitializerArg::VertexCap => Initializer::VertexCap,
            InitializerArg::BoundaryHalfBall => Initializer::BoundaryHalfBall,
            InitializerArg::RandomBlob => Initializer::RandomBlob,
        }
    }
}

#[derive(Args, Debug)]
pub struct OptimizerFlags {
    /// JSON file with optimizer settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub initializer: Option<InitializerArg>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub volume: Option<f64>,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated volumes.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub volumes: Vec<f64>,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
}

#[derive(Args, Debug)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Surface JSON file.
    #[arg(long)]
    pub surface: PathBuf,
}

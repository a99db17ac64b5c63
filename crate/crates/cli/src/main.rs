//! `spectra`: spectral tools and signed GNN experiments on signed directed graphs.

mod error;
mod io;
mod spectral;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spectra_core::spectral::Family;

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "spectra",
    version,
    about = "Spectral analysis and graph neural networks on signed directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Laplacian as `i,j,re[,im]` coordinate text.
    Laplacian(LaplacianArgs),
    /// Eigenvalues and eigenvectors of a Laplacian.
    Eig(EigArgs),
    /// Generate a signed stochastic block model graph.
    Ssbm(SsbmArgs),
    /// Run an experiment from a JSON config.
    Train(TrainArgs),
    /// Cluster nodes with the signed magnetic Laplacian.
    Cluster(ClusterArgs),
    /// Check positive semidefiniteness and the normalized spectral range.
    Verify(VerifyArgs),
    /// Repeat an experiment over feature dimensions.
    Sweep(SweepArgs),
    /// Grid search over learning rate and weight decay.
    Grid(GridArgs),
}

#[derive(Args, Clone)]
pub struct GraphInput {
    /// Edge list: `src dst sign` per line (comma or whitespace separated).
    #[arg(long)]
    input: PathBuf,
    /// Treat each line as an undirected edge.
    #[arg(long)]
    undirected: bool,
    /// Remove nodes without edges before building operators.
    #[arg(long)]
    drop_isolated: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum KindArg {
    Combinatorial,
    Signed,
    Magnetic,
    SignedMagnetic,
}

impl KindArg {
    fn family(self) -> Family {
        match self {
            KindArg::Combinatorial => Family::Combinatorial,
            KindArg::Signed => Family::Signed,
            KindArg::Magnetic => Family::Magnetic,
            KindArg::SignedMagnetic => Family::SignedMagnetic,
        }
    }
}

#[derive(Args, Clone)]
pub struct OperatorArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    normalized: bool,
    /// Phase parameter for the magnetic kinds (default 0.125).
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
pub struct LaplacianArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum WhichArg {
    Smallest,
    Largest,
}

#[derive(Args)]
pub struct EigArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[command(flatten)]
    op: OperatorArgs,
    /// Compute only `k` extremal pairs with Lanczos.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "smallest")]
    which: WhichArg,
    /// Output directory for `eigenvalues.csv` and `eigenvectors.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct SsbmArgs {
    #[arg(long, default_value_t = 500)]
    nodes_per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    #[arg(long, default_value_t = 0.02)]
    p_intra: f64,
    #[arg(long, default_value_t = 0.01)]
    p_inter: f64,
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long)]
    directed: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list path; labels go to `<stem>.labels.csv` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// `key=value`, dotted keys for nested fields; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "spectra-run")]
    out: PathBuf,
}

#[derive(Args)]
pub struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value_t = 0.125)]
    q: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth `node,label` CSV; enables the ARI report.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Labels CSV; the embedding goes to `<stem>.embedding.csv` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    graph: GraphInput,
    /// Random phase draws per magnetic kind.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Negate operator diagonals to exercise the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Comma-separated feature dimensions.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    dims: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct GridArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1")]
    lrs: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.000001,0.00001,0.0001,0.001"
    )]
    wds: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Laplacian(a) => spectral::laplacian(&a),
        Command::Eig(a) => spectral::eig(&a),
        Command::Ssbm(a) => spectral::ssbm(&a),
        Command::Train(a) => train::train(&a),
        Command::Cluster(a) => spectral::cluster(&a),
        Command::Verify(a) => spectral::verify(&a),
        Command::Sweep(a) => train::sweep(&a),
        Command::Grid(a) => train::grid(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}

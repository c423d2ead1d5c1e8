//! `msc` — detect maximally stable components on triangle meshes, describe
//! them, and benchmark detections against ground-truth correspondences.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
//! 3 data inconsistency.

mod commands;
mod errors;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "msc",
    version,
    about = "Maximally stable components on deformable meshes"
)]
struct Cli {
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the spectral basis of a mesh and cache it.
    Spectrum(SpectrumArgs),
    /// Detect maximally stable components with a weighting function.
    Detect(DetectArgs),
    /// Compute region descriptors for a regions document.
    Describe(DescribeArgs),
    /// Train a geometric vocabulary for bag-of-features descriptors.
    Vocab(VocabArgs),
    /// Evaluate repeatability and descriptor performance across shape pairs.
    Eval(EvalArgs),
    /// Export a colored PLY visualizing detected regions.
    ExportPly(ExportPlyArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Input mesh (.off or .obj).
    #[arg(long)]
    mesh: PathBuf,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 200)]
    k: usize,
    /// Eigensolver seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output cache file; re-running with unchanged inputs is a no-op.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Spectral cache produced by `spectrum`; must match the mesh hash.
    #[arg(long)]
    cache: PathBuf,
    /// Weighting spec, e.g. vw:heat:t=2048, ew:invct, ew:absdiff:sihk:w=0.
    #[arg(long)]
    weight: String,
    /// Instability cutoff; defaults to a tuned value per weighting kind.
    #[arg(long, allow_negative_numbers = true)]
    max_instability: Option<f64>,
    /// Nesting-overlap threshold for dropping the smaller region.
    #[arg(long, default_value_t = 0.8)]
    dedup: f64,
    /// Minimum region area as a fraction of the total area.
    #[arg(long, default_value_t = 0.005)]
    min_frac: f64,
    /// Maximum region area as a fraction of the total area.
    #[arg(long, default_value_t = 0.5)]
    max_frac: f64,
    /// Recorded in the output for reproducibility.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    /// Regions document produced by `detect`.
    #[arg(long)]
    regions: PathBuf,
    /// One of avg-hks, avg-sihks, bof-hks, bof-sihks.
    #[arg(long)]
    descriptor: String,
    /// HKS sampling times (comma separated); defaults to the standard set.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Number of discrete frequencies for the scale-invariant descriptor.
    #[arg(long, default_value_t = 6)]
    freqs: usize,
    /// Vocabulary file; required for bag-of-features descriptors.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Soft-assignment spread; defaults to the vocabulary's stored value,
    /// 0 selects hard assignment.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VocabArgs {
    /// Training meshes (repeat), aligned with --cache.
    #[arg(long, required = true)]
    mesh: Vec<PathBuf>,
    #[arg(long, required = true)]
    cache: Vec<PathBuf>,
    /// Point descriptor to cluster: hks or sihks.
    #[arg(long, default_value = "sihks")]
    descriptor: String,
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 6)]
    freqs: usize,
    /// Vocabulary size.
    #[arg(short, long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Regions documents of the null shapes (repeat, aligned).
    #[arg(long, required = true)]
    null_regions: Vec<PathBuf>,
    /// Regions documents of the transformed shapes (repeat, aligned).
    #[arg(long, required = true)]
    trans_regions: Vec<PathBuf>,
    /// Correspondence files: line i = null vertex for transformed vertex i,
    /// -1 for missing (repeat, aligned).
    #[arg(long, required = true)]
    corr: Vec<PathBuf>,
    /// Optional intrinsic-symmetry correspondences (repeat, aligned).
    #[arg(long)]
    corr_sym: Vec<PathBuf>,
    /// Descriptor documents of the null shapes (repeat, aligned).
    #[arg(long)]
    null_descriptors: Vec<PathBuf>,
    /// Descriptor documents of the transformed shapes (repeat, aligned).
    #[arg(long)]
    trans_descriptors: Vec<PathBuf>,
    /// Overlap thresholds for the repeatability curve (repeat).
    #[arg(long = "overlap")]
    overlaps: Vec<f64>,
    /// Minimum overlap deeming two regions a ground-truth match.
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
    /// Output directory for the CSV curves and summary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportPlyArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    regions: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are success paths.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Spectrum(args) => commands::spectrum(args),
        Command::Detect(args) => commands::detect(args),
        Command::Describe(args) => commands::describe(args),
        Command::Vocab(args) => commands::vocab(args),
        Command::Eval(args) => commands::eval(args),
        Command::ExportPly(args) => commands::export_ply(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

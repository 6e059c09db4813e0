//! `lunarad` drives the terrain/radio-map pipeline: generate terrains,
//! assemble training datasets, ingest externally rendered maps, evaluate
//! predictions, and emit conformance vectors.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "lunarad",
    version,
    about = "Deterministic lunar terrain and radio map dataset pipeline",
    after_help = "Environment: LUNARAD_OUTPUT_ROOT prefixes relative output paths; \
                  LUNARAD_PARALLELISM caps worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate terrains into a terrain container.
    Terrain(TerrainArgs),
    /// Render radio maps and assemble the full training dataset.
    Dataset(DatasetArgs),
    /// Repair and import externally rendered radio maps.
    Ingest(IngestArgs),
    /// Score a prediction container against references.
    Eval(EvalArgs),
    /// Emit the deterministic conformance-vector file.
    Vectors(VectorsArgs),
    /// Check containers and vector files for structural violations.
    Validate(ValidateArgs),
}

#[derive(clap::Args)]
struct TerrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the number of terrains (seeds count up from base_seed).
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated explicit seed list, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Also write one 16-bit PNG per terrain into this directory.
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DatasetArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write heightmap/radio-map/label PNGs into this directory.
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FillMethod {
    /// Bilinear for the low band, static deep-shadow fill for the high band.
    Auto,
    Bilinear,
    Static,
}

#[derive(clap::Args)]
struct IngestArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Gap-fill policy applied after merging instances.
    #[arg(long, value_enum, default_value_t = FillMethod::Auto)]
    fill: FillMethod,
    /// Sidecar JSON files, one per rendered map instance.
    #[arg(required = true)]
    sidecars: Vec<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BandFilter {
    All,
    Low,
    High,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    references: PathBuf,
    /// JSON report path.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Plain-text table path.
    #[arg(long)]
    out_table: Option<PathBuf>,
    /// Restrict scoring to one band.
    #[arg(long, value_enum, default_value_t = BandFilter::All)]
    band: BandFilter,
    /// Pool pixels across samples for RMSE/PSNR.
    #[arg(long)]
    pooled: bool,
}

#[derive(clap::Args)]
struct VectorsArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Cases generated per operation.
    #[arg(long, default_value_t = 16)]
    cases: usize,
    /// Timesteps in each generated noise schedule.
    #[arg(long, default_value_t = 1000)]
    timesteps: usize,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Containers (.lrdc/.lrtc) or vector files (.json).
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("LUNARAD_PARALLELISM") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring LUNARAD_PARALLELISM={value}"),
        }
    }
}

/// Prefixes relative output paths with LUNARAD_OUTPUT_ROOT and creates the
/// parent directory.
fn resolve_out(path: &PathBuf) -> exit::CliResult<PathBuf> {
    use exit::IntoCliResult;
    let resolved = match std::env::var_os("LUNARAD_OUTPUT_ROOT") {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.clone(),
    };
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).or_io()?;
        }
    }
    Ok(resolved)
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Terrain(args) => commands::terrain::run(args),
        Command::Dataset(args) => commands::dataset::run(args),
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Vectors(args) => commands::vectors::run(args),
        Command::Validate(args) => commands::validate::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}

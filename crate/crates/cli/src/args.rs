use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "regiongem", version, about = "Region-masked HSV histogram image retrieval")]
pub struct Cli {
    /// TOML file mirroring the flags below; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for indexing and evaluation (default: logical CPUs).
    #[arg(long, global = true, env = "REGIONGEM_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract descriptors for a dataset and write an index file.
    Index(IndexArgs),
    /// Rank an index against one query image.
    Query(QueryArgs),
    /// Split a dataset, index the train side and report top-k accuracy on the test side.
    Evaluate(EvaluateArgs),
    /// Render the five-region partition of a WIDTHxHEIGHT grid as a PNG.
    Masks(MasksArgs),
    /// Serve the HTTP query API over an index.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BinArgs {
    #[arg(long)]
    pub hue_bins: Option<u32>,
    #[arg(long)]
    pub sat_bins: Option<u32>,
    #[arg(long)]
    pub val_bins: Option<u32>,
    /// Downscale images so the longest side is at most this many pixels.
    #[arg(long)]
    pub max_dimension: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Dataset root with one subdirectory per class.
    #[arg(long, conflicts_with = "csv")]
    pub class_folders: Option<PathBuf>,
    /// Id-keyed metadata CSV (requires --images).
    #[arg(long, requires = "images")]
    pub csv: Option<PathBuf>,
    /// Directory holding `<id>.jpg` / `<id>.png` files for --csv.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Row filter for --csv, as column=value.
    #[arg(long, default_value = "subCategory=Jewellery")]
    pub filter: String,
    /// CSV column used as the class label.
    #[arg(long, default_value = "articleType")]
    pub label_column: String,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub bins: BinArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the skipped-image report (default: <out>.errors.jsonl).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the scanned manifest as JSON lines.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query image (PNG or JPEG).
    pub image: PathBuf,
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    /// Render a contact sheet of the top results to this PNG.
    #[arg(long)]
    pub sheet: Option<PathBuf>,
    /// Class label of the query, used to color the contact sheet borders
    /// (default: the label of the index entry with the same path, else the top hit).
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub bins: BinArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of each class placed in the indexed (train) side.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Comma-separated cut-offs.
    #[arg(long, value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    /// Out-of-database queries: a class-folder tree whose images query an
    /// index of the whole dataset instead of the test split.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Write the full report (header, per-query lines, accuracies) here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// `method,k,accuracy` lines to tabulate next to this run.
    #[arg(long)]
    pub external: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MasksArgs {
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// host:port to listen on [default: 127.0.0.1:8080]
    #[arg(long)]
    pub bind: Option<String>,
    /// [default: 8388608]
    #[arg(long)]
    pub max_upload_bytes: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    pub default_k: Option<usize>,
    /// Origins allowed to call the API from a browser (repeatable).
    #[arg(long = "allow-origin")]
    pub allow_origins: Vec<String>,
}

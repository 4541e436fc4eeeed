use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handcloud::templates::{ComponentBudget, TemplateKind};

#[derive(Debug, Parser)]
#[command(name = "handcloud", version, about = "Point-cloud tools for 3D hand reconstruction")]
pub struct Cli {
    /// Print a machine-readable JSON document on stdout instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chamfer, Earth Mover's or combined loss between two clouds.
    Eval(EvalArgs),
    /// Fuse multi-view depth maps into one density-balanced cloud.
    Fuse(FuseArgs),
    /// Transfer component labels from a labeled reference cloud.
    Segment(SegmentArgs),
    /// Write a decoder template (grid, hand or per-component hand).
    Template(TemplateArgs),
    /// Sample points from a mesh surface or the synthetic hand.
    SampleMesh(SampleMeshArgs),
    /// Train a folding decoder on synthetic hands and log every epoch.
    TrainDemo(TrainDemoArgs),
    /// MPJPE, PCK curve and AUC between predicted and ground-truth poses.
    PoseMetrics(PoseMetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Cd,
    Emd,
    Combined,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Ground-truth cloud (PLY).
    #[arg(long)]
    pub gt: PathBuf,
    /// Predicted cloud (PLY).
    #[arg(long)]
    pub pred: PathBuf,
    /// Also evaluate every component separately (both clouds need labels).
    #[arg(long)]
    pub labels: bool,
    /// Allow EMD above the exact-solver limit using the auction approximation.
    #[arg(long)]
    pub emd_approx: bool,
    /// Write `term,value` rows to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Comma-separated depth maps: `.pgm` (needs --cameras) or raw with a JSON sidecar.
    #[arg(long, value_delimiter = ',', required = true)]
    pub views: Vec<PathBuf>,
    /// Camera rig JSON; camera i belongs to view i.
    #[arg(long)]
    pub cameras: Option<PathBuf>,
    /// Fusion parameters JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Write binary little-endian PLY instead of ASCII.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Unlabeled cloud to label (PLY).
    #[arg(long)]
    pub query: PathBuf,
    /// Labeled reference cloud (PLY).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Neighbors voting for each label.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    #[arg(long, value_parser = clap::value_parser!(TemplateKind))]
    pub kind: TemplateKind,
    /// Total point count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Per-component counts, e.g. `palm=100,thumb=50,...` (local templates).
    #[arg(long)]
    pub budget: Option<ComponentBudget>,
    #[arg(long)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct SampleMeshArgs {
    /// Mesh to sample (PLY). Without it the synthetic hand is used.
    #[arg(long, conflicts_with = "spec")]
    pub mesh: Option<PathBuf>,
    /// Synthetic hand specification (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Total point count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Exact per-component counts instead of --n (needs a labeled mesh).
    #[arg(long, conflicts_with = "n")]
    pub budget: Option<ComponentBudget>,
    /// Only sample the visible outer surface of the synthetic hand.
    #[arg(long, conflicts_with = "mesh")]
    pub exposed: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the sampled mesh.
    #[arg(long)]
    pub export_mesh: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct TrainDemoArgs {
    #[arg(long, value_parser = clap::value_parser!(TemplateKind))]
    pub template: TemplateKind,
    #[arg(long, default_value_t = 200)]
    pub scenes: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: u64,
    /// Per-epoch CSV log.
    #[arg(long)]
    pub out: PathBuf,
    /// Weights blob; defaults to the log path with a `.bin` extension.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Hidden width of the decoder MLPs.
    #[arg(long, default_value_t = handcloud::folding::BENCHMARK_HIDDEN)]
    pub hidden: usize,
    /// Points per scene by component (default palm=200 and 80 per digit).
    #[arg(long)]
    pub budget: Option<ComponentBudget>,
    /// Print the loss of every epoch on stderr.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Args)]
pub struct PoseMetricsArgs {
    /// Predicted pose(s): 21 `[x, y, z]` joints in mm, or a list of such poses.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth pose(s), same layout as --pred.
    #[arg(long)]
    pub gt: PathBuf,
    /// Smallest PCK threshold (mm).
    #[arg(long, default_value_t = 0.0)]
    pub pck_min: f64,
    /// Largest PCK threshold (mm).
    #[arg(long, default_value_t = 50.0)]
    pub pck_max: f64,
    /// Number of evenly spaced PCK thresholds.
    #[arg(long, default_value_t = 51)]
    pub pck_steps: usize,
    /// Write `threshold_mm,pck` rows to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

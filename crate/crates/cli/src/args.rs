use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use graphbior::filterbank::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "graphbior",
    version,
    about = "Biorthogonal graph wavelet filterbanks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a graphBior(k0,k1) kernel set and write it as CSV plus a JSON report.
    Design(DesignArgs),
    /// Generate a random bipartite graph with its natural partition.
    RandomBipartite(RandomBipartiteArgs),
    /// Run analysis, optional sparsification and synthesis on a graph or image.
    Transform(TransformArgs),
    /// Ensemble-averaged spatial and spectral spreads per design and channel.
    SweepSpreads(SweepArgs),
    /// Sample the kernel responses and PR checks over [0, 2].
    Spectrum(SpectrumArgs),
    /// Check the perfect-reconstruction conditions of a kernel set.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for all generated inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Parses `k0,k1`.
pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected k0,k1, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad integer `{t}` in `{s}`"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Zero multiplicities `k0,k1`.
    #[arg(long, value_parser = parse_pair, default_value = "6,6")]
    pub kernels: (usize, usize),
    /// Compare against the published reference rows for (6,6), (7,7) and (8,8).
    #[arg(long)]
    pub table2: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RandomBipartiteArgs {
    /// Nodes on each side before isolated nodes are removed.
    #[arg(long, default_value_t = 300)]
    pub n_per_side: usize,
    /// Link probability; defaults to 2 ln N / N for N total nodes.
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FilterbankArgs {
    #[arg(long, value_parser = parse_pair, default_value = "5,5")]
    pub kernels: (usize, usize),
    /// `nonzerodc` or `zerodc`.
    #[arg(long, value_parser = parse_variant, default_value = "zerodc")]
    pub variant: Variant,
    /// Gain compensation (default on).
    #[arg(long, overrides_with = "no_gc")]
    pub gc: bool,
    #[arg(long, overrides_with = "gc")]
    pub no_gc: bool,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// Fraction of detail coefficients kept for the reconstruction.
    #[arg(long, default_value_t = 1.0)]
    pub keep: f64,
}

impl FilterbankArgs {
    pub fn gain_compensation(&self) -> bool {
        !self.no_gc
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["graph", "random_bipartite", "planar", "image", "disk_scene"])))]
pub struct TransformArgs {
    /// Graph file (`N M` header, then `u v w` lines).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Random bipartite graph with this many nodes per side.
    #[arg(long, value_name = "N_PER_SIDE")]
    pub random_bipartite: Option<usize>,
    /// Synthetic planar graph on a SIDE × SIDE grid with a piecewise-constant signal.
    #[arg(long, value_name = "SIDE")]
    pub planar: Option<usize>,
    /// 8-bit PGM image (P2 or P5).
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Generated SIZE × SIZE disk scene.
    #[arg(long, value_name = "SIZE")]
    pub disk_scene: Option<usize>,
    /// Signal file for `--graph` (one value per line); random if omitted.
    #[arg(long, requires = "graph")]
    pub signal: Option<PathBuf>,
    /// Decomposition file for `--graph`; derived from the graph if omitted.
    #[arg(long, requires = "graph")]
    pub decomposition: Option<PathBuf>,
    /// Regions of the planar signal.
    #[arg(long, default_value_t = 6)]
    pub regions: usize,
    /// Disks in the generated scene.
    #[arg(long, default_value_t = 6)]
    pub disks: usize,
    /// Remove links across intensity edges: `[threshold] [min-component]`.
    #[arg(long, num_args = 0..=2, value_names = ["THRESHOLD", "MIN_COMPONENT"])]
    pub edge_aware: Option<Vec<f64>>,
    /// Edge map PGM (0 marks an edge) used instead of detected edges.
    #[arg(long, requires = "edge_aware")]
    pub edge_map: Option<PathBuf>,
    /// Write images as ASCII (P2) instead of binary (P5).
    #[arg(long)]
    pub ascii: bool,
    #[command(flatten)]
    pub filterbank: FilterbankArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Designs `k0,k1`; repeat the flag for several.
    #[arg(long = "kernels", value_parser = parse_pair, default_values = ["2,2", "6,6", "10,10"])]
    pub designs: Vec<(usize, usize)>,
    /// Graphs in the ensemble.
    #[arg(long, default_value_t = 10)]
    pub members: usize,
    #[arg(long, default_value_t = 100)]
    pub n_per_side: usize,
    /// Leave out the ideal half-band reference rows.
    #[arg(long)]
    pub no_ideal: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_parser = parse_pair, default_value = "6,6")]
    pub kernels: (usize, usize),
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kernel_source").args(["kernels", "kernel_file"])))]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_pair)]
    pub kernels: Option<(usize, usize)>,
    /// Kernel CSV with rows h0, h1, g0, g1.
    #[arg(long)]
    pub kernel_file: Option<PathBuf>,
    /// Also check spectral folding and a round trip on this graph.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Decomposition of `--graph`; derived from the graph if omitted.
    #[arg(long, requires = "graph")]
    pub decomposition: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant, default_value = "zerodc")]
    pub variant: Variant,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

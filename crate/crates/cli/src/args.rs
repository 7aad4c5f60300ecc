use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Translation surfaces, straight-line flows, billiards and the GL(2,R) action.
///
/// Lengths are in flat-metric units of the input pattern; angles are in
/// radians, measured counterclockwise from the positive x-axis.
#[derive(Debug, Parser)]
#[command(name = "flattrace", version, args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice (falls back to FLATTRACE_SEED, then 0).
    #[arg(long, global = true, env = "FLATTRACE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file of default flag values, e.g. {"tmax": 1e6}; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a surface and print its topology and area as JSON.
    Validate(ValidateArgs),
    /// Trace a straight-line trajectory; CSV of segments (face, x_in, y_in, x_out, y_out, cum_length).
    Trace(TraceArgs),
    /// Apply a 2x2 matrix to a surface.
    Act(ActArgs),
    /// Teichmüller flow diag(e^t, e^-t) sampled every dt; CSV (t, systole, min_edge, area).
    Flow(FlowArgs),
    /// Systole proxy and saddle connections up to a length.
    Systole(SystoleArgs),
    /// Divergence profile: log-systole along the renormalized flow; CSV (t, systole).
    Diverge(DivergeArgs),
    /// Billiard trajectory in a polygon; CSV (t, x, y) of reflection points.
    Billiard(BilliardArgs),
    /// Unfold a rational polygon into a translation surface.
    Unfold(UnfoldArgs),
    /// Windtree trajectory in the plane; CSV (t, x, y) of reflection points.
    Windtree(WindtreeArgs),
    /// Diffusion exponent of a windtree scene (JSON estimate).
    Diffusion(DiffusionArgs),
    /// Random-walk calibration of the diffusion estimator (JSON estimate).
    Baseline(BaselineArgs),
    /// Illumination coverage from a source point (JSON grid).
    Illuminate(IlluminateArgs),
    /// Discrepancy of one orbit at several lengths; CSV (length, discrepancy).
    Ergodicity(ErgodicityArgs),
    /// Run the acceptance suite and print a pass/fail table.
    Accept(AcceptArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write output here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct SurfaceSource {
    /// Surface spec JSON file.
    #[arg(long, group = "source")]
    pub surface: Option<PathBuf>,
    /// Builtin surface: unit-torus, rect-torus, regular-2n-gon, slit-torus.
    #[arg(long, group = "source")]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub source: SurfaceSource,
    /// Half the number of sides of a regular-2n-gon.
    #[arg(long)]
    pub n: Option<usize>,
    /// Width of a rect-torus.
    #[arg(long)]
    pub w: Option<f64>,
    /// Height of a rect-torus.
    #[arg(long)]
    pub h: Option<f64>,
    /// Slit length of a slit-torus.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Absolute length tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub eps_len: f64,
    /// Angle tolerance in radians.
    #[arg(long, default_value_t = 1e-9)]
    pub eps_angle: f64,
}

/// A point given in the coordinates of a pattern polygon.
#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    /// Polygon of the pattern whose coordinates x, y refer to.
    #[arg(long, default_value_t = 0)]
    pub polygon: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TraceArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub point: PointArgs,
    /// Direction in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Stop after this flat length.
    #[arg(long, conflicts_with = "crossings")]
    pub length: Option<f64>,
    /// Stop after this many edge crossings.
    #[arg(long)]
    pub crossings: Option<usize>,
    /// Emit the discrepancy report over an NxN grid per face (JSON) instead of segments.
    #[arg(long)]
    pub discrepancy: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ActArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Matrix entries a,b,c,d of [[a, b], [c, d]].
    #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true)]
    pub matrix: [f64; 4],
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FlowArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Total flow time.
    #[arg(long)]
    pub t: f64,
    /// Sampling step.
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    /// Keep the triangulation Delaunay while flowing.
    #[arg(long)]
    pub renormalize: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SystoleArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Also list saddle connections of length at most this.
    #[arg(long)]
    pub length: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DivergeArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value_t = 8.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    /// Start of the slope window in the JSON summary.
    #[arg(long, default_value_t = 2.0)]
    pub from: f64,
    /// End of the slope window in the JSON summary.
    #[arg(long)]
    pub to: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Triangle with angles ALPHA at (0,0) and BETA at (1,0), radians.
    #[arg(long, value_parser = parse_pair, conflicts_with = "vertices")]
    pub triangle: Option<[f64; 2]>,
    /// Polygon vertices "x,y;x,y;..." in counterclockwise order (default: unit square).
    #[arg(long, allow_hyphen_values = true)]
    pub vertices: Option<String>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BilliardArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    /// Direction in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Stop after this flat length.
    #[arg(long, conflicts_with = "reflections")]
    pub length: Option<f64>,
    /// Stop after this many reflections.
    #[arg(long)]
    pub reflections: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct UnfoldArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Compare direct and unfolded traces over this many reflections (needs --x, --y, --angle).
    #[arg(long, requires_all = ["x", "y", "angle"])]
    pub fold_check: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub angle: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Scene spec JSON file ({"m": 2, "cell": [[1,0],[0,1]], "obstacle": {...}}).
    #[arg(long, conflicts_with_all = ["m", "width", "height", "steps"])]
    pub scene: Option<PathBuf>,
    /// Number of obstacle steps (1 = rectangle).
    #[arg(long)]
    pub m: Option<usize>,
    /// Rectangle width for m = 1.
    #[arg(long)]
    pub width: Option<f64>,
    /// Rectangle height for m = 1.
    #[arg(long)]
    pub height: Option<f64>,
    /// Staircase half-extents "x1,y1;x2,y2;..." for m >= 2.
    #[arg(long)]
    pub steps: Option<String>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct WindtreeArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    /// Direction in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Length budget.
    #[arg(long)]
    pub length: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Exit with status 1 if the exponent misses its reference value.
    #[arg(long)]
    pub check: bool,
    /// Reference value for --check (default: the theoretical rate).
    #[arg(long)]
    pub expect: Option<f64>,
    /// Allowed deviation for --check.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DiffusionArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Trajectory length per direction.
    #[arg(long, default_value_t = 1e6)]
    pub tmax: f64,
    #[arg(long, default_value_t = 20)]
    pub directions: usize,
    /// Also write the (ln T, ln diameter) windows as CSV here.
    #[arg(long)]
    pub windows: Option<PathBuf>,
    #[command(flatten)]
    pub check: CheckArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BaselineArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Constant bias "dx,dy" added to every step.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub drift: Option<[f64; 2]>,
    /// Also write the (ln T, ln diameter) windows as CSV here.
    #[arg(long)]
    pub windows: Option<PathBuf>,
    #[command(flatten)]
    pub check: CheckArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct IlluminateArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, default_value_t = 10_000)]
    pub rays: usize,
    #[arg(long, default_value_t = 200.0)]
    pub ray_length: f64,
    /// Grid resolution per face.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ErgodicityArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[command(flatten)]
    pub point: PointArgs,
    /// Direction in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: f64,
    /// Comma-separated trajectory lengths.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub lengths: Vec<f64>,
    /// Grid resolution per face.
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AcceptArgs {
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

pub fn parse_matrix(s: &str) -> Result<[f64; 4], String> {
    parse_floats::<4>(s)
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_floats::<2>(s)
}

/// Parse "x,y;x,y;..." into points.
pub fn parse_points(s: &str) -> Result<Vec<[f64; 2]>, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_pair).collect()
}

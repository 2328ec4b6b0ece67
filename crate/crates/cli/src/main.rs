mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use ggi_core::fixtures::{FixtureKind, FixtureParams};
use ggi_core::raster::InterpolationMode;
use ggi_core::stitcher::DtwCostSpace;

use crate::error::CliError;

/// Garment geometry image codec: sewing patterns and panel meshes in,
/// aligned UV rasters out, and back to a seam-closed mesh.
///
/// Reports are line-delimited JSON on stdout. Exit status is 0 on success,
/// 1 when the input fails validation, 2 on I/O or format errors.
/// GGI_THREADS caps the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "ggi", version, propagate_version = true)]
pub struct Cli {
    /// Omit the wall-clock timing line so stdout is byte-reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a pattern file and list every invariant violation.
    Validate {
        /// Pattern JSON file.
        pattern: PathBuf,
    },
    /// Pack panel bounding boxes into a square layout.
    Pack {
        /// Pattern JSON file.
        pattern: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Also write the layout JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterize a pattern and its panel meshes into a GGI file set.
    Encode {
        /// Pattern JSON file.
        pattern: PathBuf,
        /// Directory holding one `<panel_id>.obj` per panel, with `vt` in pattern centimeters.
        #[arg(long)]
        meshes: PathBuf,
        /// Output stem; writes `<stem>.semantic.png`, `.stitch.png`, `.geom.f32` and `.ggi.json`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        encode: EncodeArgs,
    },
    /// Remesh and stitch a GGI file set into one OBJ mesh.
    Decode {
        /// GGI stem (a trailing `.ggi` is accepted).
        input: PathBuf,
        /// Output OBJ path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-seam report JSON here.
        #[arg(long)]
        seams: Option<PathBuf>,
        #[command(flatten)]
        stitch: StitchArgs,
    },
    /// Encode and decode an analytic fixture and score it against the exact surface.
    Roundtrip {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        encode: EncodeArgs,
        #[command(flatten)]
        stitch: StitchArgs,
        /// Seed of the surface samplers.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the decoded mesh here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predicted GGI against a reference GGI, two meshes, or both.
    #[command(group(ArgGroup::new("inputs").required(true).multiple(true).args(["gt", "gt_mesh"])))]
    Eval {
        /// Reference GGI stem.
        #[arg(long, requires = "pred")]
        gt: Option<PathBuf>,
        /// Predicted GGI stem.
        #[arg(long, requires = "gt")]
        pred: Option<PathBuf>,
        /// Edge band weight.
        #[arg(long, default_value_t = ggi_core::metrics::ALPHA)]
        alpha: f64,
        /// Edge band half-width in pixels.
        #[arg(long, default_value_t = ggi_core::metrics::BAND_WIDTH)]
        band: u32,
        /// Reference mesh for the area-sampled Chamfer distance.
        #[arg(long, requires = "pred_mesh")]
        gt_mesh: Option<PathBuf>,
        /// Predicted mesh for the area-sampled Chamfer distance.
        #[arg(long, requires = "gt_mesh")]
        pred_mesh: Option<PathBuf>,
        /// Surface samples per mesh.
        #[arg(long, default_value_t = ggi_core::pipeline::SURFACE_SAMPLES)]
        samples: usize,
        /// Seed of the surface samplers.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write an analytic fixture as a pattern file plus per-panel OBJ meshes.
    Fixture {
        #[command(flatten)]
        fixture: FixtureArgs,
        /// Output directory; receives `pattern.json` and `meshes/<panel_id>.obj`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GridArgs {
    /// Raster side in pixels, 32 to 4096.
    #[arg(long, default_value_t = 512)]
    pub resolution: u32,
    /// Empty pixels around every placement, at least 1.
    #[arg(long, default_value_t = 2)]
    pub margin: u32,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct EncodeArgs {
    /// Reject panel types missing from the standard palette.
    #[arg(long)]
    pub strict: bool,
    /// Geometry interpolation.
    #[arg(long, value_enum, default_value_t = Mode::Hybrid)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct StitchArgs {
    /// Space of the seam alignment cost.
    #[arg(long, value_enum, default_value_t = CostSpace::World)]
    pub dtw_cost_space: CostSpace,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FixtureArgs {
    /// Fixture kind: flat_grid, cylinder_panel, two_square_stitched, dart_square or multi_panel_skirt.
    #[arg(long, value_parser = parse_fixture_kind)]
    pub fixture: FixtureKind,
    /// Mesh cells per panel side.
    #[arg(long, default_value_t = FixtureParams::default().n)]
    pub n: usize,
    /// Mesh columns around the cylinder.
    #[arg(long, default_value_t = FixtureParams::default().segments)]
    pub segments: usize,
    /// Square and trapezoid size in cm.
    #[arg(long, default_value_t = FixtureParams::default().size)]
    pub size: f64,
    /// Cylinder and skirt radius in cm.
    #[arg(long, default_value_t = FixtureParams::default().radius)]
    pub radius: f64,
    /// Cylinder and skirt height in cm.
    #[arg(long, default_value_t = FixtureParams::default().height)]
    pub height: f64,
    /// Dart notch depth in cm.
    #[arg(long, default_value_t = FixtureParams::default().depth)]
    pub depth: f64,
    /// Skirt panel count.
    #[arg(long, default_value_t = FixtureParams::default().panels)]
    pub panels: usize,
}

impl FixtureArgs {
    pub fn params(&self) -> FixtureParams {
        FixtureParams {
            n: self.n,
            segments: self.segments,
            size: self.size,
            radius: self.radius,
            height: self.height,
            depth: self.depth,
            panels: self.panels,
        }
    }
}

fn parse_fixture_kind(s: &str) -> Result<FixtureKind, String> {
    s.parse().map_err(|e: ggi_core::fixtures::FixtureError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Linear along boundary edges, barycentric inside.
    Hybrid,
    /// Vertex and barycentric passes only.
    Barycentric,
}

impl From<Mode> for InterpolationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Hybrid => InterpolationMode::Hybrid,
            Mode::Barycentric => InterpolationMode::BarycentricOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostSpace {
    /// World-space distance between chain vertices.
    #[value(name = "3d")]
    World,
    /// Pixel-space distance between chain pixels.
    Uv,
}

impl From<CostSpace> for DtwCostSpace {
    fn from(c: CostSpace) -> Self {
        match c {
            CostSpace::World => DtwCostSpace::World,
            CostSpace::Uv => DtwCostSpace::Uv,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GGI_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Validation(format!("GGI_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("ggi: error: {line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

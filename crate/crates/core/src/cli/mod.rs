//! The `camcal` command line: manifest-driven encoding, recovery, evaluation,
//! robustness sweeps, metrology and point-cloud alignment.
//!
//! Tabular outputs are tab-separated with `#` header lines; recovery output
//! is line-delimited JSON whose first line is a header object. Every header
//! records the principal-point convention the numbers are expressed in.

mod commands;
pub mod io;
pub mod manifest;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::camera::Intrinsics;
use crate::camera_image::ChannelVariant;
use crate::diffusion::MultiresConfig;
use crate::error::Error;
use crate::recovery::{RansacConfig, SamplingMode};

pub use manifest::{read_manifest, ManifestRecord};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "CAMCAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "camcal", version, about = "Camera-image intrinsics encoding, recovery and evaluation")]
pub struct Cli {
    /// Principal point measured from the center of the top-left pixel (default).
    #[arg(long, global = true, overrides_with = "pixel_corner")]
    pub pixel_center: bool,
    /// Principal point measured from the top-left corner of the image.
    #[arg(long, global = true, overrides_with = "pixel_center")]
    pub pixel_corner: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one CAMI file per manifest record.
    Encode(EncodeArgs),
    /// Recover intrinsics from CAMI files.
    Recover(RecoverArgs),
    /// Compare recovered intrinsics against the manifest.
    EvalCalib(EvalCalibArgs),
    /// Depth metrics for predicted depth maps listed in the manifest.
    EvalDepth(EvalDepthArgs),
    /// Recovery error under synthetic corruption of the camera image.
    Sweep(SweepArgs),
    /// Metric distances between pixel pairs of a depth map.
    Metrology(MetrologyArgs),
    /// Similarity alignment of two corresponding PLY point clouds.
    Align(AlignArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantKind {
    Grayscale,
    Theta,
    Constant,
}

#[derive(Debug, Clone, Args)]
pub struct VariantArgs {
    /// Content of the third channel.
    #[arg(long, value_enum, default_value_t = VariantKind::Grayscale)]
    pub variant: VariantKind,
    /// Fill value for `--variant constant`, on the [0, 1] gray scale.
    #[arg(long, default_value_t = 0.5)]
    pub constant_value: f64,
}

impl VariantArgs {
    pub fn channel_variant(&self) -> ChannelVariant {
        match self.variant {
            VariantKind::Grayscale => ChannelVariant::Grayscale,
            VariantKind::Theta => ChannelVariant::DuplicateTheta,
            VariantKind::Constant => ChannelVariant::Constant(self.constant_value),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RansacArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 512)]
    pub ransac_iters: usize,
    /// Inlier band in pixels.
    #[arg(long, default_value_t = 2.0)]
    pub inlier_px: f64,
    #[arg(long, default_value_t = 0.5)]
    pub min_inlier_fraction: f64,
    /// Fit on every pixel instead of a sample grid.
    #[arg(long)]
    pub full: bool,
    /// Sample grid size per axis.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Keep the best two-point hypothesis without least-squares refinement.
    #[arg(long)]
    pub no_refine: bool,
}

impl RansacArgs {
    pub fn config(&self) -> RansacConfig {
        RansacConfig {
            iterations: self.ransac_iters,
            inlier_threshold: self.inlier_px,
            min_inlier_fraction: self.min_inlier_fraction,
            seed: self.seed,
            refine: !self.no_refine,
            sampling: if self.full {
                SamplingMode::Full
            } else {
                SamplingMode::Grid { max_per_axis: self.grid }
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; files are named `<key>.cami`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub variant: VariantArgs,
    /// Also write `<key>.png` previews.
    #[arg(long)]
    pub preview: bool,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// CAMI files; keys are the file stems.
    pub paths: Vec<PathBuf>,
    /// Recover every manifest record from `<cami-dir>/<key>.cami`.
    #[arg(long, requires = "cami_dir")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub cami_dir: Option<PathBuf>,
    #[command(flatten)]
    pub ransac: RansacArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalCalibArgs {
    /// Output of `camcal recover`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Alignment {
    None,
    Scale,
    Affine,
}

#[derive(Debug, Args)]
pub struct EvalDepthArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Alignment::None)]
    pub alignment: Alignment,
    /// Ignore ground truth closer than this (meters).
    #[arg(long)]
    pub min_depth: Option<f64>,
    /// Ignore ground truth farther than this (meters).
    #[arg(long)]
    pub max_depth: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    /// I.i.d. Gaussian noise on both angles; level is sigma in radians.
    Gaussian,
    /// Multi-resolution noise on both angles; level is sigma in radians.
    Multires,
    /// Uniform quantization of the normalized image; level is the bin width.
    Quantize,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Multires => "multires",
            NoiseKind::Quantize => "quantize",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long = "kind", value_enum, value_delimiter = ',', required = true)]
    pub kinds: Vec<NoiseKind>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    /// Noise seeds: a comma list and/or half-open ranges such as `0..50`.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    /// Corrupted copies averaged before recovery.
    #[arg(long, default_value_t = 1)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 4)]
    pub multires_levels: usize,
    #[arg(long, default_value_t = 0.5)]
    pub multires_decay: f64,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn multires(&self) -> MultiresConfig {
        MultiresConfig {
            levels: self.multires_levels,
            decay: self.multires_decay,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetrologyArgs {
    /// Depth map (16-bit PNG or raw float32).
    #[arg(long)]
    pub depth: PathBuf,
    /// Meters per stored unit for PNG depth.
    #[arg(long)]
    pub depth_scale: Option<f64>,
    /// `fx,fy,cx,cy`.
    #[arg(long, conflicts_with = "cami", required_unless_present = "cami")]
    pub intrinsics: Option<String>,
    /// Recover the intrinsics from this camera image instead.
    #[arg(long)]
    pub cami: Option<PathBuf>,
    /// `u1,v1,u2,v2`; repeatable.
    #[arg(long = "pair", required = true)]
    pub pairs: Vec<String>,
    /// Also export the unprojected point cloud.
    #[arg(long)]
    pub ply: Option<PathBuf>,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    /// Write the aligned source cloud here.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Center,
    Corner,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Center => "pixel-center",
            Convention::Corner => "pixel-corner",
        }
    }

    pub fn parse(name: &str) -> Option<Convention> {
        match name {
            "pixel-center" => Some(Convention::Center),
            "pixel-corner" => Some(Convention::Corner),
            _ => None,
        }
    }

    /// External intrinsics to the internal pixel-center form.
    pub fn import(self, k: Intrinsics) -> Intrinsics {
        match self {
            Convention::Center => k,
            Convention::Corner => k.from_corner_convention(),
        }
    }

    pub fn export(self, k: Intrinsics) -> Intrinsics {
        match self {
            Convention::Center => k,
            Convention::Corner => k.to_corner_convention(),
        }
    }
}

/// Fatal command failure.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or unusable inputs; nothing was processed.
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(Error::Io {
            path: PathBuf::from("<output>"),
            source: e,
        })
    }
}

pub(crate) fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Per-record success counts of one command run.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Tally {
    pub ok: usize,
    pub failed: usize,
}

impl Tally {
    pub fn record<T, E>(&mut self, r: &std::result::Result<T, E>) {
        if r.is_ok() {
            self.ok += 1;
        } else {
            self.failed += 1;
        }
    }

    fn exit_code(self) -> u8 {
        if self.failed == 0 {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}

fn configure_threads() -> std::result::Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when the CLI is driven in-process.
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("global thread pool already initialized");
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let convention = if cli.pixel_corner {
        Convention::Corner
    } else {
        Convention::Center
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Encode(a) => commands::encode(a, convention),
        Command::Recover(a) => commands::recover(a, convention),
        Command::EvalCalib(a) => commands::eval_calib(a, convention),
        Command::EvalDepth(a) => commands::eval_depth(a),
        Command::Sweep(a) => sweep::sweep(a, convention),
        Command::Metrology(a) => commands::metrology(a, convention),
        Command::Align(a) => commands::align(a, convention),
    });
    match result {
        Ok(tally) => tally.exit_code(),
        Err(Failure::Usage(msg)) => {
            log::error!("{msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            log::error!("{e}");
            EXIT_PARTIAL
        }
    }
}

pub(crate) fn load_records(path: &std::path::Path) -> std::result::Result<Vec<ManifestRecord>, Failure> {
    let records = read_manifest(path).map_err(usage)?;
    if records.is_empty() {
        return Err(usage(format!("{}: no records", path.display())));
    }
    Ok(records)
}

pub(crate) fn header(command: &str, convention: Convention, extra: &[(&str, String)]) -> String {
    let mut line = format!(
        "# camcal {command} version={} convention={}",
        env!("CARGO_PKG_VERSION"),
        convention.name()
    );
    for (k, v) in extra {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}

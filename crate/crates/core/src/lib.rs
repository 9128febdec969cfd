//! Dense "camera image" representation of pinhole intrinsics.
//!
//! A camera image stores, per pixel, the azimuth and elevation of the viewing
//! ray plus the grayscale of the input frame. Because the azimuth depends only
//! on the column and a simple function of azimuth and elevation depends only
//! on the row, the intrinsics can be read back by fitting one line per axis.
//!
//! Besides the encoding and its RANSAC inversion the crate carries the
//! evaluation stack used around it: calibration errors, depth metrics and
//! alignment, unprojection and metrology, Procrustes alignment, and the
//! scheduler algebra of a v-prediction diffusion sampler (with a pluggable
//! predictor instead of a network).

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod camera_image;
pub mod cami;
pub mod cli;
pub mod depth;
pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod perturb;
pub mod ply;
pub mod recovery;

// Geometry types in the public API are nalgebra types.
pub use nalgebra;

pub use camera::{Axis, ImageDims, Intrinsics, ResizePadPlan};
pub use camera_image::{CameraImage, ChannelVariant, GrayImage, IncidenceMap, NormalizedImage};
pub use error::{Error, Result};
pub use recovery::{CalibError, RansacConfig, RansacReport, SamplingMode};

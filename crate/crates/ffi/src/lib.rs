//! C ABI over `camcal`.
//!
//! Every fallible function returns a [`CamcalStatus`]; on failure a message
//! for the calling thread is available from [`camcal_last_error`]. Camera
//! images cross the boundary as opaque [`CamcalCameraImage`] handles that the
//! caller releases with [`camcal_image_free`]. Panics never unwind into C;
//! they surface as `CAMCAL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use camcal::camera::fov_degrees;
use camcal::camera_image::{encode_variant, GrayImage};
use camcal::depth::{evaluate, DepthMap, DepthRange};
use camcal::geometry::{procrustes, PointCloud};
use camcal::nalgebra::Point3;
use camcal::recovery::{calib_error, ensemble, recover_intrinsics};
use camcal::{Axis, CameraImage, ChannelVariant, Error, ImageDims, Intrinsics, RansacConfig, SamplingMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamcalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimsMismatch = 3,
    RecoveryFailed = 4,
    Degenerate = 5,
    Io = 6,
    Format = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamcalVariant {
    Grayscale = 0,
    DuplicateTheta = 1,
    Constant = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamcalAxis {
    X = 0,
    Y = 1,
}

/// Pinhole intrinsics in pixels, principal point from the center of the
/// top-left pixel.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamcalIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamcalRansacConfig {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub seed: u64,
    pub refine: bool,
    /// Fit on every pixel instead of a `grid` × `grid` sample.
    pub full_sampling: bool,
    pub grid: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CamcalRecoveryStats {
    pub inliers_x: usize,
    pub samples_x: usize,
    pub inliers_y: usize,
    pub samples_y: usize,
    pub skipped_pixels: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CamcalDepthMetrics {
    pub abs_rel: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub si_log: f64,
    pub pixels: usize,
}

/// `x ↦ scale · (R x + t)`, `rotation` row-major.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CamcalSimilarity {
    pub scale: f64,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub rms_residual: f64,
}

/// Opaque camera image.
pub struct CamcalCameraImage {
    inner: CameraImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> CamcalStatus {
    match e {
        Error::InvalidIntrinsics(_)
        | Error::InvalidDims { .. }
        | Error::InvalidArgument(_)
        | Error::OutOfRange { .. }
        | Error::InvalidPixel { .. } => CamcalStatus::InvalidArgument,
        Error::DimsMismatch { .. } => CamcalStatus::DimsMismatch,
        Error::DegenerateSample(_) | Error::NonPositiveSlope(_) | Error::RansacFailed { .. } => {
            CamcalStatus::RecoveryFailed
        }
        Error::Empty(_) | Error::Singular(_) | Error::DegeneratePoints(_) => CamcalStatus::Degenerate,
        Error::Io { .. } => CamcalStatus::Io,
        Error::Format(_) | Error::Image(_) | Error::Json(_) => CamcalStatus::Format,
    }
}

struct Fail(CamcalStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CamcalStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, records its error, and turns panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CamcalStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CamcalStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CamcalStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(CamcalStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn intrinsics(k: &CamcalIntrinsics) -> Result<Intrinsics, Fail> {
    Ok(Intrinsics::new(k.fx, k.fy, k.cx, k.cy)?)
}

fn handle_out(out: *mut *mut CamcalCameraImage, ci: CameraImage) {
    // SAFETY: callers check `out` for null before computing `ci`.
    unsafe { *out = Box::into_raw(Box::new(CamcalCameraImage { inner: ci })) };
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next camcal call on the same thread.
#[no_mangle]
pub extern "C" fn camcal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn camcal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn camcal_ransac_config_default() -> CamcalRansacConfig {
    let d = RansacConfig::default();
    let grid = match d.sampling {
        SamplingMode::Grid { max_per_axis } => max_per_axis,
        SamplingMode::Full => 64,
    };
    CamcalRansacConfig {
        iterations: d.iterations,
        inlier_threshold: d.inlier_threshold,
        min_inlier_fraction: d.min_inlier_fraction,
        seed: d.seed,
        refine: d.refine,
        full_sampling: matches!(d.sampling, SamplingMode::Full),
        grid,
    }
}

/// Encodes intrinsics as a camera image. `gray` (row-major, values in
/// `[0, 1]`, `width * height` entries) is required for the grayscale variant
/// and ignored otherwise; `constant` is the fill of the constant variant.
///
/// # Safety
/// Pointers must be valid for the sizes described; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn camcal_encode(
    k: *const CamcalIntrinsics,
    width: usize,
    height: usize,
    gray: *const f64,
    variant: CamcalVariant,
    constant: f64,
    out: *mut *mut CamcalCameraImage,
) -> CamcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let k = intrinsics(as_ref(k, "intrinsics")?)?;
        let dims = ImageDims::new(width, height)?;
        let variant = match variant {
            CamcalVariant::Grayscale => ChannelVariant::Grayscale,
            CamcalVariant::DuplicateTheta => ChannelVariant::DuplicateTheta,
            CamcalVariant::Constant => ChannelVariant::Constant(constant),
        };
        let gray = match variant {
            ChannelVariant::Grayscale => Some(GrayImage::new(
                width,
                height,
                as_slice(gray, dims.len(), "gray")?.to_vec(),
            )?),
            _ => None,
        };
        handle_out(out, encode_variant(&k, dims, gray.as_ref(), variant)?);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_read(path: *const c_char, out: *mut *mut CamcalCameraImage) -> CamcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ci = camcal::cami::read_cami(path_arg(path)?)?;
        handle_out(out, ci);
        Ok(())
    })
}

/// # Safety
/// `image` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_write(image: *const CamcalCameraImage, path: *const c_char) -> CamcalStatus {
    guard(|| {
        let image = as_ref(image, "image")?;
        camcal::cami::write_cami(path_arg(path)?, &image.inner)?;
        Ok(())
    })
}

/// Width of a camera image, 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_width(image: *const CamcalCameraImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.width)
}

/// Height of a camera image, 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_height(image: *const CamcalCameraImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.height)
}

/// Copies channel 0 (azimuth), 1 (elevation) or 2 (third channel) into
/// `out`, which must hold exactly `width * height` values.
///
/// # Safety
/// `image` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_copy_channel(
    image: *const CamcalCameraImage,
    channel: usize,
    out: *mut f64,
    len: usize,
) -> CamcalStatus {
    guard(|| {
        let image = as_ref(image, "image")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if channel > 2 {
            return Err(Fail(CamcalStatus::InvalidArgument, format!("channel {channel} is not 0, 1 or 2")));
        }
        let src = image.inner.channel(channel);
        if len != src.len() {
            return Err(Fail(
                CamcalStatus::DimsMismatch,
                format!("buffer holds {len} values, channel has {}", src.len()),
            ));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(src);
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn camcal_image_free(image: *mut CamcalCameraImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Per-pixel mean of `count` camera images of equal size.
///
/// # Safety
/// `images` must point to `count` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn camcal_ensemble(
    images: *const *const CamcalCameraImage,
    count: usize,
    out: *mut *mut CamcalCameraImage,
) -> CamcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let handles = as_slice(images, count, "images")?;
        let owned: Vec<CameraImage> = handles
            .iter()
            .map(|&h| as_ref(h, "image").map(|i| i.inner.clone()))
            .collect::<Result<_, _>>()?;
        handle_out(out, ensemble(&owned)?);
        Ok(())
    })
}

/// Recovers intrinsics from a camera image. `config` may be NULL for the
/// defaults and `stats` may be NULL.
///
/// # Safety
/// `image` must be a live handle; `out` writable; `config`/`stats` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn camcal_recover(
    image: *const CamcalCameraImage,
    config: *const CamcalRansacConfig,
    out: *mut CamcalIntrinsics,
    stats: *mut CamcalRecoveryStats,
) -> CamcalStatus {
    guard(|| {
        let image = as_ref(image, "image")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = config.as_ref().copied().unwrap_or_else(|| camcal_ransac_config_default());
        let cfg = RansacConfig {
            iterations: c.iterations,
            inlier_threshold: c.inlier_threshold,
            min_inlier_fraction: c.min_inlier_fraction,
            seed: c.seed,
            refine: c.refine,
            sampling: if c.full_sampling {
                SamplingMode::Full
            } else {
                SamplingMode::Grid { max_per_axis: c.grid }
            },
        };
        let (k, report) = recover_intrinsics(&image.inner, &cfg)?;
        *out = CamcalIntrinsics {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
        };
        if let Some(s) = stats.as_mut() {
            *s = CamcalRecoveryStats {
                inliers_x: report.x.fit.inlier_count,
                samples_x: report.x.samples,
                inliers_y: report.y.fit.inlier_count,
                samples_y: report.y.samples,
                skipped_pixels: report.skipped_pixels,
            };
        }
        Ok(())
    })
}

/// Relative focal error `e_f` and principal-point error `e_b`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn camcal_calib_error(
    pred: *const CamcalIntrinsics,
    gt: *const CamcalIntrinsics,
    width: usize,
    height: usize,
    e_f: *mut f64,
    e_b: *mut f64,
) -> CamcalStatus {
    guard(|| {
        let pred = intrinsics(as_ref(pred, "pred")?)?;
        let gt = intrinsics(as_ref(gt, "gt")?)?;
        if e_f.is_null() || e_b.is_null() {
            return Err(null("output"));
        }
        let e = calib_error(&pred, &gt, ImageDims::new(width, height)?);
        *e_f = e.e_f;
        *e_b = e.e_b;
        Ok(())
    })
}

/// Field of view along one axis, in degrees.
///
/// # Safety
/// `k` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn camcal_fov_degrees(
    k: *const CamcalIntrinsics,
    width: usize,
    height: usize,
    axis: CamcalAxis,
    out: *mut f64,
) -> CamcalStatus {
    guard(|| {
        let k = intrinsics(as_ref(k, "intrinsics")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let axis = match axis {
            CamcalAxis::X => Axis::X,
            CamcalAxis::Y => Axis::Y,
        };
        *out = fov_degrees(&k, ImageDims::new(width, height)?, axis);
        Ok(())
    })
}

/// Depth metrics over pixels where both maps hold finite positive depth.
///
/// # Safety
/// `pred` and `gt` must hold `width * height` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn camcal_depth_metrics(
    pred: *const f64,
    gt: *const f64,
    width: usize,
    height: usize,
    out: *mut CamcalDepthMetrics,
) -> CamcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Fail(CamcalStatus::InvalidArgument, "dims overflow".into()))?;
        let pred = DepthMap::new(width, height, as_slice(pred, n, "pred")?.to_vec())?;
        let gt = DepthMap::new(width, height, as_slice(gt, n, "gt")?.to_vec())?;
        let m = evaluate(&pred, &gt, DepthRange::default())?;
        *out = CamcalDepthMetrics {
            abs_rel: m.abs_rel,
            delta1: m.delta1,
            delta2: m.delta2,
            delta3: m.delta3,
            si_log: m.si_log,
            pixels: m.pixels,
        };
        Ok(())
    })
}

/// Similarity aligning `source` onto `target`; both are `count` packed
/// `x, y, z` triples.
///
/// # Safety
/// `source` and `target` must hold `3 * count` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn camcal_procrustes(
    source: *const f64,
    target: *const f64,
    count: usize,
    out: *mut CamcalSimilarity,
) -> CamcalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = count
            .checked_mul(3)
            .ok_or_else(|| Fail(CamcalStatus::InvalidArgument, "count overflow".into()))?;
        let cloud = |p: &[f64]| PointCloud::from_points(p.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect());
        let fit = procrustes(
            &cloud(as_slice(source, n, "source")?),
            &cloud(as_slice(target, n, "target")?),
        )?;
        let t = &fit.transform;
        let mut rotation = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                rotation[3 * i + j] = t.rotation[(i, j)];
            }
        }
        *out = CamcalSimilarity {
            scale: t.scale,
            rotation,
            translation: [t.translation.x, t.translation.y, t.translation.z],
            rms_residual: fit.rms_residual,
        };
        Ok(())
    })
}

//! Intrinsics recovery from a camera image.
//!
//! For an exact encoding every pixel satisfies
//!
//! ```text
//! u = fx · tan θ + cx
//! v = fy · cos φ / (cos θ · sin φ) + cy
//! ```
//!
//! so each axis is a line whose slope is the focal length and whose intercept
//! is the principal point. Both lines are fitted with seeded RANSAC over
//! two-point hypotheses followed by an optional least-squares refit on the
//! consensus set.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{fov_degrees, Axis, ImageDims, Intrinsics};
use crate::camera_image::CameraImage;
use crate::error::{Error, Result};

/// Minimum abscissa separation for a two-point hypothesis.
pub const DEGENERACY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Uniform grid of at most `max_per_axis` columns by `max_per_axis` rows.
    Grid { max_per_axis: usize },
    /// Every pixel.
    Full,
}

impl Default for SamplingMode {
    fn default() -> Self {
        SamplingMode::Grid { max_per_axis: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier band in pixels, measured along the coordinate axis.
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub seed: u64,
    pub refine: bool,
    pub sampling: SamplingMode,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: 512,
            inlier_threshold: 2.0,
            min_inlier_fraction: 0.5,
            seed: 0,
            refine: true,
            sampling: SamplingMode::default(),
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("ransac needs at least one iteration".into()));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold
            )));
        }
        if !(self.min_inlier_fraction > 0.0 && self.min_inlier_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "min inlier fraction must be in (0, 1], got {}",
                self.min_inlier_fraction
            )));
        }
        if let SamplingMode::Grid { max_per_axis } = self.sampling {
            if max_per_axis < 2 {
                return Err(Error::InvalidArgument("grid sampling needs at least 2 positions per axis".into()));
            }
        }
        Ok(())
    }
}

/// Result of fitting `coord = slope · a + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    /// RMS of the inlier residuals against the returned line, in pixels.
    pub rms_residual: f64,
    /// Index of the winning hypothesis.
    pub best_trial: usize,
    /// Hypotheses rejected as degenerate or with non-positive slope.
    pub rejected_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    pub fit: LineFit,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacReport {
    pub x: AxisReport,
    pub y: AxisReport,
    /// Sample positions dropped because their angles fall outside the valid
    /// open ranges (padding, saturated quantization, heavy noise).
    pub skipped_pixels: usize,
}

/// The two line abscissas of a pixel: `(tan θ, 1 / (cos θ · tan φ))`.
pub fn pixel_abscissas(theta: f64, phi: f64) -> Result<(f64, f64)> {
    if !(theta > -FRAC_PI_2 && theta < FRAC_PI_2) {
        return Err(Error::OutOfRange {
            value: theta,
            min: -FRAC_PI_2,
            max: FRAC_PI_2,
        });
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::OutOfRange {
            value: phi,
            min: 0.0,
            max: PI,
        });
    }
    let (sin_phi, cos_phi) = phi.sin_cos();
    Ok((theta.tan(), cos_phi / (theta.cos() * sin_phi)))
}

/// Line through two `(abscissa, coordinate)` points.
pub fn solve_two_point(p1: (f64, f64), p2: (f64, f64)) -> Result<(f64, f64)> {
    let da = p2.0 - p1.0;
    if !(da.abs() > DEGENERACY_EPS) {
        return Err(Error::DegenerateSample(da.abs()));
    }
    let slope = (p2.1 - p1.1) / da;
    if !(slope > 0.0) {
        return Err(Error::NonPositiveSlope(slope));
    }
    Ok((slope, p1.1 - slope * p1.0))
}

/// Independent stream per trial so trials can be evaluated in any order.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn draw_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

#[inline]
fn count_inliers(points: &[(f64, f64)], slope: f64, intercept: f64, threshold: f64) -> usize {
    points
        .iter()
        .filter(|(a, c)| (c - (slope * a + intercept)).abs() <= threshold)
        .count()
}

/// Ordinary least squares of coordinate on abscissa over the selected points.
fn least_squares(points: &[(f64, f64)], mask: &[bool]) -> Option<(f64, f64)> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .zip(mask)
        .filter_map(|(p, &m)| m.then_some(*p))
        .collect();
    let n = selected.len() as f64;
    if selected.len() < 2 {
        return None;
    }
    let mean_a = selected.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_c = selected.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = selected.iter().fold((0.0, 0.0), |(sxx, sxy), (a, c)| {
        let da = a - mean_a;
        (sxx + da * da, sxy + da * (c - mean_c))
    });
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, mean_c - slope * mean_a))
}

pub fn ransac_line(points: &[(f64, f64)], cfg: &RansacConfig) -> Result<LineFit> {
    cfg.validate()?;
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "line fitting needs at least 2 points, got {n}"
        )));
    }
    let threshold = cfg.inlier_threshold;
    // (inliers, trial, slope, intercept); the winner is the largest count,
    // ties broken by the lowest trial index, so the reduction order is
    // irrelevant.
    type Hypothesis = (usize, usize, f64, f64);
    let pick = |a: Option<Hypothesis>, b: Option<Hypothesis>| match (a, b) {
        (Some(x), Some(y)) => {
            if (y.0, std::cmp::Reverse(y.1)) > (x.0, std::cmp::Reverse(x.1)) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    };
    let (best, rejected) = (0..cfg.iterations)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let (i, j) = draw_pair(&mut rng, n);
            match solve_two_point(points[i], points[j]) {
                Ok((slope, intercept)) => (
                    Some((count_inliers(points, slope, intercept, threshold), trial, slope, intercept)),
                    0usize,
                ),
                Err(_) => (None, 1usize),
            }
        })
        .reduce(|| (None, 0), |a, b| (pick(a.0, b.0), a.1 + b.1));

    let required = ((cfg.min_inlier_fraction * n as f64).ceil() as usize).max(2);
    let Some((count, best_trial, slope, intercept)) = best else {
        return Err(Error::RansacFailed {
            axis: "line",
            best_inliers: 0,
            samples: n,
            required,
        });
    };
    if count < required {
        return Err(Error::RansacFailed {
            axis: "line",
            best_inliers: count,
            samples: n,
            required,
        });
    }
    let inliers: Vec<bool> = points
        .iter()
        .map(|(a, c)| (c - (slope * a + intercept)).abs() <= threshold)
        .collect();
    let (slope, intercept) = if cfg.refine {
        match least_squares(points, &inliers) {
            Some((s, b)) if s > 0.0 && s.is_finite() && b.is_finite() => (s, b),
            _ => (slope, intercept),
        }
    } else {
        (slope, intercept)
    };
    let sq: f64 = points
        .iter()
        .zip(&inliers)
        .filter(|(_, &m)| m)
        .map(|((a, c), _)| {
            let r = c - (slope * a + intercept);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        inlier_count: count,
        inliers,
        rms_residual: (sq / count as f64).sqrt(),
        best_trial,
        rejected_trials: rejected,
    })
}

/// Evenly spaced integer positions covering `0..extent`, at most `max` of them.
pub fn sample_positions(extent: usize, max: usize) -> Vec<usize> {
    if extent <= max {
        return (0..extent).collect();
    }
    (0..max)
        .map(|i| ((i as f64) * (extent - 1) as f64 / (max - 1) as f64).round() as usize)
        .collect()
}

/// `(abscissa, pixel coordinate)` pairs for one line fit.
pub type LineSamples = Vec<(f64, f64)>;

/// `(a_u, u)` and `(a_v, v)` samples of a camera image plus the number of
/// skipped positions.
pub fn line_samples(ci: &CameraImage, sampling: SamplingMode) -> (LineSamples, LineSamples, usize) {
    let (us, vs) = match sampling {
        SamplingMode::Full => ((0..ci.width).collect(), (0..ci.height).collect()),
        SamplingMode::Grid { max_per_axis } => (
            sample_positions(ci.width, max_per_axis),
            sample_positions(ci.height, max_per_axis),
        ),
    };
    let mut xs = Vec::with_capacity(us.len() * vs.len());
    let mut ys = Vec::with_capacity(us.len() * vs.len());
    let mut skipped = 0;
    for &v in &vs {
        for &u in &us {
            let (theta, phi) = ci.angles(u, v);
            match pixel_abscissas(theta, phi) {
                Ok((a_u, a_v)) if a_u.is_finite() && a_v.is_finite() => {
                    xs.push((a_u, u as f64));
                    ys.push((a_v, v as f64));
                }
                _ => skipped += 1,
            }
        }
    }
    (xs, ys, skipped)
}

fn fit_axis(points: &[(f64, f64)], cfg: &RansacConfig, axis: Axis) -> Result<AxisReport> {
    let fit = ransac_line(points, cfg).map_err(|e| match e {
        Error::RansacFailed {
            best_inliers,
            samples,
            required,
            ..
        } => Error::RansacFailed {
            axis: axis.name(),
            best_inliers,
            samples,
            required,
        },
        other => other,
    })?;
    Ok(AxisReport {
        fit,
        samples: points.len(),
    })
}

pub fn recover_intrinsics(ci: &CameraImage, cfg: &RansacConfig) -> Result<(Intrinsics, RansacReport)> {
    cfg.validate()?;
    let (xs, ys, skipped) = line_samples(ci, cfg.sampling);
    let (x, y) = rayon::join(|| fit_axis(&xs, cfg, Axis::X), || fit_axis(&ys, cfg, Axis::Y));
    let (x, y) = (x?, y?);
    let k = Intrinsics::new(x.fit.slope, y.fit.slope, x.fit.intercept, y.fit.intercept)?;
    Ok((
        k,
        RansacReport {
            x,
            y,
            skipped_pixels: skipped,
        },
    ))
}

/// Per-pixel mean of equally sized camera images. Values are summed in
/// sorted order so the result does not depend on the order of `images`.
pub fn ensemble(images: &[CameraImage]) -> Result<CameraImage> {
    let first = images.first().ok_or(Error::Empty("ensemble of zero images"))?;
    for ci in &images[1..] {
        if ci.dims() != first.dims() {
            return Err(Error::DimsMismatch {
                expected: first.dims(),
                got: ci.dims(),
            });
        }
    }
    let n = images.len() as f64;
    let mut out = first.clone();
    let mut scratch = Vec::with_capacity(images.len());
    for c in 0..3 {
        let dst = out.channel_mut(c);
        for (i, d) in dst.iter_mut().enumerate() {
            scratch.clear();
            scratch.extend(images.iter().map(|ci| ci.channel(c)[i]));
            scratch.sort_by(|a, b| a.total_cmp(b));
            *d = scratch.iter().sum::<f64>() / n;
        }
    }
    Ok(out)
}

/// Relative calibration errors of `pred` against `gt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibError {
    pub e_f: f64,
    pub e_b: f64,
}

pub fn calib_error(pred: &Intrinsics, gt: &Intrinsics, dims: ImageDims) -> CalibError {
    let e_f = ((pred.fx - gt.fx).abs() / gt.fx).max((pred.fy - gt.fy).abs() / gt.fy);
    let e_b = (2.0 * (pred.cx - gt.cx).abs() / dims.width as f64)
        .max(2.0 * (pred.cy - gt.cy).abs() / dims.height as f64);
    CalibError { e_f, e_b }
}

/// Largest absolute field-of-view difference over both axes, in degrees.
pub fn fov_error_degrees(pred: &Intrinsics, gt: &Intrinsics, dims: ImageDims) -> f64 {
    [Axis::X, Axis::Y]
        .into_iter()
        .map(|axis| (fov_degrees(pred, dims, axis) - fov_degrees(gt, dims, axis)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera_image::{encode_variant, ChannelVariant};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::FRAC_PI_4;

    fn k0() -> Intrinsics {
        Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
    }

    fn encoded(k: &Intrinsics, w: usize, h: usize) -> CameraImage {
        encode_variant(k, ImageDims::new(w, h).unwrap(), None, ChannelVariant::Constant(0.5)).unwrap()
    }

    #[test]
    fn abscissas() {
        let (a_u, a_v) = pixel_abscissas(0.0, FRAC_PI_2).unwrap();
        assert_eq!(a_u, 0.0);
        assert!(a_v.abs() < 1e-16);
        let (a_u, a_v) = pixel_abscissas(FRAC_PI_4, FRAC_PI_2).unwrap();
        assert!((a_u - 1.0).abs() < 1e-15 && a_v.abs() < 1e-16);
        let (_, a_v) = pixel_abscissas(0.0, FRAC_PI_4).unwrap();
        assert!((a_v - 1.0).abs() < 1e-15);
        assert!(pixel_abscissas(FRAC_PI_2, 1.0).is_err());
        assert!(pixel_abscissas(0.0, 0.0).is_err());
        assert!(pixel_abscissas(0.0, PI).is_err());
        assert!(pixel_abscissas(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn two_point_solver() {
        assert_eq!(solve_two_point((0.0, 320.0), (1.0, 820.0)).unwrap(), (500.0, 320.0));
        assert_eq!(solve_two_point((-1.0, -180.0), (1.0, 820.0)).unwrap(), (500.0, 320.0));
        assert!(matches!(solve_two_point((0.5, 1.0), (0.5, 2.0)), Err(Error::DegenerateSample(_))));
        assert!(matches!(solve_two_point((0.0, 1.0), (1.0, 0.0)), Err(Error::NonPositiveSlope(_))));
    }

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..200).map(|i| {
            let a = -1.0 + i as f64 * 0.01;
            (a, 500.0 * a + 320.0)
        }).collect();
        let fit = ransac_line(&pts, &RansacConfig::default()).unwrap();
        assert!((fit.slope - 500.0).abs() < 1e-9 && (fit.intercept - 320.0).abs() < 1e-9);
        assert_eq!(fit.inlier_count, pts.len());
        assert!(fit.inliers.iter().all(|&m| m));
    }

    #[test]
    fn degenerate_and_short_inputs_fail() {
        let pts = vec![(0.3, 1.0), (0.3, 5.0), (0.3, 9.0)];
        assert!(matches!(ransac_line(&pts, &RansacConfig::default()), Err(Error::RansacFailed { best_inliers: 0, .. })));
        assert!(ransac_line(&[(0.0, 0.0)], &RansacConfig::default()).is_err());
        let bad = RansacConfig { iterations: 0, ..Default::default() };
        assert!(ransac_line(&[(0.0, 0.0), (1.0, 1.0)], &bad).is_err());
        let bad = RansacConfig { inlier_threshold: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RansacConfig { min_inlier_fraction: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn contaminated(seed: u64) -> Vec<(f64, f64)> {
        // 70% on u = 500 a + 320 with 0.5 px noise, 30% uniform clutter.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        (0..400)
            .map(|i| {
                let a = rng.random_range(-0.7..0.7);
                if i % 10 < 7 {
                    (a, 500.0 * a + 320.0 + noise.sample(&mut rng))
                } else {
                    (a, rng.random_range(-100.0..800.0))
                }
            })
            .collect()
    }

    #[test]
    fn tolerates_thirty_percent_outliers() {
        let cfg = RansacConfig { min_inlier_fraction: 0.5, ..Default::default() };
        for seed in 0..100 {
            let pts = contaminated(seed);
            let fit = ransac_line(&pts, &RansacConfig { seed, ..cfg }).unwrap();
            assert!((fit.slope - 500.0).abs() / 500.0 < 0.01, "seed {seed}: slope {}", fit.slope);
            assert!((fit.intercept - 320.0).abs() / 320.0 < 0.01, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = contaminated(7);
        let cfg = RansacConfig { seed: 99, ..Default::default() };
        let a = ransac_line(&pts, &cfg).unwrap();
        let b = ransac_line(&pts, &cfg).unwrap();
        assert_eq!(a, b);
        // sequential evaluation of the same trial streams picks the same winner
        let mut best = (0usize, usize::MAX);
        for trial in 0..cfg.iterations {
            let mut rng = trial_rng(cfg.seed, trial);
            let (i, j) = draw_pair(&mut rng, pts.len());
            if let Ok((s, c)) = solve_two_point(pts[i], pts[j]) {
                let n = count_inliers(&pts, s, c, cfg.inlier_threshold);
                if n > best.0 {
                    best = (n, trial);
                }
            }
        }
        assert_eq!((a.inlier_count, a.best_trial), best);
    }

    #[test]
    fn inlier_count_grows_with_threshold() {
        let pts = contaminated(3);
        let mut last = 0;
        for t in [0.5, 1.0, 2.0, 4.0, 8.0, 50.0, 1000.0] {
            let cfg = RansacConfig { inlier_threshold: t, min_inlier_fraction: 0.01, refine: false, ..Default::default() };
            let fit = ransac_line(&pts, &cfg).unwrap();
            assert!(fit.inlier_count >= last, "threshold {t}");
            last = fit.inlier_count;
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let (k, report) = recover_intrinsics(&encoded(&k0(), 640, 480), &RansacConfig::default()).unwrap();
        let e = calib_error(&k, &k0(), ImageDims::new(640, 480).unwrap());
        assert!(e.e_f < 1e-9 && e.e_b < 1e-9, "{e:?}");
        assert_eq!(report.x.samples, 64 * 64);
        assert_eq!(report.x.fit.inlier_count, 64 * 64);
        assert_eq!(report.skipped_pixels, 0);

        let full = RansacConfig { sampling: SamplingMode::Full, ..Default::default() };
        let (k, report) = recover_intrinsics(&encoded(&k0(), 64, 48), &full).unwrap();
        assert_eq!(report.y.samples, 64 * 48);
        assert!(calib_error(&k, &k0(), ImageDims::new(64, 48).unwrap()).e_f < 1e-9);
    }

    #[test]
    fn distinct_seeds_agree_on_clean_input() {
        let ci = encoded(&Intrinsics::new(900.0, 700.0, 100.0, 300.0).unwrap(), 320, 400);
        let (a, _) = recover_intrinsics(&ci, &RansacConfig { seed: 1, ..Default::default() }).unwrap();
        let (b, _) = recover_intrinsics(&ci, &RansacConfig { seed: 2, ..Default::default() }).unwrap();
        for (x, y) in [(a.fx, b.fx), (a.fy, b.fy), (a.cx, b.cx), (a.cy, b.cy)] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn padded_border_is_skipped() {
        let mut ci = encoded(&k0(), 100, 80);
        for v in 0..10 {
            for u in 0..100 {
                let i = ci.index(u, v);
                ci.theta[i] = 0.0;
                ci.phi[i] = 0.0;
            }
        }
        let cfg = RansacConfig {
            sampling: SamplingMode::Full,
            ..Default::default()
        };
        let (k, report) = recover_intrinsics(&ci, &cfg).unwrap();
        assert_eq!(report.skipped_pixels, 1000);
        assert!(calib_error(&k, &k0(), ImageDims::new(100, 80).unwrap()).e_f < 1e-9);
    }

    #[test]
    fn ensemble_basics() {
        let ci = encoded(&k0(), 16, 12);
        let same = ensemble(&[ci.clone(), ci.clone(), ci.clone()]).unwrap();
        for c in 0..3 {
            for (a, b) in same.channel(c).iter().zip(ci.channel(c)) {
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
            }
        }
        let mut plus = ci.clone();
        let mut minus = ci.clone();
        for c in 0..3 {
            for (p, m) in plus.channel_mut(c).iter_mut().zip(minus.channel_mut(c).iter_mut()) {
                *p += 0.125;
                *m -= 0.125;
            }
        }
        let mean = ensemble(&[plus, minus]).unwrap();
        for c in 0..3 {
            for (a, b) in mean.channel(c).iter().zip(ci.channel(c)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert!(matches!(ensemble(&[]), Err(Error::Empty(_))));
        assert!(matches!(ensemble(&[ci.clone(), encoded(&k0(), 16, 13)]), Err(Error::DimsMismatch { .. })));
    }

    #[test]
    fn calibration_error_cases() {
        let dims = ImageDims::new(640, 480).unwrap();
        let gt = Intrinsics::new(100.0, 100.0, 320.0, 240.0).unwrap();
        assert_eq!(calib_error(&gt, &gt, dims), CalibError { e_f: 0.0, e_b: 0.0 });
        let pred = Intrinsics::new(110.0, 95.0, 320.0, 240.0).unwrap();
        assert!((calib_error(&pred, &gt, dims).e_f - 0.10).abs() < 1e-12);
        let pred = Intrinsics::new(100.0, 100.0, 336.0, 240.0).unwrap();
        assert!((calib_error(&pred, &gt, dims).e_b - 0.05).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn calib_error_invariant_under_shared_resize(
            s in 0.1..5.0f64,
            fx in 100.0..2000.0f64, dfx in -50.0..50.0f64,
            cx in 0.0..640.0f64, dcx in -30.0..30.0f64,
        ) {
            let dims = ImageDims::new(640, 480).unwrap();
            let gt = Intrinsics::new(fx, fx * 0.9, cx, 200.0).unwrap();
            let pred = Intrinsics::new(fx + dfx, fx * 0.9 - dfx, cx + dcx, 210.0).unwrap();
            let e = calib_error(&pred, &gt, dims);
            let scaled_dims = ImageDims { width: (640.0 * s) as usize, height: (480.0 * s) as usize };
            // the realized per-axis factors of a resize to scaled_dims
            let sx = scaled_dims.width as f64 / 640.0;
            let sy = scaled_dims.height as f64 / 480.0;
            let e2 = calib_error(&pred.after_resize(sx, sy).unwrap(), &gt.after_resize(sx, sy).unwrap(), scaled_dims);
            prop_assert!((e.e_f - e2.e_f).abs() < 1e-12);
            prop_assert!((e.e_b - e2.e_b).abs() < 1e-12);
        }

        #[test]
        fn ensemble_is_permutation_invariant(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = encoded(&k0(), 8, 6);
            let mut imgs: Vec<CameraImage> = (0..n).map(|_| {
                let mut ci = base.clone();
                for c in 0..3 {
                    for x in ci.channel_mut(c).iter_mut() {
                        *x += rng.random_range(-0.1..0.1);
                    }
                }
                ci
            }).collect();
            let a = ensemble(&imgs).unwrap();
            imgs.reverse();
            imgs.rotate_left(n / 2);
            prop_assert_eq!(a, ensemble(&imgs).unwrap());
        }
    }
}

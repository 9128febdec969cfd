//! Unprojection, metrology, and similarity alignment of point sets.

use nalgebra::{Matrix3, Point3, Rotation3, Vector3, SVD};
use serde::{Deserialize, Serialize};

use crate::camera::Intrinsics;
use crate::depth::DepthMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    /// Source pixel `(u, v)` of each point, when it came from a depth map.
    pub pixels: Option<Vec<(usize, usize)>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3<f64>>) -> Self {
        PointCloud { points, pixels: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    /// Root-mean-square distance of the points from their centroid.
    pub fn rms_extent(&self) -> Option<f64> {
        let c = self.centroid()?;
        let sq: f64 = self.points.iter().map(|p| (p - c).norm_squared()).sum();
        Some((sq / self.points.len() as f64).sqrt())
    }
}

/// Back-projects a pixel with known depth; the point's third coordinate
/// equals `depth`.
#[inline]
pub fn unproject_pixel(k: &Intrinsics, u: f64, v: f64, depth: f64) -> Point3<f64> {
    let (x, y) = k.back_project(u, v);
    Point3::new(depth * x, depth * y, depth)
}

pub fn unproject(depth: &DepthMap, k: &Intrinsics) -> PointCloud {
    let mut points = Vec::with_capacity(depth.valid_count());
    let mut pixels = Vec::with_capacity(depth.valid_count());
    for v in 0..depth.height {
        for u in 0..depth.width {
            if let Some(d) = depth.get(u, v) {
                points.push(unproject_pixel(k, u as f64, v as f64, d));
                pixels.push((u, v));
            }
        }
    }
    PointCloud {
        points,
        pixels: Some(pixels),
    }
}

/// Euclidean distance in meters between the 3D points behind two pixels.
pub fn metrology_distance(depth: &DepthMap, k: &Intrinsics, a: (usize, usize), b: (usize, usize)) -> Result<f64> {
    let lift = |(u, v): (usize, usize)| -> Result<Point3<f64>> {
        if u >= depth.width || v >= depth.height {
            return Err(Error::InvalidPixel { u, v });
        }
        let d = depth.get(u, v).ok_or(Error::InvalidPixel { u, v })?;
        Ok(unproject_pixel(k, u as f64, v as f64, d))
    };
    Ok((lift(a)? - lift(b)?).norm())
}

/// `x ↦ σ (R x + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.scale * (self.rotation * p.coords + self.translation))
    }

    /// From the `x ↦ s R x + t'` form: `t = t' / s`.
    pub fn from_outer_translation(scale: f64, rotation: Matrix3<f64>, outer: Vector3<f64>) -> Self {
        SimilarityTransform {
            scale,
            rotation,
            translation: outer / scale,
        }
    }

    /// Translation of the equivalent `x ↦ s R x + t'` form.
    pub fn outer_translation(&self) -> Vector3<f64> {
        self.scale * self.translation
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        self.scale > 0.0
            && (r.transpose() * r - Matrix3::identity()).abs().max() <= tol
            && (r.determinant() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcrustesFit {
    pub transform: SimilarityTransform,
    /// `sqrt(mean ‖σ(R x + t) − y‖²)` in target units.
    pub rms_residual: f64,
}

/// Relative singular-value floor below which a centered point set is treated
/// as collinear.
const RANK_TOL: f64 = 1e-10;

/// Closed-form similarity aligning `source` onto `target` (Umeyama), with the
/// reflection guard that keeps `det R = +1`.
pub fn procrustes(source: &PointCloud, target: &PointCloud) -> Result<ProcrustesFit> {
    let n = source.len();
    if n != target.len() {
        return Err(Error::InvalidArgument(format!(
            "point counts differ: {n} vs {}",
            target.len()
        )));
    }
    if n < 3 {
        return Err(Error::DegeneratePoints("procrustes needs at least 3 correspondences"));
    }
    let mu_x = source.centroid().unwrap();
    let mu_y = target.centroid().unwrap();
    let nf = n as f64;

    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    let mut var_x = 0.0;
    for (x, y) in source.points.iter().zip(&target.points) {
        let dx = x - mu_x;
        let dy = y - mu_y;
        cov += dy * dx.transpose();
        src_cov += dx * dx.transpose();
        var_x += dx.norm_squared();
    }
    cov /= nf;
    src_cov /= nf;
    var_x /= nf;

    let src_sv = src_cov.symmetric_eigenvalues();
    let mut src_sv: Vec<f64> = src_sv.iter().map(|v| v.abs()).collect();
    src_sv.sort_by(|a, b| b.total_cmp(a));
    if !(src_sv[0] > 0.0) || src_sv[1] <= RANK_TOL * src_sv[0] {
        return Err(Error::DegeneratePoints("source points are coincident or collinear"));
    }

    let svd = SVD::new(cov, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    // nalgebra does not order singular values; the guard flips the
    // direction of the smallest one.
    let smallest = (0..3)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap();
    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        s[(smallest, smallest)] = -1.0;
    }
    let rotation = u * s * v_t;
    let trace_ds: f64 = (0..3).map(|i| svd.singular_values[i] * s[(i, i)]).sum();
    let scale = trace_ds / var_x;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegeneratePoints("target points collapse to a single location"));
    }
    let outer = mu_y.coords - scale * rotation * mu_x.coords;
    let transform = SimilarityTransform::from_outer_translation(scale, rotation, outer);
    let sq: f64 = source
        .points
        .iter()
        .zip(&target.points)
        .map(|(x, y)| (transform.apply(x) - y).norm_squared())
        .sum();
    Ok(ProcrustesFit {
        transform,
        rms_residual: (sq / nf).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    /// Translation error in meters.
    pub t_rel: f64,
    /// Rotation error in degrees, in `[0, 180]`.
    pub r_rel: f64,
}

/// Angle of a rotation matrix in degrees. Uses `atan2` of the skew and trace
/// parts, which stays accurate near 0° and 180°.
pub fn rotation_angle_degrees(r: &Matrix3<f64>) -> f64 {
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = 0.5 * skew.norm();
    let cos = 0.5 * (r.trace() - 1.0);
    sin.atan2(cos).to_degrees()
}

/// Pose difference between two already globally aligned poses.
pub fn pose_error(est: &SimilarityTransform, gt: &SimilarityTransform) -> PoseError {
    PoseError {
        t_rel: (est.translation - gt.translation).norm(),
        r_rel: rotation_angle_degrees(&(est.rotation.transpose() * gt.rotation)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DistanceNormalizer {
    /// RMS distance of the ground-truth points from their centroid.
    #[default]
    RmsExtent,
    /// No normalization (mean distance in target units).
    Unit,
}

/// Mean correspondence distance after aligning `pred` onto `gt`, divided by
/// the normalizer.
pub fn mean_relative_distance(pred: &PointCloud, gt: &PointCloud, normalizer: DistanceNormalizer) -> Result<f64> {
    let fit = procrustes(pred, gt)?;
    let scale = match normalizer {
        DistanceNormalizer::Unit => 1.0,
        DistanceNormalizer::RmsExtent => gt.rms_extent().unwrap_or(0.0),
    };
    if !(scale > 0.0) {
        return Err(Error::DegeneratePoints("ground-truth cloud has zero extent"));
    }
    let total: f64 = pred
        .points
        .iter()
        .zip(&gt.points)
        .map(|(p, g)| (fit.transform.apply(p) - g).norm())
        .sum();
    Ok(total / pred.len() as f64 / scale)
}

/// Rotation by `angle` radians about `axis`.
pub fn axis_angle(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner()
}

//! Pinhole camera model and the intrinsics algebra of image transforms.
//!
//! Pixel coordinates address pixel centers: `(0, 0)` is the center of the
//! top-left pixel, `u` grows to the right and `v` grows downwards.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics `K` in pixels (no skew, no distortion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Intrinsics { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidIntrinsics(format!("non-finite field in {self:?}")));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        Ok(())
    }

    pub fn focal(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.fx,
            Axis::Y => self.fy,
        }
    }

    pub fn principal(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.cx,
            Axis::Y => self.cy,
        }
    }

    /// `K⁻¹ [u, v, 1]ᵀ` before normalization.
    #[inline]
    pub fn back_project(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Projects a camera-frame point onto the image plane.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }

    pub fn as_matrix(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Principal point translated by a crop whose top-left corner sits at
    /// `(offset_x, offset_y)` in the source image.
    pub fn after_crop(&self, offset_x: f64, offset_y: f64) -> Intrinsics {
        Intrinsics {
            cx: self.cx - offset_x,
            cy: self.cy - offset_y,
            ..*self
        }
    }

    pub fn after_resize(&self, sx: f64, sy: f64) -> Result<Intrinsics> {
        if !(sx > 0.0 && sy > 0.0 && sx.is_finite() && sy.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "resize scales must be positive, got ({sx}, {sy})"
            )));
        }
        Ok(Intrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
        })
    }

    pub fn after_pad(&self, pad_left: usize, pad_top: usize) -> Intrinsics {
        Intrinsics {
            cx: self.cx + pad_left as f64,
            cy: self.cy + pad_top as f64,
            ..*self
        }
    }

    /// Horizontal mirror of an image `width` pixels wide.
    pub fn after_hflip(&self, width: usize) -> Intrinsics {
        Intrinsics {
            cx: (width as f64 - 1.0) - self.cx,
            ..*self
        }
    }

    /// Converts a principal point given with pixel-corner coordinates (pixel
    /// `(0, 0)` spans `[0, 1)²`) to the pixel-center convention used here.
    pub fn from_corner_convention(&self) -> Intrinsics {
        Intrinsics {
            cx: self.cx - 0.5,
            cy: self.cy - 0.5,
            ..*self
        }
    }

    pub fn to_corner_convention(&self) -> Intrinsics {
        Intrinsics {
            cx: self.cx + 0.5,
            cy: self.cy + 0.5,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: usize,
    pub height: usize,
}

impl ImageDims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidDims { width, height });
        }
        Ok(ImageDims { width, height })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.width,
            Axis::Y => self.height,
        }
    }
}

/// Unit viewing ray through pixel `(u, v)`; always has a positive third
/// component.
#[inline]
pub fn ray_direction(k: &Intrinsics, u: f64, v: f64) -> Vector3<f64> {
    let (x, y) = k.back_project(u, v);
    Vector3::new(x, y, 1.0).normalize()
}

/// Full field of view along `axis`, in degrees.
pub fn fov_degrees(k: &Intrinsics, dims: ImageDims, axis: Axis) -> f64 {
    let extent = dims.extent(axis) as f64;
    2.0 * (extent / (2.0 * k.focal(axis))).atan().to_degrees()
}

/// Aspect-preserving resize followed by zero padding onto a fixed canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResizePadPlan {
    pub scale: f64,
    pub scaled_width: usize,
    pub scaled_height: usize,
    pub pad_left: usize,
    pub pad_top: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
}

impl ResizePadPlan {
    pub fn output_dims(&self) -> ImageDims {
        ImageDims {
            width: self.scaled_width + self.pad_left + self.pad_right,
            height: self.scaled_height + self.pad_top + self.pad_bottom,
        }
    }

    /// Intrinsics of the padded canvas. The per-axis scale is the realized one
    /// (after rounding the scaled dims), which may differ from `scale` by a
    /// fraction of a pixel.
    pub fn apply(&self, k: &Intrinsics, src: ImageDims) -> Result<Intrinsics> {
        let sx = self.scaled_width as f64 / src.width as f64;
        let sy = self.scaled_height as f64 / src.height as f64;
        Ok(k.after_resize(sx, sy)?.after_pad(self.pad_left, self.pad_top))
    }
}

pub fn plan_resize_pad(dims: ImageDims, target: ImageDims) -> Result<ResizePadPlan> {
    if target.width < 2 || target.height < 2 {
        return Err(Error::InvalidDims {
            width: target.width,
            height: target.height,
        });
    }
    let scale = (target.width as f64 / dims.width as f64)
        .min(target.height as f64 / dims.height as f64);
    let scaled_width = ((dims.width as f64 * scale).round() as usize).clamp(1, target.width);
    let scaled_height = ((dims.height as f64 * scale).round() as usize).clamp(1, target.height);
    let pad_x = target.width - scaled_width;
    let pad_y = target.height - scaled_height;
    Ok(ResizePadPlan {
        scale,
        scaled_width,
        scaled_height,
        pad_left: pad_x / 2,
        pad_right: pad_x - pad_x / 2,
        pad_top: pad_y / 2,
        pad_bottom: pad_y - pad_y / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn k0() -> Intrinsics {
        Intrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
    }

    #[test]
    fn principal_ray() {
        let r = ray_direction(&k0(), 320.0, 240.0);
        assert_eq!(r, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn ray_at_45_degrees() {
        let r = ray_direction(&k0(), 820.0, 240.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(r, Vector3::new(h, 0.0, h), epsilon = 1e-15);

        let k = Intrinsics::new(730.0, 410.0, 12.5, -3.0).unwrap();
        let r = ray_direction(&k, k.cx, k.cy + k.fy);
        assert_relative_eq!(r, Vector3::new(0.0, h, h), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(Intrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(Intrinsics::new(1.0, -1.0, 0.0, 0.0).is_err());
        assert!(Intrinsics::new(1.0, 1.0, f64::NAN, 0.0).is_err());
        assert!(ImageDims::new(1, 10).is_err());
    }

    #[test]
    fn fov_values() {
        let dims = ImageDims::new(1000, 800).unwrap();
        let k = Intrinsics::new(500.0, 500.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(fov_degrees(&k, dims, Axis::X), 90.0, epsilon = 1e-12);
        let k = Intrinsics::new(1000.0 / (2.0 * 3f64.sqrt()), 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(fov_degrees(&k, dims, Axis::X), 120.0, epsilon = 1e-12);
        let k = Intrinsics::new(1000.0, 1000.0, 0.0, 0.0).unwrap();
        // 2·atan(0.5)
        assert_relative_eq!(fov_degrees(&k, dims, Axis::X), 53.13010235415598, epsilon = 1e-12);
    }

    #[test]
    fn crop_resize_pad_flip_rules() {
        let k = k0();
        assert_eq!(k.after_crop(20.0, 10.0), Intrinsics::new(500.0, 500.0, 300.0, 230.0).unwrap());
        assert_eq!(k.after_crop(0.0, 0.0), k);
        assert_eq!(k.after_crop(10.0, 0.0).after_crop(5.0, 0.0), k.after_crop(15.0, 0.0));

        assert_eq!(k.after_resize(2.0, 2.0).unwrap(), Intrinsics::new(1000.0, 1000.0, 640.0, 480.0).unwrap());
        assert_eq!(k.after_resize(1.0, 1.0).unwrap(), k);
        assert_eq!(k.after_resize(2.0, 2.0).unwrap().after_resize(0.5, 0.5).unwrap(), k);
        assert!(k.after_resize(0.0, 1.0).is_err());
        assert!(k.after_resize(1.0, -2.0).is_err());

        assert_eq!(k.after_pad(0, 0), k);
        assert_eq!(k.after_pad(100, 0).cx, 420.0);
        assert_eq!(k.after_pad(7, 3).after_crop(7.0, 3.0), k);

        assert_eq!(k.after_hflip(640).cx, 319.0);
        assert_eq!(k.after_hflip(640).after_hflip(640), k);
        let centered = Intrinsics::new(300.0, 300.0, 320.0, 10.0).unwrap();
        assert_eq!(centered.after_hflip(641), centered);
    }

    #[test]
    fn corner_convention_round_trip() {
        let k = k0();
        assert_eq!(k.to_corner_convention().from_corner_convention(), k);
        assert_eq!(k.to_corner_convention().cx, 320.5);
    }

    #[test]
    fn resize_pad_examples() {
        let d = ImageDims::new(768, 768).unwrap();
        let p = plan_resize_pad(d, d).unwrap();
        assert_eq!((p.scale, p.pad_left, p.pad_top, p.pad_right, p.pad_bottom), (1.0, 0, 0, 0, 0));

        let p = plan_resize_pad(ImageDims::new(384, 768).unwrap(), d).unwrap();
        assert_eq!(p.scale, 1.0);
        assert_eq!(p.pad_left + p.pad_right, 384);
        assert_eq!((p.pad_left, p.pad_top, p.pad_bottom), (192, 0, 0));

        let p = plan_resize_pad(ImageDims::new(1024, 512).unwrap(), d).unwrap();
        assert_eq!(p.scale, 0.75);
        assert_eq!((p.scaled_width, p.scaled_height), (768, 384));
        assert_eq!((p.pad_top, p.pad_bottom, p.pad_left, p.pad_right), (192, 192, 0, 0));

        // odd leftover goes right/bottom
        let p = plan_resize_pad(ImageDims::new(100, 51).unwrap(), ImageDims::new(100, 100).unwrap()).unwrap();
        assert_eq!((p.pad_top, p.pad_bottom), (24, 25));
    }

    #[test]
    fn resize_pad_output_matches_target_on_grid() {
        let targets = [ImageDims { width: 768, height: 768 }, ImageDims { width: 97, height: 2 }];
        for target in targets {
            for w in (2..=1024).step_by(7) {
                for h in (2..=1024).step_by(11) {
                    let p = plan_resize_pad(ImageDims { width: w, height: h }, target).unwrap();
                    assert_eq!(p.output_dims(), target, "{w}x{h}");
                }
            }
        }
    }

    #[test]
    fn resize_pad_plan_moves_principal_point_onto_canvas() {
        let src = ImageDims::new(1024, 512).unwrap();
        let p = plan_resize_pad(src, ImageDims::new(768, 768).unwrap()).unwrap();
        let k = Intrinsics::new(800.0, 800.0, 512.0, 256.0).unwrap();
        let k2 = p.apply(&k, src).unwrap();
        assert_eq!(k2, Intrinsics::new(600.0, 600.0, 384.0, 384.0).unwrap());
    }

    #[test]
    fn fov_decreases_with_focal() {
        let dims = ImageDims::new(640, 480).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..200 {
            let f = i as f64 * 10.0;
            let fov = fov_degrees(&Intrinsics::new(f, f, 0.0, 0.0).unwrap(), dims, Axis::Y);
            assert!(fov < last);
            last = fov;
        }
    }

    fn intrinsics_strategy() -> impl Strategy<Value = Intrinsics> {
        (50.0..3000.0f64, 50.0..3000.0f64, -200.0..900.0f64, -200.0..900.0f64)
            .prop_map(|(fx, fy, cx, cy)| Intrinsics { fx, fy, cx, cy })
    }

    proptest! {
        #[test]
        fn ray_is_unit(k in intrinsics_strategy(), u in -2000.0..2000.0f64, v in -2000.0..2000.0f64) {
            let r = ray_direction(&k, u, v);
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            prop_assert!(r.z > 0.0);
        }

        #[test]
        fn rays_follow_image_transforms(
            k in intrinsics_strategy(),
            u in 0.0..1000.0f64, v in 0.0..1000.0f64,
            ox in -300.0..300.0f64, oy in -300.0..300.0f64,
            s in 0.1..4.0f64, pl in 0usize..500, pt in 0usize..500,
            width in 2usize..2000,
        ) {
            let r = ray_direction(&k, u, v);

            let rc = ray_direction(&k.after_crop(ox, oy), u - ox, v - oy);
            prop_assert!((rc - r).norm() < 1e-9);

            let rs = ray_direction(&k.after_resize(s, s).unwrap(), u * s, v * s);
            prop_assert!((rs - r).norm() < 1e-9);

            let rp = ray_direction(&k.after_pad(pl, pt), u + pl as f64, v + pt as f64);
            prop_assert!((rp - r).norm() < 1e-9);

            let rf = ray_direction(&k.after_hflip(width), (width as f64 - 1.0) - u, v);
            prop_assert!((rf - Vector3::new(-r.x, r.y, r.z)).norm() < 1e-9);
        }
    }
}

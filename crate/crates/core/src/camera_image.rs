//! Camera image encoding: per-pixel `[atan(r1 / r3), acos(r2), g]` for the
//! unit viewing ray `r`, plus the incidence-map baseline and the value
//! normalization / 8-bit quantization used for storage.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{ray_direction, ImageDims, Intrinsics};
use crate::error::{Error, Result};

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Single-channel image with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "gray buffer holds {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }
}

/// Converts an interleaved image with values in `[0, 1]` to grayscale.
pub fn rgb_to_gray(width: usize, height: usize, channels: usize, data: &[f64]) -> Result<GrayImage> {
    if channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "expected 3 color channels, got {channels}"
        )));
    }
    if data.len() != width * height * 3 {
        return Err(Error::InvalidArgument(format!(
            "rgb buffer holds {} values, expected {}",
            data.len(),
            width * height * 3
        )));
    }
    let gray = data
        .chunks_exact(3)
        .map(|px| LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2])
        .collect();
    GrayImage::new(width, height, gray)
}

/// Content of the third camera-image channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ChannelVariant {
    /// Grayscale of the input frame.
    #[default]
    Grayscale,
    /// Copy of the azimuth channel.
    DuplicateTheta,
    /// Constant fill, on the same `[0, 1]` scale as grayscale.
    Constant(f64),
}

impl ChannelVariant {
    pub fn code(&self) -> u8 {
        match self {
            ChannelVariant::Grayscale => 0,
            ChannelVariant::DuplicateTheta => 1,
            ChannelVariant::Constant(_) => 2,
        }
    }

    fn normalize(&self, value: f64) -> f64 {
        match self {
            ChannelVariant::DuplicateTheta => value / PI,
            _ => 2.0 * value - 1.0,
        }
    }

    fn denormalize(&self, value: f64) -> f64 {
        match self {
            ChannelVariant::DuplicateTheta => value * PI,
            _ => (value + 1.0) * 0.5,
        }
    }
}

/// Dense camera image, channel-planar and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraImage {
    pub width: usize,
    pub height: usize,
    /// Azimuth in radians.
    pub theta: Vec<f64>,
    /// Elevation (angle from the image's down axis) in radians.
    pub phi: Vec<f64>,
    pub third: Vec<f64>,
    pub variant: ChannelVariant,
}

impl CameraImage {
    pub fn from_channels(
        width: usize,
        height: usize,
        theta: Vec<f64>,
        phi: Vec<f64>,
        third: Vec<f64>,
        variant: ChannelVariant,
    ) -> Result<Self> {
        let n = width * height;
        if theta.len() != n || phi.len() != n || third.len() != n {
            return Err(Error::InvalidArgument(format!(
                "channel lengths ({}, {}, {}) do not match {width}x{height}",
                theta.len(),
                phi.len(),
                third.len()
            )));
        }
        Ok(CameraImage {
            width,
            height,
            theta,
            phi,
            third,
            variant,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn angles(&self, u: usize, v: usize) -> (f64, f64) {
        let i = self.index(u, v);
        (self.theta[i], self.phi[i])
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.theta,
            1 => &self.phi,
            _ => &self.third,
        }
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut Vec<f64> {
        match c {
            0 => &mut self.theta,
            1 => &mut self.phi,
            _ => &mut self.third,
        }
    }

    /// Sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<CameraImage> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let pick = |src: &[f64]| -> Vec<f64> {
            (y0..y0 + height)
                .flat_map(|v| src[v * self.width + x0..v * self.width + x0 + width].iter().copied())
                .collect()
        };
        Ok(CameraImage {
            width,
            height,
            theta: pick(&self.theta),
            phi: pick(&self.phi),
            third: pick(&self.third),
            variant: self.variant,
        })
    }

    /// Unit ray implied by the angle channels at each pixel.
    pub fn to_incidence(&self) -> IncidenceMap {
        let rays = self
            .theta
            .iter()
            .zip(&self.phi)
            .map(|(&theta, &phi)| angles_to_ray(theta, phi))
            .collect();
        IncidenceMap {
            width: self.width,
            height: self.height,
            rays,
        }
    }
}

/// Inverse of the angle encoding for forward-facing rays.
#[inline]
pub fn angles_to_ray(theta: f64, phi: f64) -> Vector3<f64> {
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_theta, cos_theta) = theta.sin_cos();
    Vector3::new(sin_phi * sin_theta, cos_phi, sin_phi * cos_theta)
}

/// Angle encoding of a unit ray with positive third component.
#[inline]
pub fn ray_to_angles(r: &Vector3<f64>) -> (f64, f64) {
    ((r.x / r.z).atan(), r.y.clamp(-1.0, 1.0).acos())
}

fn check_gray(dims: ImageDims, gray: &GrayImage) -> Result<()> {
    if (gray.width, gray.height) != (dims.width, dims.height) {
        return Err(Error::DimsMismatch {
            expected: (dims.width, dims.height),
            got: (gray.width, gray.height),
        });
    }
    Ok(())
}

fn encode_angles(k: &Intrinsics, dims: ImageDims) -> (Vec<f64>, Vec<f64>) {
    let n = dims.len();
    let mut theta = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    // atan(r1 / r3) equals atan of the unnormalized ratio; evaluating it once
    // per column keeps every column exactly constant.
    let column_theta: Vec<f64> = (0..dims.width)
        .map(|u| ((u as f64 - k.cx) / k.fx).atan())
        .collect();
    for v in 0..dims.height {
        for (u, &t) in column_theta.iter().enumerate() {
            let r = ray_direction(k, u as f64, v as f64);
            theta.push(t);
            phi.push(r.y.clamp(-1.0, 1.0).acos());
        }
    }
    (theta, phi)
}

pub fn encode(k: &Intrinsics, dims: ImageDims, gray: &GrayImage) -> Result<CameraImage> {
    encode_variant(k, dims, Some(gray), ChannelVariant::Grayscale)
}

/// Encodes with the chosen third channel. `gray` is only read by
/// [`ChannelVariant::Grayscale`].
pub fn encode_variant(
    k: &Intrinsics,
    dims: ImageDims,
    gray: Option<&GrayImage>,
    variant: ChannelVariant,
) -> Result<CameraImage> {
    k.validate()?;
    let third = match variant {
        ChannelVariant::Grayscale => {
            let gray = gray.ok_or_else(|| {
                Error::InvalidArgument("grayscale variant needs a gray image".into())
            })?;
            check_gray(dims, gray)?;
            Some(gray.data.clone())
        }
        ChannelVariant::Constant(c) => Some(vec![c; dims.len()]),
        ChannelVariant::DuplicateTheta => None,
    };
    let (theta, phi) = encode_angles(k, dims);
    let third = third.unwrap_or_else(|| theta.clone());
    Ok(CameraImage {
        width: dims.width,
        height: dims.height,
        theta,
        phi,
        third,
        variant,
    })
}

/// Baseline representation: the raw unit ray per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMap {
    pub width: usize,
    pub height: usize,
    pub rays: Vec<Vector3<f64>>,
}

impl IncidenceMap {
    pub fn get(&self, u: usize, v: usize) -> Vector3<f64> {
        self.rays[v * self.width + u]
    }

    /// Angle channels of each ray, with `third` as the last channel.
    pub fn to_camera_image(&self, third: Vec<f64>, variant: ChannelVariant) -> Result<CameraImage> {
        let (theta, phi): (Vec<f64>, Vec<f64>) = self.rays.iter().map(ray_to_angles).unzip();
        CameraImage::from_channels(self.width, self.height, theta, phi, third, variant)
    }
}

pub fn encode_incidence(k: &Intrinsics, dims: ImageDims) -> Result<IncidenceMap> {
    k.validate()?;
    let rays = (0..dims.height)
        .flat_map(|v| (0..dims.width).map(move |u| (u, v)))
        .map(|(u, v)| ray_direction(k, u as f64, v as f64))
        .collect();
    Ok(IncidenceMap {
        width: dims.width,
        height: dims.height,
        rays,
    })
}

/// Camera image with every channel mapped to `[-1, 1]`: angles divided by
/// π, grayscale mapped by `2g - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: usize,
    pub height: usize,
    pub channels: [Vec<f64>; 3],
    pub variant: ChannelVariant,
}

pub fn normalize(ci: &CameraImage) -> NormalizedImage {
    NormalizedImage {
        width: ci.width,
        height: ci.height,
        channels: [
            ci.theta.iter().map(|t| t / PI).collect(),
            ci.phi.iter().map(|p| p / PI).collect(),
            ci.third.iter().map(|&g| ci.variant.normalize(g)).collect(),
        ],
        variant: ci.variant,
    }
}

pub fn denormalize(n: &NormalizedImage) -> CameraImage {
    CameraImage {
        width: n.width,
        height: n.height,
        theta: n.channels[0].iter().map(|t| t * PI).collect(),
        phi: n.channels[1].iter().map(|p| p * PI).collect(),
        third: n.channels[2].iter().map(|&g| n.variant.denormalize(g)).collect(),
        variant: n.variant,
    }
}

/// 8-bit storage of a normalized image.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub channels: [Vec<u8>; 3],
    pub variant: ChannelVariant,
}

#[inline]
pub fn quantize_value(x: f64) -> Result<u8> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            value: x,
            min: -1.0,
            max: 1.0,
        });
    }
    // f64::round rounds half away from zero.
    Ok(((x + 1.0) * 127.5).round() as u8)
}

#[inline]
pub fn dequantize_value(q: u8) -> f64 {
    q as f64 / 127.5 - 1.0
}

pub fn quantize_u8(n: &NormalizedImage) -> Result<QuantizedImage> {
    let quantize = |c: &[f64]| c.iter().map(|&x| quantize_value(x)).collect::<Result<Vec<u8>>>();
    Ok(QuantizedImage {
        width: n.width,
        height: n.height,
        channels: [
            quantize(&n.channels[0])?,
            quantize(&n.channels[1])?,
            quantize(&n.channels[2])?,
        ],
        variant: n.variant,
    })
}

pub fn dequantize_u8(q: &QuantizedImage) -> NormalizedImage {
    let dequantize = |c: &[u8]| c.iter().map(|&x| dequantize_value(x)).collect::<Vec<f64>>();
    NormalizedImage {
        width: q.width,
        height: q.height,
        channels: [
            dequantize(&q.channels[0]),
            dequantize(&q.channels[1]),
            dequantize(&q.channels[2]),
        ],
        variant: q.variant,
    }
}

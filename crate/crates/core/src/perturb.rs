//! Synthetic corruptions of camera images for robustness studies.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::camera_image::{denormalize, dequantize_u8, normalize, quantize_u8, CameraImage};
use crate::diffusion::{multires_noise, MultiresConfig};
use crate::error::{Error, Result};

/// Adds i.i.d. Gaussian noise with standard deviation `sigma` (radians) to
/// the two angle channels.
pub fn gaussian_angle_noise<R: Rng>(ci: &CameraImage, sigma: f64, rng: &mut R) -> Result<CameraImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = ci.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for x in out.theta.iter_mut().chain(out.phi.iter_mut()) {
        *x += normal.sample(rng);
    }
    Ok(out)
}

/// Adds unit-variance multi-resolution noise scaled by `sigma` (radians) to
/// the two angle channels.
pub fn multires_angle_noise(ci: &CameraImage, sigma: f64, cfg: &MultiresConfig, seed: u64) -> Result<CameraImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = ci.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let (noise, _) = multires_noise(ci.width, ci.height, 2, cfg, seed)?;
    let plane = ci.width * ci.height;
    for (x, n) in out.theta.iter_mut().zip(&noise.data[..plane]) {
        *x += sigma * n;
    }
    for (x, n) in out.phi.iter_mut().zip(&noise.data[plane..]) {
        *x += sigma * n;
    }
    Ok(out)
}

/// Uniform quantization of the normalized image with bin width `step`,
/// anchored at -1. `step = 2/255` reproduces 8-bit storage; `step = 0` is
/// the identity.
pub fn quantize_step(ci: &CameraImage, step: f64) -> Result<CameraImage> {
    if !(step >= 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("quantization step must be >= 0, got {step}")));
    }
    if step == 0.0 {
        return Ok(ci.clone());
    }
    let mut n = normalize(ci);
    for x in n.channels.iter_mut().flatten() {
        *x = (-1.0 + ((*x + 1.0) / step).round() * step).clamp(-1.0, 1.0);
    }
    Ok(denormalize(&n))
}

/// normalize → 8-bit → dequantize → denormalize.
pub fn quantize_8bit(ci: &CameraImage) -> Result<CameraImage> {
    Ok(denormalize(&dequantize_u8(&quantize_u8(&normalize(ci))?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{ImageDims, Intrinsics};
    use crate::camera_image::{encode_variant, ChannelVariant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ci() -> CameraImage {
        let k = Intrinsics::new(60.0, 60.0, 20.0, 15.0).unwrap();
        encode_variant(&k, ImageDims::new(40, 30).unwrap(), None, ChannelVariant::Constant(0.3)).unwrap()
    }

    #[test]
    fn zero_levels_are_identity() {
        let c = ci();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(gaussian_angle_noise(&c, 0.0, &mut rng).unwrap(), c);
        assert_eq!(multires_angle_noise(&c, 0.0, &MultiresConfig::default(), 0).unwrap(), c);
        assert_eq!(quantize_step(&c, 0.0).unwrap(), c);
        assert!(gaussian_angle_noise(&c, -1.0, &mut rng).is_err());
    }

    #[test]
    fn step_quantizer_matches_8bit_path() {
        let c = ci();
        let a = quantize_step(&c, 2.0 / 255.0).unwrap();
        let b = quantize_8bit(&c).unwrap();
        for ch in 0..3 {
            for (x, y) in a.channel(ch).iter().zip(b.channel(ch)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_noise_leaves_third_channel() {
        let c = ci();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = gaussian_angle_noise(&c, 0.02, &mut rng).unwrap();
        assert_eq!(n.third, c.third);
        assert_ne!(n.theta, c.theta);
        let d: Vec<f64> = n.theta.iter().zip(&c.theta).map(|(a, b)| a - b).collect();
        let sd = crate::numeric::population_variance(&d).unwrap().sqrt();
        assert!((sd - 0.02).abs() < 0.002, "{sd}");
    }
}

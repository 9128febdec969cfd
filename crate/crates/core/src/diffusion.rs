//! Variance-preserving diffusion algebra with v-prediction.
//!
//! `z_t = α_t z + σ_t ε` and `v_t = α_t ε − σ_t z`. The reverse process is
//! deterministic (DDIM, η = 0) and driven by any [`Predictor`]; no network is
//! involved here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Real-valued tensor of `channels × height × width`, channel-planar.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentField {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl LatentField {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "latent buffer holds {} values, expected {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("latent values must be finite".into()));
        }
        Ok(LatentField { width, height, channels, data })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        LatentField {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    fn check_same(&self, other: &LatentField) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::InvalidArgument(format!(
                "latent shapes differ: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `a · self + b · other` elementwise.
    fn combine(&self, a: f64, other: &LatentField, b: f64) -> LatentField {
        LatentField {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            ..*self
        }
    }

    pub fn max_abs_diff(&self, other: &LatentField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScheduleKind {
    /// Betas linearly spaced from `beta_start` to `beta_end`.
    LinearBeta { beta_start: f64, beta_end: f64 },
    /// Squared-cosine cumulative schedule with offset `s`.
    Cosine { s: f64 },
}

impl ScheduleKind {
    pub const fn linear() -> Self {
        ScheduleKind::LinearBeta {
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }

    pub const fn cosine() -> Self {
        ScheduleKind::Cosine { s: 0.008 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    /// Number of noising steps `T`; timesteps run over `0..=T`.
    pub steps: usize,
    pub alpha: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl NoiseSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t]
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t > self.steps {
            return Err(Error::InvalidArgument(format!(
                "timestep {t} outside 0..={}",
                self.steps
            )));
        }
        Ok(())
    }
}

pub fn make_schedule(steps: usize, kind: ScheduleKind) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("schedule needs at least one step".into()));
    }
    let alpha_bar: Vec<f64> = match kind {
        ScheduleKind::LinearBeta { beta_start, beta_end } => {
            let valid = |b: f64| b > 0.0 && b < 1.0;
            if !valid(beta_start) || !valid(beta_end) {
                return Err(Error::InvalidArgument(format!(
                    "betas must lie in (0, 1), got {beta_start}..{beta_end}"
                )));
            }
            let mut acc = 1.0;
            std::iter::once(1.0)
                .chain((0..steps).map(|i| {
                    let frac = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
                    acc *= 1.0 - (beta_start + (beta_end - beta_start) * frac);
                    acc
                }))
                .collect()
        }
        ScheduleKind::Cosine { s } => {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("cosine offset must be >= 0, got {s}")));
            }
            let f = |t: usize| (((t as f64 / steps as f64) + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2).cos();
            let f0 = f(0);
            // α_t itself is f(t) / f(0); squaring and rooting would lose the
            // exact endpoint α_0 = 1.
            let alpha: Vec<f64> = (0..=steps).map(|t| (f(t) / f0).max(0.0)).collect();
            let sigma = alpha.iter().map(|a| (1.0 - a * a).max(0.0).sqrt()).collect();
            return Ok(NoiseSchedule { steps, alpha, sigma });
        }
    };
    Ok(NoiseSchedule {
        steps,
        alpha: alpha_bar.iter().map(|ab| ab.sqrt()).collect(),
        sigma: alpha_bar.iter().map(|ab| (1.0 - ab).sqrt()).collect(),
    })
}

pub fn forward_diffuse(z: &LatentField, eps: &LatentField, t: usize, sched: &NoiseSchedule) -> Result<LatentField> {
    z.check_same(eps)?;
    sched.check_t(t)?;
    Ok(z.combine(sched.alpha(t), eps, sched.sigma(t)))
}

pub fn v_target(z: &LatentField, eps: &LatentField, t: usize, sched: &NoiseSchedule) -> Result<LatentField> {
    z.check_same(eps)?;
    sched.check_t(t)?;
    Ok(eps.combine(sched.alpha(t), z, -sched.sigma(t)))
}

/// `ε̂ = σ_t z_t + α_t v`.
pub fn v_to_eps(z_t: &LatentField, v: &LatentField, t: usize, sched: &NoiseSchedule) -> Result<LatentField> {
    z_t.check_same(v)?;
    sched.check_t(t)?;
    Ok(z_t.combine(sched.sigma(t), v, sched.alpha(t)))
}

/// `ẑ = α_t z_t − σ_t v`.
pub fn v_to_clean(z_t: &LatentField, v: &LatentField, t: usize, sched: &NoiseSchedule) -> Result<LatentField> {
    z_t.check_same(v)?;
    sched.check_t(t)?;
    Ok(z_t.combine(sched.alpha(t), v, -sched.sigma(t)))
}

/// Anything that predicts `v` for a noised latent at timestep `t`.
pub trait Predictor {
    fn predict_v(&self, z_t: &LatentField, t: usize, cond: Option<&LatentField>) -> LatentField;
}

impl<F> Predictor for F
where
    F: Fn(&LatentField, usize, Option<&LatentField>) -> LatentField,
{
    fn predict_v(&self, z_t: &LatentField, t: usize, cond: Option<&LatentField>) -> LatentField {
        self(z_t, t, cond)
    }
}

/// Predicts the exact `v` for a known clean latent.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub clean: LatentField,
    pub schedule: NoiseSchedule,
}

impl Predictor for OraclePredictor {
    fn predict_v(&self, z_t: &LatentField, t: usize, _cond: Option<&LatentField>) -> LatentField {
        let (a, s) = (self.schedule.alpha(t), self.schedule.sigma(t));
        // ε = (z_t − α z) / σ, then v = α ε − σ z
        let data = z_t
            .data
            .iter()
            .zip(&self.clean.data)
            .map(|(zt, z)| {
                let eps = if s > 0.0 { (zt - a * z) / s } else { 0.0 };
                a * eps - s * z
            })
            .collect();
        LatentField { data, ..*z_t }
    }
}

/// Timesteps visited by a `steps`-step sampler: `T = t_steps > … > t_0 = 0`.
pub fn timesteps(total: usize, steps: usize) -> Vec<usize> {
    (0..=steps)
        .rev()
        .map(|k| ((total * k) as f64 / steps as f64).round() as usize)
        .collect()
}

/// Deterministic reverse process from `z_T` to an estimate of the clean latent.
pub fn sample<P: Predictor + ?Sized>(
    predictor: &P,
    z_end: &LatentField,
    cond: Option<&LatentField>,
    sched: &NoiseSchedule,
    steps: usize,
) -> Result<LatentField> {
    if steps == 0 || steps > sched.steps {
        return Err(Error::InvalidArgument(format!(
            "sampling steps must be in 1..={}, got {steps}",
            sched.steps
        )));
    }
    let ts = timesteps(sched.steps, steps);
    let mut z = z_end.clone();
    for pair in ts.windows(2) {
        let (t, next) = (pair[0], pair[1]);
        let v = predictor.predict_v(&z, t, cond);
        if v.shape() != z.shape() {
            return Err(Error::DimsMismatch {
                expected: (z.width, z.height),
                got: (v.width, v.height),
            });
        }
        let clean = v_to_clean(&z, &v, t, sched)?;
        if next == 0 {
            z = clean;
        } else {
            let eps = v_to_eps(&z, &v, t, sched)?;
            z = clean.combine(sched.alpha(next), &eps, sched.sigma(next));
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiresConfig {
    pub levels: usize,
    /// Weight ratio between successive pyramid levels.
    pub decay: f64,
}

impl Default for MultiresConfig {
    fn default() -> Self {
        MultiresConfig { levels: 4, decay: 0.5 }
    }
}

/// Levels usable before the coarsest grid drops below 2 pixels on a side.
pub fn effective_levels(width: usize, height: usize, requested: usize) -> usize {
    let min_dim = width.min(height);
    let mut levels = 1;
    while levels < requested && min_dim.div_ceil(1 << levels) >= 2 {
        levels += 1;
    }
    levels
}

/// Bilinear resampling (half-pixel centers, edge clamped) of one plane.
fn upsample_bilinear(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    let coord = |d: usize, s_len: usize, d_len: usize| -> (usize, usize, f64) {
        let x = ((d as f64 + 0.5) * s_len as f64 / d_len as f64 - 0.5).clamp(0.0, (s_len - 1) as f64);
        let x0 = x.floor() as usize;
        let x1 = (x0 + 1).min(s_len - 1);
        (x0, x1, x - x0 as f64)
    };
    let xs: Vec<_> = (0..dw).map(|x| coord(x, sw, dw)).collect();
    let mut out = Vec::with_capacity(dw * dh);
    for y in 0..dh {
        let (y0, y1, fy) = coord(y, sh, dh);
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * sw + x0] * (1.0 - fx) + src[y0 * sw + x1] * fx;
            let bottom = src[y1 * sw + x0] * (1.0 - fx) + src[y1 * sw + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Pyramid noise: Gaussian grids at `dims / 2^k`, upsampled bilinearly,
/// weighted by `decay^k`, summed, and divided by the empirical standard
/// deviation. Returns the field and the number of levels actually used.
pub fn multires_noise(
    width: usize,
    height: usize,
    channels: usize,
    cfg: &MultiresConfig,
    seed: u64,
) -> Result<(LatentField, usize)> {
    if cfg.levels == 0 {
        return Err(Error::InvalidArgument("multi-resolution noise needs at least one level".into()));
    }
    if !(cfg.decay > 0.0 && cfg.decay <= 1.0) {
        return Err(Error::InvalidArgument(format!("decay must be in (0, 1], got {}", cfg.decay)));
    }
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::InvalidArgument("noise field must be non-empty".into()));
    }
    let levels = effective_levels(width, height, cfg.levels);
    let plane = width * height;
    let mut data = vec![0.0; plane * channels];
    for level in 0..levels {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(level as u64);
        let cw = width.div_ceil(1 << level);
        let ch = height.div_ceil(1 << level);
        let weight = cfg.decay.powi(level as i32);
        for c in 0..channels {
            let coarse: Vec<f64> = (0..cw * ch).map(|_| StandardNormal.sample(&mut rng)).collect();
            let up = if level == 0 {
                coarse
            } else {
                upsample_bilinear(&coarse, cw, ch, width, height)
            };
            for (d, u) in data[c * plane..(c + 1) * plane].iter_mut().zip(&up) {
                *d += weight * u;
            }
        }
    }
    let std = numeric::population_variance(&data).unwrap_or(1.0).sqrt();
    if std > 0.0 {
        for d in &mut data {
            *d /= std;
        }
    }
    Ok((LatentField { width, height, channels, data }, levels))
}

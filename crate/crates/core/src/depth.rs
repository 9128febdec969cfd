//! Depth maps and the usual monocular depth metrics.
//!
//! Every metric is evaluated over the intersection of the two validity masks
//! (optionally restricted to a ground-truth depth range) and reduced with
//! [`numeric::pairwise_sum`] in row-major pixel order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Metric depth in meters, row-major.
    pub depth: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DepthMap {
    /// Mask derived from the data: finite and strictly positive depths.
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth buffer holds {} values, expected {width}x{height}",
                depth.len()
            )));
        }
        let mask = depth.iter().map(|d| d.is_finite() && *d > 0.0).collect();
        Ok(DepthMap { width, height, depth, mask })
    }

    /// Explicit mask; pixels it marks valid must hold finite positive depth.
    pub fn with_mask(width: usize, height: usize, depth: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if depth.len() != width * height || mask.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth/mask buffers hold {}/{} values, expected {}",
                depth.len(),
                mask.len(),
                width * height
            )));
        }
        if let Some(i) = depth
            .iter()
            .zip(&mask)
            .position(|(d, &m)| m && !(d.is_finite() && *d > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "pixel {i} is marked valid but has depth {}",
                depth[i]
            )));
        }
        Ok(DepthMap { width, height, depth, mask })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = v * self.width + u;
        self.mask[i].then(|| self.depth[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DepthMap {
        DepthMap {
            depth: self.depth.iter().map(|&d| f(d)).collect(),
            ..self.clone()
        }
    }
}

/// Optional ground-truth depth range for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthRange {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl DepthRange {
    fn admits(&self, d: f64) -> bool {
        self.min.is_none_or(|m| d >= m) && self.max.is_none_or(|m| d <= m)
    }
}

/// `(pred, gt)` pairs over the shared valid mask.
pub fn valid_pairs(pred: &DepthMap, gt: &DepthMap, range: DepthRange) -> Result<Vec<(f64, f64)>> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimsMismatch {
            expected: gt.dims(),
            got: pred.dims(),
        });
    }
    let pairs: Vec<(f64, f64)> = (0..gt.depth.len())
        .filter(|&i| pred.mask[i] && gt.mask[i] && range.admits(gt.depth[i]))
        .map(|i| (pred.depth[i], gt.depth[i]))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Empty("no pixel is valid in both depth maps"));
    }
    Ok(pairs)
}

fn mean_of(pairs: &[(f64, f64)], f: impl Fn(f64, f64) -> f64) -> f64 {
    let terms: Vec<f64> = pairs.iter().map(|&(p, g)| f(p, g)).collect();
    numeric::pairwise_sum(&terms) / terms.len() as f64
}

pub fn abs_rel(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    Ok(mean_of(&pairs, |p, g| (p - g).abs() / g))
}

/// Percentage of pixels with `max(pred/gt, gt/pred) < 1.25^i`.
pub fn delta_threshold(pred: &DepthMap, gt: &DepthMap, i: u32) -> Result<f64> {
    if !(1..=3).contains(&i) {
        return Err(Error::InvalidArgument(format!("delta index must be 1, 2 or 3, got {i}")));
    }
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    Ok(delta_of(&pairs, i))
}

fn delta_of(pairs: &[(f64, f64)], i: u32) -> f64 {
    let threshold = 1.25f64.powi(i as i32);
    let hits = pairs
        .iter()
        .filter(|&&(p, g)| (p / g).max(g / p) < threshold)
        .count();
    100.0 * hits as f64 / pairs.len() as f64
}

/// `100 · sqrt(Var(log pred − log gt))` with population variance.
pub fn si_log(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    Ok(si_log_of(&pairs))
}

fn si_log_of(pairs: &[(f64, f64)]) -> f64 {
    let eps: Vec<f64> = pairs.iter().map(|&(p, g)| p.ln() - g.ln()).collect();
    100.0 * numeric::population_variance(&eps).unwrap_or(0.0).sqrt()
}

pub fn masked_loss(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    Ok(mean_of(&pairs, |p, g| (p - g).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub si_log: f64,
    pub pixels: usize,
}

pub fn evaluate(pred: &DepthMap, gt: &DepthMap, range: DepthRange) -> Result<DepthMetrics> {
    let pairs = valid_pairs(pred, gt, range)?;
    Ok(DepthMetrics {
        abs_rel: mean_of(&pairs, |p, g| (p - g).abs() / g),
        delta1: delta_of(&pairs, 1),
        delta2: delta_of(&pairs, 2),
        delta3: delta_of(&pairs, 3),
        si_log: si_log_of(&pairs),
        pixels: pairs.len(),
    })
}

/// `gt ≈ scale · pred + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineAlignment {
    pub scale: f64,
    pub shift: f64,
}

impl AffineAlignment {
    pub fn apply(&self, depth: &DepthMap) -> DepthMap {
        depth.map(|d| self.scale * d + self.shift)
    }
}

/// Least-squares scale and shift over the shared valid mask.
pub fn align_affine(pred: &DepthMap, gt: &DepthMap) -> Result<AffineAlignment> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    if pairs.len() < 2 {
        return Err(Error::Singular("affine alignment needs at least two pixels"));
    }
    let n = pairs.len() as f64;
    let ps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mean_p = numeric::pairwise_sum(&ps) / n;
    let mean_g = numeric::pairwise_sum(&gs) / n;
    let sxx: Vec<f64> = ps.iter().map(|p| (p - mean_p) * (p - mean_p)).collect();
    let sxy: Vec<f64> = pairs.iter().map(|(p, g)| (p - mean_p) * (g - mean_g)).collect();
    let sxx = numeric::pairwise_sum(&sxx);
    if !(sxx > f64::EPSILON * mean_p.abs().max(1.0).powi(2) * n) {
        return Err(Error::Singular("prediction is constant over the valid mask"));
    }
    let scale = numeric::pairwise_sum(&sxy) / sxx;
    Ok(AffineAlignment {
        scale,
        shift: mean_g - scale * mean_p,
    })
}

/// Median of `gt / pred` over the shared valid mask.
pub fn align_scale(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    let ratios: Vec<f64> = pairs.iter().map(|(p, g)| g / p).collect();
    Ok(numeric::median(&ratios).expect("non-empty"))
}

/// Sum of squared residuals of `scale · pred + shift` against `gt`.
pub fn alignment_residual(pred: &DepthMap, gt: &DepthMap, align: AffineAlignment) -> Result<f64> {
    let pairs = valid_pairs(pred, gt, DepthRange::default())?;
    let sq: Vec<f64> = pairs
        .iter()
        .map(|(p, g)| {
            let r = align.scale * p + align.shift - g;
            r * r
        })
        .collect();
    Ok(numeric::pairwise_sum(&sq))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scene {
    Indoor,
    Outdoor,
}

/// Divides depth by the scene's scale factor.
pub fn apply_scene_scale(depth: &DepthMap, scene: Scene, s_in: f64, s_out: f64) -> Result<DepthMap> {
    let s = match scene {
        Scene::Indoor => s_in,
        Scene::Outdoor => s_out,
    };
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("scene scale must be positive, got {s}")));
    }
    Ok(depth.map(|d| d / s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dm(values: &[f64]) -> DepthMap {
        DepthMap::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn random_pair(seed: u64, n: usize) -> (DepthMap, DepthMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..80.0)).collect();
        let pred: Vec<f64> = gt.iter().map(|g| g * rng.random_range(0.5f64..2.0)).collect();
        (dm(&pred), dm(&gt))
    }

    #[test]
    fn abs_rel_cases() {
        let gt = dm(&[2.0, 4.0, 7.5]);
        assert_eq!(abs_rel(&gt, &gt).unwrap(), 0.0);
        assert!((abs_rel(&gt.map(|d| 1.1 * d), &gt).unwrap() - 0.1).abs() < 1e-12);
        assert!((abs_rel(&dm(&[1.0, 5.0]), &dm(&[2.0, 4.0])).unwrap() - 0.375).abs() < 1e-15);
        // not symmetric: swapping gives mean(1, 0.2) = 0.6
        assert!((abs_rel(&dm(&[2.0, 4.0]), &dm(&[1.0, 5.0])).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn delta_cases() {
        let gt = dm(&[1.0, 3.0, 9.0]);
        assert_eq!(delta_threshold(&gt, &gt, 1).unwrap(), 100.0);
        let pred = gt.map(|d| d * 1.25f64.powf(1.5));
        assert_eq!(delta_threshold(&pred, &gt, 1).unwrap(), 0.0);
        assert_eq!(delta_threshold(&pred, &gt, 2).unwrap(), 100.0);
        assert!(delta_threshold(&pred, &gt, 4).is_err());
        let (p, g) = random_pair(1, 500);
        for i in 1..=3 {
            assert_eq!(delta_threshold(&p, &g, i).unwrap(), delta_threshold(&g, &p, i).unwrap());
        }
    }

    #[test]
    fn si_log_cases() {
        let gt = dm(&[1.0, 2.0, 30.0]);
        assert_eq!(si_log(&gt, &gt).unwrap(), 0.0);
        assert!(si_log(&gt.map(|d| 3.7 * d), &gt).unwrap() < 1e-12);
        let a = 0.3f64;
        let gt = dm(&[1.0, 1.0, 2.0, 2.0]);
        let pred = dm(&[(-a).exp(), a.exp(), 2.0 * (-a).exp(), 2.0 * a.exp()]);
        assert!((si_log(&pred, &gt).unwrap() - 100.0 * a).abs() < 1e-12);
    }

    #[test]
    fn affine_alignment() {
        let gt = dm(&[1.0, 2.0, 4.0, 8.0]);
        let a = align_affine(&gt, &gt).unwrap();
        assert!((a.scale - 1.0).abs() < 1e-12 && a.shift.abs() < 1e-12);
        let gt2 = gt.map(|d| 2.0 * d + 3.0);
        let a = align_affine(&gt, &gt2).unwrap();
        assert!((a.scale - 2.0).abs() < 1e-12 && (a.shift - 3.0).abs() < 1e-12);
        assert!(matches!(align_affine(&dm(&[2.0, 2.0, 2.0]), &dm(&[1.0, 2.0, 4.0])), Err(Error::Singular(_))));
        assert!(matches!(align_affine(&dm(&[2.0]), &dm(&[1.0])), Err(Error::Singular(_))));
    }

    #[test]
    fn affine_is_optimal_and_beats_scale_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pred: Vec<f64> = (0..300).map(|_| rng.random_range(1.0..20.0)).collect();
        let gt: Vec<f64> = pred.iter().map(|p| 1.7 * p + 0.8 + rng.random_range(-0.3..0.3)).collect();
        let (pred, gt) = (dm(&pred), dm(&gt));
        let best = align_affine(&pred, &gt).unwrap();
        let r0 = alignment_residual(&pred, &gt, best).unwrap();
        for (ds, dt) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3), (1e-3, -1e-3)] {
            let probe = AffineAlignment { scale: best.scale + ds, shift: best.shift + dt };
            assert!(alignment_residual(&pred, &gt, probe).unwrap() >= r0);
        }
        let s = align_scale(&pred, &gt).unwrap();
        let scale_only = alignment_residual(&pred, &gt, AffineAlignment { scale: s, shift: 0.0 }).unwrap();
        assert!(r0 <= scale_only);
    }

    #[test]
    fn median_scale() {
        let gt = dm(&(1..=100).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(align_scale(&gt, &gt).unwrap(), 1.0);
        assert_eq!(align_scale(&gt.map(|d| d / 2.0), &gt).unwrap(), 2.0);
        let mut pred = gt.clone();
        pred.depth[17] = 1e6;
        assert_eq!(align_scale(&pred, &gt).unwrap(), 1.0);
    }

    #[test]
    fn loss_and_masks() {
        let gt = dm(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(masked_loss(&gt, &gt).unwrap(), 0.0);
        assert!((masked_loss(&gt.map(|d| d + 0.5), &gt).unwrap() - 0.5).abs() < 1e-15);
        let gt_masked = DepthMap::with_mask(4, 1, gt.depth.clone(), vec![true, true, false, true]).unwrap();
        let mut pred = gt.clone();
        pred.depth[2] = 1000.0;
        assert_eq!(masked_loss(&pred, &gt_masked).unwrap(), 0.0);
        let empty = DepthMap::new(4, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(masked_loss(&gt, &empty), Err(Error::Empty(_))));
        assert!(abs_rel(&gt, &empty).is_err());
        assert!(si_log(&gt, &empty).is_err());
        assert!(align_scale(&gt, &empty).is_err());
        assert!(DepthMap::with_mask(2, 1, vec![1.0, -1.0], vec![true, true]).is_err());
        assert!(matches!(abs_rel(&gt, &dm(&[1.0, 2.0])), Err(Error::DimsMismatch { .. })));
    }

    #[test]
    fn depth_range_restricts_pixels() {
        let gt = dm(&[0.5, 5.0, 50.0]);
        let pred = dm(&[1.0, 5.0, 50.0]);
        let m = evaluate(&pred, &gt, DepthRange { min: Some(1.0), max: None }).unwrap();
        assert_eq!((m.pixels, m.abs_rel), (2, 0.0));
        let m = evaluate(&pred, &gt, DepthRange::default()).unwrap();
        assert_eq!(m.pixels, 3);
    }

    #[test]
    fn scene_scale() {
        let d = dm(&[5.0, 12.0]);
        assert_eq!(apply_scene_scale(&d, Scene::Indoor, 1.0, 1.0).unwrap(), d);
        assert_eq!(apply_scene_scale(&d, Scene::Indoor, 10.0, 80.0).unwrap().depth[0], 0.5);
        let back = apply_scene_scale(&d, Scene::Outdoor, 10.0, 80.0).unwrap().map(|x| x * 80.0);
        assert_eq!(back, d);
        assert!(apply_scene_scale(&d, Scene::Outdoor, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn si_log_scale_invariant(seed in any::<u64>(), k in 0.01..100.0f64) {
            let (p, g) = random_pair(seed, 64);
            let a = si_log(&p, &g).unwrap();
            let b = si_log(&p.map(|d| k * d), &g).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn deltas_monotone(seed in any::<u64>()) {
            let (p, g) = random_pair(seed, 50);
            let m = evaluate(&p, &g, DepthRange::default()).unwrap();
            prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3);
            prop_assert!(m.delta3 <= 100.0 && m.delta1 >= 0.0 && m.abs_rel >= 0.0 && m.si_log >= 0.0);
        }

        #[test]
        fn invalid_pixels_do_not_matter(seed in any::<u64>(), junk in -1e3..1e3f64) {
            let (p, g) = random_pair(seed, 40);
            let mask: Vec<bool> = (0..40).map(|i| i % 3 != 0).collect();
            let gt = DepthMap::with_mask(40, 1, g.depth.clone(), mask.clone()).unwrap();
            let base = evaluate(&p, &gt, DepthRange::default()).unwrap();
            let mut fuzzed_depth = g.depth.clone();
            let mut fuzzed_pred = p.clone();
            for i in (0..40).filter(|i| i % 3 == 0) {
                fuzzed_depth[i] = junk;
                fuzzed_pred.depth[i] = junk.abs() + 1.0;
            }
            let fuzzed = DepthMap::with_mask(40, 1, fuzzed_depth, mask).unwrap();
            let again = evaluate(&fuzzed_pred, &fuzzed, DepthRange::default()).unwrap();
            prop_assert_eq!(base, again);
        }
    }
}

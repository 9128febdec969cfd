//! Robustness sweep: corrupt each record's camera image at several noise
//! levels and seeds, recover, and tabulate the calibration error.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::commands::encode_record;
use super::io::output;
use super::{header, load_records, usage, Convention, Failure, NoiseKind, SweepArgs, Tally};
use crate::camera_image::CameraImage;
use crate::diffusion::MultiresConfig;
use crate::error::Result;
use crate::numeric::{mean, quantile};
use crate::perturb::{gaussian_angle_noise, multires_angle_noise, quantize_step};
use crate::recovery::{calib_error, ensemble, fov_error_degrees, recover_intrinsics, RansacConfig};

/// Parses `"0,3,10..13"` into `[0, 3, 10, 11, 12]`.
pub fn parse_seeds(spec: &str) -> std::result::Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {part:?}"))?;
            if b <= a {
                return Err(format!("empty seed range {part:?}"));
            }
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?);
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

/// Noise stream of one corrupted copy; depends only on the seed and the copy
/// index, so rows do not change when records are added.
fn copy_rng(seed: u64, copy: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(copy as u64);
    rng
}

pub(crate) fn corrupt(ci: &CameraImage, kind: NoiseKind, level: f64, seed: u64, copy: usize, multires: &MultiresConfig) -> Result<CameraImage> {
    let mut rng = copy_rng(seed, copy);
    match kind {
        NoiseKind::Gaussian => gaussian_angle_noise(ci, level, &mut rng),
        NoiseKind::Multires => multires_angle_noise(ci, level, multires, rng.next_u64()),
        NoiseKind::Quantize => quantize_step(ci, level),
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    record: usize,
    kind: NoiseKind,
    level: f64,
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct RowErrors {
    e_f: f64,
    e_b: f64,
    fov: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_job(
    clean: &CameraImage,
    gt: &crate::camera::Intrinsics,
    dims: crate::camera::ImageDims,
    job: &Job,
    ensemble_size: usize,
    multires: &MultiresConfig,
    cfg: &RansacConfig,
) -> Result<RowErrors> {
    let copies: Vec<CameraImage> = (0..ensemble_size)
        .map(|c| corrupt(clean, job.kind, job.level, job.seed, c, multires))
        .collect::<Result<_>>()?;
    let input = if copies.len() == 1 {
        copies.into_iter().next().expect("one copy")
    } else {
        ensemble(&copies)?
    };
    let (k, _) = recover_intrinsics(&input, cfg)?;
    let err = calib_error(&k, gt, dims);
    Ok(RowErrors {
        e_f: err.e_f,
        e_b: err.e_b,
        fov: fov_error_degrees(&k, gt, dims),
    })
}

pub fn sweep(args: &SweepArgs, convention: Convention) -> std::result::Result<Tally, Failure> {
    let cfg = args.ransac.config();
    cfg.validate().map_err(usage)?;
    let seeds = parse_seeds(&args.seeds).map_err(usage)?;
    if args.ensemble == 0 {
        return Err(usage("--ensemble must be at least 1"));
    }
    if let Some(l) = args.levels.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(usage(format!("noise level {l} must be finite and >= 0")));
    }
    let multires = args.multires();
    let records = load_records(&args.manifest)?;
    let variant = args.variant.channel_variant();

    let clean: Vec<Result<CameraImage>> = records
        .par_iter()
        .map(|rec| encode_record(rec, variant, convention))
        .collect();
    let mut jobs = Vec::new();
    for record in 0..records.len() {
        for &kind in &args.kinds {
            for &level in &args.levels {
                for &seed in &seeds {
                    jobs.push(Job { record, kind, level, seed });
                }
            }
        }
    }
    let results: Vec<std::result::Result<RowErrors, String>> = jobs
        .par_iter()
        .map(|job| {
            let rec = &records[job.record];
            let ci = clean[job.record].as_ref().map_err(|e| format!("encode failed: {e}"))?;
            let gt = convention.import(rec.intrinsics().map_err(|e| e.to_string())?);
            let dims = rec.dims().map_err(|e| e.to_string())?;
            run_job(ci, &gt, dims, job, args.ensemble, &multires, &cfg).map_err(|e| e.to_string())
        })
        .collect();

    let mut out = output(args.out.as_deref())?;
    writeln!(
        out,
        "{}",
        header(
            "sweep",
            convention,
            &[
                ("ensemble", args.ensemble.to_string()),
                ("ransac_seed", cfg.seed.to_string()),
                ("ransac_iters", cfg.iterations.to_string()),
                ("inlier_px", cfg.inlier_threshold.to_string()),
                ("multires_levels", multires.levels.to_string()),
                ("multires_decay", multires.decay.to_string()),
            ]
        )
    )?;
    writeln!(out, "key\tkind\tlevel\tseed\te_f\te_b\tfov_err_deg\tstatus")?;
    let mut tally = Tally::default();
    for (job, r) in jobs.iter().zip(&results) {
        tally.record(r);
        let key = records[job.record].key();
        let kind = job.kind.name();
        match r {
            Ok(e) => writeln!(
                out,
                "{key}\t{kind}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\tok",
                job.level, job.seed, e.e_f, e.e_b, e.fov
            )?,
            Err(msg) => {
                log::warn!("{key} {kind} level={} seed={}: {msg}", job.level, job.seed);
                writeln!(out, "{key}\t{kind}\t{}\t{}\tNA\tNA\tNA\terror", job.level, job.seed)?;
            }
        }
    }

    writeln!(out, "# summary")?;
    writeln!(out, "kind\tlevel\trows\tfailed\te_f_mean\te_f_p25\te_f_median\te_f_p75\te_f_p90\te_f_max\te_b_median")?;
    for &kind in &args.kinds {
        for &level in &args.levels {
            let group: Vec<&std::result::Result<RowErrors, String>> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.kind == kind && j.level == level)
                .map(|(_, r)| r)
                .collect();
            let e_f: Vec<f64> = group.iter().filter_map(|r| r.as_ref().ok()).map(|e| e.e_f).collect();
            let e_b: Vec<f64> = group.iter().filter_map(|r| r.as_ref().ok()).map(|e| e.e_b).collect();
            let f = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.6e}"));
            writeln!(
                out,
                "{}\t{level}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                kind.name(),
                group.len(),
                group.len() - e_f.len(),
                f(mean(&e_f)),
                f(quantile(&e_f, 0.25)),
                f(quantile(&e_f, 0.5)),
                f(quantile(&e_f, 0.75)),
                f(quantile(&e_f, 0.9)),
                f(quantile(&e_f, 1.0)),
                f(quantile(&e_b, 0.5)),
            )?;
        }
    }
    out.flush()?;
    Ok(tally)
}

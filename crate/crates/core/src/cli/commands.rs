use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{load_gray, output, read_depth, read_mask, write_preview};
use super::{header, load_records, usage, Alignment, AlignArgs, Convention, EncodeArgs, EvalCalibArgs, EvalDepthArgs, Failure, ManifestRecord, MetrologyArgs, RecoverArgs, Tally};
use crate::camera::Intrinsics;
use crate::camera_image::{encode_variant, CameraImage, ChannelVariant};
use crate::cami::{read_cami, write_cami};
use crate::depth::{align_affine, align_scale, evaluate, DepthMap, DepthMetrics, DepthRange};
use crate::error::{Error, Result};
use crate::geometry::{metrology_distance, procrustes, unproject};
use crate::numeric::mean;
use crate::ply::{read_ply, write_ply};
use crate::recovery::{calib_error, fov_error_degrees, recover_intrinsics, RansacConfig, RansacReport};

type CmdResult = std::result::Result<Tally, Failure>;

/// Camera image of a manifest record, with its intrinsics in pixel-center form.
pub(crate) fn encode_record(rec: &ManifestRecord, variant: ChannelVariant, convention: Convention) -> Result<CameraImage> {
    let k = convention.import(rec.intrinsics()?);
    let dims = rec.dims()?;
    let gray = match variant {
        ChannelVariant::Grayscale => {
            let g = load_gray(&rec.image_path)?;
            if (g.width, g.height) != (dims.width, dims.height) {
                return Err(Error::DimsMismatch {
                    expected: (dims.width, dims.height),
                    got: (g.width, g.height),
                });
            }
            Some(g)
        }
        _ => None,
    };
    encode_variant(&k, dims, gray.as_ref(), variant)
}

pub fn encode(args: &EncodeArgs, convention: Convention) -> CmdResult {
    let records = load_records(&args.manifest)?;
    fs::create_dir_all(&args.out).map_err(|e| usage(Error::io(&args.out, e)))?;
    let variant = args.variant.channel_variant();
    let results: Vec<Result<PathBuf>> = records
        .par_iter()
        .map(|rec| {
            let ci = encode_record(rec, variant, convention)?;
            let path = args.out.join(format!("{}.cami", rec.key()));
            write_cami(&path, &ci)?;
            if args.preview {
                write_preview(&args.out.join(format!("{}.png", rec.key())), &ci)?;
            }
            Ok(path)
        })
        .collect();
    let mut tally = Tally::default();
    for (rec, r) in records.iter().zip(&results) {
        tally.record(r);
        match r {
            Ok(path) => log::info!("{}: wrote {}", rec.key(), path.display()),
            Err(e) => log::error!("{}: skipped: {e}", rec.key()),
        }
    }
    Ok(tally)
}

/// One line of `recover` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverRow {
    pub key: String,
    pub file: String,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<RecoverFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverFit {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub inliers_x: usize,
    pub samples_x: usize,
    pub rms_x: f64,
    pub inliers_y: usize,
    pub samples_y: usize,
    pub rms_y: f64,
    pub skipped: usize,
}

impl RecoverFit {
    fn new(k: Intrinsics, report: &RansacReport) -> Self {
        RecoverFit {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            inliers_x: report.x.fit.inlier_count,
            samples_x: report.x.samples,
            rms_x: report.x.fit.rms_residual,
            inliers_y: report.y.fit.inlier_count,
            samples_y: report.y.samples,
            rms_y: report.y.fit.rms_residual,
            skipped: report.skipped_pixels,
        }
    }

    pub fn intrinsics(&self) -> Result<Intrinsics> {
        Intrinsics::new(self.fx, self.fy, self.cx, self.cy)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RecoverHeader {
    command: String,
    version: String,
    convention: String,
    ransac: RansacConfig,
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn recover(args: &RecoverArgs, convention: Convention) -> CmdResult {
    let cfg = args.ransac.config();
    cfg.validate().map_err(usage)?;
    let mut inputs: Vec<(String, PathBuf)> = args.paths.iter().map(|p| (file_stem(p), p.clone())).collect();
    if let (Some(manifest), Some(dir)) = (&args.manifest, &args.cami_dir) {
        for rec in load_records(manifest)? {
            inputs.push((rec.key(), dir.join(format!("{}.cami", rec.key()))));
        }
    }
    if inputs.is_empty() {
        return Err(usage("no records: pass CAMI paths or --manifest with --cami-dir"));
    }
    let rows: Vec<RecoverRow> = inputs
        .par_iter()
        .map(|(key, path)| {
            let file = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match read_cami(path).and_then(|ci| recover_intrinsics(&ci, &cfg)) {
                Ok((k, report)) => RecoverRow {
                    key: key.clone(),
                    file,
                    fit: Some(RecoverFit::new(convention.export(k), &report)),
                    error: None,
                },
                Err(e) => RecoverRow {
                    key: key.clone(),
                    file,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut out = output(args.out.as_deref())?;
    let head = RecoverHeader {
        command: "recover".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        convention: convention.name().into(),
        ransac: cfg,
    };
    writeln!(out, "{}", serde_json::json!({ "header": head }))?;
    let mut tally = Tally::default();
    for row in &rows {
        writeln!(out, "{}", serde_json::to_string(row).map_err(Error::from)?)?;
        if let Some(e) = &row.error {
            log::error!("{}: {e}", row.key);
            tally.failed += 1;
        } else {
            tally.ok += 1;
        }
    }
    out.flush()?;
    Ok(tally)
}

/// Reads `recover` output; intrinsics are returned in pixel-center form.
pub fn read_predictions(path: &Path) -> Result<Vec<RecoverRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first: serde_json::Value = serde_json::from_str(lines.next().unwrap_or("{}"))?;
    let head: RecoverHeader = serde_json::from_value(
        first
            .get("header")
            .cloned()
            .ok_or_else(|| Error::Format(format!("{}: missing recover header", path.display())))?,
    )?;
    let convention = Convention::parse(&head.convention)
        .ok_or_else(|| Error::Format(format!("unknown convention {:?}", head.convention)))?;
    lines
        .map(|l| {
            let mut row: RecoverRow = serde_json::from_str(l)?;
            if let Some(fit) = &mut row.fit {
                let k = convention.import(fit.intrinsics()?);
                (fit.cx, fit.cy) = (k.cx, k.cy);
            }
            Ok(row)
        })
        .collect()
}

pub fn eval_calib(args: &EvalCalibArgs, convention: Convention) -> CmdResult {
    let records = load_records(&args.manifest)?;
    let preds = read_predictions(&args.pred).map_err(usage)?;
    let mut by_key: HashMap<&str, &RecoverRow> = HashMap::new();
    for row in &preds {
        if by_key.insert(&row.key, row).is_some() {
            return Err(usage(format!("duplicate prediction key {:?}", row.key)));
        }
    }
    let mut tally = Tally::default();
    let mut lines = Vec::with_capacity(records.len());
    let (mut e_fs, mut e_bs, mut fovs) = (Vec::new(), Vec::new(), Vec::new());
    for rec in &records {
        let key = rec.key();
        let result = (|| -> Result<(f64, f64, f64)> {
            let row = by_key
                .remove(key.as_str())
                .ok_or_else(|| Error::Format("no prediction".into()))?;
            if let Some(e) = &row.error {
                return Err(Error::Format(format!("recovery failed: {e}")));
            }
            let pred = row.fit.as_ref().expect("row without error has a fit").intrinsics()?;
            let gt = convention.import(rec.intrinsics()?);
            let dims = rec.dims()?;
            let err = calib_error(&pred, &gt, dims);
            Ok((err.e_f, err.e_b, fov_error_degrees(&pred, &gt, dims)))
        })();
        tally.record(&result);
        match result {
            Ok((e_f, e_b, fov)) => {
                lines.push(format!("{key}\t{e_f:.6}\t{e_b:.6}\t{fov:.6}"));
                e_fs.push(e_f);
                e_bs.push(e_b);
                fovs.push(fov);
            }
            Err(e) => {
                log::error!("{key}: {e}");
                lines.push(format!("{key}\tNA\tNA\tNA"));
            }
        }
    }
    let mut unmatched: Vec<&str> = by_key.into_keys().collect();
    unmatched.sort_unstable();
    for key in unmatched {
        log::error!("{key}: prediction has no manifest record");
        tally.failed += 1;
    }

    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", header("eval-calib", convention, &[("records", records.len().to_string())]))?;
    writeln!(out, "key\te_f\te_b\tfov_err_deg")?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    let fmt = |xs: &[f64]| mean(xs).map_or("NA".to_string(), |m| format!("{m:.3}"));
    writeln!(out, "mean\t{}\t{}\t{}", fmt(&e_fs), fmt(&e_bs), fmt(&fovs))?;
    out.flush()?;
    Ok(tally)
}

fn load_depth_pair(rec: &ManifestRecord) -> Result<(DepthMap, DepthMap)> {
    let gt_path = rec.depth_path.as_ref().ok_or_else(|| Error::Format("record has no depth_path".into()))?;
    let pred_path = rec
        .pred_depth_path
        .as_ref()
        .ok_or_else(|| Error::Format("record has no pred_depth_path".into()))?;
    let mut gt = read_depth(gt_path, rec.depth_scale)?;
    let pred = read_depth(pred_path, rec.pred_depth_scale)?;
    if let Some(mask_path) = &rec.mask_path {
        let (w, h, mask) = read_mask(mask_path)?;
        if (w, h) != gt.dims() {
            return Err(Error::DimsMismatch {
                expected: gt.dims(),
                got: (w, h),
            });
        }
        for (m, extra) in gt.mask.iter_mut().zip(mask) {
            *m &= extra;
        }
    }
    if pred.dims() != gt.dims() {
        return Err(Error::DimsMismatch {
            expected: gt.dims(),
            got: pred.dims(),
        });
    }
    Ok((pred, gt))
}

fn eval_depth_record(rec: &ManifestRecord, alignment: Alignment, range: DepthRange) -> Result<(f64, f64, DepthMetrics)> {
    let (pred, gt) = load_depth_pair(rec)?;
    let (scale, shift) = match alignment {
        Alignment::None => (1.0, 0.0),
        Alignment::Scale => (align_scale(&pred, &gt)?, 0.0),
        Alignment::Affine => {
            let a = align_affine(&pred, &gt)?;
            (a.scale, a.shift)
        }
    };
    let mut aligned = pred.map(|d| scale * d + shift);
    for (m, d) in aligned.mask.iter_mut().zip(&aligned.depth) {
        *m &= d.is_finite() && *d > 0.0;
    }
    Ok((scale, shift, evaluate(&aligned, &gt, range)?))
}

pub fn eval_depth(args: &EvalDepthArgs) -> CmdResult {
    let records = load_records(&args.manifest)?;
    let range = DepthRange {
        min: args.min_depth,
        max: args.max_depth,
    };
    let alignment = match args.alignment {
        Alignment::None => "none",
        Alignment::Scale => "scale",
        Alignment::Affine => "affine",
    };
    let results: Vec<_> = records
        .par_iter()
        .map(|rec| eval_depth_record(rec, args.alignment, range))
        .collect();

    let mut out = output(args.out.as_deref())?;
    let mut extra = vec![("alignment", alignment.to_string())];
    if let Some(m) = args.min_depth {
        extra.push(("min_depth", m.to_string()));
    }
    if let Some(m) = args.max_depth {
        extra.push(("max_depth", m.to_string()));
    }
    // Depth maps carry no intrinsics; the convention is recorded for uniformity.
    writeln!(out, "{}", header("eval-depth", Convention::Center, &extra))?;
    writeln!(out, "key\tscene\tpixels\tscale\tshift\tabs_rel\tdelta1\tdelta2\tdelta3\tsi_log")?;
    let mut tally = Tally::default();
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (rec, r) in records.iter().zip(&results) {
        tally.record(r);
        let scene = rec.scene.map_or("-", |s| match s {
            crate::depth::Scene::Indoor => "indoor",
            crate::depth::Scene::Outdoor => "outdoor",
        });
        match r {
            Ok((scale, shift, m)) => {
                writeln!(
                    out,
                    "{}\t{scene}\t{}\t{scale:.6}\t{shift:.6}\t{:.6}\t{:.3}\t{:.3}\t{:.3}\t{:.6}",
                    rec.key(),
                    m.pixels,
                    m.abs_rel,
                    m.delta1,
                    m.delta2,
                    m.delta3,
                    m.si_log
                )?;
                for (c, v) in cols.iter_mut().zip([m.abs_rel, m.delta1, m.delta2, m.delta3, m.si_log]) {
                    c.push(v);
                }
            }
            Err(e) => {
                log::error!("{}: {e}", rec.key());
                writeln!(out, "{}\t{scene}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA", rec.key())?;
            }
        }
    }
    let means: Vec<String> = cols
        .iter()
        .map(|c| mean(c).map_or("NA".to_string(), |m| format!("{m:.3}")))
        .collect();
    writeln!(out, "mean\t-\t-\t-\t-\t{}", means.join("\t"))?;
    out.flush()?;
    Ok(tally)
}

fn parse_list<T: std::str::FromStr>(s: &str, n: usize, what: &str) -> std::result::Result<Vec<T>, Failure> {
    let vals: Vec<T> = s
        .split(',')
        .map(|x| x.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("{what} {s:?} is malformed")))?;
    if vals.len() != n {
        return Err(usage(format!("{what} {s:?} needs {n} comma-separated values")));
    }
    Ok(vals)
}

pub fn metrology(args: &MetrologyArgs, convention: Convention) -> CmdResult {
    let depth = read_depth(&args.depth, args.depth_scale).map_err(usage)?;
    let (k, source) = match (&args.intrinsics, &args.cami) {
        (Some(s), _) => {
            let v: Vec<f64> = parse_list(s, 4, "--intrinsics")?;
            let k = Intrinsics::new(v[0], v[1], v[2], v[3]).map_err(usage)?;
            (convention.import(k), "flag")
        }
        (None, Some(path)) => {
            let cfg = args.ransac.config();
            cfg.validate().map_err(usage)?;
            let ci = read_cami(path).map_err(usage)?;
            if ci.dims() != depth.dims() {
                return Err(usage(Error::DimsMismatch {
                    expected: depth.dims(),
                    got: ci.dims(),
                }));
            }
            (recover_intrinsics(&ci, &cfg)?.0, "cami")
        }
        (None, None) => return Err(usage("pass --intrinsics or --cami")),
    };
    let pairs: Vec<Vec<usize>> = args
        .pairs
        .iter()
        .map(|p| parse_list(p, 4, "--pair"))
        .collect::<std::result::Result<_, _>>()?;

    let shown = convention.export(k);
    let mut out = output(args.out.as_deref())?;
    writeln!(
        out,
        "{}",
        header(
            "metrology",
            convention,
            &[
                ("intrinsics", format!("{},{},{},{}", shown.fx, shown.fy, shown.cx, shown.cy)),
                ("source", source.to_string()),
            ]
        )
    )?;
    writeln!(out, "u1\tv1\tu2\tv2\tdistance_m")?;
    let mut tally = Tally::default();
    for p in &pairs {
        let r = metrology_distance(&depth, &k, (p[0], p[1]), (p[2], p[3]));
        tally.record(&r);
        match r {
            Ok(d) => writeln!(out, "{}\t{}\t{}\t{}\t{d:.9}", p[0], p[1], p[2], p[3])?,
            Err(e) => {
                log::error!("pair {:?}: {e}", p);
                writeln!(out, "{}\t{}\t{}\t{}\tNA", p[0], p[1], p[2], p[3])?;
            }
        }
    }
    out.flush()?;
    if let Some(path) = &args.ply {
        write_ply(path, &unproject(&depth, &k))?;
    }
    Ok(tally)
}

#[derive(Serialize)]
struct AlignReport<'a> {
    command: &'a str,
    version: &'a str,
    convention: &'a str,
    points: usize,
    scale: f64,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    rms_residual: f64,
}

pub fn align(args: &AlignArgs, convention: Convention) -> CmdResult {
    let source = read_ply(&args.source).map_err(usage)?;
    let target = read_ply(&args.target).map_err(usage)?;
    let fit = procrustes(&source, &target).map_err(usage)?;
    let t = &fit.transform;
    let r = &t.rotation;
    let report = AlignReport {
        command: "align",
        version: env!("CARGO_PKG_VERSION"),
        convention: convention.name(),
        points: source.len(),
        scale: t.scale,
        rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
        translation: [t.translation.x, t.translation.y, t.translation.z],
        rms_residual: fit.rms_residual,
    };
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    out.flush()?;
    if let Some(path) = &args.apply {
        let moved = crate::geometry::PointCloud::from_points(source.points.iter().map(|p| t.apply(p)).collect());
        write_ply(path, &moved)?;
    }
    Ok(Tally { ok: 1, failed: 0 })
}

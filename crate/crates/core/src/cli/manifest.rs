//! Line-delimited JSON manifest: one record per line, blank lines and lines
//! starting with `#` ignored.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{ImageDims, Intrinsics};
use crate::depth::Scene;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    /// Record key; defaults to the image file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub image_path: PathBuf,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<PathBuf>,
    /// Meters per stored unit of `depth_path` (16-bit PNG only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_depth_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_depth_scale: Option<f64>,
}

impl ManifestRecord {
    pub fn key(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => self
                .image_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }

    /// Intrinsics as written in the manifest, without convention changes.
    pub fn intrinsics(&self) -> Result<Intrinsics> {
        Intrinsics::new(self.fx, self.fy, self.cx, self.cy)
    }

    pub fn dims(&self) -> Result<ImageDims> {
        ImageDims::new(self.width, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics()?;
        self.dims()?;
        if self.image_path.as_os_str().is_empty() {
            return Err(Error::Format("image_path is empty".into()));
        }
        let key = self.key();
        if key.is_empty() || key.contains(['/', '\\']) {
            return Err(Error::Format(format!("record key {key:?} is not a usable file name")));
        }
        for (name, scale) in [("depth_scale", self.depth_scale), ("pred_depth_scale", self.pred_depth_scale)] {
            if let Some(s) = scale {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Format(format!("{name} must be positive, got {s}")));
                }
            }
        }
        Ok(())
    }

    /// Resolves relative paths against the manifest's directory.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.image_path);
        for p in [&mut self.depth_path, &mut self.mask_path, &mut self.pred_depth_path]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::new();
    let mut keys = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut rec: ManifestRecord = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("manifest line {}: {e}", lineno + 1)))?;
        rec.validate()
            .map_err(|e| Error::Format(format!("manifest line {}: {e}", lineno + 1)))?;
        if !keys.insert(rec.key()) {
            return Err(Error::Format(format!("manifest line {}: duplicate key {:?}", lineno + 1, rec.key())));
        }
        rec.rebase(base);
        records.push(rec);
    }
    Ok(records)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new("")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"image_path":"img/a.png","fx":500,"fy":500,"cx":320,"cy":240,"width":640,"height":480}"#;

    #[test]
    fn parses_and_rebases() {
        let text = format!("# comment\n\n{LINE}\n{}\n", LINE.replace("a.png", "b.jpg").replace("500,\"fy\"", "400,\"fy\""));
        let recs = parse_manifest(&text, Path::new("/data")).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].key(), "a");
        assert_eq!(recs[0].image_path, Path::new("/data/img/a.png"));
        assert_eq!(recs[1].fx, 400.0);
        assert!(recs[0].depth_path.is_none());
    }

    #[test]
    fn optional_fields() {
        let line = LINE.replace('}', r#","id":"r1","depth_path":"d.png","depth_scale":0.001,"scene":"outdoor"}"#);
        let rec = &parse_manifest(&line, Path::new("")).unwrap()[0];
        assert_eq!(rec.key(), "r1");
        assert_eq!(rec.scene, Some(Scene::Outdoor));
        assert_eq!(rec.depth_scale, Some(0.001));
    }

    #[test]
    fn rejects_bad_records() {
        for bad in [
            LINE.replace("\"fx\":500", "\"fx\":-1"),
            LINE.replace("\"width\":640", "\"width\":1"),
            LINE.replace('}', r#","depth_scale":0}"#),
            LINE.replace('}', r#","colour":1}"#),
            LINE.replace("img/a.png", ""),
            "{not json".to_string(),
            format!("{LINE}\n{LINE}"),
        ] {
            assert!(parse_manifest(&bad, Path::new("")).is_err(), "{bad}");
        }
    }
}

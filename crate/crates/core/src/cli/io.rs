//! File formats used by the command line: input frames, depth maps, masks,
//! and camera-image previews.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use image::{GrayImage as Luma8, ImageBuffer, Luma, RgbImage};

use crate::camera_image::{normalize, rgb_to_gray, CameraImage, GrayImage};
use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Loads a PNG/JPEG frame as grayscale in `[0, 1]`.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let rgb = image::open(path)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other),
        })?
        .to_rgb8();
    let (w, h) = rgb.dimensions();
    let data: Vec<f64> = rgb.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    rgb_to_gray(w as usize, h as usize, 3, &data)
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Reads a depth map. `.png` files are 16-bit grayscale where stored value
/// `q` means `q · scale` meters and `0` means missing; anything else is raw
/// float32: `u32` width, `u32` height (little endian), then row-major
/// values in meters.
pub fn read_depth(path: &Path, scale: Option<f64>) -> Result<DepthMap> {
    if is_png(path) {
        let img = image::open(path)?.to_luma16();
        let (w, h) = img.dimensions();
        let scale = scale.unwrap_or(1.0);
        let depth = img.as_raw().iter().map(|&q| q as f64 * scale).collect();
        return DepthMap::new(w as usize, h as usize, depth);
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::Format(format!("{}: raw depth header truncated", path.display())));
    }
    let w = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("raw depth dims overflow".into()))?;
    if bytes.len() - 8 != expected {
        return Err(Error::Format(format!(
            "{}: {w}x{h} raw depth needs {expected} payload bytes, found {}",
            path.display(),
            bytes.len() - 8
        )));
    }
    let depth = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DepthMap::new(w, h, depth)
}

pub fn write_depth_raw(path: &Path, depth: &DepthMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + 4 * depth.depth.len());
    bytes.extend_from_slice(&(depth.width as u32).to_le_bytes());
    bytes.extend_from_slice(&(depth.height as u32).to_le_bytes());
    for (&d, &m) in depth.depth.iter().zip(&depth.mask) {
        let d = if m { d as f32 } else { 0.0 };
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `round(depth / scale)` as 16-bit PNG; masked pixels become 0.
pub fn write_depth_png(path: &Path, depth: &DepthMap, scale: f64) -> Result<()> {
    let mut img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(depth.width as u32, depth.height as u32);
    for (i, px) in img.pixels_mut().enumerate() {
        let q = if depth.mask[i] { (depth.depth[i] / scale).round() } else { 0.0 };
        if !(0.0..=u16::MAX as f64).contains(&q) {
            return Err(Error::OutOfRange {
                value: q,
                min: 0.0,
                max: u16::MAX as f64,
            });
        }
        px.0 = [q as u16];
    }
    img.save(path)?;
    Ok(())
}

/// Reads an 8-bit mask PNG: nonzero is valid.
pub fn read_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let img: Luma8 = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.as_raw().iter().map(|&b| b != 0).collect()))
}

/// RGB preview mapping the normalized `[-1, 1]` channels to `[0, 255]`.
pub fn write_preview(path: &Path, ci: &CameraImage) -> Result<()> {
    let n = normalize(ci);
    let to_byte = |x: f64| ((x.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8;
    let img = RgbImage::from_fn(ci.width as u32, ci.height as u32, |u, v| {
        let i = v as usize * ci.width + u as usize;
        image::Rgb([to_byte(n.channels[0][i]), to_byte(n.channels[1][i]), to_byte(n.channels[2][i])])
    });
    img.save(path)?;
    Ok(())
}

/// Buffered writer to a file, or stdout when no path is given.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.f32");
        let depth = DepthMap::new(3, 2, vec![1.5, 0.0, 2.25, f64::NAN, 4.0, 1e-3]).unwrap();
        write_depth_raw(&path, &depth).unwrap();
        let back = read_depth(&path, None).unwrap();
        assert_eq!(back.mask, vec![true, false, true, false, true, true]);
        assert_eq!(back.get(0, 0), Some(1.5));
        assert_eq!(back.get(2, 1), Some(1e-3f32 as f64));
        fs::write(&path, [2, 0, 0, 0, 2, 0, 0, 0, 1]).unwrap();
        assert!(matches!(read_depth(&path, None), Err(Error::Format(_))));
    }

    #[test]
    fn png_depth_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.png");
        let depth = DepthMap::new(2, 2, vec![1.0, 0.0, 2.5, 65.535]).unwrap();
        write_depth_png(&path, &depth, 0.001).unwrap();
        let back = read_depth(&path, Some(0.001)).unwrap();
        assert_eq!(back.mask, vec![true, false, true, true]);
        assert!((back.get(1, 1).unwrap() - 65.535).abs() < 1e-12);
        let too_deep = DepthMap::new(1, 2, vec![70.0, 1.0]).unwrap();
        assert!(write_depth_png(&path, &too_deep, 0.001).is_err());
    }

    #[test]
    fn gray_from_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        RgbImage::from_fn(4, 3, |u, _| image::Rgb([if u == 0 { 255 } else { 0 }, 0, 0]))
            .save(&path)
            .unwrap();
        let g = load_gray(&path).unwrap();
        assert_eq!((g.width, g.height), (4, 3));
        assert!((g.get(0, 2) - 0.299).abs() < 1e-12);
        assert_eq!(g.get(1, 0), 0.0);
        assert!(matches!(load_gray(&dir.path().join("missing.png")), Err(Error::Io { .. })));
    }
}

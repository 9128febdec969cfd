//! ASCII PLY export and import of point clouds (`x y z` float vertices).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub fn to_ascii(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(64 + cloud.len() * 32);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
    }
    out
}

/// Reads the `x`, `y`, `z` properties of the vertex element of an ASCII PLY
/// file; other properties and elements are skipped.
pub fn from_ascii(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Format("missing ply magic".into()));
    }
    // (name, count, properties)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut ascii = false;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format("unterminated ply header".into()))?
            .trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => ascii = words.next() == Some("ascii"),
            Some("element") => {
                let name = words.next().unwrap_or_default().to_string();
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad element line {line:?}")))?;
                elements.push((name, count, Vec::new()));
            }
            Some("property") => {
                let name = words.last().unwrap_or_default().to_string();
                if line.contains(" list ") {
                    return Err(Error::Format("list properties are not supported".into()));
                }
                elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before element".into()))?
                    .2
                    .push(name);
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    if !ascii {
        return Err(Error::Format("only ascii ply is supported".into()));
    }
    let mut points = Vec::new();
    for (name, count, props) in &elements {
        let rows: Vec<&str> = lines.by_ref().take(*count).collect();
        if rows.len() != *count {
            return Err(Error::Format(format!("element {name} is truncated")));
        }
        if name != "vertex" {
            continue;
        }
        let col = |axis: &str| {
            props
                .iter()
                .position(|p| p == axis)
                .ok_or_else(|| Error::Format(format!("vertex has no {axis} property")))
        };
        let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
        for row in rows {
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("bad vertex {row:?}: {e}")))?;
            if vals.len() != props.len() {
                return Err(Error::Format(format!("vertex row {row:?} has {} values", vals.len())));
            }
            points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
        }
    }
    Ok(PointCloud::from_points(points))
}

pub fn write_ply(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_ascii(cloud)).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_ascii(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_f32_precision() {
        let cloud = PointCloud::from_points(vec![Point3::new(0.1, -2.5, 3.0), Point3::new(1e-3, 4.0, 1e4)]);
        let text = to_ascii(&cloud);
        assert!(text.starts_with("ply\nformat ascii 1.0\nelement vertex 2\n"));
        let back = from_ascii(&text).unwrap();
        for (a, b) in back.points.iter().zip(&cloud.points) {
            assert_eq!(a.x as f32, b.x as f32);
            assert_eq!(a.y as f32, b.y as f32);
            assert_eq!(a.z as f32, b.z as f32);
        }
    }

    #[test]
    fn reads_extra_properties_and_elements() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float z\nproperty uchar red\nproperty float x\nproperty float y\nelement camera 1\nproperty float f\nend_header\n3 255 1 2\n6 0 4 5\n500\n";
        let cloud = from_ascii(text).unwrap();
        assert_eq!(cloud.points, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(from_ascii("nope").is_err());
        assert!(from_ascii("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n").is_err());
        assert!(from_ascii("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n").is_err());
        assert!(from_ascii("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n").is_err());
    }
}

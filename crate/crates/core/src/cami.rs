//! CAMI: lossless little-endian container for camera images.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CAMI"
//!      4     2  version (u16) = 1
//!      6     4  width (u32)
//!     10     4  height (u32)
//!     14     1  channels (u8) = 3
//!     15     5  reserved, zero
//!     20     -  channels × height × width f32, channel-planar, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::camera_image::{CameraImage, ChannelVariant};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CAMI";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;
const CHANNELS: u8 = 3;

pub fn encode_bytes(ci: &CameraImage) -> Result<Vec<u8>> {
    let width = u32::try_from(ci.width).map_err(|_| Error::Format("width exceeds u32".into()))?;
    let height = u32::try_from(ci.height).map_err(|_| Error::Format("height exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + ci.width * ci.height * 12);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.push(CHANNELS);
    out.extend_from_slice(&[0u8; 5]);
    for c in 0..3 {
        for &x in ci.channel(c) {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a CAMI buffer. The container does not record how the third
/// channel was produced; it is reported as [`ChannelVariant::DuplicateTheta`]
/// when it is bitwise equal to the azimuth channel and as grayscale otherwise.
pub fn decode_bytes(bytes: &[u8]) -> Result<CameraImage> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let channels = bytes[14];
    if channels != CHANNELS {
        return Err(Error::Format(format!("expected 3 channels, got {channels}")));
    }
    if bytes[15..20].iter().any(|&b| b != 0) {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let plane = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format(format!("dims {width}x{height} overflow")))?;
    let payload = plane
        .checked_mul(3 * 4)
        .ok_or_else(|| Error::Format(format!("dims {width}x{height} overflow")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != payload {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {payload}",
            body.len()
        )));
    }
    let mut planes: Vec<Vec<f64>> = if plane == 0 {
        vec![Vec::new(); 3]
    } else {
        body.chunks_exact(plane * 4)
            .map(|chunk| {
                chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                    .collect()
            })
            .collect()
    };
    let third = planes.pop().unwrap();
    let phi = planes.pop().unwrap();
    let theta = planes.pop().unwrap();
    let variant = if width * height > 0 && third == theta {
        ChannelVariant::DuplicateTheta
    } else {
        ChannelVariant::Grayscale
    };
    CameraImage::from_channels(width, height, theta, phi, third, variant)
}

pub fn write_cami(path: impl AsRef<Path>, ci: &CameraImage) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_bytes(ci)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_cami(path: impl AsRef<Path>) -> Result<CameraImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bytes(&bytes)
}

//! KITTI-convention disparity PNGs: 16-bit grayscale, value/256, 0 = invalid.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};

/// Reads a 16-bit grayscale disparity PNG; raw value 0 marks invalid pixels,
/// anything else is `raw / 256`.
pub fn read_kitti_disparity_png<P: AsRef<Path>>(path: P) -> Result<DisparityMap> {
    let path = path.as_ref();
    let img = open(path)?;
    let gray = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::malformed(
                "PNG",
                path,
                format!(
                    "expected 16-bit single-channel disparity, got {:?}",
                    other.color()
                ),
            ))
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let mut map = DisparityMap::invalid(w, h);
    for (x, y, Luma([raw])) in gray.enumerate_pixels() {
        if *raw != 0 {
            map.set(x as usize, y as usize, *raw as f32 / 256.0);
        }
    }
    Ok(map)
}

/// Writes a disparity map in the same convention; INVALID pixels become 0.
pub fn write_kitti_disparity_png<P: AsRef<Path>>(map: &DisparityMap, path: P) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (map.width() as u32, map.height() as u32);
    let buf = ImageBuffer::from_fn(w, h, |x, y| {
        let d = map.get(x as usize, y as usize);
        let raw = if d.is_finite() {
            (d * 256.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        Luma([raw])
    });
    buf.save(path)
        .map_err(|e| Error::malformed("PNG", path, e.to_string()))
}

pub(crate) fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::malformed("image", path, other.to_string()),
    })
}

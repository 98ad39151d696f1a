//! PFM disparity I/O. Grayscale "Pf" maps only; the scale sign selects the
//! payload endianness and rows are stored bottom to top.

use std::fs;
use std::path::Path;

use crate::disparity::{DisparityMap, INVALID_DISPARITY};
use crate::error::{Error, Result};

const FORMAT: &str = "PFM";

/// Reads a grayscale PFM file; non-finite samples become INVALID pixels.
pub fn read_pfm<P: AsRef<Path>>(path: P) -> Result<DisparityMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes, path)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start != *pos).then(|| &bytes[start..*pos])
}

fn parse_pfm(bytes: &[u8], path: &Path) -> Result<DisparityMap> {
    let malformed = |reason: &str| Error::malformed(FORMAT, path, reason);

    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| malformed("missing magic"))?;
    match magic {
        b"Pf" => {}
        b"PF" => {
            return Err(Error::Unsupported(format!(
                "{}: color PFM is not supported, expected grayscale \"Pf\"",
                path.display()
            )))
        }
        other => {
            return Err(malformed(&format!(
                "bad magic {:?}, expected \"Pf\"",
                String::from_utf8_lossy(other)
            )))
        }
    }
    let tok = next_token(bytes, &mut pos).ok_or_else(|| malformed("missing width"))?;
    let width: usize = parse_number(tok, path, "width")?;
    let tok = next_token(bytes, &mut pos).ok_or_else(|| malformed("missing height"))?;
    let height: usize = parse_number(tok, path, "height")?;
    if width == 0 || height == 0 {
        return Err(malformed("zero dimension"));
    }
    let tok = next_token(bytes, &mut pos).ok_or_else(|| malformed("missing scale"))?;
    let scale: f32 = parse_number(tok, path, "scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(malformed("scale must be finite and nonzero"));
    }
    let little_endian = scale < 0.0;

    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() {
        return Err(malformed("missing raster"));
    }
    let payload = &bytes[pos + 1..];
    let needed = width * height * 4;
    if payload.len() < needed {
        return Err(malformed(&format!(
            "raster holds {} bytes, expected {}",
            payload.len(),
            needed
        )));
    }

    let mut map = DisparityMap::invalid(width, height);
    for file_row in 0..height {
        let y = height - 1 - file_row;
        for x in 0..width {
            let at = (file_row * width + x) * 4;
            let raw: [u8; 4] = payload[at..at + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            map.set(x, y, if v.is_finite() { v } else { INVALID_DISPARITY });
        }
    }
    Ok(map)
}

fn parse_number<T: std::str::FromStr>(token: &[u8], path: &Path, what: &str) -> Result<T> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::malformed(
                FORMAT,
                path,
                format!("bad {what} {:?}", String::from_utf8_lossy(token)),
            )
        })
}

/// Writes a little-endian grayscale PFM; INVALID pixels are stored as +inf.
pub fn write_pfm<P: AsRef<Path>>(map: &DisparityMap, path: P) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (map.width(), map.height());
    let mut out = Vec::with_capacity(32 + w * h * 4);
    out.extend_from_slice(format!("Pf\n{w} {h}\n-1.0\n").as_bytes());
    for file_row in 0..h {
        let y = h - 1 - file_row;
        for x in 0..w {
            let v = map.get(x, y);
            let v = if v.is_finite() { v } else { f32::INFINITY };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> tempfile::TempDir {
        tempfile::Builder::new().prefix(name).tempdir().unwrap()
    }

    fn write_bytes(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    fn le_fixture(width: usize, height: usize, file_order: &[f32]) -> Vec<u8> {
        let mut bytes = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
        for v in file_order {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    #[test]
    fn infinity_becomes_invalid() {
        let dir = tmp("pfm");
        // File rows are bottom-to-top: first stored row is image row 1.
        let p = write_bytes(&dir, "a.pfm", &le_fixture(2, 2, &[3.0, f32::INFINITY, 1.0, 2.0]));
        let map = read_pfm(&p).unwrap();
        assert_eq!(map.get(0, 0), 1.0);
        assert_eq!(map.get(1, 0), 2.0);
        assert_eq!(map.get(0, 1), 3.0);
        assert!(!map.is_valid(1, 1));
        assert_eq!(map.valid_count(), 3);
    }

    #[test]
    fn nan_becomes_invalid() {
        let dir = tmp("pfm");
        let p = write_bytes(&dir, "a.pfm", &le_fixture(1, 1, &[f32::NAN]));
        assert_eq!(read_pfm(&p).unwrap().valid_count(), 0);
    }

    #[test]
    fn big_endian_rows_read_bottom_to_top() {
        // Independent fixture: positive scale means big-endian payload.
        let mut bytes = b"Pf\n3 2\n1.0\n".to_vec();
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let dir = tmp("pfm");
        let p = write_bytes(&dir, "be.pfm", &bytes);
        let map = read_pfm(&p).unwrap();
        assert_eq!(map.get(0, 0), 4.0, "top-left comes from the second stored row");
        assert_eq!(map.get(2, 0), 6.0);
        assert_eq!(map.get(0, 1), 1.0);
        assert_eq!(map.get(2, 1), 3.0);
    }

    #[test]
    fn write_then_read_round_trips_bytes() {
        let dir = tmp("pfm");
        let mut map = DisparityMap::invalid(3, 2);
        map.set(0, 0, 0.125);
        map.set(1, 0, 77.25);
        map.set(2, 1, 1.0e-7);
        let p1 = dir.path().join("one.pfm");
        let p2 = dir.path().join("two.pfm");
        write_pfm(&map, &p1).unwrap();
        let back = read_pfm(&p1).unwrap();
        write_pfm(&back, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(back.get(1, 0), 77.25);
        assert!(!back.is_valid(1, 1));
    }

    #[test]
    fn color_pfm_is_unsupported() {
        let dir = tmp("pfm");
        let p = write_bytes(&dir, "c.pfm", b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0");
        assert!(matches!(read_pfm(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = tmp("pfm");
        for (name, bytes) in [
            ("magic", b"Qf\n1 1\n-1.0\n\0\0\0\0".to_vec()),
            ("width", b"Pf\nx 1\n-1.0\n\0\0\0\0".to_vec()),
            ("zero", b"Pf\n0 1\n-1.0\n".to_vec()),
            ("scale", b"Pf\n1 1\n0.0\n\0\0\0\0".to_vec()),
            ("empty", Vec::new()),
        ] {
            let p = write_bytes(&dir, &format!("{name}.pfm"), &bytes);
            assert!(
                matches!(read_pfm(&p), Err(Error::Malformed { .. })),
                "{name} accepted"
            );
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tmp("pfm");
        let mut bytes = le_fixture(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        bytes.truncate(bytes.len() - 3);
        let p = write_bytes(&dir, "t.pfm", &bytes);
        match read_pfm(&p) {
            Err(Error::Malformed { reason, .. }) => assert!(reason.contains("13 bytes")),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = read_pfm("/nonexistent/nowhere.pfm").unwrap_err();
        assert!(err.to_string().contains("nowhere.pfm"));
    }
}

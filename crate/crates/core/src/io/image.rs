//! Single-channel image files: binary PGM (P5) always, 8-bit PNG as well.

use std::path::Path;

use crate::error::{Error, Result};
use crate::render::RasterImage;

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|&v| quantize(v)));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<RasterImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnsupportedFormat("not a binary PGM (missing P5 magic)".into()));
    }
    // header: magic, width, height, maxval, separated by whitespace and
    // comments, then exactly one whitespace byte
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("PGM header is truncated or malformed".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("PGM header field out of range".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Parse("PGM header is not followed by whitespace".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("PGM has zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval}; only 8-bit is supported"
        )));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Dimension("PGM dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < n {
        return Err(Error::Parse(format!(
            "PGM payload truncated: expected {n} bytes, got {}",
            payload.len()
        )));
    }
    let data = payload[..n].iter().map(|&b| b as f64 / maxval as f64).collect();
    RasterImage::from_data(width, height, data)
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Parse(format!("PNG decode failed: {e}")))?
        .into_luma8();
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::Dimension("PNG has zero dimension".into()));
    }
    let data = img.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    RasterImage::from_data(w as usize, h as usize, data)
}

pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(
        img.width as u32,
        img.height as u32,
        img.data.iter().map(|&v| quantize(v)).collect(),
    )
    .ok_or_else(|| Error::Dimension("image buffer size mismatch".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Parse(format!("PNG encode failed: {e}")))?;
    Ok(out.into_inner())
}

/// Decodes PGM or PNG, chosen by the leading magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else {
        Err(Error::UnsupportedFormat("expected binary PGM (P5) or PNG".into()))
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Writes by extension: `.pgm` or `.png`.
pub fn write_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if img.width == 0 || img.height == 0 {
        return Err(Error::Dimension("cannot write an empty image".into()));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let bytes = match ext.as_str() {
        "pgm" => encode_pgm(img),
        "png" => encode_png(img)?,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "image extension {other:?}; use .pgm or .png"
            )))
        }
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_example() {
        let mut bytes = b"P5 4 4 255\n".to_vec();
        bytes.extend(0..16u8);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height), (4, 4));
        assert_eq!(img.get(1, 0), 1.0 / 255.0);
    }

    #[test]
    fn comments_and_errors() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        assert_eq!(decode_pgm(&bytes).unwrap().data, vec![0.0, 1.0]);
        assert!(matches!(decode_pgm(b"P5 4 4 255\n\x00\x01"), Err(Error::Parse(_))));
        assert!(matches!(decode_pgm(b"P5 0 4 255\n"), Err(Error::Dimension(_))));
        assert!(matches!(
            decode_pgm(b"P5 1 1 65535\n\x00\x00"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_data(3, 2, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let p = dir.path().join("a.png");
        write_image(&img, &p).unwrap();
        let back = read_image(&p).unwrap();
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
        assert!(matches!(
            write_image(&img, dir.path().join("a.bmp")),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}

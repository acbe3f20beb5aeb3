//! Netpbm decoding (P2, P3, P5, P6) and binary PGM (P5) encoding.
//!
//! Maxvals above 255 are rescaled to 8 bits with rounding.

use std::path::Path;

use crate::imaging::{to_u8, GrayImage, RgbImage};
use crate::{Error, Result};

/// Decoded raster before any color promotion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Netpbm {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Netpbm {
    pub fn into_rgb(self) -> RgbImage {
        match self {
            Netpbm::Gray(g) => RgbImage::from_gray(&g),
            Netpbm::Rgb(c) => c,
        }
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptImage(format!("missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptImage(format!("{what} out of range")))
    }
}

pub fn decode(data: &[u8]) -> Result<Netpbm> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(Error::UnsupportedFormat("not a netpbm file".into()));
    }
    let kind = data[1];
    let (channels, binary) = match kind {
        b'2' => (1, false),
        b'5' => (1, true),
        b'3' => (3, false),
        b'6' => (3, true),
        other => {
            return Err(Error::UnsupportedFormat(format!("netpbm variant P{}", other as char)));
        }
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::CorruptImage(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::CorruptImage("dimensions overflow".into()))?;

    let scale = |v: usize| -> Result<u8> {
        if v > maxval {
            return Err(Error::CorruptImage(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok(if maxval == 255 {
            v as u8
        } else {
            to_u8(v as f64 * 255.0 / maxval as f64)
        })
    };

    let mut samples = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        match data.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::CorruptImage("missing raster separator".into())),
        }
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let body = &data[cur.pos..];
        if body.len() < count * bytes_per {
            return Err(Error::CorruptImage(format!(
                "raster truncated: {} of {} bytes",
                body.len(),
                count * bytes_per
            )));
        }
        for i in 0..count {
            let v = if bytes_per == 1 {
                body[i] as usize
            } else {
                u16::from_be_bytes([body[2 * i], body[2 * i + 1]]) as usize
            };
            samples.push(scale(v)?);
        }
    } else {
        for _ in 0..count {
            let v = cur.number("sample").map_err(|_| Error::CorruptImage("raster truncated".into()))?;
            samples.push(scale(v)?);
        }
    }

    if channels == 1 {
        Ok(Netpbm::Gray(GrayImage::new(width, height, samples)?))
    } else {
        let pixels = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Netpbm::Rgb(RgbImage::new(width, height, pixels)?))
    }
}

/// Binary PGM: `P5\n<w> <h>\n255\n` followed by the raw bytes.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Loads any supported file as RGB; grayscale files are triplicated.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    Ok(decode(&read(path)?)?.into_rgb())
}

/// Loads a grayscale raster. Color files are converted with BT.601 luma.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    Ok(match decode(&read(path)?)? {
        Netpbm::Gray(g) => g,
        Netpbm::Rgb(c) => crate::imaging::to_grayscale(&c),
    })
}

pub fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}

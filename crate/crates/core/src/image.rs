//! 8-bit grayscale ordered dissimilarity images and their binary PGM encoding.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Square grayscale image; 0 is black (zero distance), 255 is white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OdImage {
    n: usize,
    pixels: Vec<u8>,
}

impl OdImage {
    pub fn new(n: usize, pixels: Vec<u8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("image must be at least 1 x 1"));
        }
        if pixels.len() != n * n {
            return Err(Error::shape(n * n, pixels.len()));
        }
        Ok(Self { n, pixels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.n + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &p in &self.pixels {
            h[p as usize] += 1;
        }
        h
    }

    /// Square sub-image covering rows and columns `start..end`.
    pub fn crop(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return Err(Error::invalid(format!(
                "crop range {start}..{end} invalid for {} x {} image",
                self.n, self.n
            )));
        }
        let k = end - start;
        let mut pixels = Vec::with_capacity(k * k);
        for r in start..end {
            pixels.extend_from_slice(&self.pixels[r * self.n + start..r * self.n + end]);
        }
        Self::new(k, pixels)
    }
}

/// Binary PGM (`P5`, maxval 255).
pub fn encode_pgm(img: &OdImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.n, img.n).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn write_pgm(img: &OdImage, path: &Path) -> Result<()> {
    let tmp = path.with_extension("pgm.tmp");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_pgm(img))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<OdImage> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Parses a binary PGM with square dimensions and maxval 255. Comments are allowed
/// in the header.
pub fn decode_pgm(bytes: &[u8]) -> Result<OdImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected P5 PGM, found {magic:?}")));
    }
    let mut num = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse()
            .map_err(|_| Error::Format(format!("bad PGM {what}: {t:?}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    if width != height {
        return Err(Error::Format(format!(
            "ordered dissimilarity images are square, got {width} x {height}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = &bytes[(pos + 1).min(bytes.len())..];
    if data.len() != width * height {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {}",
            data.len(),
            width * height
        )));
    }
    OdImage::new(width, data.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_encoding() {
        let img = OdImage::new(2, vec![0, 255, 255, 0]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(bytes, b"P5\n2 2\n255\n\x00\xff\xff\x00");
    }

    #[test]
    fn one_by_one_zero_payload() {
        let img = OdImage::new(1, vec![0]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[bytes.len() - 1..], &[0]);
        assert_eq!(bytes.len(), b"P5\n1 1\n255\n".len() + 1);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("odi.pgm");
        let img = OdImage::new(3, (0..9).map(|x| x * 28).collect()).unwrap();
        write_pgm(&img, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn decode_accepts_comments_and_rejects_short_raster() {
        let img = decode_pgm(b"P5\n# made by hand\n1 1\n255\n\x07").unwrap();
        assert_eq!(img.pixel(0, 0), 7);
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
    }

    #[test]
    fn crop_square() {
        let img = OdImage::new(3, (0..9).collect()).unwrap();
        assert_eq!(img.crop(1, 3).unwrap().pixels(), &[4, 5, 7, 8]);
        assert!(img.crop(2, 2).is_err());
    }
}

//! The `VATF` binary matrix store.
//!
//! Layout: magic `b"VATF"`, then little-endian `u32` version (always 1), `n`
//! and `d`, then `n * d` little-endian IEEE-754 `f64` values in row-major
//! order. Feature matrices and dissimilarity matrices (`d == n`) share it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{for_each_dissim_row, DissimilarityMatrix, FeatureMatrix};

pub const MAGIC: [u8; 4] = *b"VATF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Raw contents of a `VATF` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub n: usize,
    pub d: usize,
    pub values: Vec<f64>,
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit in u32")))
}

pub fn write_header<W: Write>(w: &mut W, n: usize, d: usize) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())
}

fn write_values<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Serializes a matrix to any writer.
pub fn write_vatf<W: Write>(w: &mut W, n: usize, d: usize, values: &[f64]) -> Result<()> {
    dim_u32(n, "n")?;
    dim_u32(d, "d")?;
    if values.len() != n * d {
        return Err(Error::shape(n * d, values.len()));
    }
    let wrap = |e| Error::Format(format!("write failed: {e}"));
    write_header(w, n, d).map_err(wrap)?;
    write_values(w, values).map_err(wrap)
}

/// Parses a matrix from any reader.
pub fn read_vatf<R: Read>(r: &mut R) -> Result<RawMatrix> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated VATF header: {e}")))?;
    if header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"VATF\"",
            &header[..4]
        )));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap());
    let version = word(1);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported VATF version {version}")));
    }
    let (n, d) = (word(2) as usize, word(3) as usize);
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format(format!("VATF dimensions {n} x {d} overflow")))?;
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for k in 0..count {
        r.read_exact(&mut buf).map_err(|e| {
            Error::Format(format!(
                "VATF payload truncated at value {k} of {count}: {e}"
            ))
        })?;
        values.push(f64::from_le_bytes(buf));
    }
    let mut probe = [0u8; 1];
    if matches!(r.read(&mut probe), Ok(1)) {
        return Err(Error::Format("trailing bytes after VATF payload".into()));
    }
    Ok(RawMatrix { n, d, values })
}

pub fn read_vatf_path(path: &Path) -> Result<RawMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_vatf(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("vatf.tmp");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_features(path: &Path, f: &FeatureMatrix) -> Result<()> {
    write_atomic(path, |w| write_vatf(w, f.n(), f.d(), f.as_slice()))
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let raw = read_vatf_path(path)?;
    FeatureMatrix::new(raw.n, raw.d, raw.values)
}

pub fn write_dissim(path: &Path, m: &DissimilarityMatrix) -> Result<()> {
    write_atomic(path, |w| write_vatf(w, m.n(), m.n(), m.as_slice()))
}

pub fn read_dissim(path: &Path) -> Result<DissimilarityMatrix> {
    let raw = read_vatf_path(path)?;
    if raw.n != raw.d {
        return Err(Error::Format(format!(
            "{}: dissimilarity store must be square, got {} x {}",
            path.display(),
            raw.n,
            raw.d
        )));
    }
    DissimilarityMatrix::new(raw.n, raw.values)
}

/// Writes the Euclidean dissimilarity matrix of `f` straight to disk, holding
/// only `tile_rows` rows in memory at a time.
pub fn write_dissim_streaming(path: &Path, f: &FeatureMatrix, tile_rows: usize) -> Result<()> {
    let n = f.n();
    dim_u32(n, "n")?;
    write_atomic(path, |w| {
        write_header(w, n, n).map_err(|e| Error::io(path, e))?;
        for_each_dissim_row(f, tile_rows, |_, row| write_values(w, row))
            .map_err(|e| Error::io(path, e))
    })
}

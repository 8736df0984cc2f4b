//! Per-recording feature extraction with an on-disk cache.

use std::path::{Path, PathBuf};

use audiovat::audio::{extract_features, AudioConfig, MelFilterbank};
use audiovat::store::{read_features, write_features};
use audiovat::FeatureMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::manifest::LabeledManifest;

/// Cache entries are keyed by path, byte size and the full audio config.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn key(path: &Path, size: u64, cfg: &AudioConfig) -> String {
        let mut h = Sha256::new();
        h.update(path.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(size.to_le_bytes());
        h.update(serde_json::to_vec(cfg).expect("config serializes"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn entry(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.vatf"))
    }

    pub fn get(&self, key: &str, dim: usize) -> Option<Vec<f64>> {
        let f = read_features(&self.entry(key)).ok()?;
        (f.n() == 1 && f.d() == dim).then(|| f.into_vec())
    }

    pub fn put(&self, key: &str, v: &[f64]) -> Result<()> {
        let f = FeatureMatrix::new(1, v.len(), v.to_vec())?;
        write_features(&self.entry(key), &f)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtractStats {
    pub computed: usize,
    pub cached: usize,
}

fn one(
    path: &Path,
    cfg: &AudioConfig,
    fb: &MelFilterbank,
    cache: Option<&FeatureCache>,
) -> Result<(Vec<f64>, bool)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let key = cache.map(|_| FeatureCache::key(path, bytes.len() as u64, cfg));
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Some(v) = c.get(k, cfg.n_mels) {
            return Ok((v, true));
        }
    }
    let v = extract_features(&bytes, cfg, fb).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })?;
    if let (Some(c), Some(k)) = (cache, &key) {
        c.put(k, &v)?;
    }
    Ok((v, false))
}

/// One feature row per manifest record, in manifest order. All missing files
/// are reported together before any work starts.
pub fn extract_manifest(
    manifest: &LabeledManifest,
    cfg: &AudioConfig,
    cache: Option<&FeatureCache>,
) -> Result<(FeatureMatrix, ExtractStats)> {
    if manifest.is_empty() {
        return Err(CliError::input("manifest has no records"));
    }
    let paths: Vec<PathBuf> = manifest
        .records
        .iter()
        .map(|r| manifest.resolve(r))
        .collect();
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
    if !missing.is_empty() {
        return Err(CliError::Missing(missing));
    }
    let fb = cfg.filterbank()?;
    let results: Vec<Result<(Vec<f64>, bool)>> =
        paths.par_iter().map(|p| one(p, cfg, &fb, cache)).collect();
    let mut rows = Vec::with_capacity(paths.len());
    let mut stats = ExtractStats::default();
    for r in results {
        let (v, hit) = r?;
        if hit {
            stats.cached += 1;
        } else {
            stats.computed += 1;
        }
        rows.push(v);
    }
    Ok((FeatureMatrix::from_rows(&rows)?, stats))
}

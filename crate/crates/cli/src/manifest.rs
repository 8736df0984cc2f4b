//! `path,scene,city` manifests.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::labels::{City, Scene};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub path: String,
    pub scene: Scene,
    pub city: City,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledManifest {
    pub records: Vec<Record>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl LabeledManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let mut m = parse_manifest(&bytes)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn resolve(&self, record: &Record) -> PathBuf {
        self.base_dir.join(&record.path)
    }

    pub fn scene_counts(&self) -> [usize; 10] {
        let mut counts = [0; 10];
        for r in &self.records {
            counts[r.scene.index()] += 1;
        }
        counts
    }

    pub fn city_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for r in &self.records {
            counts[r.city.index()] += 1;
        }
        counts
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "scene", "city"])
            .expect("in-memory write");
        for r in &self.records {
            w.write_record([r.path.as_str(), r.scene.as_str(), r.city.as_str()])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Parses a UTF-8 CSV with columns `path`, `scene` and `city` (any order,
/// extra columns ignored).
pub fn parse_manifest(bytes: &[u8]) -> Result<LabeledManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let err = |line: u64, message: String| CliError::Manifest { line, message };
    let headers = rdr
        .headers()
        .map_err(|e| err(1, format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(1, format!("missing column {name:?} in header")))
    };
    let (pc, sc, cc) = (column("path")?, column("scene")?, column("city")?);

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| {
            row.get(idx)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| err(line, format!("missing {name}")))
        };
        let path = field(pc, "path")?.to_string();
        let scene = field(sc, "scene")?
            .parse::<Scene>()
            .map_err(|e| err(line, e))?;
        let city = field(cc, "city")?
            .parse::<City>()
            .map_err(|e| err(line, e))?;
        if let Some(first) = seen.insert(path.clone(), line) {
            return Err(err(
                line,
                format!("duplicate path {path:?} (first on line {first})"),
            ));
        }
        records.push(Record { path, scene, city });
    }
    Ok(LabeledManifest {
        records,
        base_dir: PathBuf::new(),
    })
}

//! Subset analyses: ODI, ordering, label stacks and cluster counts per group.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use audiovat::image::encode_pgm;
use audiovat::specvat::KSelection;
use audiovat::vat::vat;
use audiovat::{
    a_specvat_select_k, cce_count, euclidean_dissim, specvat, CceReport, FeatureMatrix, OdImage,
    SpecVatConfig, VatOrdering,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::labels::{City, Scene};
use crate::manifest::LabeledManifest;
use crate::output::{to_json, write_atomic, write_json};
use crate::stack::{label_stack, LabelStack, Palette};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grouping {
    ByScene,
    ByCity,
    All,
    /// Records matching an optional scene and an optional city.
    Single {
        scene: Option<Scene>,
        city: Option<City>,
    },
}

impl Grouping {
    pub fn dir_name(&self) -> &'static str {
        match self {
            Grouping::ByScene => "by_scene",
            Grouping::ByCity => "by_city",
            Grouping::All => "all",
            Grouping::Single { .. } => "single_subset",
        }
    }

    /// `(name, record indices)` in vocabulary order.
    pub fn subsets(&self, m: &LabeledManifest) -> Vec<(String, Vec<usize>)> {
        let select = |keep: &dyn Fn(usize) -> bool| (0..m.len()).filter(|&i| keep(i)).collect();
        match self {
            Grouping::ByScene => Scene::ALL
                .iter()
                .map(|s| (s.to_string(), select(&|i| m.records[i].scene == *s)))
                .collect(),
            Grouping::ByCity => City::ALL
                .iter()
                .map(|c| (c.to_string(), select(&|i| m.records[i].city == *c)))
                .collect(),
            Grouping::All => vec![("all".into(), (0..m.len()).collect())],
            Grouping::Single { scene, city } => {
                let name = match (scene, city) {
                    (Some(s), Some(c)) => format!("{s}_{c}"),
                    (Some(s), None) => s.to_string(),
                    (None, Some(c)) => c.to_string(),
                    (None, None) => "all".into(),
                };
                let idx = select(&|i| {
                    let r = &m.records[i];
                    scene.is_none_or(|s| r.scene == s) && city.is_none_or(|c| r.city == c)
                });
                vec![(name, idx)]
            }
        }
    }
}

impl FromStr for Grouping {
    type Err = String;

    /// `by_scene`, `by_city`, `all`, or `scene=<s>`, `city=<c>`,
    /// `scene=<s>,city=<c>` for a single subset.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "by_scene" => return Ok(Grouping::ByScene),
            "by_city" => return Ok(Grouping::ByCity),
            "all" => return Ok(Grouping::All),
            _ => {}
        }
        let (mut scene, mut city) = (None, None);
        for part in s.split(',') {
            match part.split_once('=') {
                Some(("scene", v)) => scene = Some(v.parse()?),
                Some(("city", v)) => city = Some(v.parse()?),
                _ => {
                    return Err(format!(
                        "unknown grouping {s:?}; expected by_scene, by_city, all, \
                         scene=<scene>, city=<city> or scene=<scene>,city=<city>"
                    ))
                }
            }
        }
        Ok(Grouping::Single { scene, city })
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grouping::Single { scene, city } => {
                let mut parts = Vec::new();
                if let Some(s) = scene {
                    parts.push(format!("scene={s}"));
                }
                if let Some(c) = city {
                    parts.push(format!("city={c}"));
                }
                f.write_str(&parts.join(","))
            }
            other => f.write_str(other.dir_name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Vat,
    Specvat,
}

/// Ordering file shared by `vat`, `specvat`, `report` and `stack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFile {
    pub order: Vec<usize>,
    pub link_dist: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<String>>,
}

impl OrderFile {
    pub fn from_ordering(o: &VatOrdering, paths: Option<Vec<String>>) -> Self {
        Self {
            order: o.order.as_slice().to_vec(),
            link_dist: o.link_dist.clone(),
            paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackSummary {
    pub runs: usize,
    pub distinct: usize,
    pub mean_run_length: f64,
}

impl From<&LabelStack> for StackSummary {
    fn from(s: &LabelStack) -> Self {
        Self {
            runs: s.run_count(),
            distinct: s.distinct_labels(),
            mean_run_length: s.mean_run_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetReport {
    pub subset: String,
    pub n: usize,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_selection: Option<KSelection>,
    /// `None` when CCE could not run on the image.
    pub cluster_count: Option<usize>,
    pub scene_stack: StackSummary,
    pub city_stack: StackSummary,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub subset: String,
    pub n: usize,
    pub cluster_count: Option<usize>,
    pub scene_runs: Option<usize>,
    pub city_runs: Option<usize>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub grouping: String,
    pub method: Method,
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

impl ReportSummary {
    pub fn reports(&self) -> usize {
        self.rows.iter().filter(|r| !r.skipped).count()
    }

    /// Table of counts per subset.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "grouping",
            "subset",
            "n",
            "cluster_count",
            "scene_runs",
            "city_runs",
        ])
        .expect("in-memory write");
        let opt = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
        for r in &self.rows {
            w.write_record([
                self.grouping.clone(),
                r.subset.clone(),
                r.n.to_string(),
                opt(r.cluster_count),
                opt(r.scene_runs),
                opt(r.city_runs),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportOptions {
    pub method: Method,
    /// Fixed eigenvector count for SpecVAT; automatic selection when `None`.
    pub k: Option<usize>,
    pub config: PipelineConfig,
}

struct Analysis {
    ordering: VatOrdering,
    image: OdImage,
    k: Option<usize>,
    selection: Option<KSelection>,
    warnings: Vec<String>,
}

fn analyse(features: &FeatureMatrix, opts: &ReportOptions) -> audiovat::Result<Analysis> {
    let d = euclidean_dissim(features);
    match opts.method {
        Method::Vat => {
            let (ordering, image) = vat(&d)?;
            Ok(Analysis {
                ordering,
                image,
                k: None,
                selection: None,
                warnings: Vec::new(),
            })
        }
        Method::Specvat => {
            let (k, selection) = match opts.k {
                Some(k) => (k, None),
                None => {
                    let sel = a_specvat_select_k(&d, &opts.config.specvat)?;
                    (sel.k_best, Some(sel))
                }
            };
            let cfg = SpecVatConfig {
                k,
                ..opts.config.specvat
            };
            let r = specvat(&d, &cfg)?;
            let mut warnings = selection
                .as_ref()
                .map(|s| s.warnings.clone())
                .unwrap_or_default();
            warnings.extend(r.warnings);
            Ok(Analysis {
                ordering: r.ordering,
                image: r.image,
                k: Some(k),
                selection,
                warnings,
            })
        }
    }
}

fn run_subset(
    name: &str,
    indices: &[usize],
    manifest: &LabeledManifest,
    features: &FeatureMatrix,
    opts: &ReportOptions,
    dir: &Path,
) -> Result<SubsetReport> {
    let sub = features.select_rows(indices)?;
    let a = analyse(&sub, opts).map_err(|source| CliError::File {
        path: dir.join(name),
        source,
    })?;
    let mut warnings = a.warnings;
    let records: Vec<_> = indices.iter().map(|&i| &manifest.records[i]).collect();
    let scenes: Vec<&str> = records.iter().map(|r| r.scene.as_str()).collect();
    let cities: Vec<&str> = records.iter().map(|r| r.city.as_str()).collect();
    let scene_stack = label_stack(&a.ordering.order, &scenes, &Palette::scenes())?;
    let city_stack = label_stack(&a.ordering.order, &cities, &Palette::cities())?;
    let cce: Option<CceReport> = match cce_count(&a.image, &opts.config.cce) {
        Ok(r) => {
            warnings.extend(r.warnings.iter().cloned());
            Some(r)
        }
        Err(e) => {
            warnings.push(format!("cluster count unavailable: {e}"));
            None
        }
    };

    let paths: Vec<String> = a
        .ordering
        .order
        .as_slice()
        .iter()
        .map(|&i| records[i].path.clone())
        .collect();
    let mut artifacts: Vec<(String, Vec<u8>)> = vec![
        (format!("{name}.pgm"), encode_pgm(&a.image)),
        (
            format!("{name}.order.json"),
            to_json(&OrderFile::from_ordering(&a.ordering, Some(paths))),
        ),
        (format!("{name}.scene.csv"), scene_stack.to_csv()),
        (
            format!("{name}.scene.svg"),
            scene_stack.to_svg(&format!("{name}: scene")).into_bytes(),
        ),
        (format!("{name}.city.csv"), city_stack.to_csv()),
        (
            format!("{name}.city.svg"),
            city_stack.to_svg(&format!("{name}: city")).into_bytes(),
        ),
    ];
    if let Some(c) = &cce {
        artifacts.push((format!("{name}.cce.json"), to_json(c)));
    }
    for (file, bytes) in &artifacts {
        write_atomic(&dir.join(file), bytes)?;
    }
    let mut files: Vec<String> = artifacts.into_iter().map(|(f, _)| f).collect();
    files.push(format!("{name}.json"));
    let report = SubsetReport {
        subset: name.to_string(),
        n: indices.len(),
        method: opts.method,
        k: a.k,
        k_selection: a.selection,
        cluster_count: cce.map(|c| c.cluster_count),
        scene_stack: (&scene_stack).into(),
        city_stack: (&city_stack).into(),
        files,
        warnings,
    };
    write_json(&dir.join(format!("{name}.json")), &report)?;
    Ok(report)
}

/// Runs one grouping and writes its artifacts under `out/<grouping>/`.
///
/// `features` holds one row per manifest record, in manifest order. Subsets
/// with fewer than two records are skipped with a warning.
pub fn run_report(
    manifest: &LabeledManifest,
    features: &FeatureMatrix,
    grouping: &Grouping,
    opts: &ReportOptions,
    out: &Path,
) -> Result<ReportSummary> {
    if features.n() != manifest.len() {
        return Err(CliError::input(format!(
            "{} feature rows for {} manifest records",
            features.n(),
            manifest.len()
        )));
    }
    let features = if opts.config.standardize {
        features.standardized()
    } else {
        features.clone()
    };
    let dir: PathBuf = out.join(grouping.dir_name());
    let subsets = grouping.subsets(manifest);
    let min_n = match opts.method {
        Method::Vat => 2,
        Method::Specvat => opts.k.map_or(3, |k| k + 1).max(2),
    };
    let results: Vec<Option<Result<SubsetReport>>> = subsets
        .par_iter()
        .map(|(name, idx)| {
            (idx.len() >= min_n).then(|| run_subset(name, idx, manifest, &features, opts, &dir))
        })
        .collect();

    let mut rows = Vec::with_capacity(subsets.len());
    let mut warnings = Vec::new();
    for ((name, idx), res) in subsets.iter().zip(results) {
        match res {
            None => {
                warnings.push(format!(
                    "subset {name} skipped: {} record(s), need at least {min_n}",
                    idx.len()
                ));
                rows.push(SummaryRow {
                    subset: name.clone(),
                    n: idx.len(),
                    cluster_count: None,
                    scene_runs: None,
                    city_runs: None,
                    skipped: true,
                });
            }
            Some(r) => {
                let r = r?;
                warnings.extend(r.warnings.iter().map(|w| format!("{name}: {w}")));
                rows.push(SummaryRow {
                    subset: name.clone(),
                    n: r.n,
                    cluster_count: r.cluster_count,
                    scene_runs: Some(r.scene_stack.runs),
                    city_runs: Some(r.city_stack.runs),
                    skipped: false,
                });
            }
        }
    }
    let summary = ReportSummary {
        grouping: grouping.to_string(),
        method: opts.method,
        rows,
        warnings,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_atomic(&dir.join("summary.csv"), &summary.to_csv())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_parse_and_display() {
        for s in [
            "by_scene",
            "by_city",
            "all",
            "scene=park",
            "city=paris",
            "scene=bus,city=london",
        ] {
            assert_eq!(s.parse::<Grouping>().unwrap().to_string(), s);
        }
        assert!("scene=aeroplane".parse::<Grouping>().is_err());
        assert!("by_device".parse::<Grouping>().is_err());
    }

    #[test]
    fn subsets_follow_vocabulary_order() {
        let m = crate::manifest::parse_manifest(
            b"path,scene,city\na,tram,paris\nb,airport,paris\nc,tram,london\n",
        )
        .unwrap();
        let s = Grouping::ByScene.subsets(&m);
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], ("airport".into(), vec![1]));
        assert_eq!(s[9], ("tram".into(), vec![0, 2]));
        let c = Grouping::ByCity.subsets(&m);
        assert_eq!(c.len(), 6);
        let one: Grouping = "scene=tram,city=london".parse().unwrap();
        assert_eq!(one.subsets(&m), vec![("tram_london".into(), vec![2])]);
    }
}

use std::path::{Path, PathBuf};

use audiovat::image::{read_pgm, write_pgm};
use audiovat::matrix::DissimilarityMatrix;
use audiovat::store::{read_dissim, read_features, write_dissim, write_features};
use audiovat::synth::{block_dissim, gaussian_blobs, noisy_block_dissim, BlobSpec};
use audiovat::{
    a_specvat_select_k, cce_count, euclidean_dissim, specvat, Permutation, SpecVatConfig,
    ThresholdMode,
};
use audiovat_cli::features::{extract_manifest, FeatureCache};
use audiovat_cli::output::{write_atomic, write_json};
use audiovat_cli::report::OrderFile;
use audiovat_cli::{
    label_stack, run_report, CliError, Grouping, LabeledManifest, Method, Palette, PipelineConfig,
    ReportOptions, Result,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "audiovat",
    version,
    about = "Cluster tendency of audio collections via VAT, SpecVAT and CCE"
)]
struct Cli {
    /// JSON file with `audio`, `specvat`, `cce` and `standardize` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one log-mel feature row per manifest record into features.vatf.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// VAT ordering and ODI of a feature or dissimilarity store.
    Vat {
        #[command(flatten)]
        input: MatrixInput,
    },
    /// SpecVAT ordering and ODI; k is chosen automatically unless given.
    Specvat {
        #[command(flatten)]
        input: MatrixInput,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Cluster count of an ODI (PGM).
    Cce {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        band_width: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Explicit run cutoff.
        #[arg(long)]
        b: Option<usize>,
    },
    /// Label stacks (SVG + CSV) for an ordering.
    Stack {
        /// Ordering JSON written by `vat`, `specvat` or `report`.
        #[arg(long)]
        order: PathBuf,
        /// Manifest supplying scene and city labels.
        #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
        manifest: Option<PathBuf>,
        /// CSV with a `label` column, one row per record.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Synthetic data with known clusters.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Per-subset ODIs, orderings, label stacks and cluster counts.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        /// by_scene, by_city, all, scene=<s>, city=<c> or scene=<s>,city=<c>; repeatable.
        #[arg(long = "group", required = true)]
        groups: Vec<Grouping>,
        #[arg(long, value_enum, default_value = "vat")]
        method: Method,
        /// Fixed SpecVAT eigenvector count.
        #[arg(long)]
        k: Option<usize>,
        /// Precomputed features, one row per manifest record.
        #[arg(long)]
        features: Option<PathBuf>,
        #[command(flatten)]
        cache: CacheArgs,
    },
}

#[derive(Args)]
struct CacheArgs {
    /// Feature cache directory (default: <out>/cache).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MatrixInput {
    /// Feature store (VATF); distances are Euclidean.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Dissimilarity store (VATF, n x n).
    #[arg(long)]
    dissim: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    HalfMax,
    Zero,
}

#[derive(Subcommand)]
enum SynthKind {
    /// Gaussian clusters: features.vatf + labels.csv.
    Blobs {
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 40)]
        n_per: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 10.0)]
        sep: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Block-diagonal dissimilarities: dissim.vatf + labels.csv.
    Blocks {
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        within: f64,
        #[arg(long, default_value_t = 1.0)]
        between: f64,
        /// Gaussian noise on within-block entries.
        #[arg(long)]
        noise_sd: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl CacheArgs {
    fn open(&self, out: &Path) -> Result<Option<FeatureCache>> {
        if self.no_cache {
            return Ok(None);
        }
        let dir = self.cache.clone().unwrap_or_else(|| out.join("cache"));
        FeatureCache::new(dir).map(Some)
    }
}

impl MatrixInput {
    fn load(&self, cfg: &PipelineConfig) -> Result<DissimilarityMatrix> {
        match (&self.features, &self.dissim) {
            (Some(f), _) => {
                let mut f = read_features(f)?;
                if cfg.standardize {
                    f = f.standardized();
                }
                Ok(euclidean_dissim(&f))
            }
            (None, Some(d)) => Ok(read_dissim(d)?),
            (None, None) => Err(CliError::input("need --features or --dissim")),
        }
    }
}

#[derive(Serialize)]
struct SpecVatInfo<'a> {
    k: usize,
    eigenvalues: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    k_selection: Option<audiovat::specvat::KSelection>,
    warnings: Vec<String>,
}

fn labels_csv(labels: &[String]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "label"]).expect("in-memory write");
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.clone()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let col = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| CliError::input(format!("{}: no `label` column", path.display())))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = row.position().map_or(0, |p| p.line());
        out.push(
            row.get(col)
                .ok_or_else(|| CliError::Manifest {
                    line,
                    message: "missing label".into(),
                })?
                .to_string(),
        );
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("--threads: {e}")))?;
    }
    let cfg = PipelineConfig::load_or_default(cli.config.as_deref())?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Features { manifest, cache } => {
            let m = LabeledManifest::load(&manifest)?;
            let cache = cache.open(out)?;
            let (f, stats) = extract_manifest(&m, &cfg.audio, cache.as_ref())?;
            write_features(&out.join("features.vatf"), &f)?;
            write_atomic(&out.join("manifest.csv"), &m.to_csv())?;
            println!(
                "{} x {} features ({} computed, {} cached) -> {}",
                f.n(),
                f.d(),
                stats.computed,
                stats.cached,
                out.join("features.vatf").display()
            );
        }
        Command::Vat { input } => {
            let d = input.load(&cfg)?;
            let (ordering, image) = audiovat::vat::vat(&d)?;
            write_pgm(&image, &out.join("vat.pgm"))?;
            write_json(
                &out.join("vat.order.json"),
                &OrderFile::from_ordering(&ordering, None),
            )?;
            println!("n = {}, MST weight {}", d.n(), ordering.mst_weight());
        }
        Command::Specvat { input, k } => {
            let d = input.load(&cfg)?;
            let (k, selection) = match k {
                Some(k) => (k, None),
                None => {
                    let s = a_specvat_select_k(&d, &cfg.specvat)?;
                    (s.k_best, Some(s))
                }
            };
            let r = specvat(&d, &SpecVatConfig { k, ..cfg.specvat })?;
            write_pgm(&r.image, &out.join("specvat.pgm"))?;
            write_json(
                &out.join("specvat.order.json"),
                &OrderFile::from_ordering(&r.ordering, None),
            )?;
            write_json(
                &out.join("specvat.json"),
                &SpecVatInfo {
                    k,
                    eigenvalues: &r.eigenvalues,
                    k_selection: selection,
                    warnings: r.warnings.clone(),
                },
            )?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("n = {}, k = {k}", d.n());
        }
        Command::Cce {
            image,
            band_width,
            mode,
            b,
        } => {
            let img = read_pgm(&image)?;
            let mut c = cfg.cce;
            if band_width.is_some() {
                c.band_width = band_width;
            }
            if let Some(m) = mode {
                c.threshold_mode = match m {
                    Mode::HalfMax => ThresholdMode::HalfMax,
                    Mode::Zero => ThresholdMode::Zero,
                };
            }
            if b.is_some() {
                c.explicit_b = b;
            }
            let report = cce_count(&img, &c)?;
            write_json(&out.join("cce.json"), &report)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", report.cluster_count);
        }
        Command::Stack {
            order,
            manifest,
            labels,
        } => {
            let text = std::fs::read_to_string(&order).map_err(|e| CliError::io(&order, e))?;
            let of: OrderFile = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", order.display())))?;
            let perm = Permutation::new(of.order)?;
            if let Some(m) = manifest {
                let m = LabeledManifest::load(&m)?;
                let scenes: Vec<&str> = m.records.iter().map(|r| r.scene.as_str()).collect();
                let cities: Vec<&str> = m.records.iter().map(|r| r.city.as_str()).collect();
                for (kind, labels, palette) in [
                    ("scene", scenes, Palette::scenes()),
                    ("city", cities, Palette::cities()),
                ] {
                    let s = label_stack(&perm, &labels, &palette)?;
                    write_atomic(&out.join(format!("{kind}.csv")), &s.to_csv())?;
                    write_atomic(&out.join(format!("{kind}.svg")), s.to_svg(kind).as_bytes())?;
                    println!(
                        "{kind}: {} runs, {} labels",
                        s.run_count(),
                        s.distinct_labels()
                    );
                }
            } else if let Some(l) = labels {
                let labels = read_labels(&l)?;
                let s = label_stack(&perm, &labels, &Palette::generic(&labels))?;
                write_atomic(&out.join("label.csv"), &s.to_csv())?;
                write_atomic(&out.join("label.svg"), s.to_svg("label").as_bytes())?;
                println!(
                    "label: {} runs, {} labels",
                    s.run_count(),
                    s.distinct_labels()
                );
            }
        }
        Command::Synth { kind } => match kind {
            SynthKind::Blobs {
                c,
                n_per,
                dim,
                sep,
                sigma,
                seed,
            } => {
                let spec = BlobSpec {
                    c,
                    n_per,
                    dim,
                    sep,
                    sigma,
                    seed,
                };
                let (f, labels) = gaussian_blobs(&spec)?;
                let labels: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
                write_features(&out.join("features.vatf"), &f)?;
                write_atomic(&out.join("labels.csv"), &labels_csv(&labels))?;
                println!("{} x {} features, {c} clusters", f.n(), f.d());
            }
            SynthKind::Blocks {
                sizes,
                within,
                between,
                noise_sd,
                seed,
            } => {
                let d = match noise_sd {
                    Some(sd) => noisy_block_dissim(&sizes, within, sd, between, seed)?,
                    None => block_dissim(&sizes, within, between)?,
                };
                let labels: Vec<String> = sizes
                    .iter()
                    .enumerate()
                    .flat_map(|(b, &s)| std::iter::repeat_n(b.to_string(), s))
                    .collect();
                write_dissim(&out.join("dissim.vatf"), &d)?;
                write_atomic(&out.join("labels.csv"), &labels_csv(&labels))?;
                println!(
                    "{} x {} dissimilarities, {} blocks",
                    d.n(),
                    d.n(),
                    sizes.len()
                );
            }
        },
        Command::Report {
            manifest,
            groups,
            method,
            k,
            features,
            cache,
        } => {
            let m = LabeledManifest::load(&manifest)?;
            let f = match features {
                Some(p) => read_features(&p)?,
                None => extract_manifest(&m, &cfg.audio, cache.open(out)?.as_ref())?.0,
            };
            let opts = ReportOptions {
                method,
                k,
                config: cfg,
            };
            for g in &groups {
                let s = run_report(&m, &f, g, &opts, out)?;
                for w in &s.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{}: {} subset report(s)", g, s.reports());
                for r in s.rows.iter().filter(|r| !r.skipped) {
                    let count = r
                        .cluster_count
                        .map_or_else(|| "-".into(), |c| c.to_string());
                    println!("  {:<20} n = {:<6} count = {count}", r.subset, r.n);
                }
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

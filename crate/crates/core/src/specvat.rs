//! Spectral VAT.
//!
//! Dissimilarities are mapped to a locally scaled Gaussian affinity
//! `A_ij = exp(-d_ij² / (σ_i σ_j))`, where `σ_i` is the distance from point `i`
//! to its K-th nearest neighbour. The affinity is normalized to
//! `N = S^{-1/2} A S^{-1/2}` (so the top eigenvectors of `N` are the bottom
//! eigenvectors of the normalized Laplacian `I - N`), the `k` leading
//! eigenvectors are stacked as columns and each row is scaled to unit length.
//! VAT is then run on the Euclidean distances between those rows.

use serde::{Deserialize, Serialize};

use crate::cce::otsu_split;
use crate::eigen::{sym_eigen_topk, Eigen, SymMatrix};
use crate::error::{Error, Result};
use crate::image::OdImage;
use crate::matrix::{euclidean_dissim, DissimilarityMatrix, FeatureMatrix};
use crate::vat::{vat, VatOrdering};

/// Rows with a norm at or below this are left as zero instead of normalized.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Adjacent eigenvalues closer than this make the k-dimensional subspace
/// ill-defined.
pub const EIGEN_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecVatConfig {
    pub k: usize,
    pub k_max: usize,
    pub knn_scale: usize,
    pub sigma_floor: f64,
}

impl Default for SpecVatConfig {
    fn default() -> Self {
        Self {
            k: 3,
            k_max: 10,
            knn_scale: 7,
            sigma_floor: 1e-12,
        }
    }
}

impl SpecVatConfig {
    fn check_common(&self) -> Result<()> {
        if self.knn_scale == 0 {
            return Err(Error::invalid("knn_scale must be >= 1"));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(Error::invalid("sigma_floor must be > 0"));
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.check_common()?;
        if self.k == 0 || self.k + 1 > n {
            return Err(Error::invalid(format!(
                "k = {} must lie in 1..={} for {n} points",
                self.k,
                n.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// Local-scaling bandwidths: distance to the `knn`-th nearest other point,
/// floored at `floor`. `knn` is capped at `n - 1`.
pub fn local_scales(m: &DissimilarityMatrix, knn: usize, floor: f64) -> Vec<f64> {
    let n = m.n();
    let rank = knn.min(n - 1).max(1);
    let mut scratch = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            scratch.clear();
            scratch.extend(
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v),
            );
            let (_, kth, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
            kth.max(floor)
        })
        .collect()
}

pub fn local_scale_affinity(m: &DissimilarityMatrix, cfg: &SpecVatConfig) -> Result<SymMatrix> {
    let n = m.n();
    if n < 2 {
        return Err(Error::invalid("affinity needs at least two points"));
    }
    cfg.check_common()?;
    let sigma = local_scales(m, cfg.knn_scale, cfg.sigma_floor);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = m.get(i, j);
            let v = (-(d * d) / (sigma[i] * sigma[j])).exp();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    SymMatrix::new(n, a)
}

/// `S^{-1/2} A S^{-1/2}`; rows and columns of points with zero degree are zero.
pub fn normalized_affinity(a: &SymMatrix) -> Result<SymMatrix> {
    let n = a.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| a.get(i, j)).sum();
            if s > 0.0 {
                1.0 / s.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    SymMatrix::new(n, out)
}

/// Row-normalized spectral coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub coords: FeatureMatrix,
    /// Rows whose eigenvector coordinates were all (numerically) zero.
    pub zero_rows: Vec<usize>,
}

fn embed(eig: &Eigen, k: usize) -> Result<SpectralEmbedding> {
    let n = eig.n();
    let mut values = vec![0.0; n * k];
    for c in 0..k {
        for (i, &x) in eig.vector(c).iter().enumerate() {
            values[i * k + c] = x;
        }
    }
    let mut zero_rows = Vec::new();
    for (i, row) in values.chunks_mut(k).enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= ZERO_ROW_TOL {
            row.iter_mut().for_each(|x| *x = 0.0);
            zero_rows.push(i);
        } else {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(SpectralEmbedding {
        coords: FeatureMatrix::new(n, k, values)?,
        zero_rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecVatResult {
    pub k: usize,
    /// Leading eigenvalues of the normalized affinity, descending.
    pub eigenvalues: Vec<f64>,
    pub embedding: SpectralEmbedding,
    pub d_prime: DissimilarityMatrix,
    pub ordering: VatOrdering,
    pub image: OdImage,
    pub warnings: Vec<String>,
}

/// Eigenpairs of the normalized affinity; `count` is capped at `n`.
fn spectrum(m: &DissimilarityMatrix, cfg: &SpecVatConfig, count: usize) -> Result<Eigen> {
    let a = local_scale_affinity(m, cfg)?;
    let norm = normalized_affinity(&a)?;
    sym_eigen_topk(&norm, count.min(m.n()))
}

fn has_gap(values: &[f64], k: usize) -> bool {
    match values.get(k) {
        Some(next) => (values[k - 1] - next).abs() > EIGEN_GAP_TOL,
        None => true,
    }
}

fn specvat_from(eig: &Eigen, k: usize) -> Result<SpecVatResult> {
    let embedding = embed(eig, k)?;
    let d_prime = euclidean_dissim(&embedding.coords);
    let (ordering, image) = vat(&d_prime)?;
    let mut warnings = Vec::new();
    if !embedding.zero_rows.is_empty() {
        warnings.push(format!(
            "{} point(s) have zero spectral coordinates and were left unnormalized",
            embedding.zero_rows.len()
        ));
    }
    if !has_gap(&eig.values, k) {
        warnings.push(format!(
            "eigenvalues {k} and {} coincide; the {k}-dimensional embedding is not unique",
            k + 1
        ));
    }
    Ok(SpecVatResult {
        k,
        eigenvalues: eig.values[..k].to_vec(),
        embedding,
        d_prime,
        ordering,
        image,
        warnings,
    })
}

pub fn specvat(m: &DissimilarityMatrix, cfg: &SpecVatConfig) -> Result<SpecVatResult> {
    cfg.validate_for(m.n())?;
    let eig = spectrum(m, cfg, cfg.k + 1)?;
    specvat_from(&eig, cfg.k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    /// Otsu separability of the SpecVAT image histogram, 0 when degenerate.
    pub score: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k_best: usize,
    pub scores: Vec<KScore>,
    pub warnings: Vec<String>,
}

/// Clarity of an image: Otsu between-class variance over total variance.
pub fn image_clarity(img: &OdImage) -> Option<f64> {
    otsu_split(&img.histogram()).map(|s| s.separability)
}

/// Picks the eigenvector count whose SpecVAT image is most clearly two-toned.
///
/// Candidates run over `2..=min(k_max, n - 1)`. A candidate whose `k`-th and
/// `(k+1)`-th eigenvalues coincide, or whose image has a single intensity, is
/// degenerate and scores 0. The smallest `k` wins ties; if every candidate is
/// degenerate the result is `k = 2` with a warning.
pub fn a_specvat_select_k(m: &DissimilarityMatrix, cfg: &SpecVatConfig) -> Result<KSelection> {
    let n = m.n();
    cfg.check_common()?;
    if cfg.k_max < 2 {
        return Err(Error::invalid("k_max must be >= 2"));
    }
    if n < 3 {
        return Err(Error::invalid(format!(
            "automatic k selection needs at least 3 points, got {n}"
        )));
    }
    let k_hi = cfg.k_max.min(n - 1);
    let eig = spectrum(m, cfg, k_hi + 1)?;
    let mut scores = Vec::with_capacity(k_hi - 1);
    for k in 2..=k_hi {
        let clarity = if has_gap(&eig.values, k) {
            image_clarity(&specvat_from(&eig, k)?.image)
        } else {
            None
        };
        scores.push(KScore {
            k,
            score: clarity.unwrap_or(0.0),
            degenerate: clarity.is_none(),
        });
    }
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.score > best.score {
            best = s;
        }
    }
    let mut warnings = Vec::new();
    if k_hi < cfg.k_max {
        warnings.push(format!(
            "k_max lowered from {} to {k_hi} (n = {n})",
            cfg.k_max
        ));
    }
    if scores.iter().all(|s| s.degenerate) {
        warnings.push("no candidate k produced a usable image; defaulting to k = 2".into());
    }
    Ok(KSelection {
        k_best: best.k,
        scores,
        warnings,
    })
}

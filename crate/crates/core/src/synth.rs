//! Synthetic data with known cluster structure.
//!
//! Randomness comes from [`SplitMix64`] (Steele, Lea & Flood 2014: state
//! advances by `0x9E3779B97F4A7C15`, output mixed with the `(30, 27, 31)`
//! xor-shift/multiply finalizer). Uniforms are the top 53 bits scaled by
//! `2^-53`; normals use the Box–Muller cosine branch, one normal per two
//! uniforms. Fixtures are therefore reproducible in any language.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DissimilarityMatrix, FeatureMatrix};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    /// Number of clusters.
    pub c: usize,
    pub n_per: usize,
    pub dim: usize,
    /// Distance between any two centers, in units of `sigma`.
    pub sep: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl BlobSpec {
    fn validate(&self) -> Result<()> {
        if self.c == 0 || self.n_per == 0 || self.dim == 0 {
            return Err(Error::invalid("blob spec needs c, n_per and dim >= 1"));
        }
        if !(self.sep >= 0.0) || !(self.sigma > 0.0) || !self.sep.is_finite() {
            return Err(Error::invalid("blob spec needs sep >= 0 and sigma > 0"));
        }
        if self.dim < self.c {
            return Err(Error::invalid(format!(
                "{} simplex centers need dim >= {}, got {}",
                self.c, self.c, self.dim
            )));
        }
        Ok(())
    }
}

/// Isotropic Gaussian clusters around the vertices of a regular simplex.
///
/// Center `k` is `sep · sigma / √2 · e_k`, so every pair of centers is exactly
/// `sep · sigma` apart. Points are emitted cluster by cluster; labels are the
/// cluster indices.
pub fn gaussian_blobs(spec: &BlobSpec) -> Result<(FeatureMatrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let offset = if spec.c > 1 {
        spec.sep * spec.sigma / std::f64::consts::SQRT_2
    } else {
        0.0
    };
    let n = spec.c * spec.n_per;
    let mut values = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for k in 0..spec.c {
        for _ in 0..spec.n_per {
            for axis in 0..spec.dim {
                let center = if axis == k { offset } else { 0.0 };
                values.push(center + spec.sigma * rng.next_normal());
            }
            labels.push(k);
        }
    }
    Ok((FeatureMatrix::new(n, spec.dim, values)?, labels))
}

fn check_blocks(sizes: &[usize], within: f64, between: f64) -> Result<()> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::invalid("block sizes must be non-empty and positive"));
    }
    if !(within >= 0.0) || !(within < between) || !between.is_finite() {
        return Err(Error::invalid(format!(
            "need 0 <= within < between, got within = {within}, between = {between}"
        )));
    }
    Ok(())
}

fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}

/// Ideal block-diagonal dissimilarities: `within` inside a block, `between`
/// across blocks, zero on the diagonal.
pub fn block_dissim(sizes: &[usize], within: f64, between: f64) -> Result<DissimilarityMatrix> {
    check_blocks(sizes, within, between)?;
    let labels = block_labels(sizes);
    let n = labels.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = if labels[i] == labels[j] {
                    within
                } else {
                    between
                };
            }
        }
    }
    DissimilarityMatrix::new(n, values)
}

/// Block matrix whose within-block entries are `within + N(0, noise_sd)`,
/// clipped at zero, drawn once per unordered pair.
pub fn noisy_block_dissim(
    sizes: &[usize],
    within: f64,
    noise_sd: f64,
    between: f64,
    seed: u64,
) -> Result<DissimilarityMatrix> {
    check_blocks(sizes, within, between)?;
    let labels = block_labels(sizes);
    let n = labels.len();
    let mut rng = SplitMix64::new(seed);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if labels[i] == labels[j] {
                (within + noise_sd * rng.next_normal()).max(0.0)
            } else {
                between
            };
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DissimilarityMatrix::new(n, values)
}

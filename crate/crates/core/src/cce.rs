//! Cluster count extraction from an ordered dissimilarity image.
//!
//! The image is binarized with Otsu's threshold (a pixel is dark iff its
//! intensity is at most the threshold). For every column `i` the dark pixels in
//! the `w`-pixel band directly below the diagonal, `(i + 1, i) ..= (i + w, i)`,
//! are counted. Inside a dark diagonal block this count is `w`; it drops
//! towards zero as the band leaves the block. Runs of columns whose count
//! exceeds the cutoff `b` are the estimated clusters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::OdImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `b = ⌊max(signal) / 2⌋`.
    #[default]
    HalfMax,
    /// `b = 0`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CceConfig {
    /// Band width in pixels; `None` means `max(1, ⌊n / 50⌋)`.
    pub band_width: Option<usize>,
    pub threshold_mode: ThresholdMode,
    /// Overrides the cutoff computed from `threshold_mode`.
    pub explicit_b: Option<usize>,
}

impl CceConfig {
    pub fn band_width_for(&self, n: usize) -> usize {
        self.band_width.unwrap_or_else(|| (n / 50).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CceReport {
    #[serde(rename = "threshold")]
    pub otsu_threshold: u8,
    pub band_width: usize,
    pub b: usize,
    #[serde(rename = "count")]
    pub cluster_count: usize,
    /// Half-open column ranges `[start, end)` of the counted runs.
    pub run_spans: Vec<(usize, usize)>,
    /// Blocks with fewer members than this can go undetected.
    pub min_detectable_block: usize,
    pub signal: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Otsu's threshold plus how well it separates the histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuSplit {
    pub threshold: u8,
    /// Between-class variance over total variance, in `[0, 1]`.
    pub separability: f64,
}

/// 256-bit product of two `u128`s as `(high, low)`.
fn widening_mul(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let low = (ll & MASK) | (mid << 64);
    let high = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (high, low)
}

/// Between-class variance up to the constant factor `1 / N²`, kept as an exact
/// fraction `num / den` with `num = (S0·N1 − S1·N0)²` and `den = N0·N1`.
#[derive(Debug, Clone, Copy)]
struct Spread {
    num: u128,
    den: u128,
}

impl Spread {
    fn exceeds(&self, other: &Spread) -> bool {
        widening_mul(self.num, other.den) > widening_mul(other.num, self.den)
    }
}

/// Otsu split of a 256-bin histogram, `None` if fewer than two bins are occupied.
pub fn otsu_split(hist: &[u64; 256]) -> Option<OtsuSplit> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total: u128 = hist.iter().map(|&c| c as u128).sum();
    let total_sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();

    let mut best = Spread { num: 0, den: 1 };
    let mut best_t = 0u8;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &c) in hist.iter().enumerate() {
        n0 += c as u128;
        s0 += t as u128 * c as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        let diff = (s0 * n1).abs_diff(s1 * n0);
        let spread = Spread {
            num: diff * diff,
            den: n0 * n1,
        };
        if spread.exceeds(&best) {
            best = spread;
            best_t = t as u8;
        }
    }

    let nf = total as f64;
    let mean = total_sum as f64 / nf;
    let total_var = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 * (i as f64 - mean).powi(2))
        .sum::<f64>()
        / nf;
    let between = best.num as f64 / best.den as f64 / (nf * nf);
    Some(OtsuSplit {
        threshold: best_t,
        separability: (between / total_var).clamp(0.0, 1.0),
    })
}

/// Intensity maximizing the between-class variance; the smallest on ties.
pub fn otsu_threshold(img: &OdImage) -> Result<u8> {
    otsu_split(&img.histogram())
        .map(|s| s.threshold)
        .ok_or(Error::DegenerateHistogram(img.pixels()[0]))
}

/// Dark-pixel counts in the `w`-pixel band below the diagonal, one per column
/// `0..=n-1-w`.
pub fn offdiag_signal(img: &OdImage, threshold: u8, band_width: usize) -> Result<Vec<usize>> {
    let n = img.n();
    if band_width == 0 || band_width >= n {
        return Err(Error::invalid(format!(
            "band width {band_width} must lie in 1..={}",
            n.saturating_sub(1)
        )));
    }
    Ok((0..n - band_width)
        .map(|i| {
            (1..=band_width)
                .filter(|&u| img.pixel(i + u, i) <= threshold)
                .count()
        })
        .collect())
}

/// Maximal half-open runs of `signal` strictly above `b`.
pub fn runs_above(signal: &[usize], b: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, &s) in signal.iter().enumerate() {
        match (s > b, start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                spans.push((st, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        spans.push((st, signal.len()));
    }
    spans
}

pub fn cce_count(img: &OdImage, cfg: &CceConfig) -> Result<CceReport> {
    let n = img.n();
    let threshold = otsu_threshold(img)?;
    let band_width = cfg.band_width_for(n);
    let signal = offdiag_signal(img, threshold, band_width)?;
    let peak = signal.iter().copied().max().unwrap_or(0);
    let b = cfg.explicit_b.unwrap_or(match cfg.threshold_mode {
        ThresholdMode::HalfMax => peak / 2,
        ThresholdMode::Zero => 0,
    });
    let mut warnings = Vec::new();
    let run_spans = if peak == 0 {
        warnings.push("no dark pixels next to the diagonal; count is 0".to_string());
        Vec::new()
    } else {
        runs_above(&signal, b)
    };
    Ok(CceReport {
        otsu_threshold: threshold,
        band_width,
        b,
        cluster_count: run_spans.len(),
        run_spans,
        min_detectable_block: band_width + 1,
        signal,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::block_dissim;
    use crate::vat::vat;

    /// Textbook Otsu in floating point over weights and class means.
    fn brute_otsu(pixels: &[u8]) -> Option<u8> {
        let n = pixels.len() as f64;
        let mut best = 0.0;
        let mut best_t = None;
        for t in 0..=255u8 {
            let (dark, light): (Vec<f64>, Vec<f64>) = {
                let d: Vec<f64> = pixels
                    .iter()
                    .filter(|&&p| p <= t)
                    .map(|&p| p as f64)
                    .collect();
                let l: Vec<f64> = pixels
                    .iter()
                    .filter(|&&p| p > t)
                    .map(|&p| p as f64)
                    .collect();
                (d, l)
            };
            if dark.is_empty() || light.is_empty() {
                continue;
            }
            let w0 = dark.len() as f64 / n;
            let w1 = light.len() as f64 / n;
            let m0 = dark.iter().sum::<f64>() / dark.len() as f64;
            let m1 = light.iter().sum::<f64>() / light.len() as f64;
            let v = w0 * w1 * (m0 - m1) * (m0 - m1);
            if best_t.is_none() || v > best {
                best = v;
                best_t = Some(t);
            }
        }
        best_t
    }

    fn image(n: usize, pixels: Vec<u8>) -> OdImage {
        OdImage::new(n, pixels).unwrap()
    }

    #[test]
    fn half_black_half_white() {
        let img = image(2, vec![0, 0, 255, 255]);
        assert_eq!(brute_otsu(img.pixels()), Some(0));
        assert_eq!(otsu_threshold(&img).unwrap(), 0);
    }

    #[test]
    fn ramp() {
        let img = image(16, (0..=255).collect());
        assert_eq!(brute_otsu(img.pixels()), Some(127));
        assert_eq!(otsu_threshold(&img).unwrap(), 127);
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = image(3, vec![9; 9]);
        assert!(matches!(
            otsu_threshold(&img),
            Err(Error::DegenerateHistogram(9))
        ));
        assert!(cce_count(&img, &CceConfig::default()).is_err());
    }

    #[test]
    fn separability_of_two_levels_is_one() {
        let img = image(2, vec![0, 40, 40, 0]);
        let s = otsu_split(&img.histogram()).unwrap();
        assert_eq!(s.threshold, 0);
        assert!((s.separability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn widening_mul_matches_small_products() {
        assert_eq!(widening_mul(3, 5), (0, 15));
        assert_eq!(widening_mul(u128::MAX, 2), (1, u128::MAX - 1));
        assert_eq!(widening_mul(1 << 64, 1 << 64), (1, 0));
    }

    fn block_image(sizes: &[usize]) -> OdImage {
        let m = block_dissim(sizes, 0.0, 1.0).unwrap();
        vat(&m).unwrap().1
    }

    #[test]
    fn signal_of_uniform_images() {
        let dark = image(4, vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 255]);
        assert_eq!(offdiag_signal(&dark, 0, 2).unwrap(), vec![2, 2]);
        let light = image(3, vec![0, 255, 255, 255, 0, 255, 255, 255, 0]);
        assert_eq!(offdiag_signal(&light, 0, 1).unwrap(), vec![0, 0]);
        assert!(offdiag_signal(&light, 0, 3).is_err());
        assert!(offdiag_signal(&light, 0, 0).is_err());
    }

    #[test]
    fn signal_dips_between_two_blocks() {
        let img = block_image(&[10, 10]);
        let signal = offdiag_signal(&img, 0, 2).unwrap();
        let mut expected = vec![2; 18];
        expected[8] = 1;
        expected[9] = 0;
        assert_eq!(signal, expected);
    }

    #[test]
    fn three_blocks_counted() {
        let img = block_image(&[10, 10, 10]);
        let cfg = CceConfig {
            band_width: Some(2),
            ..Default::default()
        };
        let r = cce_count(&img, &cfg).unwrap();
        assert_eq!(r.otsu_threshold, 0);
        assert_eq!(r.b, 1);
        assert_eq!(r.cluster_count, 3);
        assert_eq!(r.run_spans, vec![(0, 8), (10, 18), (20, 28)]);
        assert_eq!(r.min_detectable_block, 3);
    }

    #[test]
    fn single_block() {
        // one dark block with a single light row/column so the histogram is not constant
        let m = block_dissim(&[12, 1], 0.0, 1.0).unwrap();
        let img = vat(&m).unwrap().1;
        let r = cce_count(&img, &CceConfig::default()).unwrap();
        assert_eq!(r.cluster_count, 1);
    }

    #[test]
    fn zero_mode_and_explicit_b() {
        let img = block_image(&[10, 10, 10]);
        let zero = CceConfig {
            band_width: Some(2),
            threshold_mode: ThresholdMode::Zero,
            explicit_b: None,
        };
        let r = cce_count(&img, &zero).unwrap();
        assert_eq!(r.b, 0);
        // columns with a single dark pixel now extend each run
        assert_eq!(r.run_spans, vec![(0, 9), (10, 19), (20, 28)]);
        let forced = CceConfig {
            explicit_b: Some(2),
            ..zero
        };
        assert_eq!(cce_count(&img, &forced).unwrap().cluster_count, 0);
    }

    #[test]
    fn no_dark_band_warns() {
        // identity-like ordering where every neighbour is far: alternating blocks
        let img = image(3, vec![0, 255, 128, 255, 0, 255, 128, 255, 0]);
        let cfg = CceConfig {
            band_width: Some(1),
            ..Default::default()
        };
        let r = cce_count(&img, &cfg).unwrap();
        assert_eq!(r.cluster_count, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn runs_helper() {
        assert_eq!(runs_above(&[0, 2, 2, 0, 3], 1), vec![(1, 3), (4, 5)]);
        assert!(runs_above(&[], 0).is_empty());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelScale {
    /// Linear below 1 kHz (200/3 Hz per mel), logarithmic above.
    #[default]
    Slaney,
    /// `2595 · log10(1 + f / 700)`.
    Htk,
}

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

impl MelScale {
    pub fn hz_to_mel(self, hz: f64) -> f64 {
        match self {
            MelScale::Htk => 2595.0 * (1.0 + hz / 700.0).log10(),
            MelScale::Slaney if hz >= MIN_LOG_HZ => {
                MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
            }
            MelScale::Slaney => hz / F_SP,
        }
    }

    pub fn mel_to_hz(self, mel: f64) -> f64 {
        match self {
            MelScale::Htk => 700.0 * (10f64.powf(mel / 2595.0) - 1.0),
            MelScale::Slaney if mel >= MIN_LOG_MEL => {
                MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
            }
            MelScale::Slaney => F_SP * mel,
        }
    }
}

/// Triangular mel filters, row-major `n_mels × bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub n_mels: usize,
    pub bins: usize,
    pub weights: Vec<f64>,
    /// Peak frequency of each filter in Hz.
    pub centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.bins..(m + 1) * self.bins]
    }

    /// `filterbank · power` for one spectrum frame.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.row(m).iter().zip(power).map(|(w, p)| w * p).sum();
        }
    }
}

/// Filters with centres equally spaced in mel between `fmin` and `fmax`, each
/// scaled by `2 / (upper_edge − lower_edge)` so that its area is constant.
pub fn mel_filterbank(
    rate: u32,
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    scale: MelScale,
) -> Result<MelFilterbank> {
    let nyquist = rate as f64 / 2.0;
    if n_mels == 0 {
        return Err(Error::invalid("n_mels must be >= 1"));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::invalid(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin = {fmin}, fmax = {fmax}"
        )));
    }
    let bins = n_fft / 2 + 1;
    let fft_freqs: Vec<f64> = (0..bins)
        .map(|k| k as f64 * rate as f64 / n_fft as f64)
        .collect();
    let (lo, hi) = (scale.hz_to_mel(fmin), scale.hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| scale.mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = vec![0.0; n_mels * bins];
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (right - left);
        let row = &mut weights[m * bins..(m + 1) * bins];
        for (w, &f) in row.iter_mut().zip(&fft_freqs) {
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            *w = rising.min(falling).max(0.0) * norm;
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::invalid(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; \
                 lower n_mels or raise n_fft"
            )));
        }
    }
    Ok(MelFilterbank {
        n_mels,
        bins,
        weights,
        centers_hz: edges[1..=n_mels].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sized_bank_is_well_formed() {
        let fb = mel_filterbank(22050, 2048, 128, 0.0, 11025.0, MelScale::Slaney).unwrap();
        assert_eq!((fb.n_mels, fb.bins), (128, 1025));
        for m in 0..128 {
            let row = fb.row(m);
            assert!(row.iter().any(|&w| w > 0.0), "filter {m} empty");
            assert!(row.iter().all(|&w| w >= 0.0));
            // unimodal: non-decreasing then non-increasing
            let peak = (0..row.len())
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap();
            assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(fb.centers_hz.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn four_band_centres_from_the_formulas() {
        // Slaney mel of 11025 Hz: 15 + ln(11.025) · 27 / ln(6.4)
        let top = 15.0 + (11025.0f64 / 1000.0).ln() * 27.0 / 6.4f64.ln();
        let expect: Vec<f64> = (1..=4)
            .map(|i| {
                let mel = top * i as f64 / 5.0;
                if mel < 15.0 {
                    mel * 200.0 / 3.0
                } else {
                    1000.0 * ((mel - 15.0) * 6.4f64.ln() / 27.0).exp()
                }
            })
            .collect();
        let fb = mel_filterbank(22050, 2048, 4, 0.0, 11025.0, MelScale::Slaney).unwrap();
        for (got, want) in fb.centers_hz.iter().zip(&expect) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn scales_invert() {
        for scale in [MelScale::Slaney, MelScale::Htk] {
            for hz in [0.0, 123.4, 999.9, 1000.0, 4000.0, 11025.0] {
                let back = scale.mel_to_hz(scale.hz_to_mel(hz));
                assert!((back - hz).abs() < 1e-9, "{scale:?} {hz}");
            }
        }
        assert!((MelScale::Htk.hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((MelScale::Slaney.hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn area_normalization() {
        // integral of a triangle of height 2/(r-l) over [l, r] is 1, sampled on the FFT grid
        let fb = mel_filterbank(22050, 8192, 16, 0.0, 11025.0, MelScale::Slaney).unwrap();
        let df = 22050.0 / 8192.0;
        for m in 0..16 {
            let area: f64 = fb.row(m).iter().sum::<f64>() * df;
            assert!((area - 1.0).abs() < 0.1, "filter {m}: {area}");
        }
    }

    #[test]
    fn too_many_bands_is_an_error() {
        assert!(mel_filterbank(22050, 64, 128, 0.0, 11025.0, MelScale::Slaney).is_err());
        assert!(mel_filterbank(22050, 2048, 0, 0.0, 11025.0, MelScale::Slaney).is_err());
        assert!(mel_filterbank(22050, 2048, 8, 100.0, 50.0, MelScale::Slaney).is_err());
    }
}

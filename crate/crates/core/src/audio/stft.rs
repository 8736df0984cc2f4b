use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Power spectrogram, frame-major: frame `f` occupies `data[f * bins..(f + 1) * bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, f: usize) -> &[f64] {
        &self.data[f * self.bins..(f + 1) * self.bins]
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Index into `0..len` after mirror reflection without repeating the edge
/// sample, applied as many times as needed.
pub(crate) fn reflect_index(i: i64, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as i64 - 1);
    let m = i.rem_euclid(period);
    if m < len as i64 {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Number of frames for `len` samples with centred framing.
pub fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

/// Hann-windowed, centred (reflect-padded) short-time power spectrum.
pub fn stft_power(
    samples: &[f64],
    n_fft: usize,
    hop: usize,
    centered: bool,
) -> Result<Spectrogram> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot take the STFT of an empty clip"));
    }
    if n_fft == 0 || hop == 0 || hop > n_fft {
        return Err(Error::invalid(format!(
            "need 0 < hop <= n_fft, got hop = {hop}, n_fft = {n_fft}"
        )));
    }
    let pad = if centered { (n_fft / 2) as i64 } else { 0 };
    let frames = if centered {
        frame_count(samples.len(), hop)
    } else if samples.len() >= n_fft {
        1 + (samples.len() - n_fft) / hop
    } else {
        return Err(Error::invalid(format!(
            "uncentred STFT needs at least {n_fft} samples, got {}",
            samples.len()
        )));
    };
    let bins = n_fft / 2 + 1;
    let window = hann(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(frames * bins);
    for f in 0..frames {
        let start = (f * hop) as i64 - pad;
        for (k, slot) in buf.iter_mut().enumerate() {
            let idx = reflect_index(start + k as i64, samples.len());
            *slot = Complex::new(samples[idx] * window[k], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
    }
    Ok(Spectrogram { frames, bins, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_seconds_give_431_frames() {
        let s = stft_power(&vec![0.0; 220_500], 2048, 512, true).unwrap();
        assert_eq!(s.frames, 431);
        assert_eq!(s.bins, 1025);
        assert!(s.data.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn frame_count_law() {
        for len in [1, 2, 511, 512, 513, 1024, 5000] {
            let s = stft_power(&vec![0.1; len], 64, 16, true).unwrap();
            assert_eq!(s.frames, 1 + len / 16, "len {len}");
        }
    }

    #[test]
    fn sine_peaks_at_expected_bin() {
        let rate = 22050.0;
        let x: Vec<f64> = (0..22050)
            .map(|i| (2.0 * PI * 440.0 * i as f64 / rate).sin())
            .collect();
        let s = stft_power(&x, 2048, 512, true).unwrap();
        // 440 · 2048 / 22050 = 40.87; the first and last few frames see the
        // mirrored signal and are excluded
        let edge = 2048 / 2 / 512;
        for f in edge..s.frames - edge - 1 {
            let frame = s.frame(f);
            let arg = (0..s.bins)
                .max_by(|&a, &b| frame[a].total_cmp(&frame[b]))
                .unwrap();
            assert_eq!(arg, 41, "frame {f}");
        }
    }

    #[test]
    fn reflection() {
        // [a b c] padded by 2 on each side: c b | a b c | b a
        let idx: Vec<usize> = (-2..5).map(|i| reflect_index(i, 3)).collect();
        assert_eq!(idx, vec![2, 1, 0, 1, 2, 1, 0]);
        assert_eq!(reflect_index(-7, 1), 0);
        // longer than the signal: keeps bouncing
        assert_eq!(reflect_index(-5, 3), 1);
    }

    #[test]
    fn parseval_for_white_noise() {
        // sum |X_k|^2 over all n bins = n · sum x^2 for the unwindowed DFT
        let n = 1024;
        let mut rng = crate::synth::SplitMix64::new(5);
        let x: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let freq: f64 = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        let time: f64 = x.iter().map(|v| v * v).sum();
        assert!((freq / time - 1.0).abs() < 0.05);

        // windowed one-sided STFT frame: expected power scales by mean(w²)
        let s = stft_power(&x, n, n, false).unwrap();
        let frame = s.frame(0);
        let mut two_sided = frame[0] + frame[n / 2];
        two_sided += 2.0 * frame[1..n / 2].iter().sum::<f64>();
        let w = hann(n);
        let windowed: f64 = x.iter().zip(&w).map(|(v, w)| (v * w).powi(2)).sum();
        assert!((two_sided / n as f64 / windowed - 1.0).abs() < 0.05);
        let mean_w2 = w.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((windowed / (time * mean_w2) - 1.0).abs() < 0.2);
    }

    #[test]
    fn rejects_empty_and_bad_hop() {
        assert!(stft_power(&[], 8, 4, true).is_err());
        assert!(stft_power(&[0.0; 10], 8, 9, true).is_err());
        assert!(stft_power(&[0.0; 4], 8, 4, false).is_err());
    }
}

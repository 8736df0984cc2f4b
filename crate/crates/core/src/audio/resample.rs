//! Band-limited rate conversion by windowed-sinc interpolation.
//!
//! Output sample `i` sits at input position `t = i · native / target`. It is the
//! weighted sum of the inputs within `ZERO_CROSSINGS / cutoff` samples of `t`,
//! using a Blackman-windowed sinc low-pass at `cutoff = ROLLOFF · min(1,
//! target / native)` of the input Nyquist. Weights are divided by their sum,
//! so a constant signal passes with unit gain everywhere, edges included.
//! When the reduced ratio has at most `MAX_PHASES` output phases the kernels
//! are tabulated once per phase.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::AudioClip;

const ZERO_CROSSINGS: f64 = 32.0;
const ROLLOFF: f64 = 0.95;
const MAX_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct Kernel {
    cutoff: f64,
    radius: f64,
}

impl Kernel {
    fn new(native: u32, target: u32) -> Self {
        let cutoff = ROLLOFF * (target as f64 / native as f64).min(1.0);
        Self {
            cutoff,
            radius: ZERO_CROSSINGS / cutoff,
        }
    }

    fn weight(&self, x: f64) -> f64 {
        if x.abs() >= self.radius {
            return 0.0;
        }
        let arg = PI * self.cutoff * x;
        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
        // Blackman window over [-radius, radius]
        let phase = PI * (x / self.radius + 1.0);
        let window = 0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos();
        self.cutoff * sinc * window
    }

    /// Taps around integer `base` for fractional offset `frac` in `[0, 1)`,
    /// covering input indices `base - half + 1 ..= base + half`.
    fn taps(&self, frac: f64, half: i64) -> Vec<f64> {
        (-half + 1..=half)
            .map(|o| self.weight(o as f64 - frac))
            .collect()
    }
}

fn interpolate(x: &[f64], base: i64, half: i64, taps: &[f64]) -> f64 {
    let len = x.len() as i64;
    let lo = (base - half + 1).max(0);
    let hi = (base + half).min(len - 1);
    let (mut acc, mut norm) = (0.0, 0.0);
    for j in lo..=hi {
        let w = taps[(j - (base - half + 1)) as usize];
        acc += w * x[j as usize];
        norm += w;
    }
    if norm != 0.0 {
        acc / norm
    } else {
        0.0
    }
}

/// Resamples to `target` Hz; the output has `round(len · target / native)` samples.
pub fn resample(clip: &AudioClip, target: u32) -> Result<AudioClip> {
    let native = clip.rate();
    if target == 0 {
        return Err(Error::invalid("target sample rate must be > 0"));
    }
    if native == target {
        return Ok(clip.clone());
    }
    let x = clip.samples();
    let out_len = (x.len() as f64 * target as f64 / native as f64).round() as usize;
    if x.is_empty() {
        return AudioClip::new(Vec::new(), target);
    }
    let kernel = Kernel::new(native, target);
    let half = kernel.radius.ceil() as i64 + 1;
    let g = gcd(native as u64, target as u64);
    let (up, down) = (target as u64 / g, native as u64 / g);

    let out: Vec<f64> = if up <= MAX_PHASES {
        let table: Vec<Vec<f64>> = (0..up)
            .map(|p| kernel.taps(p as f64 / up as f64, half))
            .collect();
        (0..out_len as u64)
            .map(|i| {
                let pos = i * down;
                let base = (pos / up) as i64;
                interpolate(x, base, half, &table[(pos % up) as usize])
            })
            .collect()
    } else {
        let step = native as f64 / target as f64;
        (0..out_len)
            .map(|i| {
                let t = i as f64 * step;
                let base = t.floor();
                let taps = kernel.taps(t - base, half);
                interpolate(x, base as i64, half, &taps)
            })
            .collect()
    };
    AudioClip::new(out, target)
}

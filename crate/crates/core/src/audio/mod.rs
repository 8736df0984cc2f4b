//! Audio front end: one log-mel feature vector per recording.
//!
//! decode → mono → resample to `target_rate` → centred Hann STFT power →
//! mel filterbank → `ln(mel + floor)` per frame → mean over frames.

mod mel;
mod resample;
mod stft;
mod wav;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mel::{mel_filterbank, MelFilterbank, MelScale};
pub use resample::resample;
pub use stft::{frame_count, hann, stft_power, Spectrogram};
pub use wav::{decode_wav, encode_wav_pcm16};

/// Mono samples in `[-1, 1]` at `rate` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, rate: u32) -> Result<Self> {
        if rate == 0 {
            return Err(Error::invalid("sample rate must be > 0"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> u32 {
        self.rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            rate: self.rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogMode {
    /// `ln(mel + floor)`.
    #[default]
    Natural,
    /// `10 · log10(mel + floor)`.
    Decibel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AudioConfig {
    pub target_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// `None` means `target_rate / 2`.
    pub fmax: Option<f64>,
    pub log_floor: f64,
    pub centered: bool,
    pub mel_scale: MelScale,
    pub log_mode: LogMode,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            target_rate: 22050,
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
            centered: true,
            mel_scale: MelScale::Slaney,
            log_mode: LogMode::Natural,
        }
    }
}

impl AudioConfig {
    pub fn fmax(&self) -> f64 {
        self.fmax.unwrap_or(self.target_rate as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_rate == 0 {
            return Err(Error::invalid("target_rate must be > 0"));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::invalid(format!(
                "need 0 < hop <= n_fft, got hop = {}, n_fft = {}",
                self.hop, self.n_fft
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::invalid("log_floor must be > 0"));
        }
        Ok(())
    }

    pub fn filterbank(&self) -> Result<MelFilterbank> {
        self.validate()?;
        mel_filterbank(
            self.target_rate,
            self.n_fft,
            self.n_mels,
            self.fmin,
            self.fmax(),
            self.mel_scale,
        )
    }
}

fn check_rate(clip: &AudioClip, cfg: &AudioConfig) -> Result<()> {
    if clip.rate() != cfg.target_rate {
        return Err(Error::invalid(format!(
            "clip is at {} Hz, expected {} Hz; resample first",
            clip.rate(),
            cfg.target_rate
        )));
    }
    Ok(())
}

/// Power spectrogram of a clip already at `cfg.target_rate`.
pub fn clip_stft(clip: &AudioClip, cfg: &AudioConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    check_rate(clip, cfg)?;
    stft_power(clip.samples(), cfg.n_fft, cfg.hop, cfg.centered)
}

/// Mel power per frame before log compression, frame-major `frames × n_mels`.
pub fn mel_power(clip: &AudioClip, cfg: &AudioConfig, fb: &MelFilterbank) -> Result<Spectrogram> {
    let spec = clip_stft(clip, cfg)?;
    let mut data = vec![0.0; spec.frames * fb.n_mels];
    for (f, out) in data.chunks_mut(fb.n_mels).enumerate() {
        fb.apply(spec.frame(f), out);
    }
    Ok(Spectrogram {
        frames: spec.frames,
        bins: fb.n_mels,
        data,
    })
}

fn compress(v: f64, cfg: &AudioConfig) -> f64 {
    match cfg.log_mode {
        LogMode::Natural => (v + cfg.log_floor).ln(),
        LogMode::Decibel => 10.0 * (v + cfg.log_floor).log10(),
    }
}

/// Time-averaged log-mel vector of length `n_mels`.
pub fn log_mel_mean(clip: &AudioClip, cfg: &AudioConfig) -> Result<Vec<f64>> {
    let fb = cfg.filterbank()?;
    log_mel_mean_with(clip, cfg, &fb)
}

/// As [`log_mel_mean`] with a prebuilt filterbank.
pub fn log_mel_mean_with(
    clip: &AudioClip,
    cfg: &AudioConfig,
    fb: &MelFilterbank,
) -> Result<Vec<f64>> {
    let mel = mel_power(clip, cfg, fb)?;
    let mut mean = vec![0.0; fb.n_mels];
    for f in 0..mel.frames {
        for (acc, &v) in mean.iter_mut().zip(mel.frame(f)) {
            *acc += compress(v, cfg);
        }
    }
    mean.iter_mut().for_each(|m| *m /= mel.frames as f64);
    Ok(mean)
}

/// Full pipeline from WAV bytes to a feature vector.
pub fn extract_features(wav: &[u8], cfg: &AudioConfig, fb: &MelFilterbank) -> Result<Vec<f64>> {
    let clip = decode_wav(wav)?;
    let clip = resample(&clip, cfg.target_rate)?;
    log_mel_mean_with(&clip, cfg, fb)
}

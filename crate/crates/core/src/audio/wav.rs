//! Minimal RIFF/WAVE reader and 16-bit writer.
//!
//! Supports integer PCM at 16, 24 and 32 bits and IEEE float at 32 bits, in
//! plain or `WAVE_FORMAT_EXTENSIBLE` headers, with one or two channels.
//! Integer samples are scaled by `2^-(bits-1)`; channels are averaged.

use crate::error::{Error, Result};

use super::AudioClip;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleFormat {
    Int(u16),
    Float32,
}

#[derive(Debug, Clone, Copy)]
struct Format {
    channels: u16,
    rate: u32,
    block_align: u16,
    sample: SampleFormat,
}

fn err(chunk: &'static str, message: impl Into<String>) -> Error {
    Error::Wav {
        chunk,
        message: message.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(err(
            "fmt",
            format!("{} bytes, need at least 16", body.len()),
        ));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(err("fmt", "extensible header too short for sub-format"));
        }
        // first two bytes of the sub-format GUID carry the format tag
        tag = u16_at(body, 24);
    }
    let sample = match (tag, bits) {
        (FORMAT_PCM, 16 | 24 | 32) => SampleFormat::Int(bits),
        (FORMAT_FLOAT, 32) => SampleFormat::Float32,
        (FORMAT_PCM, _) => return Err(err("fmt", format!("unsupported PCM bit depth {bits}"))),
        (FORMAT_FLOAT, _) => return Err(err("fmt", format!("unsupported float bit depth {bits}"))),
        _ => return Err(err("fmt", format!("unsupported codec tag {tag:#06x}"))),
    };
    if !(1..=2).contains(&channels) {
        return Err(err("fmt", format!("{channels} channels, expected 1 or 2")));
    }
    if rate == 0 {
        return Err(err("fmt", "sample rate is 0"));
    }
    let expected_align = channels * bits / 8;
    if block_align != expected_align {
        return Err(err(
            "fmt",
            format!("block align {block_align}, expected {expected_align}"),
        ));
    }
    Ok(Format {
        channels,
        rate,
        block_align,
        sample,
    })
}

fn decode_sample(fmt: SampleFormat, b: &[u8]) -> f64 {
    match fmt {
        SampleFormat::Int(16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        SampleFormat::Int(24) => {
            // sign-extend via the top byte of an i32
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        SampleFormat::Int(_) => {
            i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0
        }
        SampleFormat::Float32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
    }
}

/// Decodes a WAV file at its native rate, averaging channels to mono.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(err("RIFF", "file shorter than the 12-byte RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(err("RIFF", "missing RIFF magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(err("RIFF", "form type is not WAVE"));
    }

    let mut fmt = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size);
        match id {
            b"fmt " => {
                if body_end > bytes.len() {
                    return Err(err("fmt", "chunk extends past end of file"));
                }
                fmt = Some(parse_fmt(&bytes[body_start..body_end])?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| err("data", "data chunk before fmt chunk"))?;
                if body_end > bytes.len() {
                    return Err(err(
                        "data",
                        format!(
                            "declares {size} bytes but only {} remain (truncated file)",
                            bytes.len() - body_start
                        ),
                    ));
                }
                let body = &bytes[body_start..body_end];
                let align = fmt.block_align as usize;
                if !body.len().is_multiple_of(align) {
                    return Err(err(
                        "data",
                        format!(
                            "{} bytes is not a whole number of {align}-byte frames",
                            body.len()
                        ),
                    ));
                }
                let width = align / fmt.channels as usize;
                let samples = body
                    .chunks_exact(align)
                    .map(|frame| {
                        let sum: f64 = frame
                            .chunks_exact(width)
                            .map(|s| decode_sample(fmt.sample, s))
                            .sum();
                        sum / fmt.channels as f64
                    })
                    .collect();
                return AudioClip::new(samples, fmt.rate);
            }
            _ => {}
        }
        // chunks are padded to even length
        pos = body_end.saturating_add(size & 1);
    }
    Err(match fmt {
        None => err("fmt", "no fmt chunk found"),
        Some(_) => err("data", "no data chunk found"),
    })
}

/// Encodes mono or interleaved stereo samples as 16-bit PCM.
pub fn encode_wav_pcm16(interleaved: &[f64], channels: u16, rate: u32) -> Vec<u8> {
    let data_len = interleaved.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * channels as u32 * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in interleaved {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(tag: u16, channels: u16, rate: u32, bits: u16, data_len: usize) -> Vec<u8> {
        let align = channels * bits / 8;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * align as u32).to_le_bytes());
        out.extend_from_slice(&align.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data_len as u32).to_le_bytes());
        out
    }

    #[test]
    fn silent_16_bit_second() {
        let bytes = encode_wav_pcm16(&vec![0.0; 22050], 1, 22050);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.rate(), 22050);
        assert_eq!(clip.samples().len(), 22050);
        assert!(clip.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn stereo_24_bit_constants_average() {
        // left = 0x200000 / 2^23 = 0.25, right = -0x100000 / 2^23 = -0.125
        let (a, b) = (0x20_0000i32, -0x10_0000i32);
        let frames = 10;
        let mut bytes = header(FORMAT_PCM, 2, 48000, 24, frames * 6);
        for _ in 0..frames {
            bytes.extend_from_slice(&a.to_le_bytes()[..3]);
            bytes.extend_from_slice(&b.to_le_bytes()[..3]);
        }
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.samples().len(), frames);
        let expect = (0.25 + -0.125) / 2.0;
        assert!(clip.samples().iter().all(|&s| s == expect));
    }

    #[test]
    fn float_and_32_bit_int() {
        let mut bytes = header(FORMAT_FLOAT, 1, 8000, 32, 8);
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-1.0f32).to_le_bytes());
        assert_eq!(decode_wav(&bytes).unwrap().samples(), &[0.5, -1.0]);

        let mut bytes = header(FORMAT_PCM, 1, 8000, 32, 4);
        bytes.extend_from_slice(&i32::MIN.to_le_bytes());
        assert_eq!(decode_wav(&bytes).unwrap().samples(), &[-1.0]);
    }

    #[test]
    fn skips_unknown_and_odd_chunks() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF\0\0\0\0WAVE");
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(b"abc\0");
        let body = encode_wav_pcm16(&[0.5, -0.5], 1, 100);
        bytes.extend_from_slice(&body[12..]);
        assert_eq!(decode_wav(&bytes).unwrap().samples(), &[0.5, -0.5]);
    }

    #[test]
    fn truncated_file_names_the_data_chunk() {
        let bytes = encode_wav_pcm16(&vec![0.1; 100], 1, 22050);
        let e = decode_wav(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(matches!(e, Error::Wav { chunk: "data", .. }), "{e}");
        assert!(decode_wav(&bytes[..8]).is_err());
    }

    #[test]
    fn unsupported_codec_names_the_fmt_chunk() {
        let bytes = header(0x0055, 1, 8000, 16, 0);
        let e = decode_wav(&bytes).unwrap_err();
        assert!(matches!(e, Error::Wav { chunk: "fmt", .. }));
        let bytes = header(FORMAT_PCM, 1, 8000, 8, 0);
        assert!(decode_wav(&bytes).is_err());
        let bytes = header(FORMAT_PCM, 3, 8000, 16, 0);
        assert!(decode_wav(&bytes).is_err());
    }

    #[test]
    fn missing_magic() {
        let mut bytes = encode_wav_pcm16(&[0.0], 1, 8000);
        bytes[0] = b'X';
        assert!(matches!(
            decode_wav(&bytes),
            Err(Error::Wav { chunk: "RIFF", .. })
        ));
    }
}

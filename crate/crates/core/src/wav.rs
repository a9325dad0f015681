//! RIFF/WAVE PCM reading and writing, channel mixdown and windowing.
//!
//! Only little-endian `RIFF` containers with a plain `fmt ` chunk are
//! accepted: integer PCM (format code 1) at 8, 16, 24 or 32 bits, and IEEE
//! float (format code 3) at 32 bits. Integer samples normalize as
//! `s / 2^(bits-1)`; 8-bit data is unsigned and maps as `(s - 128) / 128`.
//!
//! [`write_wav`] emits the canonical layout: a 12-byte RIFF header, a 16-byte
//! `fmt ` chunk and a `data` chunk, nothing else. Values outside `[-1, 1]` are
//! clamped and counted in [`EncodedWav::clipped_samples`]. Integer encoding
//! rounds to nearest and saturates at the largest positive code, so `+1.0`
//! lands one LSB low.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{FractalError, Result as FractalResult};
use crate::signal::TimeSeries;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const CANONICAL_HEADER_LEN: usize = 44;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WavError {
    #[error("unsupported container magic {0:?} (expected \"RIFF\")")]
    UnsupportedContainer(String),
    #[error("RIFF form type is {0:?}, not \"WAVE\"")]
    NotWave(String),
    #[error("truncated input: {0}")]
    Truncated(String),
    #[error("missing {0:?} chunk")]
    MissingChunk(&'static str),
    #[error("duplicate {0:?} chunk")]
    DuplicateChunk(&'static str),
    #[error("unsupported format code {0:#06x}")]
    UnsupportedFormat(u16),
    #[error("unsupported bit depth {bits} for format code {code}")]
    UnsupportedBitDepth { code: u16, bits: u16 },
    #[error("inconsistent length: {0}")]
    InconsistentLength(String),
    #[error("invalid fmt chunk: {0}")]
    InvalidFormat(String),
    #[error("non-finite float sample at frame {0}")]
    NonFiniteSample(usize),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
}

pub type WavResult<T> = std::result::Result<T, WavError>;

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleFormat {
    U8,
    I16,
    I24,
    I32,
    F32,
}

impl SampleFormat {
    pub const ALL: [SampleFormat; 5] = [
        SampleFormat::U8,
        SampleFormat::I16,
        SampleFormat::I24,
        SampleFormat::I32,
        SampleFormat::F32,
    ];

    pub fn bits(self) -> u16 {
        match self {
            SampleFormat::U8 => 8,
            SampleFormat::I16 => 16,
            SampleFormat::I24 => 24,
            SampleFormat::I32 | SampleFormat::F32 => 32,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    fn code(self) -> u16 {
        match self {
            SampleFormat::F32 => FORMAT_IEEE_FLOAT,
            _ => FORMAT_PCM,
        }
    }

    fn from_header(code: u16, bits: u16) -> WavResult<Self> {
        match (code, bits) {
            (FORMAT_PCM, 8) => Ok(SampleFormat::U8),
            (FORMAT_PCM, 16) => Ok(SampleFormat::I16),
            (FORMAT_PCM, 24) => Ok(SampleFormat::I24),
            (FORMAT_PCM, 32) => Ok(SampleFormat::I32),
            (FORMAT_IEEE_FLOAT, 32) => Ok(SampleFormat::F32),
            (FORMAT_PCM | FORMAT_IEEE_FLOAT, bits) => {
                Err(WavError::UnsupportedBitDepth { code, bits })
            }
            (code, _) => Err(WavError::UnsupportedFormat(code)),
        }
    }

    /// Size of one quantization step in normalized units; zero for float.
    pub fn lsb(self) -> f64 {
        match self {
            SampleFormat::F32 => 0.0,
            _ => 1.0 / (1u64 << (self.bits() - 1)) as f64,
        }
    }

    /// Accepts `8`, `16`, `24`, `32` and `f32`/`32f`/`float`.
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "8" => Some(SampleFormat::U8),
            "16" => Some(SampleFormat::I16),
            "24" => Some(SampleFormat::I24),
            "32" => Some(SampleFormat::I32),
            "f32" | "32f" | "float" => Some(SampleFormat::F32),
            _ => None,
        }
    }
}

/// Decoded multi-channel audio, samples normalized to roughly `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate: u32,
    format: SampleFormat,
    channels: Vec<Vec<f64>>,
}

impl AudioClip {
    /// `channels[c][i]` is frame `i` of channel `c`.
    pub fn new(sample_rate: u32, format: SampleFormat, channels: Vec<Vec<f64>>) -> WavResult<Self> {
        if sample_rate == 0 {
            return Err(WavError::InvalidClip("sample rate is zero".into()));
        }
        if channels.is_empty() || channels.len() > u16::MAX as usize {
            return Err(WavError::InvalidClip(format!(
                "channel count {} outside 1..=65535",
                channels.len()
            )));
        }
        let frames = channels[0].len();
        if channels.iter().any(|c| c.len() != frames) {
            return Err(WavError::InvalidClip("channels differ in length".into()));
        }
        for c in &channels {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(WavError::NonFiniteSample(i));
            }
        }
        Ok(AudioClip {
            sample_rate,
            format,
            channels,
        })
    }

    /// Single-channel clip holding the series' samples as-is.
    pub fn from_series(series: &TimeSeries, format: SampleFormat) -> WavResult<Self> {
        let rate = series.sample_rate();
        if rate.fract() != 0.0 || rate < 1.0 || rate > u32::MAX as f64 {
            return Err(WavError::InvalidClip(format!(
                "sample rate {rate} is not a positive integer"
            )));
        }
        AudioClip::new(rate as u32, format, vec![series.samples().to_vec()])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn format(&self) -> SampleFormat {
        self.format
    }

    pub fn bit_depth(&self) -> u16 {
        self.format.bits()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn frame_count(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration(&self) -> f64 {
        self.frame_count() as f64 / self.sample_rate as f64
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn u16_at(&self, at: usize) -> u16 {
        u16::from_le_bytes([self.bytes[at], self.bytes[at + 1]])
    }

    fn u32_at(&self, at: usize) -> u32 {
        u32::from_le_bytes(self.bytes[at..at + 4].try_into().unwrap())
    }

    fn tag_at(&self, at: usize) -> String {
        String::from_utf8_lossy(&self.bytes[at..at + 4]).into_owned()
    }
}

struct FmtChunk {
    format: SampleFormat,
    channels: u16,
    sample_rate: u32,
}

fn parse_fmt(body: &[u8]) -> WavResult<FmtChunk> {
    if body.len() < 16 {
        return Err(WavError::InvalidFormat(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let r = Reader { bytes: body };
    let code = r.u16_at(0);
    let channels = r.u16_at(2);
    let sample_rate = r.u32_at(4);
    let byte_rate = r.u32_at(8);
    let block_align = r.u16_at(12);
    let bits = r.u16_at(14);

    let format = SampleFormat::from_header(code, bits)?;
    if channels == 0 {
        return Err(WavError::InvalidFormat("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(WavError::InvalidFormat("zero sample rate".into()));
    }
    let want_align = channels as u64 * format.bytes() as u64;
    if block_align as u64 != want_align {
        return Err(WavError::InconsistentLength(format!(
            "block align {block_align} != channels * bytes per sample = {want_align}"
        )));
    }
    let want_rate = sample_rate as u64 * want_align;
    if byte_rate as u64 != want_rate {
        return Err(WavError::InconsistentLength(format!(
            "byte rate {byte_rate} != sample rate * block align = {want_rate}"
        )));
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
    })
}

/// Decodes a RIFF/WAVE byte buffer.
///
/// Unknown chunks are skipped and odd-sized chunks are followed by one pad
/// byte (which may be absent only at the very end of the RIFF body). Bytes
/// after the RIFF body are ignored.
pub fn parse_wav(bytes: &[u8]) -> WavResult<AudioClip> {
    if bytes.len() < 12 {
        return Err(WavError::Truncated(format!(
            "{} bytes is shorter than a RIFF header",
            bytes.len()
        )));
    }
    let r = Reader { bytes };
    let magic = r.tag_at(0);
    if &bytes[0..4] != b"RIFF" {
        return Err(WavError::UnsupportedContainer(magic));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave(r.tag_at(8)));
    }
    let riff_end = 8 + r.u32_at(4) as usize;
    if riff_end > bytes.len() {
        return Err(WavError::Truncated(format!(
            "RIFF size declares {riff_end} bytes but only {} present",
            bytes.len()
        )));
    }
    if riff_end < 12 {
        return Err(WavError::InconsistentLength(format!(
            "RIFF size {} cannot hold the form type",
            riff_end - 8
        )));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos < riff_end {
        if riff_end - pos < 8 {
            return Err(WavError::Truncated(format!(
                "{} stray bytes at offset {pos}, too few for a chunk header",
                riff_end - pos
            )));
        }
        let size = r.u32_at(pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= riff_end)
            .ok_or_else(|| {
                WavError::Truncated(format!(
                    "chunk {:?} at offset {pos} declares {size} bytes past the RIFF end",
                    r.tag_at(pos)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match &bytes[pos..pos + 4] {
            b"fmt " => {
                if fmt.is_some() {
                    return Err(WavError::DuplicateChunk("fmt "));
                }
                fmt = Some(parse_fmt(body)?);
            }
            b"data" => {
                if data.is_some() {
                    return Err(WavError::DuplicateChunk("data"));
                }
                data = Some(body);
            }
            _ => {}
        }
        pos = body_end + (size & 1);
        if pos > riff_end {
            // missing trailing pad byte on the last chunk
            pos = riff_end;
        }
    }

    let fmt = fmt.ok_or(WavError::MissingChunk("fmt "))?;
    let data = data.ok_or(WavError::MissingChunk("data"))?;
    decode_samples(&fmt, data)
}

fn decode_samples(fmt: &FmtChunk, data: &[u8]) -> WavResult<AudioClip> {
    let width = fmt.format.bytes();
    let block = width * fmt.channels as usize;
    if !data.len().is_multiple_of(block) {
        return Err(WavError::InconsistentLength(format!(
            "data chunk of {} bytes is not a whole number of {block}-byte frames",
            data.len()
        )));
    }
    let frames = data.len() / block;
    let mut channels = vec![Vec::with_capacity(frames); fmt.channels as usize];
    for (frame, chunk) in data.chunks_exact(block).enumerate() {
        for (c, raw) in chunk.chunks_exact(width).enumerate() {
            let v = match fmt.format {
                SampleFormat::U8 => (raw[0] as f64 - 128.0) / 128.0,
                SampleFormat::I16 => i16::from_le_bytes([raw[0], raw[1]]) as f64 / 32768.0,
                SampleFormat::I24 => {
                    // sign-extend through the top byte of an i32
                    let s = i32::from_le_bytes([0, raw[0], raw[1], raw[2]]) >> 8;
                    s as f64 / 8_388_608.0
                }
                SampleFormat::I32 => {
                    i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64 / 2_147_483_648.0
                }
                SampleFormat::F32 => {
                    let v = f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]);
                    if !v.is_finite() {
                        return Err(WavError::NonFiniteSample(frame));
                    }
                    v as f64
                }
            };
            channels[c].push(v);
        }
    }
    AudioClip::new(fmt.sample_rate, fmt.format, channels)
}

/// Canonical encoding plus the number of samples clamped into `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWav {
    pub bytes: Vec<u8>,
    pub clipped_samples: usize,
}

fn quantize(v: f64, bits: u16) -> i64 {
    let full = (1i64 << (bits - 1)) as f64;
    let q = (v * full).round();
    q.clamp(-full, full - 1.0) as i64
}

/// Encodes `clip` in the canonical 44-byte-header layout at `format`.
pub fn write_wav(clip: &AudioClip, format: SampleFormat) -> WavResult<EncodedWav> {
    let channels = clip.channel_count();
    let frames = clip.frame_count();
    let block = u16::try_from(channels * format.bytes()).map_err(|_| {
        WavError::InvalidClip(format!("{channels} channels overflow the block size"))
    })?;
    let byte_rate = u32::try_from(clip.sample_rate as u64 * block as u64)
        .map_err(|_| WavError::InvalidClip("byte rate exceeds 32 bits".into()))?;
    let block = block as usize;
    let data_len = frames
        .checked_mul(block)
        .filter(|&n| n + CANONICAL_HEADER_LEN < u32::MAX as usize)
        .ok_or_else(|| WavError::InvalidClip("clip too large for a RIFF file".into()))?;
    let pad = data_len & 1;

    let mut out = Vec::with_capacity(CANONICAL_HEADER_LEN + data_len + pad);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len + pad) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.code().to_le_bytes());
    out.extend_from_slice(&(channels as u16).to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(block as u16).to_le_bytes());
    out.extend_from_slice(&format.bits().to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let mut clipped = 0;
    for i in 0..frames {
        for ch in &clip.channels {
            let raw = ch[i];
            if !raw.is_finite() {
                return Err(WavError::NonFiniteSample(i));
            }
            if raw.abs() > 1.0 {
                clipped += 1;
            }
            let v = raw.clamp(-1.0, 1.0);
            match format {
                SampleFormat::U8 => out.push((quantize(v, 8) + 128) as u8),
                SampleFormat::I16 => out.extend_from_slice(&(quantize(v, 16) as i16).to_le_bytes()),
                SampleFormat::I24 => {
                    out.extend_from_slice(&(quantize(v, 24) as i32).to_le_bytes()[..3])
                }
                SampleFormat::I32 => out.extend_from_slice(&(quantize(v, 32) as i32).to_le_bytes()),
                SampleFormat::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            }
        }
    }
    if pad == 1 {
        out.push(0);
    }
    Ok(EncodedWav {
        bytes: out,
        clipped_samples: clipped,
    })
}

/// Per-frame arithmetic mean of all channels.
pub fn to_mono(clip: &AudioClip) -> FractalResult<TimeSeries> {
    let samples = if clip.channel_count() == 1 {
        clip.channels[0].clone()
    } else {
        let n = clip.channel_count() as f64;
        (0..clip.frame_count())
            .map(|i| clip.channels.iter().map(|c| c[i]).sum::<f64>() / n)
            .collect()
    };
    TimeSeries::new(samples, clip.sample_rate as f64)
}

/// Window length and hop, both in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_seconds: f64,
    pub hop_seconds: f64,
}

impl Default for WindowPlan {
    fn default() -> Self {
        WindowPlan {
            window_seconds: 2.0,
            hop_seconds: 1.0,
        }
    }
}

/// Smallest window the plan will produce.
pub const MIN_WINDOW_SAMPLES: usize = 4;

impl WindowPlan {
    pub fn new(window_seconds: f64, hop_seconds: f64) -> FractalResult<Self> {
        if !(window_seconds.is_finite() && window_seconds > 0.0) {
            return Err(FractalError::invalid(format!(
                "window length must be positive, got {window_seconds}"
            )));
        }
        if !(hop_seconds.is_finite() && hop_seconds > 0.0 && hop_seconds <= window_seconds) {
            return Err(FractalError::invalid(format!(
                "hop must lie in (0, window] = (0, {window_seconds}], got {hop_seconds}"
            )));
        }
        Ok(WindowPlan {
            window_seconds,
            hop_seconds,
        })
    }

    /// `(window_samples, hop_samples)` at `sample_rate`, rounded to nearest.
    pub fn samples_at(&self, sample_rate: f64) -> FractalResult<(usize, usize)> {
        let window = (self.window_seconds * sample_rate).round() as usize;
        let hop = (self.hop_seconds * sample_rate).round() as usize;
        if window < MIN_WINDOW_SAMPLES {
            return Err(FractalError::invalid(format!(
                "window of {window} samples is shorter than {MIN_WINDOW_SAMPLES}"
            )));
        }
        if hop == 0 {
            return Err(FractalError::invalid("hop rounds to zero samples"));
        }
        Ok((window, hop.min(window)))
    }
}

/// A slice of a longer series.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_sample: usize,
    pub offset_seconds: f64,
    pub series: TimeSeries,
}

/// Splits `series` into full windows starting at multiples of the hop.
/// A trailing partial window is dropped.
pub fn segment(series: &TimeSeries, plan: &WindowPlan) -> FractalResult<Vec<Window>> {
    let rate = series.sample_rate();
    let (window, hop) = plan.samples_at(rate)?;
    let n = series.len();
    if n < window {
        return Err(FractalError::invalid(format!(
            "series of {n} samples is shorter than one {window}-sample window"
        )));
    }
    (0..=(n - window) / hop)
        .map(|w| {
            let start = w * hop;
            Ok(Window {
                start_sample: start,
                offset_seconds: start as f64 / rate,
                series: TimeSeries::new(series.samples()[start..start + window].to_vec(), rate)?,
            })
        })
        .collect()
}

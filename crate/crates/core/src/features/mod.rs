//! Audio frontend: framing on the 10 ms grid, MFCC extraction and
//! ingestion of precomputed embedding files.

mod embedding;
mod mfcc;
mod wav;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embedding::{load_embedding_stream, parse_embedding_stream, write_embedding_stream};
pub use mfcc::{hz_to_mel, mel_to_hz, mfcc, mfcc_stream, MelFilterbank, MfccExtractor, LOG_FLOOR};
pub use wav::{decode_pcm16, decode_wav_bytes, read_wav, write_wav};
pub(crate) use wav::quantize as wav_quantize;

/// The only sample rate the frontend accepts.
pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("frame has {found} samples, expected {expected}")]
    FrameLength { expected: usize, found: usize },
    #[error("unsupported sample rate {0} Hz (only 16000 Hz is accepted)")]
    UnsupportedSampleRate(u32),
    #[error("unsupported channel count {0} (only mono is accepted)")]
    UnsupportedChannels(u16),
    #[error("unsupported sample format: {0} (only 16-bit integer PCM is accepted)")]
    UnsupportedFormat(String),
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("wav decode error: {0}")]
    Wav(#[from] hound::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `dim=<d>` header, found {found:?}")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: malformed value {token:?}")]
    MalformedRow { line: usize, token: String },
}

/// Mono PCM audio, amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, FeatureError> {
        if sample_rate != SAMPLE_RATE {
            return Err(FeatureError::UnsupportedSampleRate(sample_rate));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(FeatureError::NonFiniteSample(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }
}

/// One frame's feature vector, indexed on the 10 ms grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    pub values: Vec<f64>,
    pub frame_index: u64,
}

impl ContextVector {
    pub fn new(values: Vec<f64>, frame_index: u64) -> Self {
        Self {
            values,
            frame_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub frame_len_ms: u32,
    pub hop_ms: u32,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub preemphasis: f64,
    /// Replace c0 with the log energy of the raw frame.
    pub include_log_energy: bool,
    /// Append delta and delta-delta coefficients (stream extraction only).
    pub deltas: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: 25,
            hop_ms: 10,
            n_mels: 26,
            n_coeffs: 20,
            preemphasis: 0.97,
            include_log_energy: true,
            deltas: false,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.hop_ms == 0 || self.hop_ms > self.frame_len_ms {
            return Err(FeatureError::InvalidConfig(format!(
                "need 0 < hop_ms <= frame_len_ms, got hop {} / frame {}",
                self.hop_ms, self.frame_len_ms
            )));
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return Err(FeatureError::InvalidConfig(format!(
                "need 1 <= n_coeffs <= n_mels, got {} / {}",
                self.n_coeffs, self.n_mels
            )));
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(FeatureError::InvalidConfig(format!(
                "preemphasis must lie in [0, 1), got {}",
                self.preemphasis
            )));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        (self.frame_len_ms * SAMPLE_RATE / 1000) as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_ms * SAMPLE_RATE / 1000) as usize
    }

    /// Dimension of the produced context vectors.
    pub fn dim(&self) -> usize {
        if self.deltas {
            3 * self.n_coeffs
        } else {
            self.n_coeffs
        }
    }
}

/// Number of whole frames that fit in `len` samples.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

/// Slice `samples` into overlapping analysis windows; the trailing partial
/// frame is dropped.
pub fn frame_signal<'a>(
    samples: &'a [f32],
    cfg: &MfccConfig,
) -> Result<impl ExactSizeIterator<Item = &'a [f32]> + 'a, FeatureError> {
    cfg.validate()?;
    let frame_len = cfg.frame_len();
    let hop = cfg.hop_len();
    let n = frame_count(samples.len(), frame_len, hop);
    Ok((0..n).map(move |k| &samples[k * hop..k * hop + frame_len]))
}

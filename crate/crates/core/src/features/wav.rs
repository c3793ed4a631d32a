use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::{AudioBuffer, FeatureError, SAMPLE_RATE};

fn check_spec(spec: &WavSpec) -> Result<(), FeatureError> {
    if spec.channels != 1 {
        return Err(FeatureError::UnsupportedChannels(spec.channels));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(FeatureError::UnsupportedSampleRate(spec.sample_rate));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(FeatureError::UnsupportedFormat(format!(
            "{:?} {}-bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    Ok(())
}

fn read_from<R: std::io::Read>(reader: hound::WavReader<R>) -> Result<AudioBuffer, FeatureError> {
    check_spec(&reader.spec())?;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f32::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()?;
    AudioBuffer::new(samples, SAMPLE_RATE)
}

/// Read a RIFF/PCM16/mono/16 kHz file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, FeatureError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => FeatureError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => FeatureError::Wav(other),
    })?;
    read_from(reader)
}

/// Parse an in-memory WAV payload with the same restrictions as [`read_wav`].
pub fn decode_wav_bytes(bytes: &[u8]) -> Result<AudioBuffer, FeatureError> {
    read_from(hound::WavReader::new(std::io::Cursor::new(bytes))?)
}

/// Little-endian PCM16 bytes to amplitudes. `bytes.len()` must be even.
pub fn decode_pcm16(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(2)
        .map(|b| f32::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0)
        .collect()
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[f32]) -> Result<(), FeatureError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        w.write_sample(quantize(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub(crate) fn quantize(s: f32) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

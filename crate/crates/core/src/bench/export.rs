//! On-disk layout of a generated stream:
//!
//! ```text
//! <dir>/contexts       embedding stream file
//! <dir>/truth.csv      frame,label
//! <dir>/reveal.csv     frame,revealed (0/1)
//! <dir>/segments.csv   speaker_id,start_frame,end_frame
//! <dir>/meta.json      spec, feature kind, dimension, drawn speakers
//! <dir>/stream.wav     concatenated audio (MFCC streams only)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pool::FeatureKind;
use super::stream::{GeneratedStream, Segment, StreamSpec};
use super::BenchError;
use crate::features::{load_embedding_stream, read_wav, write_embedding_stream, write_wav, ContextVector};

/// Truth label written for frames without a speaker.
pub const NO_SPEAKER: &str = "<no-speaker>";

#[derive(Serialize, Deserialize)]
struct Meta {
    spec: StreamSpec,
    feature_kind: FeatureKind,
    dim: usize,
    frames: usize,
    speakers: Vec<String>,
}

fn bad(path: &Path, reason: impl Into<String>) -> BenchError {
    BenchError::StreamExport {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn write_stream_dir(dir: impl AsRef<Path>, stream: &GeneratedStream) -> Result<(), BenchError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;

    let contexts: Vec<ContextVector> = stream
        .contexts
        .iter()
        .enumerate()
        .map(|(t, v)| ContextVector::new(v.clone(), t as u64))
        .collect();
    write_embedding_stream(dir.join("contexts"), stream.dim, &contexts)?;

    let path = dir.join("truth.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    w.write_record(["frame", "label"]).map_err(|e| BenchError::csv(&path, e))?;
    for t in 0..stream.len() {
        let label = stream.truth_id(t).unwrap_or(NO_SPEAKER);
        w.write_record([t.to_string().as_str(), label])
            .map_err(|e| BenchError::csv(&path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let path = dir.join("reveal.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    w.write_record(["frame", "revealed"]).map_err(|e| BenchError::csv(&path, e))?;
    for (t, r) in stream.reveal.iter().enumerate() {
        w.write_record([t.to_string(), u8::from(*r).to_string()])
            .map_err(|e| BenchError::csv(&path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let path = dir.join("segments.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    for s in &stream.segments {
        w.serialize(s).map_err(|e| BenchError::csv(&path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let meta = Meta {
        spec: stream.spec.clone(),
        feature_kind: stream.feature_kind,
        dim: stream.dim,
        frames: stream.len(),
        speakers: stream.speakers.clone(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta is serializable");
    fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;

    if let Some(audio) = &stream.audio {
        write_wav(dir.join("stream.wav"), audio)?;
    }
    Ok(())
}

pub fn read_stream_dir(dir: impl AsRef<Path>) -> Result<GeneratedStream, BenchError> {
    let dir = dir.as_ref();
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| bad(&path, e.to_string()))?;

    let path = dir.join("contexts");
    let contexts: Vec<Vec<f64>> = load_embedding_stream(&path)?
        .into_iter()
        .map(|c| c.values)
        .collect();
    if contexts.len() != meta.frames {
        return Err(bad(&path, format!("{} frames, expected {}", contexts.len(), meta.frames)));
    }
    if let Some(v) = contexts.first() {
        if v.len() != meta.dim {
            return Err(BenchError::DimensionMismatch {
                expected: meta.dim,
                found: v.len(),
            });
        }
    }

    let path = dir.join("truth.csv");
    let mut truth = Vec::with_capacity(meta.frames);
    let mut r = csv::Reader::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    for (t, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| BenchError::csv(&path, e))?;
        if rec.get(0) != Some(t.to_string().as_str()) {
            return Err(bad(&path, format!("row {} out of order", t + 1)));
        }
        let label = rec.get(1).unwrap_or_default();
        truth.push(if label == NO_SPEAKER {
            None
        } else {
            let i = meta
                .speakers
                .iter()
                .position(|s| s == label)
                .ok_or_else(|| bad(&path, format!("unknown speaker {label:?}")))?;
            Some(i as u32)
        });
    }

    let path = dir.join("reveal.csv");
    let mut reveal = Vec::with_capacity(meta.frames);
    let mut r = csv::Reader::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    for rec in r.records() {
        let rec = rec.map_err(|e| BenchError::csv(&path, e))?;
        reveal.push(match rec.get(1) {
            Some("1") => true,
            Some("0") => false,
            other => return Err(bad(&path, format!("bad reveal flag {other:?}"))),
        });
    }

    let path = dir.join("segments.csv");
    let mut r = csv::Reader::from_path(&path).map_err(|e| BenchError::csv(&path, e))?;
    let segments: Vec<Segment> = r
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::csv(&path, e))?;

    if truth.len() != meta.frames || reveal.len() != meta.frames {
        return Err(bad(dir, "truth, reveal and contexts differ in length"));
    }

    let wav = dir.join("stream.wav");
    let audio = match meta.feature_kind {
        FeatureKind::Mfcc if wav.exists() => Some(read_wav(&wav)?.into_samples()),
        _ => None,
    };

    Ok(GeneratedStream {
        spec: meta.spec,
        feature_kind: meta.feature_kind,
        dim: meta.dim,
        speakers: meta.speakers,
        contexts,
        truth,
        reveal,
        segments,
        audio,
    })
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::features::{
    load_embedding_stream, read_wav, ContextVector, MfccConfig, MfccExtractor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// 16 kHz PCM16 WAV utterances, featurised with the MFCC frontend.
    Mfcc,
    /// Precomputed embedding files, one vector per 10 ms frame.
    Precomputed,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Precomputed => "precomputed",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mfcc" => Ok(FeatureKind::Mfcc),
            "precomputed" | "cnn" | "embedding" => Ok(FeatureKind::Precomputed),
            other => Err(format!("unknown feature kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub source: PathBuf,
    pub speaker_id: String,
}

/// `source,speaker_id` CSV plus the pool-wide feature kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolManifest {
    pub entries: Vec<PoolEntry>,
    pub feature_kind: FeatureKind,
}

#[derive(Deserialize)]
struct Sidecar {
    feature_kind: FeatureKind,
}

impl PoolManifest {
    /// Read a manifest. Relative sources resolve against the manifest's
    /// directory. The feature kind comes from a sidecar `<stem>.toml`
    /// (`feature_kind = "mfcc" | "precomputed"`) or, failing that, from the
    /// source extensions (`.wav` means MFCC).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let bad = |reason: String| BenchError::Manifest {
            path: path.to_path_buf(),
            reason,
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let mut reader = csv::Reader::from_path(path).map_err(|e| BenchError::csv(path, e))?;
        let headers = reader.headers().map_err(|e| BenchError::csv(path, e))?.clone();
        if headers.get(0) != Some("source") || headers.get(1) != Some("speaker_id") {
            return Err(bad(format!("expected header `source,speaker_id`, got {headers:?}")));
        }
        let mut entries = Vec::new();
        for record in reader.deserialize::<PoolEntry>() {
            let mut e = record.map_err(|e| BenchError::csv(path, e))?;
            if e.speaker_id.trim().is_empty() {
                return Err(bad(format!("empty speaker id for {}", e.source.display())));
            }
            if e.source.is_relative() {
                e.source = base.join(&e.source);
            }
            entries.push(e);
        }
        if entries.is_empty() {
            return Err(bad("no entries".into()));
        }

        let sidecar = path.with_extension("toml");
        let feature_kind = if sidecar.exists() {
            let text = fs::read_to_string(&sidecar).map_err(|e| BenchError::io(&sidecar, e))?;
            toml::from_str::<Sidecar>(&text)
                .map_err(|e| bad(format!("{}: {e}", sidecar.display())))?
                .feature_kind
        } else {
            let is_wav = |e: &PoolEntry| {
                e.source
                    .extension()
                    .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
            };
            if entries.iter().all(is_wav) {
                FeatureKind::Mfcc
            } else if entries.iter().any(is_wav) {
                return Err(bad("mixed wav and embedding sources; add a sidecar".into()));
            } else {
                FeatureKind::Precomputed
            }
        };
        Ok(Self {
            entries,
            feature_kind,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), BenchError> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
        for e in &self.entries {
            w.serialize(e).map_err(|e| BenchError::csv(path, e))?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))?;
        let sidecar = path.with_extension("toml");
        fs::write(&sidecar, format!("feature_kind = \"{}\"\n", self.feature_kind.name()))
            .map_err(|e| BenchError::io(&sidecar, e))
    }
}

/// One single-speaker utterance.
#[derive(Debug, Clone, PartialEq)]
pub enum Utterance {
    /// Samples on the PCM16 grid, trimmed to a whole number of hops.
    Audio(Vec<f32>),
    Frames(Vec<Vec<f64>>),
}

/// Loaded utterances grouped by speaker, in first-seen speaker order.
#[derive(Debug, Clone)]
pub struct UtterancePool {
    pub(super) kind: FeatureKind,
    pub(super) speakers: Vec<String>,
    pub(super) utterances: Vec<Vec<Utterance>>,
    pub(super) dim: usize,
    pub(super) mfcc: MfccConfig,
}

fn group<T>(items: impl IntoIterator<Item = (String, T)>) -> (Vec<String>, Vec<Vec<T>>) {
    let mut speakers: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<T>> = Vec::new();
    for (id, item) in items {
        match speakers.iter().position(|s| *s == id) {
            Some(i) => groups[i].push(item),
            None => {
                speakers.push(id);
                groups.push(vec![item]);
            }
        }
    }
    (speakers, groups)
}

impl UtterancePool {
    pub fn load(manifest: &PoolManifest, mfcc: &MfccConfig) -> Result<Self, BenchError> {
        match manifest.feature_kind {
            FeatureKind::Mfcc => {
                let mut items = Vec::with_capacity(manifest.entries.len());
                for e in &manifest.entries {
                    items.push((e.speaker_id.clone(), read_wav(&e.source)?.into_samples()));
                }
                Self::from_audio(items, mfcc)
            }
            FeatureKind::Precomputed => {
                let mut items = Vec::with_capacity(manifest.entries.len());
                for e in &manifest.entries {
                    let frames: Vec<Vec<f64>> = load_embedding_stream(&e.source)?
                        .into_iter()
                        .map(|c: ContextVector| c.values)
                        .collect();
                    if frames.is_empty() {
                        return Err(BenchError::Manifest {
                            path: e.source.clone(),
                            reason: "embedding file has no frames".into(),
                        });
                    }
                    items.push((e.speaker_id.clone(), frames));
                }
                Self::from_frames(items)
            }
        }
    }

    /// Pool of precomputed frame sequences, `(speaker_id, frames)` per utterance.
    pub fn from_frames(
        items: impl IntoIterator<Item = (String, Vec<Vec<f64>>)>,
    ) -> Result<Self, BenchError> {
        let (speakers, utterances) = group(items);
        let dim = utterances
            .first()
            .and_then(|u| u.first())
            .and_then(|f| f.first())
            .map(Vec::len)
            .ok_or_else(|| BenchError::InvalidSpec("empty pool".into()))?;
        let mut out = Vec::with_capacity(utterances.len());
        for group in utterances {
            let mut utts = Vec::with_capacity(group.len());
            for frames in group {
                if frames.is_empty() {
                    return Err(BenchError::InvalidSpec("utterance without frames".into()));
                }
                if let Some(bad) = frames.iter().find(|f| f.len() != dim) {
                    return Err(BenchError::DimensionMismatch {
                        expected: dim,
                        found: bad.len(),
                    });
                }
                utts.push(Utterance::Frames(frames));
            }
            out.push(utts);
        }
        Ok(Self {
            kind: FeatureKind::Precomputed,
            speakers,
            utterances: out,
            dim,
            mfcc: MfccConfig::default(),
        })
    }

    /// Pool of raw audio utterances. Samples are snapped to the PCM16 grid
    /// and trimmed to a whole number of hops.
    pub fn from_audio(
        items: impl IntoIterator<Item = (String, Vec<f32>)>,
        mfcc: &MfccConfig,
    ) -> Result<Self, BenchError> {
        MfccExtractor::new(mfcc)?;
        if mfcc.deltas {
            return Err(BenchError::InvalidSpec(
                "delta features need whole-stream context and are not supported in pools".into(),
            ));
        }
        let hop = mfcc.hop_len();
        let (speakers, groups) = group(items);
        if speakers.is_empty() {
            return Err(BenchError::InvalidSpec("empty pool".into()));
        }
        let mut out = Vec::with_capacity(groups.len());
        for group in groups {
            let mut utts = Vec::with_capacity(group.len());
            for mut samples in group {
                let keep = samples.len() / hop * hop;
                if keep == 0 {
                    return Err(BenchError::InvalidSpec(format!(
                        "utterance shorter than one hop ({} samples)",
                        samples.len()
                    )));
                }
                samples.truncate(keep);
                for s in &mut samples {
                    *s = f32::from(crate::features::wav_quantize(*s)) / 32768.0;
                }
                utts.push(Utterance::Audio(samples));
            }
            out.push(utts);
        }
        Ok(Self {
            kind: FeatureKind::Mfcc,
            speakers,
            utterances: out,
            dim: mfcc.n_coeffs,
            mfcc: mfcc.clone(),
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn speakers(&self) -> &[String] {
        &self.speakers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mfcc_config(&self) -> &MfccConfig {
        &self.mfcc
    }

    pub fn utterances(&self, speaker: usize) -> &[Utterance] {
        &self.utterances[speaker]
    }

    /// Length of an utterance on the 10 ms grid.
    pub(super) fn slots(&self, u: &Utterance) -> usize {
        match u {
            Utterance::Audio(s) => s.len() / self.mfcc.hop_len(),
            Utterance::Frames(f) => f.len(),
        }
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use minivox_core::bench::{FeatureKind, PoolEntry, PoolManifest};
use minivox_core::features::{write_embedding_stream, write_wav};
use minivox_core::ContextVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A crude voiced signal: a random pitch plus one formant-like partial and
/// a little noise.
pub fn voice(seed: u64, len: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(90.0..260.0f32);
    let formant = rng.random_range(500.0..2500.0f32);
    (0..len)
        .map(|n| {
            let t = n as f32 / 16_000.0;
            let noise: f32 = rng.random_range(-0.02..0.02);
            0.3 * (2.0 * std::f32::consts::PI * f0 * t).sin()
                + 0.1 * (2.0 * std::f32::consts::PI * formant * t).sin()
                + noise
        })
        .collect()
}

/// `speakers` × 2 short WAV utterances plus manifest; returns the manifest path.
pub fn wav_pool(dir: &Path, speakers: usize) -> PathBuf {
    let mut entries = Vec::new();
    for s in 0..speakers as u64 {
        for u in 0..2u64 {
            let name = format!("spk{s:02}_{u}.wav");
            write_wav(dir.join(&name), &voice(s * 10 + u, 16_000 + 4_000 * u as usize)).unwrap();
            entries.push(PoolEntry {
                source: name.into(),
                speaker_id: format!("spk{s:02}"),
            });
        }
    }
    let path = dir.join("wav_pool.csv");
    PoolManifest {
        entries,
        feature_kind: FeatureKind::Mfcc,
    }
    .write(&path)
    .unwrap();
    path
}

/// `speakers` × 2 embedding files of noisy frames around a per-speaker center.
pub fn embedding_pool(dir: &Path, speakers: usize, dim: usize) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut entries = Vec::new();
    for s in 0..speakers {
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        for u in 0..2usize {
            let frames: Vec<ContextVector> = (0..300 + 50 * u)
                .map(|t| {
                    let v = center
                        .iter()
                        .map(|c| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            c + 0.5 * z
                        })
                        .collect();
                    ContextVector::new(v, t as u64)
                })
                .collect();
            let name = format!("spk{s:02}_{u}.emb");
            write_embedding_stream(dir.join(&name), dim, &frames).unwrap();
            entries.push(PoolEntry {
                source: name.into(),
                speaker_id: format!("spk{s:02}"),
            });
        }
    }
    let path = dir.join("emb_pool.csv");
    PoolManifest {
        entries,
        feature_kind: FeatureKind::Precomputed,
    }
    .write(&path)
    .unwrap();
    path
}

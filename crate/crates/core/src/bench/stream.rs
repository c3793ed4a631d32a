use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pool::{FeatureKind, Utterance, UtterancePool};
use super::BenchError;
use crate::features::{frame_count, MfccExtractor};

/// Independent random substreams derived from one seed.
const SPEAKER_STREAM: u64 = 1;
const UTTERANCE_STREAM: u64 = 2;
const REVEAL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub n_speakers: usize,
    pub target_frames: usize,
    /// Probability that a frame's feedback is revealed.
    pub reveal_p: f64,
    pub seed: u64,
    /// No-speaker frames appended after every utterance.
    #[serde(default)]
    pub silence_gap_frames: usize,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n_speakers == 0 {
            return Err(BenchError::InvalidSpec("n_speakers must be positive".into()));
        }
        if self.target_frames == 0 {
            return Err(BenchError::InvalidSpec("target_frames must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.reveal_p) {
            return Err(BenchError::InvalidSpec(format!(
                "reveal_p {} outside [0, 1]",
                self.reveal_p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub speaker_id: String,
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub spec: StreamSpec,
    pub feature_kind: FeatureKind,
    pub dim: usize,
    /// Drawn speakers, in draw order. `truth` indexes into this list.
    pub speakers: Vec<String>,
    pub contexts: Vec<Vec<f64>>,
    /// Per frame: index of the speaking speaker, `None` for silence.
    pub truth: Vec<Option<u32>>,
    pub reveal: Vec<bool>,
    pub segments: Vec<Segment>,
    /// Concatenated stream audio (MFCC pools only).
    pub audio: Option<Vec<f32>>,
}

impl GeneratedStream {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn truth_id(&self, frame: usize) -> Option<&str> {
        self.truth[frame].map(|i| self.speakers[i as usize].as_str())
    }
}

struct Block<'a> {
    speaker: usize,
    utterance: &'a Utterance,
    slots: usize,
}

/// Concatenate randomly chosen utterances of `spec.n_speakers` randomly
/// chosen speakers until the next utterance would overrun
/// `spec.target_frames`, then draw the reveal mask.
///
/// Speaker set, utterance sequence and reveal mask come from separate
/// substreams of `spec.seed`, so e.g. the mask does not depend on the
/// speaker count.
pub fn generate_stream(pool: &UtterancePool, spec: &StreamSpec) -> Result<GeneratedStream, BenchError> {
    spec.validate()?;
    let available = pool.speakers.len();
    if spec.n_speakers > available {
        return Err(BenchError::NotEnoughSpeakers {
            requested: spec.n_speakers,
            available,
        });
    }

    let mut speaker_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    speaker_rng.set_stream(SPEAKER_STREAM);
    let mut utt_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    utt_rng.set_stream(UTTERANCE_STREAM);
    let mut reveal_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    reveal_rng.set_stream(REVEAL_STREAM);

    let drawn: Vec<usize> = sample(&mut speaker_rng, available, spec.n_speakers).into_vec();

    let gap = spec.silence_gap_frames;
    let mut blocks: Vec<Block> = Vec::new();
    let mut total = 0usize;
    loop {
        let who = utt_rng.random_range(0..drawn.len());
        let utts = pool.utterances(drawn[who]);
        let utterance = &utts[utt_rng.random_range(0..utts.len())];
        let slots = pool.slots(utterance);
        if total + slots + gap > spec.target_frames {
            if blocks.is_empty() {
                // a single utterance longer than the target is cut to fit
                blocks.push(Block {
                    speaker: who,
                    utterance,
                    slots: spec.target_frames.min(slots),
                });
            }
            break;
        }
        total += slots + gap;
        blocks.push(Block {
            speaker: who,
            utterance,
            slots,
        });
    }

    let mut truth = Vec::new();
    let mut segments = Vec::new();
    for b in &blocks {
        let start = truth.len();
        truth.extend(std::iter::repeat_n(Some(b.speaker as u32), b.slots));
        segments.push(Segment {
            speaker_id: pool.speakers[drawn[b.speaker]].clone(),
            start_frame: start,
            end_frame: truth.len(),
        });
        let room = spec.target_frames - truth.len();
        truth.extend(std::iter::repeat_n(None, gap.min(room)));
    }

    let (contexts, audio) = match pool.kind {
        FeatureKind::Precomputed => {
            let silence = vec![0.0; pool.dim];
            let mut contexts = Vec::with_capacity(truth.len());
            for b in &blocks {
                let Utterance::Frames(frames) = b.utterance else {
                    unreachable!("precomputed pools hold frames")
                };
                contexts.extend(frames[..b.slots].iter().cloned());
                let room = spec.target_frames - contexts.len();
                contexts.extend(std::iter::repeat_n(silence.clone(), gap.min(room)));
            }
            (contexts, None)
        }
        FeatureKind::Mfcc => {
            let hop = pool.mfcc.hop_len();
            let mut audio = Vec::with_capacity(truth.len() * hop);
            for b in &blocks {
                let Utterance::Audio(samples) = b.utterance else {
                    unreachable!("mfcc pools hold audio")
                };
                audio.extend_from_slice(&samples[..b.slots * hop]);
                let room = spec.target_frames * hop - audio.len();
                audio.extend(std::iter::repeat_n(0.0f32, (gap * hop).min(room)));
            }
            let extractor = MfccExtractor::new(&pool.mfcc)?;
            let n = frame_count(audio.len(), extractor.frame_len(), hop);
            truth.truncate(n);
            for s in &mut segments {
                s.end_frame = s.end_frame.min(n);
            }
            segments.retain(|s| s.start_frame < s.end_frame);
            let contexts = extractor
                .extract(&audio)?
                .into_iter()
                .map(|c| c.values)
                .collect();
            (contexts, Some(audio))
        }
    };
    debug_assert_eq!(contexts.len(), truth.len());

    let reveal = (0..truth.len())
        .map(|_| reveal_rng.random_bool(spec.reveal_p))
        .collect();

    Ok(GeneratedStream {
        spec: spec.clone(),
        feature_kind: pool.kind,
        dim: pool.dim,
        speakers: drawn.iter().map(|&i| pool.speakers[i].clone()).collect(),
        contexts,
        truth,
        reveal,
        segments,
        audio,
    })
}

use std::collections::VecDeque;

use minivox_core::engine::{FeedbackOutcome, Registration};
use minivox_core::features::{FeatureError, MfccExtractor};
use minivox_core::{ActionLabel, Correction, EngineConfig, Feedback, MfccConfig, Session};
use serde::{Deserialize, Serialize};

use crate::error::LiveError;

/// Decisions older than this many frames can no longer be corrected.
pub const FEEDBACK_WINDOW: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEvent {
    pub frame_index: u64,
    pub chosen: ActionLabel,
    /// UCB score per arm, aligned with `arm_labels`.
    pub scores: Vec<f64>,
    pub arm_labels: Vec<ActionLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Correct,
    Wrong,
    None,
}

/// Feedback as sent by a client. `correct_label` is required for `wrong`
/// and is either an arm label (`"User 3"`, `"NoSpeaker"`) or `"new_speaker"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub frame_index: u64,
    pub kind: FeedbackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_label: Option<String>,
}

impl FeedbackRequest {
    pub fn to_feedback(&self) -> Result<Feedback, LiveError> {
        match (self.kind, self.correct_label.as_deref()) {
            (FeedbackKind::None, _) => Ok(Feedback::None),
            (FeedbackKind::Correct, None) => Ok(Feedback::CorrectChoice),
            (FeedbackKind::Correct, Some(_)) => Err(LiveError::BadRequest(
                "correct_label is only allowed with kind \"wrong\"".into(),
            )),
            (FeedbackKind::Wrong, None) => Err(LiveError::BadRequest(
                "kind \"wrong\" needs a correct_label".into(),
            )),
            (FeedbackKind::Wrong, Some("new_speaker")) => {
                Ok(Feedback::WrongChoice(Correction::NewSpeaker))
            }
            (FeedbackKind::Wrong, Some(label)) => label
                .parse::<ActionLabel>()
                .map(|l| Feedback::WrongChoice(Correction::Arm(l)))
                .map_err(|e| LiveError::BadRequest(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackAck {
    pub frame_index: u64,
    pub registered: Option<Registration>,
    pub arm_labels: Vec<ActionLabel>,
}

#[derive(Debug)]
struct Resolved {
    frame_index: u64,
    chosen: ActionLabel,
    x: Vec<f64>,
    answered: bool,
}

/// One live diarization session: byte stream in, one decision per 10 ms
/// hop out. Each decision is resolved with `Feedback::None` right away;
/// feedback arriving later is applied as a correction while the frame is
/// still inside the window.
pub struct LiveSession {
    engine: Session,
    extractor: MfccExtractor,
    /// Samples from the start of the next frame onward.
    samples: Vec<f32>,
    /// Low byte of a sample split across chunks.
    odd_byte: Option<u8>,
    next_frame: u64,
    window: VecDeque<Resolved>,
}

impl LiveSession {
    pub fn new(config: EngineConfig, mfcc: &MfccConfig) -> Result<Self, LiveError> {
        if mfcc.deltas {
            return Err(LiveError::InvalidConfig(
                "delta features need future frames and are not available live".into(),
            ));
        }
        let extractor =
            MfccExtractor::new(mfcc).map_err(|e| LiveError::InvalidConfig(e.to_string()))?;
        let engine = Session::new(config, mfcc.dim())
            .map_err(|e| LiveError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            engine,
            extractor,
            samples: Vec::new(),
            odd_byte: None,
            next_frame: 0,
            window: VecDeque::new(),
        })
    }

    pub fn engine(&self) -> &Session {
        &self.engine
    }

    pub fn arm_labels(&self) -> Vec<ActionLabel> {
        self.engine.arm_labels().to_vec()
    }

    pub fn frames_processed(&self) -> u64 {
        self.next_frame
    }

    /// Append little-endian PCM16 bytes. Any byte count is accepted; a
    /// trailing odd byte waits for the next chunk.
    pub fn push_pcm16(&mut self, bytes: &[u8]) -> Result<Vec<PredictionEvent>, LiveError> {
        let mut rest = bytes;
        if let (Some(lo), Some((&hi, tail))) = (self.odd_byte, rest.split_first()) {
            self.samples.push(f32::from(i16::from_le_bytes([lo, hi])) / 32768.0);
            self.odd_byte = None;
            rest = tail;
        }
        let pairs = rest.chunks_exact(2);
        if let [b] = pairs.remainder() {
            self.odd_byte = Some(*b);
        }
        self.samples
            .extend(pairs.map(|p| f32::from(i16::from_le_bytes([p[0], p[1]])) / 32768.0));
        self.drain_frames()
    }

    /// Append already decoded samples in `[-1, 1)`.
    pub fn push_samples(&mut self, samples: &[f32]) -> Result<Vec<PredictionEvent>, LiveError> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(LiveError::MalformedAudio("non-finite sample".into()));
        }
        self.samples.extend_from_slice(samples);
        self.drain_frames()
    }

    fn drain_frames(&mut self) -> Result<Vec<PredictionEvent>, LiveError> {
        let frame_len = self.extractor.frame_len();
        let hop = self.extractor.config().hop_len();
        let mut events = Vec::new();
        let mut start = 0;
        while self.samples.len() - start >= frame_len {
            let x = self
                .extractor
                .compute(&self.samples[start..start + frame_len])
                .map_err(|e: FeatureError| LiveError::MalformedAudio(e.to_string()))?;
            events.push(self.decide(x)?);
            start += hop;
        }
        self.samples.drain(..start);
        Ok(events)
    }

    fn decide(&mut self, x: Vec<f64>) -> Result<PredictionEvent, LiveError> {
        let arm_labels = self.arm_labels();
        let d = self.engine.step(&x)?;
        self.engine.apply_feedback(d.chosen, &x, Feedback::None)?;
        let frame_index = self.next_frame;
        self.next_frame += 1;
        self.window.push_back(Resolved {
            frame_index,
            chosen: d.chosen,
            x,
            answered: false,
        });
        if self.window.len() > FEEDBACK_WINDOW {
            self.window.pop_front();
        }
        Ok(PredictionEvent {
            frame_index,
            chosen: d.chosen,
            scores: d.scores,
            arm_labels,
        })
    }

    /// Apply feedback to a frame still inside the window. Each frame takes
    /// at most one piece of feedback; `kind: none` is acknowledged without
    /// touching the engine.
    pub fn post_feedback(&mut self, req: &FeedbackRequest) -> Result<FeedbackAck, LiveError> {
        let fb = req.to_feedback()?;
        let Some(oldest) = self.window.front().map(|r| r.frame_index) else {
            return Err(LiveError::UnknownFrame(req.frame_index));
        };
        if req.frame_index < oldest {
            return Err(LiveError::StaleFrame {
                frame_index: req.frame_index,
                oldest,
            });
        }
        let slot = (req.frame_index - oldest) as usize;
        let resolved = self
            .window
            .get(slot)
            .ok_or(LiveError::UnknownFrame(req.frame_index))?;
        if resolved.answered {
            return Err(LiveError::DuplicateFeedback(req.frame_index));
        }
        let outcome: FeedbackOutcome = if fb == Feedback::None {
            FeedbackOutcome::default()
        } else {
            self.engine
                .apply_correction(resolved.chosen, &resolved.x, fb)?
        };
        if fb != Feedback::None {
            self.window[slot].answered = true;
        }
        Ok(FeedbackAck {
            frame_index: req.frame_index,
            registered: outcome.registered,
            arm_labels: self.arm_labels(),
        })
    }
}

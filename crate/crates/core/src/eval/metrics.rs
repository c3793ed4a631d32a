use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::bench::Trace;
use crate::engine::ActionLabel;

/// Frame-level diarization error with its decomposition. No collar, no
/// speaker mapping: arm labels are compared directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerReport {
    pub frames: u64,
    pub confusion: u64,
    pub missed: u64,
    pub false_alarm: u64,
}

impl DerReport {
    pub fn errors(&self) -> u64 {
        self.confusion + self.missed + self.false_alarm
    }

    pub fn correct(&self) -> u64 {
        self.frames - self.errors()
    }

    /// Error rate in percent.
    pub fn der(&self) -> f64 {
        100.0 * self.errors() as f64 / self.frames as f64
    }

    pub fn confusion_rate(&self) -> f64 {
        100.0 * self.confusion as f64 / self.frames as f64
    }

    pub fn missed_rate(&self) -> f64 {
        100.0 * self.missed as f64 / self.frames as f64
    }

    pub fn false_alarm_rate(&self) -> f64 {
        100.0 * self.false_alarm as f64 / self.frames as f64
    }
}

/// `New` counts as speech on either side.
pub fn der(hyp: &[ActionLabel], reference: &[ActionLabel]) -> Result<DerReport, EvalError> {
    if hyp.len() != reference.len() {
        return Err(EvalError::LengthMismatch {
            hyp: hyp.len(),
            reference: reference.len(),
        });
    }
    if hyp.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut r = DerReport {
        frames: hyp.len() as u64,
        confusion: 0,
        missed: 0,
        false_alarm: 0,
    };
    for (h, g) in hyp.iter().zip(reference) {
        if h == g {
            continue;
        }
        match (g.is_speech(), h.is_speech()) {
            (true, true) => r.confusion += 1,
            (true, false) => r.missed += 1,
            (false, true) => r.false_alarm += 1,
            (false, false) => unreachable!("only NoSpeaker is non-speech"),
        }
    }
    Ok(r)
}

pub fn trace_der(trace: &Trace) -> Result<DerReport, EvalError> {
    der(&trace.hypothesis(), &trace.reference())
}

/// Prefix sums of the per-frame reward.
pub fn cumulative_reward(trace: &Trace) -> Result<Vec<u64>, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(trace
        .rows
        .iter()
        .scan(0u64, |acc, r| {
            *acc += u64::from(r.reward);
            Some(*acc)
        })
        .collect())
}

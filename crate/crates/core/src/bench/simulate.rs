use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::stream::GeneratedStream;
use super::BenchError;
use crate::engine::{
    ActionLabel, Agent, Correction, EngineConfig, Feedback, FeedbackMode, OracleMode, Registration,
    Session,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub frame: usize,
    pub chosen: ActionLabel,
    /// The arm that would have been correct at this frame.
    pub truth: ActionLabel,
    pub revealed: bool,
    /// 1 iff `chosen == truth`, whether or not the agent saw it.
    pub reward: u8,
    pub registered: Option<Registration>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_reward(&self) -> u64 {
        self.rows.iter().map(|r| u64::from(r.reward)).sum()
    }

    pub fn hypothesis(&self) -> Vec<ActionLabel> {
        self.rows.iter().map(|r| r.chosen).collect()
    }

    pub fn reference(&self) -> Vec<ActionLabel> {
        self.rows.iter().map(|r| r.truth).collect()
    }

    pub fn registrations(&self) -> impl Iterator<Item = &Registration> {
        self.rows.iter().filter_map(|r| r.registered.as_ref())
    }
}

/// Maps stream speakers to arm labels. With an oracle, speakers are bound
/// to `User 1..N` in order of first appearance; without one, a speaker is
/// `New` until the agent registers an arm for it.
struct Labeler {
    oracle: OracleMode,
    bound: HashMap<u32, ActionLabel>,
    next_user: u32,
}

impl Labeler {
    fn new(oracle: OracleMode) -> Self {
        Self {
            oracle,
            bound: HashMap::new(),
            next_user: 1,
        }
    }

    fn label(&mut self, speaker: Option<u32>) -> ActionLabel {
        let Some(s) = speaker else {
            return ActionLabel::NoSpeaker;
        };
        if let Some(l) = self.bound.get(&s) {
            return *l;
        }
        match self.oracle {
            OracleMode::Without => ActionLabel::New,
            OracleMode::With(_) => {
                let l = ActionLabel::User(self.next_user);
                self.next_user += 1;
                self.bound.insert(s, l);
                l
            }
        }
    }

    fn bind(&mut self, speaker: u32, label: ActionLabel) {
        self.bound.insert(speaker, label);
    }
}

/// What a user (or the benchmark) reports for a revealed frame.
fn synthesize(mode: FeedbackMode, chosen: ActionLabel, truth: ActionLabel) -> Feedback {
    if chosen == truth {
        match mode {
            FeedbackMode::BanditBenchmark => Feedback::CorrectChoice,
            FeedbackMode::Interactive if chosen == ActionLabel::New => Feedback::CorrectChoice,
            FeedbackMode::Interactive => Feedback::None,
        }
    } else if truth == ActionLabel::New {
        Feedback::WrongChoice(Correction::NewSpeaker)
    } else {
        Feedback::WrongChoice(Correction::Arm(truth))
    }
}

/// Run a fresh engine session over `stream`.
pub fn simulate(config: EngineConfig, stream: &GeneratedStream) -> Result<Trace, BenchError> {
    let mut session = Session::new(config, stream.dim)?;
    simulate_agent(&mut session, config.mode, config.oracle, stream)
}

/// Drive `agent` over `stream`: one decision per frame, feedback built from
/// the truth only on revealed frames, `Feedback::None` otherwise.
pub fn simulate_agent<A: Agent + ?Sized>(
    agent: &mut A,
    mode: FeedbackMode,
    oracle: OracleMode,
    stream: &GeneratedStream,
) -> Result<Trace, BenchError> {
    if let OracleMode::With(n) = oracle {
        if (n as usize) < stream.speakers.len() {
            return Err(BenchError::InvalidSpec(format!(
                "oracle fixes {n} speakers but the stream has {}",
                stream.speakers.len()
            )));
        }
    }
    let mut labeler = Labeler::new(oracle);
    let mut rows = Vec::with_capacity(stream.len());
    for (t, x) in stream.contexts.iter().enumerate() {
        if x.len() != stream.dim {
            return Err(BenchError::DimensionMismatch {
                expected: stream.dim,
                found: x.len(),
            });
        }
        let truth = labeler.label(stream.truth[t]);
        let chosen = agent.decide(x)?;
        let revealed = stream.reveal[t];
        let fb = if revealed {
            synthesize(mode, chosen, truth)
        } else {
            Feedback::None
        };
        let outcome = agent.feedback(chosen, x, fb)?;
        if let (Some(reg), ActionLabel::New, Some(s)) = (outcome.registered, truth, stream.truth[t]) {
            labeler.bind(s, reg.label);
        }
        rows.push(TraceRow {
            frame: t,
            chosen,
            truth,
            revealed,
            reward: u8::from(chosen == truth),
            registered: outcome.registered,
        });
    }
    Ok(Trace { rows })
}

//! The online diarization agent.
//!
//! Actions are `New` (an unregistered speaker is talking), `NoSpeaker` and one
//! `User n` arm per registered speaker. Without an oracle the agent starts
//! with `{New, NoSpeaker}` and registers users on the fly; with an oracle the
//! arm set is fixed to `{NoSpeaker, User 1..N}`.

mod session;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{BanditError, UcbParams};
use crate::selfsup::SelfSupKind;

pub use session::{ArmSource, Decision, FeedbackOutcome, Registration, Session};
pub use snapshot::{SnapshotError, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ActionLabel {
    New,
    NoSpeaker,
    User(u32),
}

impl ActionLabel {
    pub fn is_user(self) -> bool {
        matches!(self, ActionLabel::User(_))
    }

    /// Everything except `NoSpeaker` denotes speech.
    pub fn is_speech(self) -> bool {
        !matches!(self, ActionLabel::NoSpeaker)
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionLabel::New => f.write_str("New"),
            ActionLabel::NoSpeaker => f.write_str("NoSpeaker"),
            ActionLabel::User(n) => write!(f, "User {n}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown action label {0:?}")]
pub struct ParseLabelError(pub String);

impl FromStr for ActionLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "New" => return Ok(ActionLabel::New),
            "NoSpeaker" => return Ok(ActionLabel::NoSpeaker),
            _ => {}
        }
        t.strip_prefix("User")
            .map(str::trim)
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|&n| n >= 1)
            .map(ActionLabel::User)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

impl From<ActionLabel> for String {
    fn from(l: ActionLabel) -> Self {
        l.to_string()
    }
}

impl TryFrom<String> for ActionLabel {
    type Error = ParseLabelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Target named by a correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// The speaker has no arm yet.
    NewSpeaker,
    Arm(ActionLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Nothing revealed for this step.
    None,
    CorrectChoice,
    WrongChoice(Correction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Human-in-the-loop semantics: correct non-`New` choices stay silent.
    Interactive,
    /// Revealed steps carry the true label and reward `1[chosen == truth]`.
    BanditBenchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Without,
    /// Number of speakers known up front.
    With(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "linucb")]
    LinUcb,
    #[serde(rename = "berlinucb")]
    BerlinUcb,
    #[serde(rename = "b-kmeans")]
    BKmeans,
    #[serde(rename = "b-knn")]
    BKnn,
    #[serde(rename = "b-gmm")]
    BGmm,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::LinUcb,
        AgentKind::BerlinUcb,
        AgentKind::BKmeans,
        AgentKind::BKnn,
        AgentKind::BGmm,
    ];

    pub fn selfsup(self) -> Option<SelfSupKind> {
        match self {
            AgentKind::LinUcb | AgentKind::BerlinUcb => None,
            AgentKind::BKmeans => Some(SelfSupKind::Kmeans),
            AgentKind::BKnn => Some(SelfSupKind::Knn),
            AgentKind::BGmm => Some(SelfSupKind::Gmm),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::LinUcb => "linucb",
            AgentKind::BerlinUcb => "berlinucb",
            AgentKind::BKmeans => "b-kmeans",
            AgentKind::BKnn => "b-knn",
            AgentKind::BGmm => "b-gmm",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        AgentKind::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| format!("unknown agent {s:?} (expected one of linucb, berlinucb, b-kmeans, b-knn, b-gmm)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub mode: FeedbackMode,
    pub oracle: OracleMode,
    pub agent: AgentKind,
    #[serde(default)]
    pub ucb: UcbParams,
}

impl EngineConfig {
    pub fn new(mode: FeedbackMode, oracle: OracleMode, agent: AgentKind) -> Self {
        Self {
            mode,
            oracle,
            agent,
            ucb: UcbParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if let OracleMode::With(0) = self.oracle {
            return Err(EngineError::InvalidConfig(
                "with-oracle mode needs at least one speaker".into(),
            ));
        }
        UcbParams::new(self.ucb.c)
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("a decision is still awaiting feedback")]
    FeedbackPending,
    #[error("no decision is awaiting feedback")]
    NoPendingDecision,
    #[error("feedback does not match the pending decision")]
    PendingMismatch,
    #[error("feedback names unknown arm {0}")]
    UnknownArm(ActionLabel),
    #[error("correction names the chosen arm {0}")]
    CorrectionIsChoice(ActionLabel),
    #[error("arms cannot be registered when the speaker count is fixed by an oracle")]
    RegistrationWithOracle,
}

/// Anything that can be driven by the simulation loop: it sees only the
/// context and the feedback, never the ground truth.
pub trait Agent {
    fn decide(&mut self, x: &[f64]) -> Result<ActionLabel, EngineError>;

    fn feedback(
        &mut self,
        chosen: ActionLabel,
        x: &[f64],
        fb: Feedback,
    ) -> Result<FeedbackOutcome, EngineError>;
}

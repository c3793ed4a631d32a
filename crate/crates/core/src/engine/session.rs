use serde::{Deserialize, Serialize};

use super::{
    ActionLabel, Agent, Correction, EngineConfig, EngineError, Feedback, FeedbackMode, OracleMode,
};
use crate::bandit::{argmax, ArmState, Reward};
use crate::selfsup::SelfSupModel;

/// How a newly registered arm was initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmSource {
    Fresh,
    /// Statistics copied from the arm that was mistakenly chosen.
    Transfer(ActionLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub label: ActionLabel,
    pub source: ArmSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackOutcome {
    pub registered: Option<Registration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Zero-based decision counter.
    pub step: u64,
    pub chosen: ActionLabel,
    pub chosen_index: usize,
    /// UCB score of every arm, in registry order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(super) struct Pending {
    pub(super) step: u64,
    pub(super) chosen: ActionLabel,
    pub(super) x: Vec<f64>,
}

/// One diarization session: arm registry, optional pseudo-labeler and the
/// strictly alternating step / feedback protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub(super) config: EngineConfig,
    pub(super) dim: usize,
    /// Registry order: `New`, `NoSpeaker`, `User 1..N` (no `New` with an oracle).
    pub(super) labels: Vec<ActionLabel>,
    pub(super) arms: Vec<ArmState>,
    pub(super) selfsup: Option<SelfSupModel<ActionLabel>>,
    pub(super) n_users: u32,
    pub(super) steps: u64,
    pub(super) pending: Option<Pending>,
}

impl Session {
    pub fn new(config: EngineConfig, dim: usize) -> Result<Self, EngineError> {
        config.validate()?;
        if dim == 0 {
            return Err(EngineError::InvalidConfig("context dimension must be positive".into()));
        }
        let (labels, n_users) = match config.oracle {
            OracleMode::Without => (vec![ActionLabel::New, ActionLabel::NoSpeaker], 0),
            OracleMode::With(n) => {
                let mut labels = vec![ActionLabel::NoSpeaker];
                labels.extend((1..=n).map(ActionLabel::User));
                (labels, n)
            }
        };
        Ok(Self {
            arms: labels.iter().map(|_| ArmState::new(dim)).collect(),
            labels,
            selfsup: config.agent.selfsup().map(SelfSupModel::new),
            config,
            dim,
            n_users,
            steps: 0,
            pending: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arm_labels(&self) -> &[ActionLabel] {
        &self.labels
    }

    pub fn arm(&self, label: ActionLabel) -> Option<&ArmState> {
        self.index_of(label).map(|i| &self.arms[i])
    }

    pub fn arms(&self) -> impl Iterator<Item = (ActionLabel, &ArmState)> {
        self.labels.iter().copied().zip(&self.arms)
    }

    pub fn n_users(&self) -> u32 {
        self.n_users
    }

    /// Decisions taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn selfsup(&self) -> Option<&SelfSupModel<ActionLabel>> {
        self.selfsup.as_ref()
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    fn index_of(&self, label: ActionLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), EngineError> {
        if x.len() != self.dim {
            return Err(crate::bandit::BanditError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            }
            .into());
        }
        Ok(())
    }

    /// Score every arm and pick the best (lowest registry index on ties).
    /// The decision stays pending until [`Session::apply_feedback`].
    pub fn step(&mut self, x: &[f64]) -> Result<Decision, EngineError> {
        if self.pending.is_some() {
            return Err(EngineError::FeedbackPending);
        }
        self.check_dim(x)?;
        let scores = crate::bandit::ucb_scores(&self.arms, x, self.config.ucb)?;
        let chosen_index = argmax(&scores).expect("a session always has arms");
        let decision = Decision {
            step: self.steps,
            chosen: self.labels[chosen_index],
            chosen_index,
            scores,
        };
        self.pending = Some(Pending {
            step: self.steps,
            chosen: decision.chosen,
            x: x.to_vec(),
        });
        self.steps += 1;
        Ok(decision)
    }

    /// Resolve the pending decision with `fb`.
    pub fn apply_feedback(
        &mut self,
        chosen: ActionLabel,
        x: &[f64],
        fb: Feedback,
    ) -> Result<FeedbackOutcome, EngineError> {
        let pending = self.pending.as_ref().ok_or(EngineError::NoPendingDecision)?;
        if pending.chosen != chosen || pending.x.as_slice() != x {
            return Err(EngineError::PendingMismatch);
        }
        let outcome = self.route(chosen, x, fb)?;
        self.pending = None;
        Ok(outcome)
    }

    /// Apply feedback to an earlier, already resolved decision (late human
    /// correction). `Feedback::None` is a no-op here because the unrevealed
    /// branch already ran when the decision was resolved.
    pub fn apply_correction(
        &mut self,
        chosen: ActionLabel,
        x: &[f64],
        fb: Feedback,
    ) -> Result<FeedbackOutcome, EngineError> {
        if self.pending.is_some() {
            return Err(EngineError::FeedbackPending);
        }
        if fb == Feedback::None {
            return Ok(FeedbackOutcome::default());
        }
        self.route(chosen, x, fb)
    }

    /// Add `User N+1`, either fresh (`A = I`, `b = 0`) or as a copy of an
    /// existing arm.
    pub fn register_new_arm(&mut self, source: ArmSource) -> Result<Registration, EngineError> {
        if let OracleMode::With(_) = self.config.oracle {
            return Err(EngineError::RegistrationWithOracle);
        }
        let state = match source {
            ArmSource::Fresh => ArmState::new(self.dim),
            ArmSource::Transfer(from) => {
                let i = self.index_of(from).ok_or(EngineError::UnknownArm(from))?;
                self.arms[i].clone()
            }
        };
        self.n_users += 1;
        let label = ActionLabel::User(self.n_users);
        self.labels.push(label);
        self.arms.push(state);
        Ok(Registration { label, source })
    }

    fn arm_mut(&mut self, label: ActionLabel) -> &mut ArmState {
        let i = self.index_of(label).expect("validated arm");
        &mut self.arms[i]
    }

    fn observe(&mut self, x: &[f64], label: ActionLabel) {
        if let Some(model) = &mut self.selfsup {
            model.observe_labeled(x, &label);
        }
    }

    fn validate_feedback(&self, chosen: ActionLabel, fb: Feedback) -> Result<Feedback, EngineError> {
        if self.index_of(chosen).is_none() {
            return Err(EngineError::UnknownArm(chosen));
        }
        let fb = match fb {
            Feedback::WrongChoice(Correction::Arm(ActionLabel::New)) => {
                Feedback::WrongChoice(Correction::NewSpeaker)
            }
            other => other,
        };
        match fb {
            Feedback::WrongChoice(Correction::Arm(c)) => {
                if self.index_of(c).is_none() {
                    return Err(EngineError::UnknownArm(c));
                }
                if c == chosen {
                    return Err(EngineError::CorrectionIsChoice(c));
                }
            }
            Feedback::WrongChoice(Correction::NewSpeaker) => {
                if chosen == ActionLabel::New {
                    return Err(EngineError::CorrectionIsChoice(chosen));
                }
                if let OracleMode::With(_) = self.config.oracle {
                    return Err(EngineError::RegistrationWithOracle);
                }
            }
            Feedback::None | Feedback::CorrectChoice => {}
        }
        Ok(fb)
    }

    fn route(
        &mut self,
        chosen: ActionLabel,
        x: &[f64],
        fb: Feedback,
    ) -> Result<FeedbackOutcome, EngineError> {
        self.check_dim(x)?;
        let fb = self.validate_feedback(chosen, fb)?;
        let mut outcome = FeedbackOutcome::default();
        match fb {
            Feedback::CorrectChoice if chosen == ActionLabel::New => {
                self.arm_mut(chosen).update_rewarded(x, Reward::ONE)?;
                let reg = self.register_new_arm(ArmSource::Fresh)?;
                self.observe(x, reg.label);
                outcome.registered = Some(reg);
            }
            Feedback::CorrectChoice if self.config.mode == FeedbackMode::BanditBenchmark => {
                self.arm_mut(chosen).update_rewarded(x, Reward::ONE)?;
                self.observe(x, chosen);
            }
            // A correct non-New choice is acknowledged by silence.
            Feedback::CorrectChoice | Feedback::None => self.unrevealed(chosen, x)?,
            Feedback::WrongChoice(correction) => {
                self.arm_mut(chosen).update_rewarded(x, Reward::ZERO)?;
                match correction {
                    Correction::NewSpeaker => {
                        let source = if chosen.is_user() {
                            ArmSource::Transfer(chosen)
                        } else {
                            ArmSource::Fresh
                        };
                        let reg = self.register_new_arm(source)?;
                        self.observe(x, reg.label);
                        outcome.registered = Some(reg);
                    }
                    Correction::Arm(correct) => self.observe(x, correct),
                }
            }
        }
        Ok(outcome)
    }

    fn unrevealed(&mut self, chosen: ActionLabel, x: &[f64]) -> Result<(), EngineError> {
        use super::AgentKind::*;
        match self.config.agent {
            LinUcb => {}
            BerlinUcb => self.arm_mut(chosen).update_unlabeled(x)?,
            BKmeans | BKnn | BGmm => {
                let predicted = self.selfsup.as_ref().and_then(|m| m.predict(x));
                let agrees = predicted == Some(chosen);
                self.arm_mut(chosen).update_selfsup(x, agrees)?;
            }
        }
        Ok(())
    }
}

impl Agent for Session {
    fn decide(&mut self, x: &[f64]) -> Result<ActionLabel, EngineError> {
        self.step(x).map(|d| d.chosen)
    }

    fn feedback(
        &mut self,
        chosen: ActionLabel,
        x: &[f64],
        fb: Feedback,
    ) -> Result<FeedbackOutcome, EngineError> {
        self.apply_feedback(chosen, x, fb)
    }
}

//! Fully online speaker diarization.
//!
//! The crate is organised bottom-up:
//!
//! - [`features`]: 10 ms MFCC frontend and precomputed-embedding ingestion.
//! - [`bandit`]: per-arm ridge statistics, UCB scoring and the three update rules.
//! - [`selfsup`]: label-anchored online clusterers used as pseudo-labelers.
//! - [`engine`]: the diarization agent (New / NoSpeaker / User arms, feedback routing,
//!   arm growth with parameter transfer, snapshots).
//! - [`bench`]: the MiniVox stream generator and the episodic-feedback simulation loop.
//! - [`eval`]: DER, cumulative reward and the experiment grid runner.

pub mod bandit;
pub mod bench;
pub mod engine;
pub mod eval;
pub mod features;
mod linalg;
pub mod selfsup;

pub use bandit::{ArmState, BanditError, Reward, UcbParams};
pub use engine::{ActionLabel, Agent, Correction, EngineConfig, Feedback, OracleMode, Session};
pub use features::{ContextVector, MfccConfig};

//! Versioned JSON session snapshots.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so `restore(snapshot(s)) == s` bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ActionLabel, OracleMode, Session};

pub const SNAPSHOT_FORMAT: &str = "minivox-session";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a session snapshot (format {0:?})")]
    WrongFormat(String),
    #[error("snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'static str,
    version: u32,
    session: &'a Session,
}

#[derive(Deserialize)]
struct OwnedEnvelope {
    session: Session,
}

impl Session {
    pub fn snapshot(&self) -> Vec<u8> {
        serde_json::to_vec(&Envelope {
            format: SNAPSHOT_FORMAT,
            version: SNAPSHOT_VERSION,
            session: self,
        })
        .expect("session state is always serializable")
    }

    pub fn restore(bytes: &[u8]) -> Result<Session, SnapshotError> {
        let header: Header =
            serde_json::from_slice(bytes).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(SnapshotError::WrongFormat(header.format));
        }
        if header.version != SNAPSHOT_VERSION {
            return Err(SnapshotError::VersionMismatch {
                found: header.version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let env: OwnedEnvelope =
            serde_json::from_slice(bytes).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        let session = env.session;
        session.check_consistency().map_err(SnapshotError::Corrupt)?;
        Ok(session)
    }

    fn check_consistency(&self) -> Result<(), String> {
        self.config.validate().map_err(|e| e.to_string())?;
        if self.labels.len() != self.arms.len() {
            return Err("arm and label counts differ".into());
        }
        if self.arms.iter().any(|a| a.dim() != self.dim || !a.is_well_formed()) {
            return Err("malformed arm statistics".into());
        }
        let users: Vec<ActionLabel> = (1..=self.n_users).map(ActionLabel::User).collect();
        let expected_prefix: &[ActionLabel] = match self.config.oracle {
            OracleMode::Without => &[ActionLabel::New, ActionLabel::NoSpeaker],
            OracleMode::With(_) => &[ActionLabel::NoSpeaker],
        };
        if self.labels.len() != expected_prefix.len() + users.len()
            || &self.labels[..expected_prefix.len()] != expected_prefix
            || self.labels[expected_prefix.len()..] != users[..]
        {
            return Err("arm registry violates label invariants".into());
        }
        if let OracleMode::With(n) = self.config.oracle {
            if n != self.n_users {
                return Err("oracle arm count differs from registry".into());
            }
        }
        if self.config.agent.selfsup() != self.selfsup.as_ref().map(|m| m.kind()) {
            return Err("pseudo-labeler does not match agent".into());
        }
        if let Some(m) = &self.selfsup {
            if !m.is_well_formed() || m.labels_seen().iter().any(|l| !self.labels.contains(l)) {
                return Err("malformed pseudo-labeler state".into());
            }
        }
        if let Some(p) = &self.pending {
            if p.x.len() != self.dim || !self.labels.contains(&p.chosen) || p.step >= self.steps {
                return Err("malformed pending decision".into());
            }
        }
        Ok(())
    }
}

//! Live interactive diarization over HTTP and WebSocket.
//!
//! ```text
//! POST   /sessions                 engine config JSON -> session handle
//! GET    /sessions/{id}            handle with the current arm list
//! DELETE /sessions/{id}
//! POST   /sessions/{id}/audio      PCM16LE (application/octet-stream) or audio/wav -> events
//! POST   /sessions/{id}/feedback   {frame_index, kind, correct_label?} -> ack
//! GET    /sessions/{id}/snapshot   engine snapshot
//! GET    /sessions/{id}/stream     WebSocket: binary audio in, JSON events out
//! ```

pub mod api;
pub mod error;
pub mod live;

pub use api::{router, router_with_state, AppState, CreateSession, SessionHandle, StreamMessage};
pub use error::LiveError;
pub use live::{FeedbackAck, FeedbackKind, FeedbackRequest, LiveSession, PredictionEvent, FEEDBACK_WINDOW};

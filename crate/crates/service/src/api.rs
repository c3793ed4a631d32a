use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use minivox_core::features::decode_wav_bytes;
use minivox_core::{ActionLabel, EngineConfig, MfccConfig};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::LiveError;
use crate::live::{FeedbackAck, FeedbackRequest, LiveSession, PredictionEvent};

/// Body of `POST /sessions`: an engine config plus optional MFCC settings.
#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    #[serde(flatten)]
    pub config: EngineConfig,
    #[serde(default)]
    pub mfcc: Option<MfccConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub id: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub config: EngineConfig,
    pub arm_labels: Vec<ActionLabel>,
}

/// Messages the server sends on the stream endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamMessage {
    Prediction(PredictionEvent),
    FeedbackAck(FeedbackAck),
    Error { error: String, message: String },
}

struct Entry {
    handle: SessionHandle,
    /// Tokio's mutex is fair, so concurrent requests on one session are
    /// served in arrival order.
    live: Mutex<LiveSession>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Entry>>>>,
}

impl AppState {
    fn get(&self, id: &str) -> Result<Arc<Entry>, LiveError> {
        self.sessions
            .read()
            .expect("session map lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| LiveError::UnknownSession(id.to_string()))
    }
}

pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/audio", post(push_audio))
        .route("/sessions/{id}/feedback", post(post_feedback))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionHandle>), LiveError> {
    let req: CreateSession =
        serde_json::from_slice(&body).map_err(|e| LiveError::InvalidConfig(e.to_string()))?;
    let mfcc = req.mfcc.unwrap_or_default();
    let live = LiveSession::new(req.config, &mfcc)?;
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64);
    let handle = SessionHandle {
        id: uuid::Uuid::new_v4().to_string(),
        created_at,
        config: req.config,
        arm_labels: live.arm_labels(),
    };
    state.sessions.write().expect("session map lock poisoned").insert(
        handle.id.clone(),
        Arc::new(Entry {
            handle: handle.clone(),
            live: Mutex::new(live),
        }),
    );
    Ok((StatusCode::CREATED, Json(handle)))
}

async fn session_info(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionHandle>, LiveError> {
    let entry = state.get(&id)?;
    let live = entry.live.lock().await;
    Ok(Json(SessionHandle {
        arm_labels: live.arm_labels(),
        ..entry.handle.clone()
    }))
}

async fn delete_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, LiveError> {
    state
        .sessions
        .write()
        .expect("session map lock poisoned")
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or(LiveError::UnknownSession(id))
}

async fn push_audio(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Vec<PredictionEvent>>, LiveError> {
    let entry = state.get(&id)?;
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/octet-stream");
    let mime = content_type.split(';').next().unwrap_or_default().trim();
    let mut live = entry.live.lock().await;
    let events = match mime {
        "application/octet-stream" => live.push_pcm16(&body)?,
        "audio/wav" | "audio/x-wav" | "audio/wave" => {
            let audio =
                decode_wav_bytes(&body).map_err(|e| LiveError::MalformedAudio(e.to_string()))?;
            live.push_samples(audio.samples())?
        }
        other => return Err(LiveError::UnsupportedMediaType(other.to_string())),
    };
    Ok(Json(events))
}

async fn post_feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FeedbackAck>, LiveError> {
    let entry = state.get(&id)?;
    let req: FeedbackRequest =
        serde_json::from_slice(&body).map_err(|e| LiveError::BadRequest(e.to_string()))?;
    let mut live = entry.live.lock().await;
    Ok(Json(live.post_feedback(&req)?))
}

async fn snapshot(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, LiveError> {
    let entry = state.get(&id)?;
    let bytes = entry.live.lock().await.engine().snapshot();
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, LiveError> {
    let entry = state.get(&id)?;
    Ok(ws.on_upgrade(move |socket| serve_stream(socket, entry)))
}

fn error_message(e: &LiveError) -> StreamMessage {
    StreamMessage::Error {
        error: e.code().to_string(),
        message: e.to_string(),
    }
}

async fn send(socket: &mut WebSocket, msg: &StreamMessage) -> bool {
    let text = serde_json::to_string(msg).expect("stream messages are serializable");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// Binary messages are PCM16 audio, text messages are feedback requests.
async fn serve_stream(mut socket: WebSocket, entry: Arc<Entry>) {
    while let Some(Ok(msg)) = socket.recv().await {
        let replies: Vec<StreamMessage> = match msg {
            Message::Binary(bytes) => match entry.live.lock().await.push_pcm16(&bytes) {
                Ok(events) => events.into_iter().map(StreamMessage::Prediction).collect(),
                Err(e) => vec![error_message(&e)],
            },
            Message::Text(text) => {
                let result = serde_json::from_str::<FeedbackRequest>(&text)
                    .map_err(|e| LiveError::BadRequest(e.to_string()));
                let result = match result {
                    Ok(req) => entry.live.lock().await.post_feedback(&req),
                    Err(e) => Err(e),
                };
                vec![match result {
                    Ok(ack) => StreamMessage::FeedbackAck(ack),
                    Err(e) => error_message(&e),
                }]
            }
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        for r in &replies {
            if !send(&mut socket, r).await {
                return;
            }
        }
    }
}

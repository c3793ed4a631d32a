use minivox_core::bench::{generate_stream, simulate_agent, StreamSpec, UtterancePool};
use minivox_core::engine::{AgentKind, FeedbackMode};
use minivox_core::{EngineConfig, MfccConfig, OracleMode, Session};
use minivox_live::{FeedbackKind, FeedbackRequest, LiveSession};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn voice(seed: u64, len: usize) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(90.0..260.0f32);
    let formant = rng.random_range(500.0..2500.0f32);
    (0..len)
        .map(|n| {
            let t = n as f32 / 16_000.0;
            let noise: f32 = rng.random_range(-0.02..0.02);
            0.3 * (2.0 * std::f32::consts::PI * f0 * t).sin()
                + 0.1 * (2.0 * std::f32::consts::PI * formant * t).sin()
                + noise
        })
        .collect()
}

fn pool() -> UtterancePool {
    let items = (0..4u64).flat_map(|s| (0..2u64).map(move |u| (format!("spk{s}"), voice(s * 10 + u, 8000 + 1600 * u as usize))));
    UtterancePool::from_audio(items, &MfccConfig::default()).unwrap()
}

fn to_pcm(samples: &[f32]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|s| ((s * 32768.0).round() as i16).to_le_bytes())
        .collect()
}

/// With no feedback, the live session makes the same decisions as the
/// benchmark loop on the same stream with nothing revealed, and ends in the
/// same engine state.
#[test]
fn silent_session_replays_simulation() {
    let stream = generate_stream(
        &pool(),
        &StreamSpec {
            n_speakers: 3,
            target_frames: 1500,
            reveal_p: 0.0,
            seed: 21,
            silence_gap_frames: 5,
        },
    )
    .unwrap();
    let bytes = to_pcm(stream.audio.as_ref().unwrap());
    for agent in AgentKind::ALL {
        for oracle in [OracleMode::Without, OracleMode::With(3)] {
            let cfg = EngineConfig::new(FeedbackMode::Interactive, oracle, agent);
            let mut engine = Session::new(cfg, stream.dim).unwrap();
            let trace = simulate_agent(&mut engine, cfg.mode, cfg.oracle, &stream).unwrap();

            let mut live = LiveSession::new(cfg, &MfccConfig::default()).unwrap();
            let mut events = Vec::new();
            for chunk in bytes.chunks(1234) {
                events.extend(live.push_pcm16(chunk).unwrap());
            }
            assert_eq!(events.len(), trace.len());
            for (e, r) in events.iter().zip(&trace.rows) {
                assert_eq!(e.chosen, r.chosen, "{agent} frame {}", r.frame);
            }
            assert_eq!(live.engine(), &engine);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_chunking_gives_the_same_events(cuts in prop::collection::vec(0usize..6000, 0..12)) {
        let bytes = to_pcm(&voice(3, 3000));
        let cfg = EngineConfig::new(FeedbackMode::Interactive, OracleMode::Without, AgentKind::BKmeans);
        let run = |bounds: &[usize]| {
            let mut live = LiveSession::new(cfg, &MfccConfig::default()).unwrap();
            let mut events = Vec::new();
            let mut prev = 0;
            for &b in bounds.iter().chain(std::iter::once(&bytes.len())) {
                events.extend(live.push_pcm16(&bytes[prev..b]).unwrap());
                prev = b;
            }
            (events, live.engine().clone())
        };
        let mut bounds = cuts;
        bounds.sort_unstable();
        let (split_events, split_engine) = run(&bounds);
        let (whole_events, whole_engine) = run(&[]);
        prop_assert_eq!(split_events.len(), (3000 - 400) / 160 + 1);
        prop_assert_eq!(split_events, whole_events);
        prop_assert_eq!(split_engine, whole_engine);
    }
}

#[test]
fn late_feedback_changes_later_decisions_only() {
    let bytes = to_pcm(&voice(5, 400 + 160 * 40));
    let cfg = EngineConfig::new(FeedbackMode::Interactive, OracleMode::Without, AgentKind::LinUcb);
    let mut live = LiveSession::new(cfg, &MfccConfig::default()).unwrap();
    let first = live.push_pcm16(&bytes[..(400 + 160 * 20) * 2]).unwrap();
    let ack = live
        .post_feedback(&FeedbackRequest {
            frame_index: 10,
            kind: FeedbackKind::Correct,
            correct_label: None,
        })
        .unwrap();
    assert!(ack.registered.is_some());
    let rest = live.push_pcm16(&bytes[(400 + 160 * 20) * 2..]).unwrap();
    assert_eq!(first.len() + rest.len(), 41);
    assert!(rest.iter().all(|e| e.arm_labels.len() == 3));
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use minivox_core::bench::{
    generate_stream, simulate, FeatureKind, GeneratedStream, Segment, StreamSpec, UtterancePool,
};
use minivox_core::engine::{AgentKind, ArmSource, FeedbackMode};
use minivox_core::eval::{cumulative_reward, der, trace_der};
use minivox_core::features::MfccExtractor;
use minivox_core::{ActionLabel, ArmState, EngineConfig, MfccConfig, OracleMode, Reward, Session};
use minivox_live::LiveSession;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn linear_algebra() -> Outcome {
    const D: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<Vec<f64>> = (0..10_000).map(|_| unit_vector(&mut rng, D)).collect();
    let rewards: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();

    let started = Instant::now();
    let mut arm = ArmState::new(D);
    for (x, r) in xs.iter().zip(&rewards) {
        let r = if *r { Reward::ONE } else { Reward::ZERO };
        arm.update_rewarded(x, r).unwrap();
    }
    let spd = arm.is_positive_definite();
    let elapsed = started.elapsed();

    let dense = DMatrix::from_row_slice(D, D, arm.a()).try_inverse().unwrap();
    let kept = DMatrix::from_row_slice(D, D, arm.a_inv());
    let frob = (kept - dense).norm();
    outcome(
        frob <= 1e-8 && spd && elapsed < Duration::from_secs(5),
        format!("frobenius {frob:.2e} (tol 1e-8), cholesky {spd}, {} (limit 5s)", secs(elapsed)),
    )
}

fn branch_isolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0usize;
    let mut violations = 0usize;
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let mut arm = ArmState::new(d);
        for _ in 0..rng.random_range(1..40) {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            match rng.random_range(0..3) {
                0 => {
                    let r = Reward::new(rng.random_range(0.0..=1.0)).unwrap();
                    arm.update_rewarded(&x, r).unwrap();
                }
                1 => {
                    let (a, a_inv) = (arm.a().to_vec(), arm.a_inv().to_vec());
                    arm.update_selfsup(&x, rng.random_bool(0.5)).unwrap();
                    checked += 1;
                    if bits(&a) != bits(arm.a()) || bits(&a_inv) != bits(arm.a_inv()) {
                        violations += 1;
                    }
                }
                _ => {
                    let b = arm.b().to_vec();
                    arm.update_unlabeled(&x).unwrap();
                    checked += 1;
                    if bits(&b) != bits(arm.b()) {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("1000 sequences, {checked} isolated updates, {violations} violations"),
    )
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Five speakers at scaled basis directions of R^8 (pairwise 5σ apart,
/// σ = 1), one speaker drawn uniformly per frame.
fn gaussian_stream(seed: u64, steps: usize, reveal_p: f64, n_speakers: usize) -> GeneratedStream {
    const D: usize = 8;
    let scale = 5.0 / 2f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contexts = Vec::with_capacity(steps);
    let mut truth = Vec::with_capacity(steps);
    let mut reveal = Vec::with_capacity(steps);
    for _ in 0..steps {
        let k = rng.random_range(0..n_speakers);
        let x: Vec<f64> = (0..D)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if i == k {
                    scale + z
                } else {
                    z
                }
            })
            .collect();
        contexts.push(x);
        truth.push(Some(k as u32));
        reveal.push(rng.random_bool(reveal_p));
    }
    let speakers: Vec<String> = (0..n_speakers).map(|k| format!("g{k}")).collect();
    let mut segments: Vec<Segment> = Vec::new();
    for (t, s) in truth.iter().enumerate() {
        let id = &speakers[s.unwrap() as usize];
        match segments.last_mut() {
            Some(seg) if &seg.speaker_id == id => seg.end_frame = t + 1,
            _ => segments.push(Segment {
                speaker_id: id.clone(),
                start_frame: t,
                end_frame: t + 1,
            }),
        }
    }
    GeneratedStream {
        spec: StreamSpec {
            n_speakers,
            target_frames: steps,
            reveal_p,
            seed,
            silence_gap_frames: 0,
        },
        feature_kind: FeatureKind::Precomputed,
        dim: D,
        speakers,
        contexts,
        truth,
        reveal,
        segments,
        audio: None,
    }
}

fn final_reward(agent: AgentKind, oracle: OracleMode, stream: &GeneratedStream) -> f64 {
    let cfg = EngineConfig::new(FeedbackMode::BanditBenchmark, oracle, agent);
    simulate(cfg, stream).unwrap().total_reward() as f64
}

fn synthetic_sanity() -> Outcome {
    let started = Instant::now();
    let accs: Vec<f64> = (0..10)
        .map(|seed| {
            let stream = gaussian_stream(100 + seed, 5000, 1.0, 5);
            let cfg = EngineConfig::new(FeedbackMode::BanditBenchmark, OracleMode::With(5), AgentKind::LinUcb);
            let trace = simulate(cfg, &stream).unwrap();
            let tail = &trace.rows[4000..];
            tail.iter().map(|r| f64::from(r.reward)).sum::<f64>() / tail.len() as f64
        })
        .collect();
    let elapsed = started.elapsed();
    let m = median(accs);
    outcome(
        m >= 0.95 && elapsed < Duration::from_secs(10),
        format!("median accuracy {:.2}% over last 1000 steps (min 95%), {} (limit 10s)", 100.0 * m, secs(elapsed)),
    )
}

fn sparse_feedback_benefit() -> Outcome {
    let started = Instant::now();
    let ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let stream = gaussian_stream(200 + seed, 20_000, 0.01, 5);
            let lin = final_reward(AgentKind::LinUcb, OracleMode::With(5), &stream);
            let kmeans = final_reward(AgentKind::BKmeans, OracleMode::With(5), &stream);
            kmeans / lin.max(1.0)
        })
        .collect();
    let elapsed = started.elapsed();
    let m = median(ratios);
    outcome(
        m >= 1.10 && elapsed < Duration::from_secs(120),
        format!("median B-Kmeans/LinUCB final reward {m:.3} (min 1.10), {} (limit 120s)", secs(elapsed)),
    )
}

fn episodic_update_benefit() -> Outcome {
    let diffs: Vec<f64> = (0..20)
        .map(|seed| {
            let stream = gaussian_stream(300 + seed, 20_000, 0.1, 5);
            final_reward(AgentKind::BerlinUcb, OracleMode::Without, &stream)
                - final_reward(AgentKind::LinUcb, OracleMode::Without, &stream)
        })
        .collect();
    let m = median(diffs);
    outcome(
        m >= 0.0,
        format!("median BerlinUCB - LinUCB final reward {m:+.1} (min 0)"),
    )
}

fn cold_start_growth() -> Outcome {
    let stream = gaussian_stream(400, 5000, 0.5, 5);
    let mut bad = Vec::new();
    let mut transfers_total = 0;
    for agent in AgentKind::ALL {
        let cfg = EngineConfig::new(FeedbackMode::BanditBenchmark, OracleMode::Without, agent);
        let trace = simulate(cfg, &stream).unwrap();
        let regs: Vec<_> = trace.registrations().collect();
        let users = regs.iter().filter(|r| r.label.is_user()).count();
        let transfers = regs
            .iter()
            .filter(|r| matches!(r.source, ArmSource::Transfer(_)))
            .count();
        transfers_total += transfers;
        if users != 5 || transfers == 0 {
            bad.push(format!("{agent}: {users} users, {transfers} transfers"));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("every agent registered exactly 5 users; {transfers_total} transfers in total")
        } else {
            bad.join("; ")
        },
    )
}

fn metric_identities() -> Outcome {
    let mut traces = 0;
    let mut broken = 0;
    for (i, p) in [0.0, 0.01, 0.1, 0.5, 1.0].into_iter().enumerate() {
        let stream = gaussian_stream(500 + i as u64, 3000, p, 5);
        for agent in AgentKind::ALL {
            for oracle in [OracleMode::With(5), OracleMode::Without] {
                for mode in [FeedbackMode::BanditBenchmark, FeedbackMode::Interactive] {
                    let trace = simulate(EngineConfig::new(mode, oracle, agent), &stream).unwrap();
                    let d = trace_der(&trace).unwrap();
                    let cum = cumulative_reward(&trace).unwrap();
                    let t = trace.len() as f64;
                    traces += 1;
                    if d.der() + 100.0 * *cum.last().unwrap() as f64 / t != 100.0 {
                        broken += 1;
                    }
                }
            }
        }
    }

    let labels = [
        ActionLabel::New,
        ActionLabel::NoSpeaker,
        ActionLabel::User(1),
        ActionLabel::User(2),
        ActionLabel::User(3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..400);
        let hyp: Vec<_> = (0..n).map(|_| labels[rng.random_range(0..5)]).collect();
        let reference: Vec<_> = (0..n).map(|_| labels[rng.random_range(0..5)]).collect();
        let (mut conf, mut miss, mut fa) = (0u64, 0u64, 0u64);
        for (h, r) in hyp.iter().zip(&reference) {
            let speech = |l: &ActionLabel| *l != ActionLabel::NoSpeaker;
            match (speech(r), speech(h)) {
                (true, false) => miss += 1,
                (false, true) => fa += 1,
                (true, true) if h != r => conf += 1,
                _ => {}
            }
        }
        let rep = der(&hyp, &reference).unwrap();
        let recount = 100.0 * (conf + miss + fa) as f64 / n as f64;
        if rep.confusion != conf || rep.missed != miss || rep.false_alarm != fa || rep.der() != recount {
            mismatches += 1;
        }
    }
    outcome(
        broken == 0 && mismatches == 0,
        format!("identity exact on {}/{traces} traces, recount agrees on {}/1000 pairs", traces - broken, 1000 - mismatches),
    )
}

fn reference_mfcc(frame: &[f32], cfg: &MfccConfig) -> Vec<f64> {
    let n = frame.len();
    let n_fft = n.next_power_of_two();
    let sr = 16_000.0;
    let mut y = vec![0.0; n_fft];
    for i in 0..n {
        let pre = if i == 0 {
            f64::from(frame[0])
        } else {
            f64::from(frame[i]) - cfg.preemphasis * f64::from(frame[i - 1])
        };
        y[i] = pre * (0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos());
    }
    let bins = n_fft / 2 + 1;
    let mag: Vec<f64> = (0..bins)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in y.iter().enumerate() {
                let ang = -2.0 * PI * (k * t % n_fft) as f64 / n_fft as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect();
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = mel(sr / 2.0);
    let pts: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| inv(top * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let log_mel: Vec<f64> = (0..cfg.n_mels)
        .map(|m| {
            let e: f64 = (0..bins)
                .map(|k| {
                    let f = k as f64 * sr / n_fft as f64;
                    let w = if f > pts[m] && f <= pts[m + 1] {
                        (f - pts[m]) / (pts[m + 1] - pts[m])
                    } else if f > pts[m + 1] && f < pts[m + 2] {
                        (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1])
                    } else {
                        0.0
                    };
                    w * mag[k]
                })
                .sum();
            e.max(1e-10).ln()
        })
        .collect();
    let m = cfg.n_mels as f64;
    let mut out: Vec<f64> = (0..cfg.n_coeffs)
        .map(|k| {
            let alpha = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            alpha
                * (0..cfg.n_mels)
                    .map(|j| log_mel[j] * (PI * k as f64 * (2 * j + 1) as f64 / (2.0 * m)).cos())
                    .sum::<f64>()
        })
        .collect();
    if cfg.include_log_energy {
        let e: f64 = frame.iter().map(|s| f64::from(*s).powi(2)).sum();
        out[0] = e.max(1e-10).ln();
    }
    out
}

fn mfcc_oracle() -> Outcome {
    let cfg = MfccConfig::default();
    let ex = MfccExtractor::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let gain: f32 = rng.random_range(0.001..1.0);
        let frame: Vec<f32> = (0..400).map(|_| gain * rng.random_range(-1.0f32..1.0)).collect();
        let fast = ex.compute(&frame).unwrap();
        let slow = reference_mfcc(&frame, &cfg);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e} over 100 frames (tol 1e-6)"))
}

fn grid_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let wav = common::wav_pool(dir.path(), 20);
    let emb = common::embedding_pool(dir.path(), 20, 16);
    let run = |out: &str, workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_minivox"))
            .args(["grid", "--pool"])
            .arg(&wav)
            .arg("--pool")
            .arg(&emb)
            .args(["--frames", "1500", "--seed", "11", "--workers", workers, "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap()
    };
    let a = run("a", "2");
    let b = run("b", "1");
    if !a.status.success() || !b.status.success() {
        return outcome(
            false,
            format!("grid exited with {:?}: {}", a.status, String::from_utf8_lossy(&a.stderr).trim()),
        );
    }
    let ra = fs::read(dir.path().join("a/results.csv")).unwrap();
    let rb = fs::read(dir.path().join("b/results.csv")).unwrap();
    let rows = String::from_utf8_lossy(&ra).lines().count() - 1;
    let expected = 36 * AgentKind::ALL.len();
    outcome(
        ra == rb && rows == expected,
        format!(
            "results.csv identical across runs: {}, {rows} rows (expected {expected})",
            ra == rb
        ),
    )
}

fn service_equivalence() -> Outcome {
    let mfcc = MfccConfig::default();
    let items = (0..6u64).flat_map(|s| {
        (0..2u64).map(move |u| (format!("spk{s}"), common::voice(s * 10 + u, 8000 + 1600 * u as usize)))
    });
    let pool = UtterancePool::from_audio(items, &mfcc).unwrap();
    let stream = generate_stream(
        &pool,
        &StreamSpec {
            n_speakers: 4,
            target_frames: 2000,
            reveal_p: 0.0,
            seed: 9,
            silence_gap_frames: 10,
        },
    )
    .unwrap();
    let pcm: Vec<u8> = stream
        .audio
        .as_ref()
        .unwrap()
        .iter()
        .flat_map(|s| ((s * 32768.0).round() as i16).to_le_bytes())
        .collect();

    let mut runs = 0;
    let mut mismatched = Vec::new();
    for agent in AgentKind::ALL {
        for oracle in [OracleMode::Without, OracleMode::With(4)] {
            let cfg = EngineConfig::new(FeedbackMode::Interactive, oracle, agent);
            let mut engine = Session::new(cfg, stream.dim).unwrap();
            let trace = minivox_core::bench::simulate_agent(&mut engine, cfg.mode, cfg.oracle, &stream).unwrap();
            let mut live = LiveSession::new(cfg, &mfcc).unwrap();
            let mut events = Vec::new();
            for chunk in pcm.chunks(3333) {
                events.extend(live.push_pcm16(chunk).unwrap());
            }
            runs += 1;
            let same = events.len() == trace.len()
                && events.iter().zip(&trace.rows).all(|(e, r)| e.chosen == r.chosen)
                && live.engine() == &engine;
            if !same {
                mismatched.push(format!("{agent}/{oracle:?}"));
            }
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{}/{runs} configurations decision-for-decision over {} frames{}",
            runs - mismatched.len(),
            stream.len(),
            if mismatched.is_empty() { String::new() } else { format!("; differ: {}", mismatched.join(", ")) }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("linear-algebra", linear_algebra),
        ("branch-isolation", branch_isolation),
        ("synthetic-sanity", synthetic_sanity),
        ("sparse-feedback-benefit", sparse_feedback_benefit),
        ("episodic-update-benefit", episodic_update_benefit),
        ("cold-start-growth", cold_start_growth),
        ("metric-identities", metric_identities),
        ("mfcc-oracle", mfcc_oracle),
        ("grid-determinism", grid_determinism),
        ("service-equivalence", service_equivalence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

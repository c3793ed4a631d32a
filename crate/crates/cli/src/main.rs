use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use minivox_core::bench::{
    generate_stream, read_stream_dir, simulate, write_stream_dir, FeatureKind, GeneratedStream,
    PoolManifest, StreamSpec, Trace, UtterancePool,
};
use minivox_core::engine::{AgentKind, ArmSource, FeedbackMode};
use minivox_core::eval::{cumulative_reward, der, run_grid, DerReport, GridConfig, OracleChoice};
use minivox_core::{ActionLabel, EngineConfig, MfccConfig, UcbParams};

#[derive(Parser)]
#[command(name = "minivox", about = "Generate diarization streams, run bandit agents on them, score the results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a labeled multi-speaker stream from an utterance pool.
    Gen {
        #[command(flatten)]
        stream: StreamArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one agent over a stream and write its trace.
    Run {
        /// Previously generated stream directory (instead of --pool).
        #[arg(long, conflicts_with = "pool")]
        stream: Option<PathBuf>,
        #[command(flatten)]
        gen: OptionalStreamArgs,
        #[arg(long, default_value = "b-kmeans", value_parser = parse_agent)]
        agent: AgentKind,
        #[arg(long, value_enum, default_value_t = Mode::Benchmark)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Oracle::Without)]
        oracle: Oracle,
        /// UCB exploration constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Output directory for trace.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment grid and write results.csv, summary.csv, timings.csv and curves.
    Grid(GridArgs),
    /// Compute DER from a trace or from hypothesis and reference label files.
    Score {
        /// trace.csv written by `run`.
        #[arg(long, conflicts_with_all = ["hyp", "reference"])]
        trace: Option<PathBuf>,
        /// frame,label CSV of chosen arms.
        #[arg(long, requires = "reference")]
        hyp: Option<PathBuf>,
        /// frame,label CSV of correct arms.
        #[arg(long = "ref", requires = "hyp")]
        reference: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StreamArgs {
    /// Pool manifest (`source,speaker_id` CSV).
    #[arg(long)]
    pool: PathBuf,
    #[arg(long, default_value_t = 5)]
    speakers: usize,
    #[arg(long, default_value_t = 12_000)]
    frames: usize,
    #[arg(long = "reveal-p", default_value_t = 0.1)]
    reveal_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Silence frames inserted between utterances.
    #[arg(long = "silence-gap", default_value_t = 0)]
    silence_gap: usize,
}

#[derive(Args)]
struct OptionalStreamArgs {
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    speakers: usize,
    #[arg(long, default_value_t = 12_000)]
    frames: usize,
    #[arg(long = "reveal-p", default_value_t = 0.1)]
    reveal_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "silence-gap", default_value_t = 0)]
    silence_gap: usize,
}

#[derive(Args)]
struct GridArgs {
    /// Pool manifests, at most one per feature kind.
    #[arg(long, required = true)]
    pool: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 20])]
    speakers: Vec<usize>,
    #[arg(long = "reveal-p", value_delimiter = ',', default_values_t = [0.5, 0.1, 0.01])]
    reveal_p: Vec<f64>,
    /// Feature kinds to run; defaults to every kind a pool was given for.
    #[arg(long, value_delimiter = ',', value_parser = parse_features)]
    features: Vec<FeatureKind>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Oracle::With, Oracle::Without])]
    oracle: Vec<Oracle>,
    #[arg(long, value_delimiter = ',', value_parser = parse_agent)]
    agent: Vec<AgentKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [0])]
    seed: Vec<u64>,
    /// Stream length for every cell (default 60000 for MFCC, 12000 for precomputed).
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Benchmark)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long = "silence-gap", default_value_t = 0)]
    silence_gap: usize,
    #[arg(long = "curve-stride", default_value_t = 100)]
    curve_stride: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Benchmark,
    Interactive,
}

impl From<Mode> for FeedbackMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Benchmark => FeedbackMode::BanditBenchmark,
            Mode::Interactive => FeedbackMode::Interactive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Oracle {
    With,
    Without,
}

impl From<Oracle> for OracleChoice {
    fn from(o: Oracle) -> Self {
        match o {
            Oracle::With => OracleChoice::With,
            Oracle::Without => OracleChoice::Without,
        }
    }
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    s.parse()
}

fn parse_features(s: &str) -> Result<FeatureKind, String> {
    s.parse()
}

fn load_pool(manifest: &Path) -> Result<UtterancePool> {
    let m = PoolManifest::load(manifest)?;
    UtterancePool::load(&m, &MfccConfig::default())
        .with_context(|| format!("loading pool {}", manifest.display()))
}

fn build_stream(args: &StreamArgs) -> Result<GeneratedStream> {
    let pool = load_pool(&args.pool)?;
    let spec = StreamSpec {
        n_speakers: args.speakers,
        target_frames: args.frames,
        reveal_p: args.reveal_p,
        seed: args.seed,
        silence_gap_frames: args.silence_gap,
    };
    Ok(generate_stream(&pool, &spec)?)
}

fn source_name(source: &ArmSource) -> String {
    match source {
        ArmSource::Fresh => "fresh".into(),
        ArmSource::Transfer(from) => format!("transfer:{from}"),
    }
}

fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| path.display().to_string())?;
    w.write_record(["frame", "chosen", "truth", "revealed", "reward", "cumulative_reward", "registered", "source"])?;
    let cum = cumulative_reward(trace)?;
    for (row, total) in trace.rows.iter().zip(cum) {
        let (registered, source) = match &row.registered {
            Some(r) => (r.label.to_string(), source_name(&r.source)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            row.frame.to_string(),
            row.chosen.to_string(),
            row.truth.to_string(),
            u8::from(row.revealed).to_string(),
            row.reward.to_string(),
            total.to_string(),
            registered,
            source,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels(path: &Path, column: &str) -> Result<Vec<ActionLabel>> {
    let mut r = csv::Reader::from_path(path).with_context(|| path.display().to_string())?;
    let headers = r.headers()?.clone();
    let Some(col) = headers.iter().position(|h| h == column) else {
        bail!("{}: no `{column}` column", path.display());
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or_default();
        out.push(
            field
                .parse()
                .with_context(|| format!("{} row {}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

fn print_report(d: &DerReport) {
    println!(
        "frames={} der={:.4} confusion={:.4} missed={:.4} false_alarm={:.4} reward={}",
        d.frames,
        d.der(),
        d.confusion_rate(),
        d.missed_rate(),
        d.false_alarm_rate(),
        d.correct()
    );
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { stream, out } => {
            let s = build_stream(&stream)?;
            write_stream_dir(&out, &s)?;
            println!(
                "wrote {} frames from {} speakers to {}",
                s.len(),
                s.speakers.len(),
                out.display()
            );
        }
        Command::Run {
            stream,
            gen,
            agent,
            mode,
            oracle,
            c,
            out,
        } => {
            let s = match (stream, gen.pool) {
                (Some(dir), _) => read_stream_dir(&dir)?,
                (None, Some(pool)) => build_stream(&StreamArgs {
                    pool,
                    speakers: gen.speakers,
                    frames: gen.frames,
                    reveal_p: gen.reveal_p,
                    seed: gen.seed,
                    silence_gap: gen.silence_gap,
                })?,
                (None, None) => bail!("either --stream or --pool is required"),
            };
            let mut config = EngineConfig::new(
                mode.into(),
                OracleChoice::from(oracle).mode(s.speakers.len()),
                agent,
            );
            config.ucb = UcbParams::new(c)?;
            let trace = simulate(config, &s)?;
            std::fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            write_trace(&out.join("trace.csv"), &trace)?;
            print_report(&der(&trace.hypothesis(), &trace.reference())?);
        }
        Command::Grid(g) => {
            let mut pools = BTreeMap::new();
            for path in &g.pool {
                let pool = load_pool(path)?;
                if pools.insert(pool.kind(), pool).is_some() {
                    bail!("more than one pool given for one feature kind ({})", path.display());
                }
            }
            let mut grid = GridConfig {
                speaker_counts: g.speakers,
                reveal_ps: g.reveal_p,
                oracle_modes: g.oracle.into_iter().map(Into::into).collect(),
                seeds: g.seed,
                frames: g.frames,
                mode: g.mode.into(),
                ucb: UcbParams::new(g.c)?,
                silence_gap_frames: g.silence_gap,
                curve_stride: g.curve_stride,
                workers: g.workers,
                ..GridConfig::default()
            };
            if !g.features.is_empty() {
                grid.feature_kinds = g.features;
            } else {
                grid.feature_kinds = pools.keys().copied().collect();
            }
            if !g.agent.is_empty() {
                grid.agents = g.agent;
            }
            let report = run_grid(&grid, &pools, &g.out)?;
            println!(
                "{} rows written to {}",
                report.rows.len(),
                g.out.display()
            );
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            return Ok(report.failures.is_empty());
        }
        Command::Score {
            trace,
            hyp,
            reference,
        } => {
            let (h, r) = match (trace, hyp, reference) {
                (Some(t), _, _) => (read_labels(&t, "chosen")?, read_labels(&t, "truth")?),
                (None, Some(h), Some(r)) => (read_labels(&h, "label")?, read_labels(&r, "label")?),
                _ => bail!("either --trace or both --hyp and --ref are required"),
            };
            print_report(&der(&h, &r)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

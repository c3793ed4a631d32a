use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{cumulative_reward, trace_der};
use super::EvalError;
use crate::bandit::UcbParams;
use crate::bench::{generate_stream, simulate, FeatureKind, StreamSpec, UtterancePool};
use crate::engine::{AgentKind, EngineConfig, FeedbackMode, OracleMode};

pub const DEFAULT_MFCC_FRAMES: usize = 60_000;
pub const DEFAULT_PRECOMPUTED_FRAMES: usize = 12_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    With,
    Without,
}

impl OracleChoice {
    pub fn name(self) -> &'static str {
        match self {
            OracleChoice::With => "with",
            OracleChoice::Without => "without",
        }
    }

    pub fn mode(self, n_speakers: usize) -> OracleMode {
        match self {
            OracleChoice::With => OracleMode::With(n_speakers as u32),
            OracleChoice::Without => OracleMode::Without,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub speaker_counts: Vec<usize>,
    pub reveal_ps: Vec<f64>,
    pub feature_kinds: Vec<FeatureKind>,
    pub oracle_modes: Vec<OracleChoice>,
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
    /// Stream length for every cell; per-feature defaults when unset.
    pub frames: Option<usize>,
    pub mode: FeedbackMode,
    pub ucb: UcbParams,
    pub silence_gap_frames: usize,
    /// Sampling stride of the written reward curves.
    pub curve_stride: usize,
    pub workers: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            speaker_counts: vec![5, 10, 20],
            reveal_ps: vec![0.5, 0.1, 0.01],
            feature_kinds: vec![FeatureKind::Mfcc, FeatureKind::Precomputed],
            oracle_modes: vec![OracleChoice::With, OracleChoice::Without],
            agents: AgentKind::ALL.to_vec(),
            seeds: vec![0],
            frames: None,
            mode: FeedbackMode::BanditBenchmark,
            ucb: UcbParams::default(),
            silence_gap_frames: 0,
            curve_stride: 100,
            workers: 1,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let empty = [
            ("speaker_counts", self.speaker_counts.is_empty()),
            ("reveal_ps", self.reveal_ps.is_empty()),
            ("feature_kinds", self.feature_kinds.is_empty()),
            ("oracle_modes", self.oracle_modes.is_empty()),
            ("agents", self.agents.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(EvalError::InvalidGrid(format!("{name} is empty")));
        }
        if self.workers == 0 || self.curve_stride == 0 || self.frames == Some(0) {
            return Err(EvalError::InvalidGrid(
                "workers, curve_stride and frames must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &features in &self.feature_kinds {
            for &oracle in &self.oracle_modes {
                for &n_speakers in &self.speaker_counts {
                    for &reveal_p in &self.reveal_ps {
                        out.push(Cell {
                            n_speakers,
                            reveal_p,
                            features,
                            oracle,
                        });
                    }
                }
            }
        }
        out
    }

    fn frames_for(&self, kind: FeatureKind) -> usize {
        self.frames.unwrap_or(match kind {
            FeatureKind::Mfcc => DEFAULT_MFCC_FRAMES,
            FeatureKind::Precomputed => DEFAULT_PRECOMPUTED_FRAMES,
        })
    }
}

/// One environment of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n_speakers: usize,
    pub reveal_p: f64,
    pub features: FeatureKind,
    pub oracle: OracleChoice,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c{}-{}-{}-p{}",
            self.n_speakers,
            self.features.name(),
            self.oracle.name(),
            self.reveal_p
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub cell: Cell,
    pub agent: AgentKind,
    pub seed: u64,
    pub frames: u64,
    pub der: f64,
    pub confusion: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub reward: u64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub cell: Cell,
    pub seed: u64,
    pub error: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell {} seed {}: {}", self.cell, self.seed, self.error)
    }
}

#[derive(Debug, Clone, Default)]
pub struct GridReport {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<CellFailure>,
}

struct CellResult {
    row: MetricRow,
    curve: Vec<(usize, u64)>,
}

fn run_stream_group(
    grid: &GridConfig,
    pools: &BTreeMap<FeatureKind, UtterancePool>,
    cells: &[(usize, Cell)],
    seed: u64,
) -> Result<Vec<(usize, CellResult)>, String> {
    let first = cells[0].1;
    let pool = pools
        .get(&first.features)
        .ok_or_else(|| format!("no {} pool supplied", first.features.name()))?;
    let spec = StreamSpec {
        n_speakers: first.n_speakers,
        target_frames: grid.frames_for(first.features),
        reveal_p: first.reveal_p,
        seed,
        silence_gap_frames: grid.silence_gap_frames,
    };
    let stream = generate_stream(pool, &spec).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for &(i, cell) in cells {
        for &agent in &grid.agents {
            let mut config = EngineConfig::new(grid.mode, cell.oracle.mode(cell.n_speakers), agent);
            config.ucb = grid.ucb;
            let started = Instant::now();
            let trace = simulate(config, &stream).map_err(|e| e.to_string())?;
            let runtime_secs = started.elapsed().as_secs_f64();
            let d = trace_der(&trace).map_err(|e| e.to_string())?;
            let cum = cumulative_reward(&trace).map_err(|e| e.to_string())?;
            let last = cum.len() - 1;
            let curve = cum
                .iter()
                .enumerate()
                .filter(|(t, _)| (t + 1) % grid.curve_stride == 0 || *t == last)
                .map(|(t, r)| (t + 1, *r))
                .collect();
            out.push((
                i,
                CellResult {
                    row: MetricRow {
                        cell,
                        agent,
                        seed,
                        frames: d.frames,
                        der: d.der(),
                        confusion: d.confusion_rate(),
                        missed: d.missed_rate(),
                        false_alarm: d.false_alarm_rate(),
                        reward: cum[last],
                        runtime_secs,
                    },
                    curve,
                },
            ));
        }
    }
    Ok(out)
}

/// Run every (cell, agent, seed) combination and write `results.csv`,
/// `timings.csv`, `summary.csv` and one `curve_<cell>_<agent>.csv` per cell
/// and agent into `out_dir`.
///
/// Cells that cannot run (e.g. the pool has too few speakers) are reported in
/// [`GridReport::failures`]; the rest still run. The written files depend only
/// on the configuration and pools, never on scheduling.
pub fn run_grid(
    grid: &GridConfig,
    pools: &BTreeMap<FeatureKind, UtterancePool>,
    out_dir: impl AsRef<Path>,
) -> Result<GridReport, EvalError> {
    grid.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| EvalError::io(out_dir, e))?;

    // cells sharing (features, speakers, p) replay the same stream
    let cells = grid.cells();
    let mut groups: Vec<(Vec<(usize, Cell)>, u64)> = Vec::new();
    for &seed in &grid.seeds {
        let mut by_stream: Vec<Vec<(usize, Cell)>> = Vec::new();
        for (i, c) in cells.iter().enumerate() {
            let same = |o: &Cell| {
                o.features == c.features && o.n_speakers == c.n_speakers && o.reveal_p == c.reveal_p
            };
            match by_stream.iter_mut().find(|g| same(&g[0].1)) {
                Some(g) => g.push((i, *c)),
                None => by_stream.push(vec![(i, *c)]),
            }
        }
        groups.extend(by_stream.into_iter().map(|g| (g, seed)));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.workers)
        .build()
        .map_err(|e| EvalError::InvalidGrid(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| {
        groups
            .par_iter()
            .map(|(g, seed)| (g, *seed, run_stream_group(grid, pools, g, *seed)))
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (g, seed, outcome) in outcomes {
        match outcome {
            Ok(rs) => results.extend(rs),
            Err(error) => failures.extend(g.iter().map(|&(_, cell)| CellFailure {
                cell,
                seed,
                error: error.clone(),
            })),
        }
    }
    let agent_pos = |a: AgentKind| grid.agents.iter().position(|x| *x == a).unwrap_or(usize::MAX);
    let seed_pos = |s: u64| grid.seeds.iter().position(|x| *x == s).unwrap_or(usize::MAX);
    results.sort_by_key(|(i, r)| (*i, agent_pos(r.row.agent), seed_pos(r.row.seed)));
    failures.sort_by_key(|f| {
        (
            cells.iter().position(|c| *c == f.cell).unwrap_or(usize::MAX),
            seed_pos(f.seed),
        )
    });

    write_results(&out_dir.join("results.csv"), &results)?;
    write_timings(&out_dir.join("timings.csv"), &results)?;
    write_curves(out_dir, &results)?;
    write_summary(&out_dir.join("summary.csv"), grid, &cells, &results)?;

    Ok(GridReport {
        rows: results.into_iter().map(|(_, r)| r.row).collect(),
        failures,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, EvalError> {
    csv::Writer::from_path(path).map_err(|e| EvalError::csv(path, e))
}

fn write_results(path: &Path, results: &[(usize, CellResult)]) -> Result<(), EvalError> {
    let mut w = writer(path)?;
    let csv_err = |e| EvalError::csv(path, e);
    w.write_record([
        "cell", "features", "oracle", "speakers", "reveal_p", "agent", "seed", "frames", "der",
        "confusion", "missed", "false_alarm", "reward",
    ])
    .map_err(csv_err)?;
    for (_, r) in results {
        let m = &r.row;
        w.write_record([
            m.cell.to_string(),
            m.cell.features.name().to_string(),
            m.cell.oracle.name().to_string(),
            m.cell.n_speakers.to_string(),
            m.cell.reveal_p.to_string(),
            m.agent.name().to_string(),
            m.seed.to_string(),
            m.frames.to_string(),
            m.der.to_string(),
            m.confusion.to_string(),
            m.missed.to_string(),
            m.false_alarm.to_string(),
            m.reward.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| EvalError::io(path, e))
}

fn write_timings(path: &Path, results: &[(usize, CellResult)]) -> Result<(), EvalError> {
    let mut w = writer(path)?;
    let csv_err = |e| EvalError::csv(path, e);
    w.write_record(["cell", "agent", "seed", "runtime_secs"]).map_err(csv_err)?;
    for (_, r) in results {
        w.write_record([
            r.row.cell.to_string(),
            r.row.agent.name().to_string(),
            r.row.seed.to_string(),
            format!("{:.6}", r.row.runtime_secs),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| EvalError::io(path, e))
}

fn write_curves(dir: &Path, results: &[(usize, CellResult)]) -> Result<(), EvalError> {
    let mut files: BTreeMap<PathBuf, Vec<&CellResult>> = BTreeMap::new();
    for (_, r) in results {
        let name = format!("curve_{}_{}.csv", r.row.cell, r.row.agent.name());
        files.entry(dir.join(name)).or_default().push(r);
    }
    for (path, rs) in files {
        let mut w = writer(&path)?;
        let csv_err = |e| EvalError::csv(&path, e);
        w.write_record(["seed", "frame", "cumulative_reward"]).map_err(csv_err)?;
        for r in rs {
            for (t, v) in &r.curve {
                w.write_record([r.row.seed.to_string(), t.to_string(), v.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| EvalError::io(&path, e))?;
    }
    Ok(())
}

/// Mean DER over seeds, one row per (oracle, agent), one column per
/// (features, speakers, p).
fn write_summary(
    path: &Path,
    grid: &GridConfig,
    cells: &[Cell],
    results: &[(usize, CellResult)],
) -> Result<(), EvalError> {
    let mut w = writer(path)?;
    let csv_err = |e| EvalError::csv(path, e);
    let mut columns: Vec<(FeatureKind, usize, f64)> = Vec::new();
    for c in cells {
        let key = (c.features, c.n_speakers, c.reveal_p);
        if !columns.contains(&key) {
            columns.push(key);
        }
    }
    let mut header = vec!["oracle".to_string(), "agent".to_string()];
    header.extend(
        columns
            .iter()
            .map(|(f, n, p)| format!("{} {} speakers p={}", f.name(), n, p)),
    );
    w.write_record(&header).map_err(csv_err)?;
    for &oracle in &grid.oracle_modes {
        for &agent in &grid.agents {
            let mut record = vec![oracle.name().to_string(), agent.name().to_string()];
            for &(f, n, p) in &columns {
                let ders: Vec<f64> = results
                    .iter()
                    .map(|(_, r)| &r.row)
                    .filter(|m| {
                        m.agent == agent
                            && m.cell.oracle == oracle
                            && m.cell.features == f
                            && m.cell.n_speakers == n
                            && m.cell.reveal_p == p
                    })
                    .map(|m| m.der)
                    .collect();
                record.push(if ders.is_empty() {
                    String::new()
                } else {
                    format!("{:.2}", ders.iter().sum::<f64>() / ders.len() as f64)
                });
            }
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| EvalError::io(path, e))
}

//! Subcommand implementations behind the `memsched` binary.
//!
//! Every command is a pure function of its config and seed and writes its
//! results under an output directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, DirectionVector, MixtureWeights, RegionModel, WeightKind, CSV_HEADER};
use crate::channel::{is_symmetric, ChannelParams};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::oracles::{self, VerdictRecord, VerifyOptions};
use crate::policy::PolicySpec;
use crate::simulator::{self, SimMetrics, SimMode, StabilityReport, TraceRecord};
use crate::stats;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::Config(e.to_string()))
}

/// Per-replication summary row.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub replication: usize,
    pub seed: u64,
    pub slots_elapsed: u64,
    pub measured_slots: u64,
    pub delivered: Vec<u64>,
    pub throughput: Vec<f64>,
    pub sum_throughput: f64,
    pub data_slots: u64,
    pub dummy_slots: u64,
    pub mean_backlog: Option<f64>,
    pub stability: Option<StabilityReport>,
    pub rounds: u64,
    pub mean_round_length: f64,
    pub floor_violations: u64,
    pub overflowed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub policy: String,
    pub mode: SimMode,
    pub n_channels: usize,
    pub horizon: u64,
    pub burn_in: u64,
    pub replications: Vec<ReplicationSummary>,
    /// Across-replication mean per-channel throughput.
    pub mean_throughput: Vec<f64>,
    /// Across-replication standard error (absent with one replication).
    pub throughput_std_err: Option<Vec<f64>>,
    pub mean_sum_throughput: f64,
    /// Closed-form per-channel throughput for fixed-subset round robin.
    pub predicted_throughput: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub out_dir: PathBuf,
    /// Write `trace.csv` for replication 0.
    pub trace: bool,
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub summary: SimulationSummary,
    pub metrics: Vec<SimMetrics>,
    pub files: Vec<PathBuf>,
}

fn trace_header(n: usize) -> String {
    let mut cols = vec!["slot".to_string(), "served".into(), "kind".into(), "feedback".into(), "delivered".into()];
    cols.extend((1..=n).map(|i| format!("state_{i}")));
    cols.extend((1..=n).map(|i| format!("omega_{i}")));
    cols.join(",")
}

fn trace_line(r: &TraceRecord) -> String {
    let mut s = format!(
        "{},{},{},{},{}",
        r.slot,
        r.served.map_or(String::new(), |n| (n + 1).to_string()),
        serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        r.feedback.map_or("", |f| if f.is_on() { "ack" } else { "nack" }),
        r.delivered as u8,
    );
    for st in &r.states {
        s.push_str(if st.is_on() { ",1" } else { ",0" });
    }
    for w in &r.omega {
        s.push_str(&format!(",{w:.12}"));
    }
    s
}

fn run_replication(cfg: &ExperimentConfig, rep: usize, trace: Option<&Path>) -> Result<SimMetrics> {
    let sim = cfg.sim_config(rep)?;
    let Some(path) = trace else { return simulator::run(&sim) };
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    writeln!(w, "{}", trace_header(sim.params.len()))?;
    let mut io_err = None;
    let metrics = simulator::run_traced(&sim, |r| {
        if io_err.is_none() {
            if let Err(e) = writeln!(w, "{}", trace_line(r)) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    w.flush()?;
    Ok(metrics)
}

/// Runs every replication and writes `summary.json` and `series.csv`.
pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &SimulateOptions) -> Result<SimulateOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let trace_path = opts.out_dir.join("trace.csv");
    let trace = opts.trace.then_some(trace_path.as_path());
    let metrics: Vec<SimMetrics> = pool(cfg.workers)?.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| run_replication(cfg, rep, if rep == 0 { trace } else { None }))
            .collect::<Result<Vec<_>>>()
    })?;

    let params = cfg.params()?;
    let n = params.len();
    let replications: Vec<ReplicationSummary> = metrics
        .iter()
        .enumerate()
        .map(|(i, m)| ReplicationSummary {
            replication: i,
            seed: m.seed,
            slots_elapsed: m.slots_elapsed,
            measured_slots: m.measured_slots,
            delivered: m.delivered.clone(),
            throughput: m.throughput.clone(),
            sum_throughput: m.sum_throughput,
            data_slots: m.data_slots,
            dummy_slots: m.dummy_slots,
            mean_backlog: m.backlog.as_ref().map(|b| b.mean_total),
            stability: m.backlog.as_ref().and_then(simulator::stability_report),
            rounds: m.renewal.rounds,
            mean_round_length: m.renewal.mean_round_length,
            floor_violations: m.floor_violations,
            overflowed: m.overflowed,
        })
        .collect();
    let per_channel: Vec<Vec<f64>> = (0..n).map(|c| metrics.iter().map(|m| m.throughput[c]).collect()).collect();
    let summary = SimulationSummary {
        policy: cfg.policy.name().to_string(),
        mode: cfg.mode,
        n_channels: n,
        horizon: cfg.horizon,
        burn_in: cfg.burn_in,
        mean_throughput: per_channel.iter().map(|v| stats::mean(v)).collect(),
        throughput_std_err: (metrics.len() > 1).then(|| per_channel.iter().map(|v| stats::std_err(v)).collect()),
        mean_sum_throughput: stats::mean(&metrics.iter().map(|m| m.sum_throughput).collect::<Vec<_>>()),
        predicted_throughput: match (&cfg.policy, cfg.mode) {
            (PolicySpec::Rr { active }, SimMode::Saturated) => Some(capacity::eta_vector(active, &params)),
            _ => None,
        },
        replications,
    };

    let summary_path = opts.out_dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    let series_path = opts.out_dir.join("series.csv");
    let mut w = BufWriter::new(File::create(&series_path)?);
    writeln!(w, "{CSV_HEADER}")?;
    let mut cols = vec!["replication".to_string(), "slot".into(), "total_backlog".into(), "running_mean_backlog".into()];
    cols.extend((1..=n).map(|i| format!("delivered_{i}")));
    writeln!(w, "{}", cols.join(","))?;
    for (rep, m) in metrics.iter().enumerate() {
        for p in &m.series {
            let cum: Vec<String> = p.cumulative_delivered.iter().map(u64::to_string).collect();
            writeln!(w, "{rep},{},{},{:.6},{}", p.slot, p.total_backlog, p.running_mean_backlog, cum.join(","))?;
        }
    }
    w.flush()?;
    let mut files = vec![summary_path, series_path];
    if opts.trace {
        files.push(trace_path);
    }
    Ok(SimulateOutcome { summary, metrics, files })
}

/// Reads directions, one comma- or space-separated vector per line; `#`
/// starts a comment.
pub fn read_directions(path: &Path) -> Result<Vec<DirectionVector>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: std::result::Result<Vec<f64>, _> =
            body.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        let v = v.map_err(|e| Error::InvalidDirection(format!("{body:?}: {e}")))?;
        out.push(DirectionVector::new(v)?);
    }
    Ok(out)
}

/// Default sweep: the quarter circle for two users, otherwise the axes,
/// the all-ones direction and seeded random directions.
pub fn default_directions(n: usize, count: usize, seed: u64) -> Vec<DirectionVector> {
    match n {
        1 => vec![DirectionVector::new(vec![1.0]).expect("nonzero")],
        2 => capacity::quarter_circle_directions(count),
        _ => {
            let mut dirs: Vec<DirectionVector> = (0..n)
                .map(|i| DirectionVector::new((0..n).map(|j| (i == j) as u8 as f64).collect()).expect("axis"))
                .collect();
            dirs.push(DirectionVector::new(vec![1.0; n]).expect("ones"));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while dirs.len() < count.max(n + 1) {
                let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                if let Ok(d) = DirectionVector::new(v) {
                    dirs.push(d);
                }
            }
            dirs
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub n_channels: usize,
    pub vertices: usize,
    pub directions: usize,
    pub outer_sum_cap: f64,
    /// `c_M` for `M = 1..N` (symmetric channels).
    pub c_m: Option<Vec<f64>>,
    pub c_infinity: Option<f64>,
    /// `(c_N - c_1) / c_1`: sum-rate gain from exploiting memory.
    pub memory_gain: Option<f64>,
    pub blind_line: bool,
    pub max_gap: f64,
}

pub struct RegionOutcome {
    pub summary: RegionSummary,
    pub rows: Vec<capacity::SweepRow>,
    pub warnings: Vec<String>,
}

/// Sweeps both bounds and writes `sweep.csv` and `region.json`.
pub fn cmd_region(cfg: &ExperimentConfig, directions: Option<&Path>, out_dir: &Path) -> Result<RegionOutcome> {
    let params = cfg.params()?;
    let n = params.len();
    let region = RegionModel::new(&params)?;
    let dirs = match directions {
        Some(p) => read_directions(p)?,
        None => default_directions(n, cfg.region.directions, cfg.seed),
    };
    let rows = pool(cfg.workers)?.install(|| {
        dirs.par_iter().map(|d| capacity::boundary_sweep(&region, std::slice::from_ref(d))).collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<capacity::SweepRow> = rows.into_iter().flatten().collect();
    let symmetric = is_symmetric(&params);
    let mut warnings = Vec::new();
    let blind = if cfg.region.blind && symmetric {
        Some(dirs.iter().map(|d| capacity::blind_point(d, &params)).collect::<Result<Vec<_>>>()?)
    } else {
        if cfg.region.blind {
            warnings.push("memoryless reference line needs symmetric channels; omitted".to_string());
        }
        None
    };
    fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(File::create(out_dir.join("sweep.csv"))?);
    capacity::write_sweep_csv(&mut w, &rows, blind.as_deref())?;
    w.flush()?;
    let c_m: Option<Vec<f64>> = symmetric.then(|| (1..=n as u32).map(|m| capacity::c_of_m(&params[0], m)).collect());
    let summary = RegionSummary {
        n_channels: n,
        vertices: region.vertices().len(),
        directions: rows.len(),
        outer_sum_cap: region.sum_cap(),
        memory_gain: c_m.as_ref().filter(|c| c.len() >= 2).map(|c| (c[c.len() - 1] - c[0]) / c[0]),
        c_infinity: symmetric.then(|| capacity::c_infinity(&params[0])),
        c_m,
        blind_line: blind.is_some(),
        max_gap: rows.iter().map(|r| r.gap).fold(0.0, f64::max),
    };
    write_json(&out_dir.join("region.json"), &summary)?;
    Ok(RegionOutcome { summary, rows, warnings })
}

/// On-disk weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub kind: WeightKind,
    pub weights: BTreeMap<String, f64>,
}

/// Converts between selection and time-fraction weights and checks that
/// converting back reproduces the input to 1e-12.
pub fn convert_weights(input: &WeightFile, params: &[ChannelParams]) -> Result<WeightFile> {
    let w = MixtureWeights::from_map(input.kind, &input.weights)?;
    if let Some((phi, _)) = w.iter().next() {
        if phi.len() != params.len() {
            return Err(Error::DimensionMismatch { expected: params.len(), got: phi.len() });
        }
    }
    let (out, back) = match input.kind {
        WeightKind::TimeFraction => {
            let a = capacity::beta_to_alpha(&w, params)?;
            let b = capacity::alpha_to_beta(&a, params)?;
            (a, b)
        }
        WeightKind::PerRoundSelection => {
            let b = capacity::alpha_to_beta(&w, params)?;
            let a = capacity::beta_to_alpha(&b, params)?;
            (b, a)
        }
    };
    let drift = w.iter().map(|(phi, x)| (x - back.get(phi)).abs()).fold(0.0, f64::max);
    if drift > 1e-12 {
        return Err(Error::InvalidWeights(format!("round trip drifted by {drift:e}")));
    }
    Ok(WeightFile { kind: out.kind, weights: out.to_map() })
}

pub fn cmd_convert_weights(cfg: &ExperimentConfig, input: &Path, out_dir: &Path) -> Result<WeightFile> {
    let params = cfg.params()?;
    let text = fs::read_to_string(input)?;
    let file: WeightFile = serde_json::from_str(&text)?;
    let converted = convert_weights(&file, &params)?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("converted.json"), &converted)?;
    Ok(converted)
}

/// Runs the oracle suite and writes `verdicts.json`.
pub fn cmd_verify(cfg: &ExperimentConfig, quick: bool, out_dir: &Path) -> Result<Vec<VerdictRecord>> {
    let params = cfg.params()?;
    let verdicts = oracles::run_verify_suite(&VerifyOptions::new(params, cfg.seed, quick))?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("verdicts.json"), &verdicts)?;
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig { horizon: 20_000, burn_in: 1_000, replications: 2, workers: 2, ..Default::default() }
    }

    #[test]
    fn simulate_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        cmd_simulate(&cfg, &SimulateOptions { out_dir: a.clone(), trace: true }).unwrap();
        cmd_simulate(&cfg, &SimulateOptions { out_dir: b.clone(), trace: false }).unwrap();
        let sa = fs::read(a.join("summary.json")).unwrap();
        let sb = fs::read(b.join("summary.json")).unwrap();
        assert_eq!(sa, sb);
        let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 2 + 20_000);
        assert!(fs::read_to_string(a.join("series.csv")).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn convert_examples() {
        let params = vec![ChannelParams::new(0.2, 0.2).unwrap(); 2];
        let input = WeightFile {
            kind: WeightKind::TimeFraction,
            weights: [("10".to_string(), 0.5), ("11".to_string(), 0.5)].into_iter().collect(),
        };
        let out = convert_weights(&input, &params).unwrap();
        assert_eq!(out.kind, WeightKind::PerRoundSelection);
        assert!((out.weights["10"] - 0.7222).abs() < 1e-4);
        assert!((out.weights["11"] - 0.2778).abs() < 1e-4);
        let bad = WeightFile { kind: WeightKind::TimeFraction, weights: [("10".to_string(), 0.7)].into_iter().collect() };
        assert!(convert_weights(&bad, &params).unwrap_err().is_validation());
    }

    #[test]
    fn region_single_channel() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            channels: vec![crate::config::ChannelSpec { p01: 0.2, p10: 0.2 }],
            policy: PolicySpec::rr_m(1, 1).unwrap(),
            ..Default::default()
        };
        let out = cmd_region(&cfg, None, dir.path()).unwrap();
        let r = &out.rows[0];
        assert!((r.inner[0] - 0.5).abs() < 1e-8 && (r.outer[0] - 0.5).abs() < 1e-12);
    }
}

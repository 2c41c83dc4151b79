//! Seeded experiments: configuration loading, replicated runs, V-sweeps and the
//! verdict report, plus the file writers used by the `mmsched` binary.
//!
//! Every output file starts with a header carrying the schema version, the
//! configuration hash and the seed. The formats are described in
//! `docs/schema.md`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::auxiliary::AuxiliaryState;
use crate::error::{Error, Result};
use crate::model::{InstanceConfig, WirelessSystem};
use crate::oracle::{
    all_pass, check_bounds, feasibility_backlog_bound, generalized_optimum, generalized_slack,
    lp_max_slack, lp_optimal_penalty, optimization_backlog_bound, optimization_penalty_bound, BoundInputs,
    Estimate, GeneralizedBounds, GeneralizedOptimum, MeasuredPerformance, Verdict,
};
use crate::queues::{compute_drift_constants, DriftConstants};
use crate::rng;
use crate::scheduler::{FrameRecord, Observer, RenewalConfig, RenewalKind, RunSummary, Scheduler, SchedulerConfig, SlotRow};
use crate::ssp::{SolverConfig, SolverMode};
use crate::tables::NetworkTables;

pub const SCHEMA_VERSION: u32 = 1;
/// Prefix of the environment variables mirroring the command-line flags.
pub const ENV_PREFIX: &str = "MMSCHED_";
/// Exit code of `verify` when some verdict fails.
pub const VERDICT_FAILURE_EXIT: i32 = 1;

const FRANK_WOLFE_ITERATIONS: usize = 500;
const FRANK_WOLFE_GAP: f64 = 1e-9;

fn default_renewal() -> RenewalConfig {
    RenewalConfig::type2()
}
fn default_v() -> Vec<f64> {
    vec![0.0]
}
fn default_slots() -> u64 {
    100_000
}
fn default_reps() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_delta_stride() -> u64 {
    16
}
fn default_relative_slack() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Instance file, relative to the configuration file.
    pub instance: PathBuf,
    #[serde(default = "default_renewal")]
    pub renewal: RenewalConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// History depth `W` for delayed sampling.
    #[serde(default)]
    pub history: Option<usize>,
    #[serde(default = "default_v")]
    pub v: Vec<f64>,
    /// Overrides the instance's auxiliary-variable bound.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Write per-slot traces and frame records in `run` mode.
    #[serde(default = "default_true")]
    pub trace: bool,
    #[serde(default)]
    pub dump_iterates: bool,
    #[serde(default = "default_delta_stride")]
    pub delta_stride: u64,
    /// Relative slack for time-average constraint checks.
    #[serde(default = "default_relative_slack")]
    pub relative_slack: f64,
}

impl ExperimentConfig {
    /// Defaults around an instance path.
    pub fn for_instance(instance: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            instance: instance.into(),
            renewal: default_renewal(),
            solver: SolverConfig::default(),
            history: None,
            v: default_v(),
            alpha: None,
            slots: default_slots(),
            reps: default_reps(),
            seed: 0,
            out: default_out(),
            trace: true,
            dump_iterates: false,
            delta_stride: default_delta_stride(),
            relative_slack: default_relative_slack(),
        }
    }

    /// Load a JSON configuration. A relative instance path is resolved against
    /// the configuration file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })?;
        if cfg.instance.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.instance = dir.join(&cfg.instance);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::config("slots", "slot budget must be at least 1"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "replication count must be at least 1"));
        }
        if self.v.is_empty() {
            return Err(Error::config("v", "at least one V is required"));
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::config("alpha", "must be finite and nonnegative"));
            }
        }
        if !(self.relative_slack.is_finite() && self.relative_slack >= 0.0) {
            return Err(Error::config("relative_slack", "must be finite and nonnegative"));
        }
        for v in &self.v {
            self.scheduler_config(*v).validate()?;
        }
        Ok(())
    }

    pub fn scheduler_config(&self, v: f64) -> SchedulerConfig {
        SchedulerConfig {
            renewal: self.renewal,
            solver: self.solver.clone(),
            v,
            history: self.history,
            per_slot_weights: false,
            dump_iterates: self.dump_iterates,
            delta_stride: self.delta_stride,
        }
    }
}

/// Command-line or environment overrides; `None` keeps the configured value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub instance: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub solver: Option<SolverMode>,
    pub gamma: Option<f64>,
    pub batch: Option<usize>,
    pub iters: Option<usize>,
    pub history: Option<usize>,
    pub renewal: Option<u8>,
    pub renewal_b: Option<u32>,
    pub slots: Option<u64>,
    pub reps: Option<usize>,
    pub v: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(p) = &self.instance {
            cfg.instance = p.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(m) = self.solver {
            cfg.solver.mode = m;
        }
        if let Some(g) = self.gamma {
            cfg.solver.gamma = g;
        }
        if let Some(b) = self.batch {
            cfg.solver.batch_size = b;
        }
        if let Some(b) = self.iters {
            cfg.solver.iterations = b;
        }
        if let Some(w) = self.history {
            cfg.history = Some(w);
        }
        if let Some(kind) = self.renewal {
            cfg.renewal.kind = match kind {
                1 => RenewalKind::Type1,
                2 => RenewalKind::Type2,
                3 => RenewalKind::Type3,
                other => return Err(Error::config("renewal", format!("unknown renewal type {other}"))),
            };
        }
        if let Some(b) = self.renewal_b {
            cfg.renewal.b = b;
        }
        if let Some(t) = self.slots {
            cfg.slots = t;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(v) = &self.v {
            cfg.v = v.clone();
        }
        Ok(())
    }
}

/// Oracle values shared by every V of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    pub constants: DriftConstants,
    pub epsilon: Option<f64>,
    pub x0_opt: Option<f64>,
    pub generalized_optimum: Option<GeneralizedOptimum>,
    pub generalized_epsilon: Option<f64>,
    pub f_range: Option<(f64, f64)>,
}

/// One finished replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub v: f64,
    pub rep: usize,
    pub summary: RunSummary,
}

/// Loaded instance plus configuration, ready to run.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub instance: InstanceConfig,
    pub tables: NetworkTables,
    pub aux: Option<AuxiliaryState>,
    pub config_hash: String,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let text = std::fs::read_to_string(&config.instance).map_err(|e| {
            Error::config("instance", format!("cannot read {}: {e}", config.instance.display()))
        })?;
        let mut instance: InstanceConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: config.instance.display().to_string(),
            source,
        })?;
        if let (Some(a), Some(g)) = (config.alpha, instance.generalized.as_mut()) {
            g.alpha = a;
        }
        Experiment::from_parts(config, instance)
    }

    /// Build from an in-memory instance; `config.instance` is only recorded.
    pub fn from_parts(config: ExperimentConfig, instance: InstanceConfig) -> Result<Self> {
        config.validate()?;
        let system = WirelessSystem::new(instance.clone())?;
        let tables = NetworkTables::build(&system)?;
        let aux = match &instance.generalized {
            Some(g) => Some(AuxiliaryState::from_config(g, &tables.penalty_ranges[1..])?),
            None => None,
        };
        let config_hash = config_hash(&config, &instance);
        Ok(Experiment {
            config,
            instance,
            tables,
            aux,
            config_hash,
        })
    }

    fn scheduler(&self, v: f64) -> Result<Scheduler<'_>> {
        let cfg = self.config.scheduler_config(v);
        match &self.aux {
            Some(aux) => Scheduler::generalized(&self.tables, cfg, aux.clone()),
            None => Scheduler::new(&self.tables, cfg),
        }
    }

    /// Run replication `rep` at `v`. Replications use the same outcome stream
    /// at every V.
    pub fn run_replication(&self, v: f64, rep: usize, observer: &mut dyn Observer) -> Result<RunSummary> {
        let mut sched = self.scheduler(v)?;
        let mut outcomes = rng::stream(self.config.seed, rng::OUTCOMES, rep as u64);
        let mut solver = rng::stream(self.config.seed, rng::SOLVER, rep as u64);
        sched.run(self.config.slots, &mut outcomes, &mut solver, observer)
    }

    /// All replications at every V, in parallel, ordered by `(V index, rep)`.
    pub fn run_all<F>(&self, make_observer: F) -> Result<Vec<Replication>>
    where
        F: Fn(usize, usize) -> Result<Box<dyn Observer + Send>> + Sync,
    {
        let jobs: Vec<(usize, usize)> = (0..self.config.v.len())
            .flat_map(|i| (0..self.config.reps).map(move |r| (i, r)))
            .collect();
        jobs.par_iter()
            .map(|&(i, r)| {
                let v = self.config.v[i];
                let mut obs = make_observer(i, r)?;
                let summary = self.run_replication(v, r, obs.as_mut())?;
                obs.finish()?;
                Ok(Replication { v, rep: r, summary })
            })
            .collect()
    }

    /// Oracle values for the bound checks. `need_optimum` requests the optimal
    /// objective, which is only used when some `V > 0`.
    pub fn oracles(&self, need_optimum: bool) -> Result<OracleValues> {
        let constants = compute_drift_constants(&self.tables, &self.config.renewal, self.aux.as_ref())?;
        match (&self.instance.generalized, &self.aux) {
            (Some(g), Some(aux)) => {
                let optimum = if need_optimum {
                    Some(generalized_optimum(&self.tables, g, FRANK_WOLFE_ITERATIONS, FRANK_WOLFE_GAP)?)
                } else {
                    None
                };
                Ok(OracleValues {
                    constants,
                    epsilon: None,
                    x0_opt: None,
                    generalized_optimum: optimum,
                    generalized_epsilon: generalized_slack(&self.tables, g)?,
                    f_range: Some(aux.objective_range()?),
                })
            }
            _ => {
                let epsilon = lp_max_slack(&self.tables)?;
                let x0_opt = if need_optimum { Some(lp_optimal_penalty(&self.tables)?.0) } else { None };
                Ok(OracleValues {
                    constants,
                    epsilon: Some(epsilon),
                    x0_opt,
                    generalized_optimum: None,
                    generalized_epsilon: None,
                    f_range: None,
                })
            }
        }
    }

    /// Measured performance over the replications at one V. With a single
    /// replication the standard errors come from batch means.
    pub fn measure(&self, reps: &[&RunSummary]) -> MeasuredPerformance {
        let np = self.tables.num_penalties;
        let column = |f: &dyn Fn(&RunSummary) -> f64| Estimate::from_samples(&reps.iter().map(|s| f(s)).collect::<Vec<_>>());
        if reps.len() == 1 {
            let s = reps[0];
            let blocks = &s.penalty_block_means;
            let penalties = (0..np)
                .map(|m| Estimate {
                    mean: s.avg_penalties[m],
                    se: Estimate::from_samples(&blocks.iter().map(|b| b[m]).collect::<Vec<_>>()).se,
                })
                .collect();
            let (objective_of_average, constraints_of_average) = match &self.aux {
                Some(aux) => {
                    let obj_blocks: Vec<f64> = blocks.iter().map(|b| aux.objective.value(&b[1..])).collect();
                    let obj = Estimate {
                        mean: s.objective_of_average.unwrap_or_default(),
                        se: Estimate::from_samples(&obj_blocks).se,
                    };
                    let cons = aux
                        .constraints
                        .iter()
                        .enumerate()
                        .map(|(l, (h, _))| {
                            let hb: Vec<f64> = blocks.iter().map(|b| h.value(&b[1..])).collect();
                            Estimate {
                                mean: s.constraints_of_average.as_ref().map_or(0.0, |c| c[l]),
                                se: Estimate::from_samples(&hb).se,
                            }
                        })
                        .collect();
                    (Some(obj), Some(cons))
                }
                None => (None, None),
            };
            return MeasuredPerformance {
                backlog: Estimate::exact(s.renewal_avg_backlog),
                queue_backlog: Estimate::exact(s.renewal_avg_queue),
                penalties,
                objective_of_average,
                constraints_of_average,
            };
        }
        let penalties = (0..np).map(|m| column(&|s| s.avg_penalties[m])).collect();
        let (objective_of_average, constraints_of_average) = match &self.aux {
            Some(aux) => (
                Some(column(&|s| s.objective_of_average.unwrap_or_default())),
                Some(
                    (0..aux.constraints.len())
                        .map(|l| column(&|s| s.constraints_of_average.as_ref().map_or(0.0, |c| c[l])))
                        .collect(),
                ),
            ),
            None => (None, None),
        };
        MeasuredPerformance {
            backlog: column(&|s| s.renewal_avg_backlog),
            queue_backlog: column(&|s| s.renewal_avg_queue),
            penalties,
            objective_of_average,
            constraints_of_average,
        }
    }

    /// Inputs of the inequalities at one V. `delta` is the largest implied
    /// approximation slack seen by the sampled solver (0 for exact solves).
    pub fn bound_inputs(&self, oracles: &OracleValues, v: f64, delta: f64) -> BoundInputs {
        BoundInputs {
            phi: self.tables.phi,
            v,
            renewal: self.config.renewal,
            constants: oracles.constants,
            c: 0.0,
            delta,
            epsilon: oracles.epsilon,
            x0_opt: oracles.x0_opt,
            x0_range: self.tables.penalty_ranges[0],
            targets: self.tables.targets.clone(),
            relative_slack: self.config.relative_slack,
            generalized: self.instance.generalized.as_ref().map(|g| GeneralizedBounds {
                f_opt: oracles.generalized_optimum.as_ref().map(|o| o.lower),
                f_range: oracles.f_range.unwrap_or((0.0, 0.0)),
                constraint_bounds: g.constraints.iter().map(|c| c.bound).collect(),
                epsilon: oracles.generalized_epsilon,
            }),
        }
    }

    fn header(&self) -> String {
        format!(
            "# mmsched schema={SCHEMA_VERSION} config_hash={} seed={}",
            self.config_hash, self.config.seed
        )
    }

    fn json_header(&self) -> serde_json::Value {
        json!({
            "schema": SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "seed": self.config.seed,
        })
    }
}

/// First 16 hex digits of the SHA-256 of the configuration (without seed and
/// output directory) and the instance contents.
pub fn config_hash(config: &ExperimentConfig, instance: &InstanceConfig) -> String {
    let mut c = config.clone();
    c.seed = 0;
    c.out = PathBuf::new();
    c.instance = PathBuf::new();
    let text = serde_json::to_string(&json!({ "experiment": c, "instance": instance })).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn max_delta(reps: &[&RunSummary]) -> f64 {
    reps.iter().filter_map(|s| s.max_implied_delta).fold(0.0, f64::max)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| Error::io(path.display().to_string(), e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

/// Observer writing the slot trace CSV and the frame JSON lines.
pub struct TraceWriter {
    csv_path: PathBuf,
    csv: BufWriter<File>,
    frames_path: PathBuf,
    frames: BufWriter<File>,
    admit_width: usize,
}

impl TraceWriter {
    pub fn create(exp: &Experiment, csv_path: PathBuf, frames_path: PathBuf) -> Result<Self> {
        let t = &exp.tables;
        let mut csv = create(&csv_path)?;
        let mut frames = create(&frames_path)?;
        let mut cols = vec!["t".to_string(), "state".into(), "outcome".into(), "forced".into(), "serve".into()];
        cols.extend((0..t.num_buffers).map(|k| format!("admit_{k}")));
        cols.extend((0..t.num_penalties).map(|m| format!("x_{m}")));
        cols.extend((0..t.num_queues).map(|n| format!("q_{n}")));
        let (ny, nw) = match &exp.aux {
            Some(a) => (a.constraints.len(), a.dim()),
            None => (t.num_penalties - 1, 0),
        };
        cols.extend((0..ny).map(|m| format!("y_{m}")));
        cols.extend((0..nw).map(|m| format!("w_{m}")));
        writeln!(csv, "{}", exp.header())
            .and_then(|_| writeln!(csv, "{}", cols.join(",")))
            .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
        writeln!(frames, "{}", exp.json_header()).map_err(|e| Error::io(frames_path.display().to_string(), e))?;
        Ok(TraceWriter {
            csv_path,
            csv,
            frames_path,
            frames,
            admit_width: t.num_buffers,
        })
    }
}

impl Observer for TraceWriter {
    fn slot(&mut self, row: &SlotRow<'_>) -> Result<()> {
        let mut line = format!("{},{},{},{},", row.t, row.state, row.outcome.omega, row.outcome.forced_renewal as u8);
        let action = &row.action;
        if let Some(k) = action.serve {
            line.push_str(&k.to_string());
        }
        for k in 0..self.admit_width {
            line.push(',');
            line.push_str(&action.admit[k].to_string());
        }
        for v in row.penalties.iter().chain(&row.theta.q).chain(&row.theta.y).chain(&row.theta.w) {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(self.csv, "{line}").map_err(|e| Error::io(self.csv_path.display().to_string(), e))
    }

    fn frame(&mut self, record: &FrameRecord) -> Result<()> {
        let text = serde_json::to_string(record).map_err(|source| Error::Json {
            path: self.frames_path.display().to_string(),
            source,
        })?;
        writeln!(self.frames, "{text}").map_err(|e| Error::io(self.frames_path.display().to_string(), e))
    }

    fn finish(&mut self) -> Result<()> {
        self.csv.flush().map_err(|e| Error::io(self.csv_path.display().to_string(), e))?;
        self.frames
            .flush()
            .map_err(|e| Error::io(self.frames_path.display().to_string(), e))
    }
}

struct Silent;

impl Observer for Silent {}

fn silent() -> Result<Box<dyn Observer + Send>> {
    Ok(Box::new(Silent))
}

fn group(runs: &[Replication], v_index: usize, reps: usize) -> Vec<&RunSummary> {
    runs[v_index * reps..(v_index + 1) * reps].iter().map(|r| &r.summary).collect()
}

/// `run` mode: traces (when enabled) and `summary.json`.
pub fn cmd_run(config: ExperimentConfig) -> Result<i32> {
    let exp = Experiment::prepare(config)?;
    let out = exp.config.out.clone();
    ensure_dir(&out)?;
    let runs = if exp.config.trace {
        exp.run_all(|i, r| {
            let stem = format!("v{i}_r{r}");
            let w = TraceWriter::create(
                &exp,
                out.join(format!("trace_{stem}.csv")),
                out.join(format!("frames_{stem}.jsonl")),
            )?;
            Ok(Box::new(w) as Box<dyn Observer + Send>)
        })?
    } else {
        exp.run_all(|_, _| silent())?
    };
    let groups: Vec<serde_json::Value> = (0..exp.config.v.len())
        .map(|i| {
            let g = group(&runs, i, exp.config.reps);
            json!({ "v": exp.config.v[i], "measured": exp.measure(&g) })
        })
        .collect();
    let mut summary = exp.json_header();
    summary["instance"] = json!(exp.instance.name);
    summary["aggregate"] = json!(groups);
    summary["replications"] = json!(runs);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(0)
}

/// Result of `verify` at one V.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub v: f64,
    pub measured: MeasuredPerformance,
    pub inputs: BoundInputs,
    pub verdicts: Vec<Verdict>,
}

/// Run the oracles and the simulation and evaluate every inequality.
pub fn verify(exp: &Experiment) -> Result<(OracleValues, Vec<VerifyResult>)> {
    let need_optimum = exp.config.v.iter().any(|&v| v > 0.0);
    let oracles = exp.oracles(need_optimum)?;
    let runs = exp.run_all(|_, _| silent())?;
    let mut results = Vec::new();
    for (i, &v) in exp.config.v.iter().enumerate() {
        let g = group(&runs, i, exp.config.reps);
        let measured = exp.measure(&g);
        let inputs = exp.bound_inputs(&oracles, v, max_delta(&g));
        let verdicts = check_bounds(&measured, &inputs)?;
        results.push(VerifyResult {
            v,
            measured,
            inputs,
            verdicts,
        });
    }
    Ok((oracles, results))
}

/// `verify` mode: writes `verdicts.json`, prints one line per verdict and
/// returns 0 iff every non-vacuous verdict passes.
pub fn cmd_verify(config: ExperimentConfig) -> Result<i32> {
    let exp = Experiment::prepare(config)?;
    let out = exp.config.out.clone();
    ensure_dir(&out)?;
    let (oracles, results) = verify(&exp)?;
    let pass = results.iter().all(|r| all_pass(&r.verdicts));
    for r in &results {
        for v in &r.verdicts {
            let status = if v.vacuous {
                "SKIP"
            } else if v.pass {
                "PASS"
            } else {
                "FAIL"
            };
            println!(
                "{status} v={} {} measured={} bound={} slack={}{}",
                r.v,
                v.inequality,
                v.measured,
                v.bound,
                v.slack,
                if v.note.is_empty() { String::new() } else { format!(" ({})", v.note) }
            );
        }
    }
    let mut report = exp.json_header();
    report["instance"] = json!(exp.instance.name);
    report["oracles"] = json!(oracles);
    report["results"] = json!(results);
    report["pass"] = json!(pass);
    write_json(&out.join("verdicts.json"), &report)?;
    Ok(if pass { 0 } else { VERDICT_FAILURE_EXIT })
}

/// One row of the tradeoff table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub v: f64,
    /// `None` for `V = 0`, where the objective is not optimized.
    pub x0: Option<Estimate>,
    pub backlog: Estimate,
    pub penalty_bound: Option<f64>,
    pub backlog_bound: Option<f64>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

/// `sweep` mode: `tradeoff.csv` and `summary.json`.
pub fn cmd_sweep(config: ExperimentConfig) -> Result<i32> {
    if config.v.len() < 2 {
        return Err(Error::config("v", "a sweep needs at least two values of V"));
    }
    let exp = Experiment::prepare(config)?;
    let out = exp.config.out.clone();
    ensure_dir(&out)?;
    let oracles = match exp.oracles(exp.instance.generalized.is_none()) {
        Ok(o) => Some(o),
        Err(Error::Capacity { .. }) | Err(Error::MissingOracle(_)) => None,
        Err(e) => return Err(e),
    };
    let runs = exp.run_all(|_, _| silent())?;
    let mut rows = Vec::new();
    for (i, &v) in exp.config.v.iter().enumerate() {
        let g = group(&runs, i, exp.config.reps);
        let measured = exp.measure(&g);
        let (penalty_bound, backlog_bound) = match &oracles {
            Some(o) if exp.instance.generalized.is_none() => {
                let inputs = exp.bound_inputs(o, v, max_delta(&g));
                let eps = o.epsilon.unwrap_or(0.0);
                if v == 0.0 {
                    (None, feasibility_backlog_bound(&inputs, eps))
                } else if exp.config.renewal.kind == RenewalKind::Type2 {
                    (
                        o.x0_opt.map(|x| optimization_penalty_bound(&inputs, x, eps)),
                        optimization_backlog_bound(&inputs, eps),
                    )
                } else {
                    (None, None)
                }
            }
            _ => (None, None),
        };
        rows.push(TradeoffRow {
            v,
            x0: (v > 0.0).then(|| measured.penalties[0]),
            backlog: measured.backlog,
            penalty_bound,
            backlog_bound,
        });
    }
    let path = out.join("tradeoff.csv");
    let mut w = create(&path)?;
    let io = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "{}", exp.header()).map_err(io)?;
    writeln!(w, "v,x0_mean,x0_se,backlog_mean,backlog_se,x0_opt,penalty_bound,backlog_bound").map_err(io)?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.v,
            fmt_opt(r.x0.map(|e| e.mean)),
            fmt_opt(r.x0.map(|e| e.se)),
            r.backlog.mean,
            r.backlog.se,
            fmt_opt(oracles.as_ref().and_then(|o| o.x0_opt).filter(|_| r.v > 0.0)),
            fmt_opt(r.penalty_bound),
            fmt_opt(r.backlog_bound),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    let mut summary = exp.json_header();
    summary["instance"] = json!(exp.instance.name);
    summary["oracles"] = json!(oracles);
    summary["rows"] = json!(rows);
    summary["replications"] = json!(runs);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(0)
}

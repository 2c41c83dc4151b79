//! Frame-based drift-plus-penalty scheduler.
//!
//! At every renewal slot the backlogs are frozen, the frame's shortest-path
//! problem is solved (exactly or by sampled Robbins-Monro iterations) and the
//! greedy action with respect to the resulting cost-to-go is played every slot
//! until the next renewal, while the real and virtual queues keep evolving.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auxiliary::{aux_minimize, AuxiliaryState};
use crate::error::{Error, Result};
use crate::model::{ControlAction, Outcome, OutcomeSampler};
use crate::queues::{lyapunov, update_q, update_w, update_y, update_yl, CombinedBacklog, DelayTracker};
use crate::ssp::{
    evaluate_greedy_policy_under, fixed_gamma_cost_error, iterate_classic, iterate_fixed_gamma, noise_bound,
    solve_exact_from, stage_cost,
    CostVector, FrozenAux, SolverConfig, SolverMode, SspProblem, StageCostContext, Termination,
};
use crate::tables::NetworkTables;

/// Number of equal slot blocks used for batch-means standard errors.
pub const BATCH_BLOCKS: usize = 20;
/// Number of points kept in the `|W|` trace.
pub const TRACE_POINTS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalKind {
    /// Every slot with `z = 0`.
    Type1,
    /// The slot after every forced renewal (and `t = 0`).
    Type2,
    /// Every `b`-th slot with `z = 0`.
    Type3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalConfig {
    pub kind: RenewalKind,
    #[serde(default = "one")]
    pub b: u32,
}

fn one() -> u32 {
    1
}

impl RenewalConfig {
    pub fn type1() -> Self {
        RenewalConfig { kind: RenewalKind::Type1, b: 1 }
    }

    pub fn type2() -> Self {
        RenewalConfig { kind: RenewalKind::Type2, b: 1 }
    }

    pub fn type3(b: u32) -> Self {
        RenewalConfig { kind: RenewalKind::Type3, b }
    }

    /// Frames of type 3 reuse the type-1 problem on each sub-interval; the
    /// backlogs stay frozen, so the same cost-to-go is optimal on each of them.
    pub fn termination(&self) -> Termination {
        match self.kind {
            RenewalKind::Type2 => Termination::ForcedOnly,
            RenewalKind::Type1 | RenewalKind::Type3 => Termination::ZeroState,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == RenewalKind::Type3 && self.b == 0 {
            return Err(Error::config("renewal_b", "must be a positive integer"));
        }
        Ok(())
    }
}

/// Whether slot `t` starts a new frame. `visits` counts zero-state slots since the
/// last type-3 renewal and is reset here when one occurs.
pub fn detect_renewal(cfg: &RenewalConfig, z_is_zero: bool, prev_forced: bool, t: u64, visits: &mut u32) -> bool {
    match cfg.kind {
        RenewalKind::Type1 => z_is_zero,
        RenewalKind::Type2 => t == 0 || prev_forced,
        RenewalKind::Type3 => {
            if t == 0 {
                *visits = 0;
                return true;
            }
            if !z_is_zero {
                return false;
            }
            *visits += 1;
            if *visits >= cfg.b {
                *visits = 0;
                true
            } else {
                false
            }
        }
    }
}

/// What was observed at the start of slot `t`, before the slot's update.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotLog {
    pub t: u64,
    pub omega: usize,
    pub forced: bool,
    pub theta: CombinedBacklog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistorySample {
    /// Newest first.
    pub samples: Vec<usize>,
    pub theta_start: CombinedBacklog,
    pub t_start: u64,
    /// `t_g − t_start`.
    pub gap: u64,
}

/// Past outcomes to sample from at a renewal. `log` is consecutive in time and ends
/// at the renewal slot. Type 2 takes the `w` most recent slots; types 1 and 3 take
/// `w` slots going backwards from the latest forced renewal at or before the
/// renewal slot. `None` when the log does not reach back far enough.
pub fn collect_history_samples(log: &[SlotLog], w: usize, kind: RenewalKind) -> Option<HistorySample> {
    if w == 0 || log.is_empty() {
        return None;
    }
    let t_g = log[log.len() - 1].t;
    let end = match kind {
        RenewalKind::Type2 => log.len() - 1,
        RenewalKind::Type1 | RenewalKind::Type3 => log.iter().rposition(|s| s.forced)?,
    };
    if end + 1 < w {
        return None;
    }
    let start = end + 1 - w;
    Some(HistorySample {
        samples: log[start..=end].iter().rev().map(|s| s.omega).collect(),
        theta_start: log[start].theta.clone(),
        t_start: log[start].t,
        gap: t_g - log[start].t,
    })
}

/// Rolling store of the last `w` slot logs plus the window captured at the latest
/// forced renewal; equivalent to [`collect_history_samples`] on the full log.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    w: usize,
    ring: VecDeque<SlotLog>,
    forced_window: Option<(Vec<usize>, CombinedBacklog, u64)>,
}

impl HistoryBuffer {
    pub fn new(w: usize) -> Self {
        HistoryBuffer {
            w,
            ring: VecDeque::with_capacity(w + 1),
            forced_window: None,
        }
    }

    pub fn push(&mut self, entry: SlotLog) {
        self.ring.push_back(entry);
        if self.ring.len() > self.w {
            self.ring.pop_front();
        }
        let newest = &self.ring[self.ring.len() - 1];
        if newest.forced && self.ring.len() == self.w {
            let samples = self.ring.iter().rev().map(|s| s.omega).collect();
            let oldest = &self.ring[0];
            self.forced_window = Some((samples, oldest.theta.clone(), oldest.t));
        }
    }

    pub fn collect(&self, kind: RenewalKind) -> Option<HistorySample> {
        let t_g = self.ring.back()?.t;
        match kind {
            RenewalKind::Type2 => {
                if self.ring.len() < self.w {
                    return None;
                }
                let oldest = &self.ring[0];
                Some(HistorySample {
                    samples: self.ring.iter().rev().map(|s| s.omega).collect(),
                    theta_start: oldest.theta.clone(),
                    t_start: oldest.t,
                    gap: t_g - oldest.t,
                })
            }
            RenewalKind::Type1 | RenewalKind::Type3 => {
                let (samples, theta, t_start) = self.forced_window.as_ref()?;
                Some(HistorySample {
                    samples: samples.clone(),
                    theta_start: theta.clone(),
                    t_start: *t_start,
                    gap: t_g - t_start,
                })
            }
        }
    }
}

/// `β/φ` with `β = max |c_{Θ₁} − c_{Θ₂}|` over every option and renewal flag.
/// In the base algorithm the difference is evaluated on the backlog difference
/// directly, so the result does not depend on `V`.
pub fn mismatch_bound(tables: &NetworkTables, ctx1: &StageCostContext, ctx2: &StageCostContext) -> f64 {
    let mut beta = 0.0f64;
    if ctx1.aux.is_none() && ctx2.aux.is_none() {
        let diff = ctx1.difference(ctx2);
        for a in 0..tables.num_options() {
            for forced in [false, true] {
                beta = beta.max(stage_cost(&diff, tables, a, forced).abs());
            }
        }
    } else {
        for a in 0..tables.num_options() {
            for forced in [false, true] {
                let d = stage_cost(ctx1, tables, a, forced) - stage_cost(ctx2, tables, a, forced);
                beta = beta.max(d.abs());
            }
        }
    }
    beta / tables.phi
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub renewal: RenewalConfig,
    pub solver: SolverConfig,
    pub v: f64,
    /// Draw Robbins-Monro batches from the last `W` observed outcomes and weight
    /// the frame by the backlog at the oldest sample.
    #[serde(default)]
    pub history: Option<usize>,
    /// Re-solve every slot with the current backlog instead of the frozen one.
    #[serde(default)]
    pub per_slot_weights: bool,
    /// Keep the full cost-to-go and change history in every frame record.
    #[serde(default)]
    pub dump_iterates: bool,
    /// Measure the realized approximation error of the sampled solver on every
    /// `delta_stride`-th frame; 0 turns the measurement off.
    #[serde(default = "default_delta_stride")]
    pub delta_stride: u64,
}

fn default_delta_stride() -> u64 {
    16
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            renewal: RenewalConfig::type2(),
            solver: SolverConfig::default(),
            v: 0.0,
            history: None,
            per_slot_weights: false,
            dump_iterates: false,
            delta_stride: default_delta_stride(),
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        self.renewal.validate()?;
        self.solver.validate()?;
        if !(self.v.is_finite() && self.v >= 0.0) {
            return Err(Error::config("v", "must be finite and nonnegative"));
        }
        if let Some(w) = self.history {
            if self.solver.mode == SolverMode::Exact {
                return Err(Error::config("history", "history sampling needs a Robbins-Monro solver"));
            }
            if w == 0 {
                return Err(Error::config("history", "must be positive"));
            }
            let need = self.solver.batch_size.saturating_mul(self.solver.iterations);
            if need > w {
                return Err(Error::config(
                    "history",
                    format!("{} iterations of batch {} need {need} samples but history holds {w}", self.solver.iterations, self.solver.batch_size),
                ));
            }
        }
        if self.per_slot_weights && self.solver.mode != SolverMode::Exact {
            return Err(Error::config("per_slot_weights", "only supported with the exact solver"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub mode: Option<SolverMode>,
    pub sweeps: usize,
    pub iterations: usize,
    pub last_change: f64,
    pub c_max: f64,
    pub j_max: f64,
    pub j_norm: f64,
    /// Frames solved exactly because the history was too short.
    pub bootstrap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history_gap: Option<u64>,
    /// `β/φ` between the backlog at the renewal and the one used for the costs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<f64>,
    /// Analytic fixed-γ bound on the expected frame-cost excess.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_envelope: Option<f64>,
    /// Expected frame cost of the played policy minus the optimum, both under
    /// the costs weighted by `Θ(t_g)`, from the frame's starting state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized_gap: Option<f64>,
    /// `realized_gap / max(max_n Q_n, max_m |Y_m|, V)` at `t_g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub changes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub start: u64,
    pub duration: u64,
    /// Ended by the slot budget rather than a renewal.
    pub truncated: bool,
    /// Backlog at the renewal slot.
    pub theta: CombinedBacklog,
    /// Backlog used for the stage costs, when it differs from `theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_theta: Option<CombinedBacklog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// `x_0..x_M` summed over the frame.
    pub penalty_sums: Vec<f64>,
    /// Per-slot penalties, kept when the observer asks for them.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub slot_penalties: Vec<Vec<f64>>,
    /// Sum of the frozen-weight stage costs actually incurred.
    pub frame_cost: f64,
    pub solver: SolverDiagnostics,
}

/// One slot as seen by an observer, after its update.
#[derive(Clone, Debug)]
pub struct SlotRow<'a> {
    pub t: u64,
    pub state: usize,
    pub outcome: Outcome,
    /// Option index into the network tables.
    pub option: usize,
    pub action: &'a ControlAction,
    pub penalties: &'a [f64],
    /// Backlog after the update, i.e. `Θ(t + 1)`.
    pub theta: &'a CombinedBacklog,
}

pub trait Observer {
    fn slot(&mut self, _row: &SlotRow<'_>) -> Result<()> {
        Ok(())
    }

    fn frame(&mut self, _record: &FrameRecord) -> Result<()> {
        Ok(())
    }

    fn wants_slot_penalties(&self) -> bool {
        false
    }

    /// Called once after the last slot of a run driven by the caller.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

pub struct NoObserver;

impl Observer for NoObserver {}

/// Collects frame records in memory.
#[derive(Default)]
pub struct FrameCollector {
    pub frames: Vec<FrameRecord>,
    pub slot_penalties: bool,
}

impl Observer for FrameCollector {
    fn frame(&mut self, record: &FrameRecord) -> Result<()> {
        self.frames.push(record.clone());
        Ok(())
    }

    fn wants_slot_penalties(&self) -> bool {
        self.slot_penalties
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub served: Vec<u64>,
    pub mean_delay: Vec<Option<f64>>,
    pub flushed: Vec<u64>,
    /// Time-average buffer occupancy `Z̄_k`.
    pub mean_occupancy: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub slots: u64,
    /// Renewals started, including a truncated final frame.
    pub frames: u64,
    pub completed_frames: u64,
    pub mean_frame_length: f64,
    pub frame_length_second_moment: f64,
    /// Time averages of `x_0..x_M`.
    pub avg_penalties: Vec<f64>,
    /// Per-block averages of `x_0..x_M` over [`BATCH_BLOCKS`] equal slot blocks.
    pub penalty_block_means: Vec<Vec<f64>>,
    pub avg_q: Vec<f64>,
    pub avg_y: Vec<f64>,
    pub avg_w: Vec<f64>,
    /// Average over renewals of `Σ_n Q_n(t_g)`.
    pub renewal_avg_queue: f64,
    /// Average over renewals of `Σ_n Q_n(t_g) + Σ_m Y_m(t_g)`.
    pub renewal_avg_backlog: f64,
    pub final_theta: CombinedBacklog,
    pub delays: DelayStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_gamma: Option<Vec<f64>>,
    /// Time average of `f(γ(t))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_objective: Option<f64>,
    /// `f(x̄)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_of_average: Option<f64>,
    /// `h_l(x̄)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints_of_average: Option<Vec<f64>>,
    /// `(t, max_m |W_m(t)|)` at evenly spaced slots.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub w_trace: Vec<(u64, f64)>,
    pub bootstrap_frames: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_implied_delta: Option<f64>,
    pub total_sweeps: u64,
    pub total_iterations: u64,
}

#[derive(Clone, Debug, Default)]
struct Accumulators {
    penalty_sums: Vec<f64>,
    block_sums: Vec<Vec<f64>>,
    block_slots: Vec<u64>,
    q_sums: Vec<f64>,
    y_sums: Vec<f64>,
    w_sums: Vec<f64>,
    occupancy_sums: Vec<f64>,
    renewal_queue: f64,
    renewal_backlog: f64,
    frame_len_sum: f64,
    frame_len_sq: f64,
    completed: u64,
    gamma_sums: Vec<f64>,
    objective_sum: f64,
    w_trace: Vec<(u64, f64)>,
    bootstrap: u64,
    max_delta: Option<f64>,
    sweeps: u64,
    iterations: u64,
}

/// Scheduler state carried across frames.
pub struct Scheduler<'a> {
    tables: &'a NetworkTables,
    cfg: SchedulerConfig,
    aux: Option<AuxiliaryState>,
    sampler: OutcomeSampler,
    t: u64,
    z: usize,
    theta: CombinedBacklog,
    prev_forced: bool,
    visits: u32,
    history: Option<HistoryBuffer>,
    warm: Option<CostVector>,
    warm_reference: Option<CostVector>,
    delays: DelayTracker,
    frames: u64,
    horizon: u64,
    acc: Accumulators,
}

impl<'a> Scheduler<'a> {
    /// Base algorithm on the given tables.
    pub fn new(tables: &'a NetworkTables, cfg: SchedulerConfig) -> Result<Self> {
        Scheduler::build(tables, cfg, None)
    }

    /// Generalized algorithm with auxiliary variables `γ` for the penalties
    /// `x_1..x_M`; the objective slot `x_0` is ignored.
    pub fn generalized(tables: &'a NetworkTables, cfg: SchedulerConfig, aux: AuxiliaryState) -> Result<Self> {
        if aux.dim() + 1 != tables.num_penalties {
            return Err(Error::config(
                "generalized",
                format!("{} auxiliary variables for {} penalties", aux.dim(), tables.num_penalties - 1),
            ));
        }
        Scheduler::build(tables, cfg, Some(aux))
    }

    fn build(tables: &'a NetworkTables, cfg: SchedulerConfig, aux: Option<AuxiliaryState>) -> Result<Self> {
        cfg.validate()?;
        let sampler = OutcomeSampler::new(&tables.probs, tables.phi)?;
        let (ny, nw) = match &aux {
            None => (tables.num_penalties - 1, 0),
            Some(a) => (a.constraints.len(), a.dim()),
        };
        let m = tables.num_penalties;
        Ok(Scheduler {
            tables,
            history: cfg.history.map(HistoryBuffer::new),
            cfg,
            sampler,
            t: 0,
            z: 0,
            theta: CombinedBacklog::zeros(tables.num_queues, ny, nw),
            prev_forced: false,
            visits: 0,
            warm: None,
            warm_reference: None,
            delays: DelayTracker::new(tables.num_buffers),
            frames: 0,
            horizon: 0,
            acc: Accumulators {
                penalty_sums: vec![0.0; m],
                block_sums: vec![vec![0.0; m]; BATCH_BLOCKS],
                block_slots: vec![0; BATCH_BLOCKS],
                q_sums: vec![0.0; tables.num_queues],
                y_sums: vec![0.0; ny],
                w_sums: vec![0.0; nw],
                occupancy_sums: vec![0.0; tables.num_buffers],
                gamma_sums: vec![0.0; nw],
                ..Default::default()
            },
            aux,
        })
    }

    pub fn slot(&self) -> u64 {
        self.t
    }

    pub fn state(&self) -> usize {
        self.z
    }

    pub fn theta(&self) -> &CombinedBacklog {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: CombinedBacklog) -> Result<()> {
        if theta.q.len() != self.theta.q.len() || theta.y.len() != self.theta.y.len() || theta.w.len() != self.theta.w.len() {
            return Err(Error::Domain("backlog shape does not match the scheduler".into()));
        }
        self.theta = theta;
        Ok(())
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn auxiliary(&self) -> Option<&AuxiliaryState> {
        self.aux.as_ref()
    }

    /// Frozen context for backlog `theta`.
    pub fn context(&self, theta: &CombinedBacklog) -> Result<StageCostContext> {
        let mut ctx = StageCostContext::new(theta.clone(), self.cfg.v);
        if let Some(aux) = &self.aux {
            let gamma = aux_minimize(theta, self.cfg.v, aux)?;
            ctx.aux = Some(FrozenAux {
                objective: aux.objective.value(&gamma),
                constraint_values: aux.constraints.iter().map(|(h, _)| h.value(&gamma)).collect(),
                constraint_bounds: aux.constraints.iter().map(|(_, c)| *c).collect(),
                gamma,
            });
        }
        Ok(ctx)
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Outcome {
        let outcome = self.sampler.sample(rng);
        if let Some(h) = &mut self.history {
            h.push(SlotLog {
                t: self.t,
                omega: outcome.omega,
                forced: outcome.forced_renewal,
                theta: self.theta.clone(),
            });
        }
        outcome
    }

    fn solve_exact(&mut self, problem: &SspProblem<'_>, diag: &mut SolverDiagnostics) -> Result<CostVector> {
        let init = if self.cfg.solver.warm_start { self.warm.as_ref() } else { None };
        let sol = solve_exact_from(problem, init, self.cfg.solver.exact_tolerance, self.cfg.solver.max_sweeps)?;
        diag.sweeps = sol.sweeps;
        diag.last_change = *sol.changes.last().unwrap_or(&0.0);
        if self.cfg.dump_iterates {
            diag.changes = Some(sol.changes);
        }
        Ok(sol.j)
    }

    fn solve_sampled(
        &mut self,
        problem: &SspProblem<'_>,
        samples: &[usize],
        diag: &mut SolverDiagnostics,
    ) -> Result<CostVector> {
        let s = &self.cfg.solver;
        let mut j0 = match (&self.warm, s.warm_start) {
            (Some(j), true) => j.clone(),
            _ => CostVector::zeros(problem.num_states()),
        };
        j0.clamp(problem.j_max());
        let mut changes = Vec::new();
        let mut prev = j0.clone();
        let dump = self.cfg.dump_iterates;
        let observe = |_: usize, j: &CostVector| {
            if dump {
                changes.push(j.distance(&prev));
                prev = j.clone();
            }
        };
        let j = match s.mode {
            SolverMode::RmClassic => iterate_classic(problem, &j0, s.batch_size, s.iterations, samples, observe)?,
            SolverMode::RmFixed => {
                iterate_fixed_gamma(problem, &j0, s.gamma, s.batch_size, s.iterations, samples, observe)?
            }
            SolverMode::Exact => unreachable!("sampled solve requested in exact mode"),
        };
        diag.iterations = s.iterations;
        if dump {
            diag.changes = Some(changes);
        }
        Ok(j)
    }

    /// Run one frame starting at the current slot, which must be a renewal, and
    /// stop at the next renewal or at slot `limit`.
    pub fn run_frame<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        outcomes: &mut R1,
        solver_rng: &mut R2,
        limit: u64,
        observer: &mut dyn Observer,
    ) -> Result<FrameRecord> {
        if self.t >= limit {
            return Err(Error::Domain("slot budget already exhausted".into()));
        }
        let tables = self.tables;
        let t_g = self.t;
        let theta_g = self.theta.clone();
        self.acc.renewal_queue += theta_g.queue_sum();
        self.acc.renewal_backlog += theta_g.queue_sum() + theta_g.y.iter().sum::<f64>();

        let mut outcome = self.draw(outcomes);
        let mut diag = SolverDiagnostics {
            mode: Some(self.cfg.solver.mode),
            ..Default::default()
        };
        let termination = self.cfg.renewal.termination();

        // backlog that weights this frame's stage costs
        let mut history_sample = None;
        if self.cfg.solver.mode != SolverMode::Exact {
            if let Some(h) = &self.history {
                history_sample = h.collect(self.cfg.renewal.kind);
                if history_sample.is_none() {
                    diag.bootstrap = true;
                }
            }
        }
        let cost_theta = history_sample.as_ref().map_or(theta_g.clone(), |h| h.theta_start.clone());
        let ctx = self.context(&cost_theta)?;
        let mut problem = SspProblem::new(tables, &ctx, termination);
        diag.c_max = problem.c_max();
        diag.j_max = problem.j_max();

        let j = if self.cfg.solver.mode == SolverMode::Exact || diag.bootstrap {
            self.solve_exact(&problem, &mut diag)?
        } else {
            let samples = match &history_sample {
                Some(h) => h.samples.clone(),
                None => {
                    let need = self.cfg.solver.batch_size * self.cfg.solver.iterations;
                    (0..need).map(|_| self.sampler.sample_omega(solver_rng)).collect()
                }
            };
            let j = self.solve_sampled(&problem, &samples, &mut diag)?;
            if self.cfg.solver.mode == SolverMode::RmFixed {
                diag.error_envelope = Some(fixed_gamma_cost_error(
                    self.cfg.solver.gamma,
                    noise_bound(problem.c_max(), tables.phi, self.cfg.solver.batch_size),
                    tables.phi,
                ));
            }
            let ctx_g = match &history_sample {
                Some(h) => {
                    diag.history_gap = Some(h.gap);
                    let ctx_g = self.context(&theta_g)?;
                    diag.mismatch = Some(mismatch_bound(tables, &ctx_g, &ctx));
                    ctx_g
                }
                None => ctx.clone(),
            };
            let stride = self.cfg.delta_stride;
            if stride > 0 && self.frames.is_multiple_of(stride) {
                let reference = SspProblem::new(tables, &ctx_g, termination);
                let tol = self.cfg.solver.exact_tolerance;
                let star = solve_exact_from(&reference, self.warm_reference.as_ref(), tol, self.cfg.solver.max_sweeps)?.j;
                let played = evaluate_greedy_policy_under(&problem, &j, &reference, tol)?;
                let gap = (played.get(self.z) - star.get(self.z)).max(0.0);
                diag.realized_gap = Some(gap);
                let scale = theta_g.max_abs().max(self.cfg.v);
                if scale > 0.0 {
                    let delta = gap / scale;
                    diag.implied_delta = Some(delta);
                    self.acc.max_delta = Some(self.acc.max_delta.map_or(delta, |d: f64| d.max(delta)));
                }
                self.warm_reference = Some(star);
            }
            j
        };
        diag.j_norm = j.norm();
        if self.cfg.dump_iterates {
            diag.j = Some(j.states().to_vec());
        }
        if diag.bootstrap {
            self.acc.bootstrap += 1;
        }
        self.acc.sweeps += diag.sweeps as u64;
        self.acc.iterations += diag.iterations as u64;
        self.warm = Some(j.clone());
        let mut j = j;

        let keep_slots = observer.wants_slot_penalties();
        let frozen_aux = ctx.aux.clone();
        if let Some(a) = &frozen_aux {
            for (s, g) in self.acc.gamma_sums.iter_mut().zip(&a.gamma) {
                *s += g;
            }
        }
        let mut penalty_sums = vec![0.0; tables.num_penalties];
        let mut slot_penalties = Vec::new();
        let mut frame_cost = 0.0;
        let mut duration = 0u64;
        let truncated;
        loop {
            let z = self.z;
            if self.cfg.per_slot_weights && duration > 0 {
                let ctx_now = self.context(&self.theta)?;
                problem = SspProblem::new(tables, &ctx_now, termination);
                let init = Some(&j);
                j = solve_exact_from(&problem, init, self.cfg.solver.exact_tolerance, self.cfg.solver.max_sweeps)?.j;
            }
            let a = problem.greedy(&j, z, outcome.omega, outcome.forced_renewal);
            frame_cost += problem.cost(a, outcome.forced_renewal);
            let x = tables.penalties(a, outcome.forced_renewal);
            self.apply(a, outcome, x, frozen_aux.as_ref());
            for (s, v) in penalty_sums.iter_mut().zip(x) {
                *s += v;
            }
            if keep_slots {
                slot_penalties.push(x.to_vec());
            }
            observer.slot(&SlotRow {
                t: self.t,
                state: z,
                outcome,
                option: a,
                action: tables.action(a),
                penalties: x,
                theta: &self.theta,
            })?;
            duration += 1;
            self.t += 1;
            self.prev_forced = outcome.forced_renewal;
            if self.t >= limit {
                truncated = !detect_renewal(&self.cfg.renewal, self.z == 0, self.prev_forced, self.t, &mut self.visits.clone());
                break;
            }
            if detect_renewal(&self.cfg.renewal, self.z == 0, self.prev_forced, self.t, &mut self.visits) {
                truncated = false;
                break;
            }
            outcome = self.draw(outcomes);
        }

        if !truncated {
            self.acc.completed += 1;
            self.acc.frame_len_sum += duration as f64;
            self.acc.frame_len_sq += (duration * duration) as f64;
        }
        if let Some(a) = &frozen_aux {
            self.acc.objective_sum += a.objective * duration as f64;
        }
        let record = FrameRecord {
            index: self.frames,
            start: t_g,
            duration,
            truncated,
            cost_theta: (cost_theta != theta_g).then_some(cost_theta),
            theta: theta_g,
            gamma: frozen_aux.map(|a| a.gamma),
            penalty_sums,
            slot_penalties,
            frame_cost,
            solver: diag,
        };
        self.frames += 1;
        observer.frame(&record)?;
        Ok(record)
    }

    /// Alias of [`Scheduler::run_frame`] for a scheduler built with
    /// [`Scheduler::generalized`].
    pub fn run_generalized_frame<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        outcomes: &mut R1,
        solver_rng: &mut R2,
        limit: u64,
        observer: &mut dyn Observer,
    ) -> Result<FrameRecord> {
        if self.aux.is_none() {
            return Err(Error::Domain("scheduler has no auxiliary problem".into()));
        }
        self.run_frame(outcomes, solver_rng, limit, observer)
    }

    fn apply(&mut self, a: usize, outcome: Outcome, x: &[f64], aux: Option<&FrozenAux>) {
        let tables = self.tables;
        let t = self.t;
        if self.horizon > 0 {
            let block = ((t as u128 * BATCH_BLOCKS as u128) / self.horizon as u128) as usize;
            let block = block.min(BATCH_BLOCKS - 1);
            for (s, v) in self.acc.block_sums[block].iter_mut().zip(x) {
                *s += v;
            }
            self.acc.block_slots[block] += 1;
        }
        for (s, v) in self.acc.penalty_sums.iter_mut().zip(x) {
            *s += v;
        }
        for (k, s) in self.acc.occupancy_sums.iter_mut().enumerate() {
            *s += self.delays.occupancy(k) as f64;
        }

        let mu = tables.service(a);
        let r = tables.arrivals(a);
        for (n, q) in self.theta.q.iter_mut().enumerate() {
            *q = update_q(*q, mu[n], r[n]);
        }
        match aux {
            None => {
                for (m, y) in self.theta.y.iter_mut().enumerate() {
                    *y = update_y(*y, tables.targets[m], x[m + 1]);
                }
            }
            Some(fa) => {
                for (m, w) in self.theta.w.iter_mut().enumerate() {
                    *w = update_w(*w, fa.gamma[m], x[m + 1]);
                }
                for (l, y) in self.theta.y.iter_mut().enumerate() {
                    *y = update_yl(*y, fa.constraint_bounds[l], fa.constraint_values[l]);
                }
            }
        }
        for (s, q) in self.acc.q_sums.iter_mut().zip(&self.theta.q) {
            *s += q;
        }
        for (s, y) in self.acc.y_sums.iter_mut().zip(&self.theta.y) {
            *s += y;
        }
        for (s, w) in self.acc.w_sums.iter_mut().zip(&self.theta.w) {
            *s += w;
        }
        if !self.theta.w.is_empty() && self.horizon > 0 {
            let stride = (self.horizon / TRACE_POINTS).max(1);
            if (t + 1).is_multiple_of(stride) {
                let wmax = self.theta.w.iter().fold(0.0f64, |m, w| m.max(w.abs()));
                self.acc.w_trace.push((t + 1, wmax));
            }
        }

        self.delays.slot(t, tables.buffer_served(a), &tables.action(a).admit, outcome.forced_renewal);
        self.z = if outcome.forced_renewal { 0 } else { tables.next_state(a) };
    }

    /// Run frames until `slots` slots have elapsed in total.
    pub fn run<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        slots: u64,
        outcomes: &mut R1,
        solver_rng: &mut R2,
        observer: &mut dyn Observer,
    ) -> Result<RunSummary> {
        self.horizon = slots;
        while self.t < slots {
            self.run_frame(outcomes, solver_rng, slots, observer)?;
        }
        Ok(self.summary())
    }

    pub fn summary(&self) -> RunSummary {
        let t = self.t.max(1) as f64;
        let avg = |v: &[f64]| v.iter().map(|s| s / t).collect::<Vec<_>>();
        let acc = &self.acc;
        let avg_penalties = avg(&acc.penalty_sums);
        let penalty_block_means = acc
            .block_sums
            .iter()
            .zip(&acc.block_slots)
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| s.iter().map(|v| v / n as f64).collect())
            .collect();
        let frames = self.frames.max(1) as f64;
        let completed = acc.completed.max(1) as f64;
        let (objective_of_average, constraints_of_average) = match &self.aux {
            Some(aux) => {
                let xbar = &avg_penalties[1..];
                (
                    Some(aux.objective.value(xbar)),
                    Some(aux.constraints.iter().map(|(h, _)| h.value(xbar)).collect()),
                )
            }
            None => (None, None),
        };
        RunSummary {
            slots: self.t,
            frames: self.frames,
            completed_frames: acc.completed,
            mean_frame_length: acc.frame_len_sum / completed,
            frame_length_second_moment: acc.frame_len_sq / completed,
            avg_penalties,
            penalty_block_means,
            avg_q: avg(&acc.q_sums),
            avg_y: avg(&acc.y_sums),
            avg_w: avg(&acc.w_sums),
            renewal_avg_queue: acc.renewal_queue / frames,
            renewal_avg_backlog: acc.renewal_backlog / frames,
            final_theta: self.theta.clone(),
            delays: DelayStats {
                served: self.delays.served.clone(),
                mean_delay: (0..self.tables.num_buffers).map(|k| self.delays.mean_delay(k)).collect(),
                flushed: self.delays.flushed.clone(),
                mean_occupancy: avg(&acc.occupancy_sums),
            },
            avg_gamma: self.aux.as_ref().map(|_| acc.gamma_sums.iter().map(|g| g / frames).collect()),
            avg_objective: self.aux.as_ref().map(|_| acc.objective_sum / t),
            objective_of_average,
            constraints_of_average,
            w_trace: acc.w_trace.clone(),
            bootstrap_frames: acc.bootstrap,
            max_implied_delta: acc.max_delta,
            total_sweeps: acc.sweeps,
            total_iterations: acc.iterations,
        }
    }

    pub fn lyapunov(&self) -> f64 {
        lyapunov(&self.theta)
    }
}

//! Weighted stochastic shortest path over one renewal frame.
//!
//! With backlogs frozen at the frame start, the frame cost-to-go `J` satisfies
//! `J = ΨJ` where
//!
//! ```text
//! (ΨJ)_z = Σ_ω p(ω) [ φ·min_I c¹(I,ω,z) + (1−φ)·min_I ( c⁰(I,ω,z) + J_{next(I,ω,z)} ) ]
//! ```
//!
//! and the terminal state `r` has `J_r = 0`. `Ψ` is a `(1−φ)`-contraction in the
//! sup norm, so value iteration converges geometrically; the sampled operator
//! `Ψ̃` replaces the expectation over `ω` by a batch average and drives the
//! Robbins-Monro iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queues::CombinedBacklog;
use crate::tables::NetworkTables;

pub const DEFAULT_EXACT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

/// Cost-to-go indexed by Markov state, plus the terminal entry (always 0) last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    values: Vec<f64>,
}

impl CostVector {
    pub fn zeros(num_states: usize) -> Self {
        CostVector {
            values: vec![0.0; num_states + 1],
        }
    }

    /// Entries for the Markov states; the terminal entry is appended.
    pub fn from_states(mut states: Vec<f64>) -> Self {
        states.push(0.0);
        CostVector { values: states }
    }

    pub fn num_states(&self) -> usize {
        self.values.len() - 1
    }

    pub fn states(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn get(&self, z: usize) -> f64 {
        self.values[z]
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Sup norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, other: &CostVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Squared Euclidean distance over the Markov-state entries.
    pub fn squared_distance(&self, other: &CostVector) -> f64 {
        self.states()
            .iter()
            .zip(other.states())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Clamp every entry into `[-radius, radius]`.
    pub fn clamp(&mut self, radius: f64) {
        for v in &mut self.values {
            *v = v.clamp(-radius, radius);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Exact,
    RmClassic,
    RmFixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub gamma: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub exact_tolerance: f64,
    pub max_sweeps: usize,
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::Exact,
            gamma: 0.1,
            batch_size: 1,
            iterations: 64,
            exact_tolerance: DEFAULT_EXACT_TOLERANCE,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            warm_start: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == SolverMode::RmFixed && !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma", "step size must lie in (0, 1)"));
        }
        if self.mode != SolverMode::Exact && self.batch_size == 0 {
            return Err(Error::config("batch", "batch size must be positive"));
        }
        if !(self.exact_tolerance > 0.0 && self.exact_tolerance.is_finite()) {
            return Err(Error::config("exact_tolerance", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::config("max_sweeps", "must be positive"));
        }
        Ok(())
    }
}

/// Which transitions end a frame besides a forced renewal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Only `φ(t) = 1` ends the frame.
    ForcedOnly,
    /// Entering the all-zero state also ends it.
    ZeroState,
}

/// Auxiliary quantities frozen for a frame in the generalized algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenAux {
    pub gamma: Vec<f64>,
    /// `f(γ_g)`.
    pub objective: f64,
    /// `h_l(γ_g)`.
    pub constraint_values: Vec<f64>,
    /// `c_l`.
    pub constraint_bounds: Vec<f64>,
}

/// Backlogs and weights frozen at the frame start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCostContext {
    pub theta: CombinedBacklog,
    pub v: f64,
    pub aux: Option<FrozenAux>,
}

impl StageCostContext {
    pub fn new(theta: CombinedBacklog, v: f64) -> Self {
        StageCostContext { theta, v, aux: None }
    }

    /// Context whose stage cost is the backlog-dependent part of `self − other`
    /// (base algorithm only; `V` cancels).
    pub fn difference(&self, other: &StageCostContext) -> StageCostContext {
        StageCostContext {
            theta: self.theta.minus(&other.theta),
            v: 0.0,
            aux: None,
        }
    }
}

/// `−Σ Q_n d_n − Σ Y_m (x_m^av − x_m) + V x_0`, or in the generalized algorithm
/// `−Σ Q_n d_n − Σ W_m (γ_m − x_m) − Σ Y_l (c_l − h_l(γ)) + V f(γ)`, for option `a`.
pub fn stage_cost(ctx: &StageCostContext, tables: &NetworkTables, a: usize, forced: bool) -> f64 {
    let x = tables.penalties(a, forced);
    let mu = tables.service(a);
    let r = tables.arrivals(a);
    let mut c = 0.0;
    for (n, q) in ctx.theta.q.iter().enumerate() {
        c -= q * (mu[n] - r[n]);
    }
    match &ctx.aux {
        None => {
            for (m, y) in ctx.theta.y.iter().enumerate() {
                c -= y * (tables.targets[m] - x[m + 1]);
            }
            c += ctx.v * x[0];
        }
        Some(aux) => {
            for (m, w) in ctx.theta.w.iter().enumerate() {
                c -= w * (aux.gamma[m] - x[m + 1]);
            }
            for (l, y) in ctx.theta.y.iter().enumerate() {
                c -= y * (aux.constraint_bounds[l] - aux.constraint_values[l]);
            }
            c += ctx.v * aux.objective;
        }
    }
    c
}

/// One frame's shortest-path problem with all stage costs precomputed.
#[derive(Clone, Debug)]
pub struct SspProblem<'a> {
    pub tables: &'a NetworkTables,
    pub termination: Termination,
    /// `c(a, f)` at index `2a + f`.
    costs: Vec<f64>,
    /// Successor index per option under `φ = 0`, `num_states` meaning terminal.
    succ: Vec<u32>,
    /// `min_I c¹` per `(z, ω)`.
    forced_min: Vec<f64>,
    c_max: f64,
}

impl<'a> SspProblem<'a> {
    pub fn new(tables: &'a NetworkTables, ctx: &StageCostContext, termination: Termination) -> Self {
        let n = tables.num_options();
        let mut costs = Vec::with_capacity(2 * n);
        let mut c_max = 0.0f64;
        for a in 0..n {
            for forced in [false, true] {
                let c = stage_cost(ctx, tables, a, forced);
                c_max = c_max.max(c.abs());
                costs.push(c);
            }
        }
        let s = tables.num_states;
        let succ = (0..n)
            .map(|a| {
                let next = tables.next_state(a);
                if termination == Termination::ZeroState && next == 0 {
                    s as u32
                } else {
                    next as u32
                }
            })
            .collect();
        let mut forced_min = Vec::with_capacity(s * tables.num_outcomes);
        for z in 0..s {
            for w in 0..tables.num_outcomes {
                let m = tables
                    .options(z, w)
                    .map(|a| costs[2 * a + 1])
                    .fold(f64::INFINITY, f64::min);
                forced_min.push(m);
            }
        }
        SspProblem {
            tables,
            termination,
            costs,
            succ,
            forced_min,
            c_max,
        }
    }

    pub fn num_states(&self) -> usize {
        self.tables.num_states
    }

    pub fn phi(&self) -> f64 {
        self.tables.phi
    }

    pub fn cost(&self, a: usize, forced: bool) -> f64 {
        self.costs[2 * a + forced as usize]
    }

    /// `max |c|` over every option and renewal flag.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// `c_max / φ`, the radius that the cost-to-go never leaves.
    pub fn j_max(&self) -> f64 {
        self.c_max / self.phi()
    }

    /// Successor entry of `J` reached by option `a` when no forced renewal happens.
    pub fn successor(&self, a: usize) -> usize {
        self.succ[a] as usize
    }

    fn continuation_min(&self, j: &CostVector, z: usize, w: usize) -> f64 {
        let mut best = f64::INFINITY;
        for a in self.tables.options(z, w) {
            let v = self.costs[2 * a] + j.values[self.succ[a] as usize];
            if v < best {
                best = v;
            }
        }
        best
    }

    /// `Ψ` with the expectation over `ω` replaced by the given `(ω, weight)` list,
    /// summed in list order.
    pub fn apply_weighted(&self, j: &CostVector, weights: &[(usize, f64)]) -> CostVector {
        let s = self.num_states();
        let nw = self.tables.num_outcomes;
        let phi = self.phi();
        let mut out = vec![0.0; s + 1];
        for (z, slot) in out.iter_mut().enumerate().take(s) {
            let mut acc = 0.0;
            for &(w, p) in weights {
                let forced = self.forced_min[z * nw + w];
                let calm = self.continuation_min(j, z, w);
                acc += p * (phi * forced + (1.0 - phi) * calm);
            }
            *slot = acc;
        }
        CostVector { values: out }
    }

    /// Option index minimizing `c(I) + J_next(I)`, or `c¹(I)` under a forced
    /// renewal. Ties go to the earliest option.
    pub fn greedy(&self, j: &CostVector, z: usize, omega: usize, forced: bool) -> usize {
        let range = self.tables.options(z, omega);
        let mut best = range.start;
        let mut best_value = f64::INFINITY;
        for a in range {
            let v = if forced {
                self.costs[2 * a + 1]
            } else {
                self.costs[2 * a] + j.values[self.succ[a] as usize]
            };
            if v < best_value {
                best_value = v;
                best = a;
            }
        }
        best
    }
}

pub fn psi_exact(problem: &SspProblem<'_>, j: &CostVector) -> CostVector {
    let weights: Vec<(usize, f64)> = problem.tables.probs.iter().copied().enumerate().collect();
    problem.apply_weighted(j, &weights)
}

/// Batch-average analogue of [`psi_exact`]. The batch is summarized by outcome
/// counts, so a batch whose counts are proportional to the probabilities
/// reproduces `psi_exact` exactly.
pub fn psi_sampled(problem: &SspProblem<'_>, j: &CostVector, batch: &[usize]) -> CostVector {
    assert!(!batch.is_empty(), "sample batch must be non-empty");
    let mut counts = vec![0usize; problem.tables.num_outcomes];
    for &w in batch {
        counts[w] += 1;
    }
    let len = batch.len() as f64;
    let weights: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(w, &c)| (w, c as f64 / len))
        .collect();
    problem.apply_weighted(j, &weights)
}

/// `weight·Ψ̃J + keep·J` entrywise.
fn blend(psi: &CostVector, weight: f64, j: &CostVector, keep: f64) -> CostVector {
    let values = psi
        .values
        .iter()
        .zip(&j.values)
        .map(|(p, x)| weight * p + keep * x)
        .collect::<Vec<_>>();
    let mut out = CostVector { values };
    let last = out.values.len() - 1;
    out.values[last] = 0.0;
    out
}

/// `γ·ΨJ + (1−γ)·J` for a given operator output `psi = ΨJ` (exact or sampled).
pub fn fixed_gamma_step(j: &CostVector, psi: &CostVector, gamma: f64) -> CostVector {
    blend(psi, gamma, j, 1.0 - gamma)
}

fn check_samples(samples: &[usize], batch: usize, iterations: usize) -> Result<()> {
    if batch == 0 {
        return Err(Error::config("batch", "batch size must be positive"));
    }
    let need = batch.saturating_mul(iterations);
    if samples.len() < need {
        return Err(Error::config(
            "samples",
            format!("{iterations} iterations of batch {batch} need {need} samples, got {}", samples.len()),
        ));
    }
    Ok(())
}

/// `J_{b+1} = (1/(b+1))·Ψ̃J_b + (b/(b+1))·J_b`, batches taken consecutively from
/// `samples`. `observe(b + 1, J_{b+1})` is called after every step.
pub fn iterate_classic(
    problem: &SspProblem<'_>,
    j0: &CostVector,
    batch: usize,
    iterations: usize,
    samples: &[usize],
    mut observe: impl FnMut(usize, &CostVector),
) -> Result<CostVector> {
    check_samples(samples, batch, iterations)?;
    let mut j = j0.clone();
    for (b, chunk) in samples.chunks_exact(batch).take(iterations).enumerate() {
        let psi = psi_sampled(problem, &j, chunk);
        let denom = (b + 1) as f64;
        j = blend(&psi, 1.0 / denom, &j, b as f64 / denom);
        observe(b + 1, &j);
    }
    Ok(j)
}

/// `J_{b+1} = γ·Ψ̃J_b + (1−γ)·J_b`, batches taken consecutively from `samples`.
pub fn iterate_fixed_gamma(
    problem: &SspProblem<'_>,
    j0: &CostVector,
    gamma: f64,
    batch: usize,
    iterations: usize,
    samples: &[usize],
    mut observe: impl FnMut(usize, &CostVector),
) -> Result<CostVector> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::config("gamma", "step size must lie in (0, 1]"));
    }
    check_samples(samples, batch, iterations)?;
    let mut j = j0.clone();
    for (b, chunk) in samples.chunks_exact(batch).take(iterations).enumerate() {
        let psi = psi_sampled(problem, &j, chunk);
        j = fixed_gamma_step(&j, &psi, gamma);
        observe(b + 1, &j);
    }
    Ok(j)
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub j: CostVector,
    pub sweeps: usize,
    /// Sup-norm change of every sweep.
    pub changes: Vec<f64>,
}

/// Value iteration from `init` (zero when `None`) until the sup-norm change
/// falls below `tolerance`.
pub fn solve_exact_from(
    problem: &SspProblem<'_>,
    init: Option<&CostVector>,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<ExactSolution> {
    let mut j = init.cloned().unwrap_or_else(|| CostVector::zeros(problem.num_states()));
    let mut changes = Vec::new();
    loop {
        let next = psi_exact(problem, &j);
        let change = next.distance(&j);
        j = next;
        changes.push(change);
        if change < tolerance {
            return Ok(ExactSolution {
                j,
                sweeps: changes.len(),
                changes,
            });
        }
        if changes.len() >= max_sweeps {
            return Err(Error::IterationLimit {
                sweeps: changes.len(),
                last_change: change,
            });
        }
    }
}

pub fn solve_exact(problem: &SspProblem<'_>) -> Result<CostVector> {
    solve_exact_from(problem, None, DEFAULT_EXACT_TOLERANCE, DEFAULT_MAX_SWEEPS).map(|s| s.j)
}

/// Expected frame cost from every state when actions are chosen greedily with
/// respect to `j` rather than the optimal cost-to-go.
pub fn evaluate_greedy_policy(problem: &SspProblem<'_>, j: &CostVector, tolerance: f64) -> Result<CostVector> {
    evaluate_greedy_policy_under(problem, j, problem, tolerance)
}

/// Expected frame cost, measured with the stage costs of `costs`, of the
/// policy that is greedy with respect to `j` under `decide`. Both problems must
/// share tables and termination.
pub fn evaluate_greedy_policy_under(
    decide: &SspProblem<'_>,
    j: &CostVector,
    costs: &SspProblem<'_>,
    tolerance: f64,
) -> Result<CostVector> {
    let problem = costs;
    let s = problem.num_states();
    let nw = problem.tables.num_outcomes;
    let phi = problem.phi();
    let mut calm = Vec::with_capacity(s * nw);
    let mut forced = Vec::with_capacity(s * nw);
    for z in 0..s {
        for w in 0..nw {
            calm.push(decide.greedy(j, z, w, false));
            forced.push(decide.greedy(j, z, w, true));
        }
    }
    let mut value = CostVector::zeros(s);
    for sweep in 0.. {
        let mut next = vec![0.0; s + 1];
        for (z, slot) in next.iter_mut().enumerate().take(s) {
            let mut acc = 0.0;
            for (w, p) in problem.tables.probs.iter().enumerate() {
                let a0 = calm[z * nw + w];
                let a1 = forced[z * nw + w];
                let cont = problem.cost(a0, false) + value.values[problem.successor(a0)];
                acc += p * (phi * problem.cost(a1, true) + (1.0 - phi) * cont);
            }
            *slot = acc;
        }
        let next = CostVector { values: next };
        let change = next.distance(&value);
        value = next;
        if change < tolerance {
            break;
        }
        if sweep >= DEFAULT_MAX_SWEEPS {
            return Err(Error::IterationLimit {
                sweeps: sweep,
                last_change: change,
            });
        }
    }
    Ok(value)
}

/// `2(1−φ)·dist/φ`.
pub fn cost_gap_bound(phi: f64, dist: f64) -> f64 {
    2.0 * (1.0 - phi) * dist / phi
}

/// Bound on how far the frame cost of the greedy policy for `j` can sit from the
/// optimal cost-to-go, measuring `‖j − J*‖` against an exact solve.
pub fn policy_cost_gap(problem: &SspProblem<'_>, j: &CostVector) -> Result<f64> {
    let star = solve_exact(problem)?;
    Ok(cost_gap_bound(problem.phi(), j.distance(&star)))
}

/// Smallest `b` after which the fixed-γ error envelope falls below twice its
/// asymptotic level, or 0 when the starting error already does.
pub fn choose_iterations(gamma: f64, sigma_sq: f64, c_max: f64, phi: f64) -> u64 {
    let floor = gamma * sigma_sq / (phi * (2.0 - phi * gamma));
    let start = c_max * c_max / (phi * phi);
    if start <= floor {
        return 0;
    }
    let ratio = c_max * c_max * (2.0 - phi * gamma) / (gamma * sigma_sq * phi) - 1.0;
    let b = ratio.ln() / (2.0 * (1.0 / (1.0 - phi * gamma)).ln());
    if b <= 0.0 {
        0
    } else {
        b.ceil() as u64
    }
}

/// `4(c_max + (1−φ)J_max)²/L` bound on the mean squared sampling noise.
pub fn noise_bound(c_max: f64, phi: f64, batch: usize) -> f64 {
    let j_max = c_max / phi;
    let s = c_max + (1.0 - phi) * j_max;
    4.0 * s * s / batch as f64
}

/// Mean-square error envelope of the fixed-γ iteration after `b` steps.
pub fn fixed_gamma_envelope(b: u64, gamma: f64, phi: f64, sigma_sq: f64, initial_sq: f64) -> f64 {
    let rho = (1.0 - phi * gamma).powf(2.0 * b as f64);
    rho * initial_sq + gamma * sigma_sq * (1.0 - rho) / (phi * (2.0 - phi * gamma))
}

/// Asymptotic policy-cost error constant of the fixed-γ iteration,
/// `2(1−φ)√(2γσ²) / (φ√(φ(2−φγ)))`.
pub fn fixed_gamma_cost_error(gamma: f64, sigma_sq: f64, phi: f64) -> f64 {
    2.0 * (1.0 - phi) * (2.0 * gamma * sigma_sq).sqrt() / (phi * (phi * (2.0 - phi * gamma)).sqrt())
}

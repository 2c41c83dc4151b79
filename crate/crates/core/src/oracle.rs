//! Ground truth for checking the scheduler: occupation-measure linear programs
//! over stationary `(z, Ω)`-only policies, the variance bounds for bounded random
//! variables and the performance inequalities evaluated on simulation output.
//!
//! The linear program has one variable `θ(z, ω, f, I) >= 0` per state, outcome,
//! forced-renewal flag and admissible action, with
//!
//! - `Σ_I θ(z, ω, f, I) = π(z)·p(ω)·p(f)`: the action may depend on `(z, Ω)` but
//!   `Ω` is independent of `z`,
//! - flow balance `Σ θ(z, ω, f, I)·1[next = z'] = π(z')`, where a forced renewal
//!   always leads to state 0,
//! - `Σ_z π(z) = 1`.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use crate::convex::{golden_section, ConvexFunction, ConvexFunctionSpec};
use crate::error::{Error, Result};
use crate::model::GeneralizedConfig;
use crate::queues::DriftConstants;
use crate::scheduler::{RenewalConfig, RenewalKind};
use crate::tables::NetworkTables;

/// Default cap on the number of `θ` variables.
pub const LP_VARIABLE_CAP: usize = 100_000;
/// Reported slack when no constraint limits it.
pub const SLACK_CEILING: f64 = 1e6;
/// Slacks of smaller magnitude are reported as 0.
pub const SLACK_ZERO_TOLERANCE: f64 = 1e-9;

/// Stationary randomized policy: probability of each option given `(z, ω, f)`,
/// stored at index `2a + f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    pub probs: Vec<f64>,
}

/// Long-run averages of a stationary policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryAverages {
    /// `x̄_0 .. x̄_M`.
    pub penalties: Vec<f64>,
    /// `μ̄_n − r̄_n`.
    pub drift: Vec<f64>,
    /// Stationary distribution of `z`.
    pub states: Vec<f64>,
}

impl StationaryPolicy {
    /// Averages from the stationary distribution of the induced chain on `z`,
    /// found by power iteration (the chain jumps to state 0 with probability φ
    /// every slot, so this converges geometrically).
    pub fn averages(&self, tables: &NetworkTables) -> StationaryAverages {
        let s = tables.num_states;
        let phi = tables.phi;
        let mut pi = vec![0.0; s];
        pi[0] = 1.0;
        for _ in 0..100_000 {
            let mut next = vec![0.0; s];
            for z in 0..s {
                if pi[z] == 0.0 {
                    continue;
                }
                next[0] += pi[z] * phi;
                for (w, p) in tables.probs.iter().enumerate() {
                    for a in tables.options(z, w) {
                        let pa = self.probs[2 * a];
                        if pa > 0.0 {
                            next[tables.next_state(a)] += pi[z] * (1.0 - phi) * p * pa;
                        }
                    }
                }
            }
            let change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if change < 1e-15 {
                break;
            }
        }
        let mut penalties = vec![0.0; tables.num_penalties];
        let mut drift = vec![0.0; tables.num_queues];
        for (z, &pz) in pi.iter().enumerate() {
            for (w, p) in tables.probs.iter().enumerate() {
                for a in tables.options(z, w) {
                    for (f, pf) in [(0usize, 1.0 - phi), (1, phi)] {
                        let weight = pz * p * pf * self.probs[2 * a + f];
                        if weight == 0.0 {
                            continue;
                        }
                        for (acc, x) in penalties.iter_mut().zip(tables.penalties(a, f == 1)) {
                            *acc += weight * x;
                        }
                        for (n, acc) in drift.iter_mut().enumerate() {
                            *acc += weight * (tables.service(a)[n] - tables.arrivals(a)[n]);
                        }
                    }
                }
            }
        }
        StationaryAverages {
            penalties,
            drift,
            states: pi,
        }
    }
}

/// Linear requirement `Σ_m coeffs[m]·x̄_m <= bound` over `x̄_0..x̄_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageConstraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

/// What to optimize over the occupation polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct LpRequest {
    /// Minimize `Σ objective[m]·x̄_m`; ignored when maximizing the slack.
    pub objective: Vec<f64>,
    /// Impose `x̄_m <= x_m^av (− ε)` for every configured constraint.
    pub targets: bool,
    /// Impose `μ̄_n − r̄_n >= 0 (+ ε)` for every queue.
    pub stability: bool,
    pub extra: Vec<AverageConstraint>,
    /// Maximize a common slack `ε` on the targets and stability rows.
    pub maximize_slack: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub value: f64,
    /// `x̄_0..x̄_M` at the optimum.
    pub penalties: Vec<f64>,
    pub drift: Vec<f64>,
    pub policy: StationaryPolicy,
}

pub struct OccupationLp<'a> {
    tables: &'a NetworkTables,
}

impl<'a> OccupationLp<'a> {
    pub fn new(tables: &'a NetworkTables) -> Result<Self> {
        OccupationLp::with_cap(tables, LP_VARIABLE_CAP)
    }

    pub fn with_cap(tables: &'a NetworkTables, cap: usize) -> Result<Self> {
        let vars = 2 * tables.num_options();
        if vars > cap {
            return Err(Error::Capacity {
                what: "occupation program variables",
                size: vars as u128,
                ceiling: cap as u128,
            });
        }
        Ok(OccupationLp { tables })
    }

    pub fn solve(&self, req: &LpRequest) -> Result<LpSolution> {
        let t = self.tables;
        let s = t.num_states;
        let phi = t.phi;
        let p = t.num_penalties;
        let direction = if req.maximize_slack {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        };
        let mut lp = Problem::new(direction);
        let mut theta: Vec<Variable> = Vec::with_capacity(2 * t.num_options());
        for a in 0..t.num_options() {
            for f in [false, true] {
                let coeff = if req.maximize_slack {
                    0.0
                } else {
                    req.objective.iter().zip(t.penalties(a, f)).map(|(c, x)| c * x).sum()
                };
                theta.push(lp.add_var(coeff, (0.0, f64::INFINITY)));
            }
        }
        let pi: Vec<Variable> = (0..s).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        let eps = req
            .maximize_slack
            .then(|| lp.add_var(1.0, (-SLACK_CEILING, SLACK_CEILING)));

        // outcome independence
        for (z, &pz) in pi.iter().enumerate() {
            for (w, pw) in t.probs.iter().enumerate() {
                for (f, pf) in [(0usize, 1.0 - phi), (1, phi)] {
                    let mut e: LinearExpr = t.options(z, w).map(|a| (theta[2 * a + f], 1.0)).collect();
                    e.add(pz, -pw * pf);
                    lp.add_constraint(e, ComparisonOp::Eq, 0.0);
                }
            }
        }
        // flow balance, one row dropped as redundant
        let mut inflow: Vec<LinearExpr> = (0..s).map(|_| LinearExpr::empty()).collect();
        for z in 0..s {
            for w in 0..t.num_outcomes {
                for a in t.options(z, w) {
                    inflow[t.next_state(a)].add(theta[2 * a], 1.0);
                    inflow[0].add(theta[2 * a + 1], 1.0);
                }
            }
        }
        for (zp, mut e) in inflow.into_iter().enumerate().skip(1) {
            e.add(pi[zp], -1.0);
            lp.add_constraint(e, ComparisonOp::Eq, 0.0);
        }
        lp.add_constraint(pi.iter().map(|&v| (v, 1.0)).collect::<LinearExpr>(), ComparisonOp::Eq, 1.0);

        let average = |m: usize| -> LinearExpr {
            (0..t.num_options())
                .flat_map(|a| [(a, false), (a, true)])
                .filter_map(|(a, f)| {
                    let x = t.penalties(a, f)[m];
                    (x != 0.0).then_some((theta[2 * a + f as usize], x))
                })
                .collect()
        };
        if req.targets {
            for m in 1..p {
                let mut e = average(m);
                if let Some(eps) = eps {
                    e.add(eps, 1.0);
                }
                lp.add_constraint(e, ComparisonOp::Le, t.targets[m - 1]);
            }
        }
        if req.stability {
            for n in 0..t.num_queues {
                let mut e: LinearExpr = (0..t.num_options())
                    .flat_map(|a| [(a, 0usize), (a, 1)])
                    .filter_map(|(a, f)| {
                        let d = t.service(a)[n] - t.arrivals(a)[n];
                        (d != 0.0).then_some((theta[2 * a + f], d))
                    })
                    .collect();
                if let Some(eps) = eps {
                    e.add(eps, -1.0);
                }
                lp.add_constraint(e, ComparisonOp::Ge, 0.0);
            }
        }
        for c in &req.extra {
            let mut e = LinearExpr::empty();
            for a in 0..t.num_options() {
                for f in [false, true] {
                    let v: f64 = c.coeffs.iter().zip(t.penalties(a, f)).map(|(k, x)| k * x).sum();
                    if v != 0.0 {
                        e.add(theta[2 * a + f as usize], v);
                    }
                }
            }
            lp.add_constraint(e, ComparisonOp::Le, c.bound);
        }

        let sol = lp.solve().map_err(|e| match e {
            minilp::Error::Infeasible => {
                Error::InfeasibleProgram("no stationary policy satisfies the time-average constraints".into())
            }
            minilp::Error::Unbounded => Error::InfeasibleProgram("objective is unbounded".into()),
        })?;

        let values: Vec<f64> = theta.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let mut probs = vec![0.0; values.len()];
        for z in 0..s {
            for w in 0..t.num_outcomes {
                for f in 0..2 {
                    let range = t.options(z, w);
                    let total: f64 = range.clone().map(|a| values[2 * a + f]).sum();
                    if total > 0.0 {
                        for a in range {
                            probs[2 * a + f] = values[2 * a + f] / total;
                        }
                    } else {
                        probs[2 * range.start + f] = 1.0;
                    }
                }
            }
        }
        let mut penalties = vec![0.0; p];
        let mut drift = vec![0.0; t.num_queues];
        for a in 0..t.num_options() {
            for f in [false, true] {
                let v = values[2 * a + f as usize];
                for (acc, x) in penalties.iter_mut().zip(t.penalties(a, f)) {
                    *acc += v * x;
                }
                for (n, acc) in drift.iter_mut().enumerate() {
                    *acc += v * (t.service(a)[n] - t.arrivals(a)[n]);
                }
            }
        }
        let value = match eps {
            Some(e) => *sol.var_value(e),
            None => sol.objective(),
        };
        Ok(LpSolution {
            value,
            penalties,
            drift,
            policy: StationaryPolicy { probs },
        })
    }
}

/// Smallest long-run average of `x_0` over stationary policies meeting every
/// configured constraint with stable queues.
pub fn lp_optimal_penalty(tables: &NetworkTables) -> Result<(f64, StationaryPolicy)> {
    let mut objective = vec![0.0; tables.num_penalties];
    objective[0] = 1.0;
    let sol = OccupationLp::new(tables)?.solve(&LpRequest {
        objective,
        targets: true,
        stability: true,
        extra: Vec::new(),
        maximize_slack: false,
    })?;
    Ok((sol.value, sol.policy))
}

/// Largest `ε` with `x̄_m <= x_m^av − ε` and `μ̄_n − r̄_n >= ε` achievable by a
/// stationary policy. Clamped at [`SLACK_CEILING`] when nothing limits it.
pub fn lp_max_slack(tables: &NetworkTables) -> Result<f64> {
    if tables.num_penalties == 1 && tables.num_queues == 0 {
        return Ok(SLACK_CEILING);
    }
    let sol = OccupationLp::new(tables)?.solve(&LpRequest {
        objective: Vec::new(),
        targets: true,
        stability: true,
        extra: Vec::new(),
        maximize_slack: true,
    })?;
    if sol.value < -SLACK_ZERO_TOLERANCE {
        return Err(Error::InfeasibleProgram(format!(
            "constraints cannot be met by any stationary policy (best slack {:.6})",
            sol.value
        )));
    }
    Ok(if sol.value.abs() < SLACK_ZERO_TOLERANCE { 0.0 } else { sol.value })
}

/// `((x_max − x_min)²/4, (x_max − mean)(mean − x_min))`.
pub fn variance_bounds(x_min: f64, x_max: f64, mean: Option<f64>) -> Result<(f64, Option<f64>)> {
    if x_min > x_max {
        return Err(Error::Domain(format!("empty range [{x_min}, {x_max}]")));
    }
    let a = (x_max - x_min) * (x_max - x_min) / 4.0;
    let b = match mean {
        None => None,
        Some(m) => {
            if !(x_min <= m && m <= x_max) {
                return Err(Error::Domain(format!("mean {m} outside [{x_min}, {x_max}]")));
            }
            Some((x_max - m) * (m - x_min))
        }
    };
    Ok((a, b))
}

/// Bracket on the optimum of the convex-objective problem over stationary
/// policies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedOptimum {
    /// Certified lower bound on `f^opt`.
    pub lower: f64,
    /// `f` at the best feasible average found.
    pub upper: f64,
    /// Feasible `x̄_1..x̄_M` attaining `upper`.
    pub point: Vec<f64>,
    pub iterations: usize,
}

/// Linear constraints `h_l(x̄) <= c_l` as rows over `x̄_0..x̄_M`.
fn linear_rows(tables: &NetworkTables, cfg: &GeneralizedConfig) -> Result<Vec<AverageConstraint>> {
    if tables.num_penalties != cfg.penalties.len() + 1 {
        return Err(Error::Domain("tables do not match the generalized configuration".into()));
    }
    let mut extra = Vec::new();
    for (l, c) in cfg.constraints.iter().enumerate() {
        match &c.function {
            ConvexFunctionSpec::Linear { coeffs, offset } => {
                let mut row = vec![0.0];
                row.extend_from_slice(coeffs);
                extra.push(AverageConstraint {
                    coeffs: row,
                    bound: c.bound - offset,
                });
            }
            ConvexFunctionSpec::Zero => {
                if c.bound < 0.0 {
                    return Err(Error::InfeasibleProgram(format!("constraint {l} reads 0 <= {}", c.bound)));
                }
            }
            _ => {
                return Err(Error::MissingOracle(format!(
                    "constraint {l} is not linear; the optimum oracle handles linear constraints only"
                )))
            }
        }
    }
    Ok(extra)
}

/// Largest `ε` with `μ̄_n − r̄_n >= ε` for every queue among stationary
/// policies meeting the linear constraints. `None` without queues.
pub fn generalized_slack(tables: &NetworkTables, cfg: &GeneralizedConfig) -> Result<Option<f64>> {
    if tables.num_queues == 0 {
        return Ok(None);
    }
    let sol = OccupationLp::new(tables)?.solve(&LpRequest {
        objective: Vec::new(),
        targets: false,
        stability: true,
        extra: linear_rows(tables, cfg)?,
        maximize_slack: true,
    })?;
    Ok(Some(sol.value))
}

/// Minimize `f(x̄)` over achievable averages `x̄_1..x̄_M` with stable queues and
/// linear constraints `h_l(x̄) <= c_l`, by Frank-Wolfe steps whose linear
/// subproblems are occupation programs. The duality gap of each step gives the
/// lower bound.
pub fn generalized_optimum(
    tables: &NetworkTables,
    cfg: &GeneralizedConfig,
    max_iterations: usize,
    gap_tolerance: f64,
) -> Result<GeneralizedOptimum> {
    let m = cfg.penalties.len();
    let extra = linear_rows(tables, cfg)?;
    let f = ConvexFunction::from_spec(&cfg.objective, m);
    let lp = OccupationLp::new(tables)?;
    let solve_linear = |direction: &[f64]| -> Result<Vec<f64>> {
        let mut objective = vec![0.0];
        objective.extend_from_slice(direction);
        let sol = lp.solve(&LpRequest {
            objective,
            targets: false,
            stability: true,
            extra: extra.clone(),
            maximize_slack: false,
        })?;
        Ok(sol.penalties[1..].to_vec())
    };

    let mut x = solve_linear(&vec![0.0; m])?;
    let mut fx = f.value(&x);
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    for k in 0..max_iterations {
        iterations = k + 1;
        let g = numeric_gradient(&f, &x);
        let s = solve_linear(&g)?;
        let gap: f64 = g.iter().zip(x.iter().zip(&s)).map(|(gi, (xi, si))| gi * (xi - si)).sum();
        lower = lower.max(fx - gap.max(0.0));
        if gap <= gap_tolerance {
            break;
        }
        let dir: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step = golden_section(
            |t| {
                let p: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                f.value(&p)
            },
            0.0,
            1.0,
            1e-12,
        );
        let candidate: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
        let fc = f.value(&candidate);
        if fc <= fx {
            x = candidate;
            fx = fc;
        }
    }
    Ok(GeneralizedOptimum {
        lower: lower.min(fx),
        upper: fx,
        point: x,
        iterations,
    })
}

fn numeric_gradient(f: &ConvexFunction, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f.value(&up) - f.value(&down)) / (2.0 * h)
        })
        .collect()
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, se: 0.0 }
    }

    /// Mean and standard error of the mean of independent values.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Estimate {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }
}

/// Measured quantities entering the performance inequalities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPerformance {
    /// Average over renewals of `Σ Q_n(t_g) + Σ Y_m(t_g)`.
    pub backlog: Estimate,
    /// Average over renewals of `Σ Q_n(t_g)`.
    pub queue_backlog: Estimate,
    /// `x̄_0..x̄_M`.
    pub penalties: Vec<Estimate>,
    pub objective_of_average: Option<Estimate>,
    pub constraints_of_average: Option<Vec<Estimate>>,
}

/// Constants and reference values the inequalities are evaluated with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub phi: f64,
    pub v: f64,
    pub renewal: RenewalConfig,
    pub constants: DriftConstants,
    /// Additive and relative approximation constants of the frame solver.
    pub c: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub x0_opt: Option<f64>,
    pub x0_range: (f64, f64),
    /// `x_m^av`.
    pub targets: Vec<f64>,
    /// Relative slack allowed on constraint checks, on top of 3 standard errors.
    pub relative_slack: f64,
    /// Present in generalized runs.
    pub generalized: Option<GeneralizedBounds>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedBounds {
    pub f_opt: Option<f64>,
    pub f_range: (f64, f64),
    /// `c_l`.
    pub constraint_bounds: Vec<f64>,
    /// Slack of the stability assumption for the backlog bound, when known.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub inequality: String,
    pub measured: f64,
    pub bound: f64,
    /// Statistical allowance added to `bound`.
    pub slack: f64,
    pub pass: bool,
    pub vacuous: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl Verdict {
    fn check(inequality: impl Into<String>, measured: f64, bound: f64, slack: f64) -> Self {
        Verdict {
            inequality: inequality.into(),
            measured,
            bound,
            slack,
            pass: measured <= bound + slack,
            vacuous: false,
            note: String::new(),
        }
    }

    fn vacuous(inequality: impl Into<String>, note: impl Into<String>) -> Self {
        Verdict {
            inequality: inequality.into(),
            measured: 0.0,
            bound: 0.0,
            slack: 0.0,
            pass: true,
            vacuous: true,
            note: note.into(),
        }
    }

    fn failed_hypothesis(inequality: impl Into<String>, measured: f64, note: impl Into<String>) -> Self {
        Verdict {
            inequality: inequality.into(),
            measured,
            bound: f64::NAN,
            slack: 0.0,
            pass: false,
            vacuous: false,
            note: note.into(),
        }
    }
}

/// Backlog bound for `V = 0`: `(B + C) / (ε·E[T*] − δ)`, with `E[T*]` taken as
/// `1/φ` for type-2 renewals and bounded below by 1 otherwise.
pub fn feasibility_backlog_bound(inputs: &BoundInputs, epsilon: f64) -> Option<f64> {
    let et = match inputs.renewal.kind {
        RenewalKind::Type2 => 1.0 / inputs.phi,
        RenewalKind::Type1 | RenewalKind::Type3 => 1.0,
    };
    let denom = epsilon * et - inputs.delta;
    (denom > 0.0).then(|| (inputs.constants.b_const + inputs.c) / denom)
}

/// Backlog bound for type-2 renewals and `V > 0`:
/// `((B + C)φ + V(φδ + x_0^max − x_0^min)) / (ε − φδ)`.
pub fn optimization_backlog_bound(inputs: &BoundInputs, epsilon: f64) -> Option<f64> {
    let phi = inputs.phi;
    let denom = epsilon - phi * inputs.delta;
    let (lo, hi) = inputs.x0_range;
    (denom > 0.0).then(|| {
        ((inputs.constants.b_const + inputs.c) * phi + inputs.v * (phi * inputs.delta + hi - lo)) / denom
    })
}

/// Penalty bound for type-2 renewals and `V > 0`:
/// `x_0^opt + (B + C)φ/V + φδ(1 + (x_0^max − x_0^opt)/ε)`.
pub fn optimization_penalty_bound(inputs: &BoundInputs, x0_opt: f64, epsilon: f64) -> f64 {
    let phi = inputs.phi;
    let mut bound = x0_opt + (inputs.constants.b_const + inputs.c) * phi / inputs.v;
    if inputs.delta > 0.0 {
        bound += phi * inputs.delta * (1.0 + (inputs.x0_range.1 - x0_opt) / epsilon);
    }
    bound
}

/// Evaluate every applicable inequality. Statistical slack is three standard
/// errors of the measured quantity.
pub fn check_bounds(measured: &MeasuredPerformance, inputs: &BoundInputs) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    if let Some(g) = &inputs.generalized {
        let cons = measured.constraints_of_average.clone().unwrap_or_default();
        for (l, c) in g.constraint_bounds.iter().enumerate() {
            let e = cons.get(l).copied().unwrap_or_default();
            out.push(Verdict::check(
                format!("generalized_constraint[{l}]"),
                e.mean,
                *c,
                inputs.relative_slack * c.abs() + 3.0 * e.se,
            ));
        }
        if inputs.v > 0.0 && inputs.renewal.kind == RenewalKind::Type2 {
            let f_opt = g
                .f_opt
                .ok_or_else(|| Error::MissingOracle("optimal objective value is unavailable".into()))?;
            let e = measured
                .objective_of_average
                .ok_or_else(|| Error::MissingOracle("objective of the average penalties is unavailable".into()))?;
            let bound = f_opt + inputs.phi * inputs.constants.b2_const / inputs.v;
            out.push(Verdict::check("generalized_objective", e.mean, bound, 3.0 * e.se));
            match g.epsilon {
                Some(eps) if eps > 0.0 => {
                    let bound =
                        (inputs.phi * inputs.constants.b2_const + inputs.v * (g.f_range.1 - g.f_range.0)) / eps;
                    let e = measured.queue_backlog;
                    out.push(Verdict::check("generalized_backlog", e.mean, bound, 3.0 * e.se));
                }
                _ => out.push(Verdict::vacuous("generalized_backlog", "no positive stability slack supplied")),
            }
        } else {
            out.push(Verdict::vacuous("generalized_objective", "needs type-2 renewals and V > 0"));
        }
        return Ok(out);
    }

    for (m, target) in inputs.targets.iter().enumerate() {
        let e = measured.penalties.get(m + 1).copied().unwrap_or_default();
        out.push(Verdict::check(
            format!("constraint[{}]", m + 1),
            e.mean,
            *target,
            inputs.relative_slack * target.abs() + 3.0 * e.se,
        ));
    }
    let has_backlog = !inputs.targets.is_empty() || measured.queue_backlog.mean != 0.0 || inputs.epsilon.is_some();
    if inputs.v == 0.0 {
        if inputs.targets.is_empty() && measured.backlog.mean == 0.0 && inputs.epsilon.is_none() {
            out.push(Verdict::vacuous("feasibility_backlog", "no queues and no constraints"));
            return Ok(out);
        }
        let eps = inputs
            .epsilon
            .ok_or_else(|| Error::MissingOracle("stability slack is unavailable".into()))?;
        let e = measured.backlog;
        match feasibility_backlog_bound(inputs, eps) {
            Some(bound) => out.push(Verdict::check("feasibility_backlog", e.mean, bound, 3.0 * e.se)),
            None => out.push(Verdict::failed_hypothesis(
                "feasibility_backlog",
                e.mean,
                "slack does not exceed the approximation constant",
            )),
        }
        return Ok(out);
    }
    if inputs.renewal.kind != RenewalKind::Type2 {
        out.push(Verdict::vacuous("optimization_penalty", "penalty bounds need type-2 renewals"));
        return Ok(out);
    }
    let x0_opt = inputs
        .x0_opt
        .ok_or_else(|| Error::MissingOracle("optimal penalty is unavailable".into()))?;
    let eps = inputs
        .epsilon
        .ok_or_else(|| Error::MissingOracle("stability slack is unavailable".into()))?;
    let e = measured.penalties.first().copied().unwrap_or_default();
    let bound = optimization_penalty_bound(inputs, x0_opt, eps);
    let mut v = Verdict::check("optimization_penalty", e.mean, bound, 3.0 * e.se);
    if inputs.delta > 0.0 && eps <= inputs.phi * inputs.delta {
        v.note = "slack does not exceed φδ; bound outside its hypothesis".into();
    }
    out.push(v);
    if has_backlog {
        let e = measured.backlog;
        match optimization_backlog_bound(inputs, eps) {
            Some(bound) => out.push(Verdict::check("optimization_backlog", e.mean, bound, 3.0 * e.se)),
            None => out.push(Verdict::failed_hypothesis(
                "optimization_backlog",
                e.mean,
                "slack does not exceed φδ",
            )),
        }
    }
    Ok(out)
}

/// True when every non-vacuous verdict passes.
pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.vacuous || v.pass)
}

//! Markov-modulated network model.
//!
//! The abstract environment is described by [`MarkovModulatedNetwork`]: a finite
//! controlled Markov state `z`, an i.i.d. slot outcome `Ω = [ω; φ]` and, for every
//! `(z, ω)`, a finite list of admissible control options with their service,
//! arrival and penalty effects. [`WirelessSystem`] is the concrete instance with
//! `K` finite-buffer delay-constrained queues (whose levels form `z`) and `N`
//! infinite-buffer queues, one channel served per slot.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexFunctionSpec;
use crate::error::{Error, Result};

/// Default ceiling on `(B_max + 1)^K`.
pub const DEFAULT_STATE_CEILING: usize = 10_000_000;

/// Probabilities must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Buffer levels of the delay-constrained queues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkovState(pub Vec<u32>);

impl MarkovState {
    pub fn zero(k: usize) -> Self {
        MarkovState(vec![0; k])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&z| z == 0)
    }

    pub fn level(&self, k: usize) -> u32 {
        self.0[k]
    }
}

impl fmt::Display for MarkovState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, ")")
    }
}

/// One slot of randomness: the index of `ω(t)` in the configured support plus the
/// forced-renewal flag `φ(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub omega: usize,
    pub forced_renewal: bool,
}

/// Serve at most one channel (0-based over the `K` constrained channels followed by
/// the `N` unconstrained ones) and admit `admit[k]` of the new arrivals to buffer `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlAction {
    pub serve: Option<usize>,
    pub admit: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlotEffects {
    /// Service offered to each of the `K + N` queues.
    pub mu: Vec<f64>,
    /// Admitted arrivals: `R_k` for constrained queues, `A_n` for unconstrained ones.
    pub arrivals: Vec<f64>,
    /// `x_0 .. x_M`.
    pub penalties: Vec<f64>,
    pub next_state: MarkovState,
    /// Packets actually served from each constrained buffer, `min(μ_k, Z_k)`.
    pub served: Vec<u32>,
    /// Arrivals refused at admission, `D_k = A_k - R_k`.
    pub refused: Vec<u32>,
}

/// One support point of `ω(t) = [A(t), S(t)]`, constrained queues first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub prob: f64,
    pub arrivals: Vec<u32>,
    pub channels: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Congestion,
    DropRate,
    Delay,
    WeightedDropObjective,
}

/// Library penalty. `bound` is `x^av` for congestion and drop-rate penalties and the
/// delay target `W^av` for the delay penalty (whose time-average target is 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    #[serde(default)]
    pub target_queue: usize,
    #[serde(default)]
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight: Vec<f64>,
}

impl PenaltySpec {
    pub fn congestion(queue: usize, bound: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Congestion,
            target_queue: queue,
            bound,
            weight: Vec::new(),
        }
    }

    pub fn drop_rate(queue: usize, bound: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::DropRate,
            target_queue: queue,
            bound,
            weight: Vec::new(),
        }
    }

    pub fn delay(queue: usize, max_delay: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Delay,
            target_queue: queue,
            bound: max_delay,
            weight: Vec::new(),
        }
    }

    pub fn weighted_drops(weight: Vec<f64>) -> Self {
        PenaltySpec {
            kind: PenaltyKind::WeightedDropObjective,
            target_queue: 0,
            bound: 0.0,
            weight,
        }
    }

    /// Time-average target `x_m^av` when the penalty is used as a constraint.
    pub fn average_target(&self) -> f64 {
        match self.kind {
            PenaltyKind::Delay => 0.0,
            _ => self.bound,
        }
    }

    fn validate(&self, k: usize, field: &str) -> Result<()> {
        if !self.bound.is_finite() {
            return Err(Error::config(format!("{field}.bound"), "must be finite"));
        }
        match self.kind {
            PenaltyKind::WeightedDropObjective => {
                if self.weight.len() != k {
                    return Err(Error::config(
                        format!("{field}.weight"),
                        format!("expected {k} weights, got {}", self.weight.len()),
                    ));
                }
                if self.weight.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::config(
                        format!("{field}.weight"),
                        "weights must be finite and nonnegative",
                    ));
                }
            }
            _ => {
                if self.target_queue >= k {
                    return Err(Error::config(
                        format!("{field}.target_queue"),
                        format!("queue {} out of range 0..{k}", self.target_queue),
                    ));
                }
            }
        }
        if self.kind == PenaltyKind::Delay && self.bound <= 0.0 {
            return Err(Error::config(
                format!("{field}.bound"),
                "delay target must be positive",
            ));
        }
        Ok(())
    }

    /// `[x^min, x^max]` derived from the instance limits.
    pub fn range(&self, b_max: u32, a_max: u32, s_max: u32) -> (f64, f64) {
        let b = b_max as f64;
        let a = a_max as f64;
        let s = s_max as f64;
        match self.kind {
            PenaltyKind::Congestion => (0.0, b),
            PenaltyKind::DropRate => (0.0, a + b),
            PenaltyKind::Delay => (-s * self.bound, b),
            PenaltyKind::WeightedDropObjective => {
                (0.0, self.weight.iter().sum::<f64>() * (a + b))
            }
        }
    }
}

/// Everything a penalty may look at on one slot.
#[derive(Clone, Copy, Debug)]
pub struct PenaltyInput<'a> {
    pub state: &'a MarkovState,
    pub arrivals: &'a [u32],
    pub channels: &'a [u32],
    pub forced_renewal: bool,
    pub action: &'a ControlAction,
}

impl PenaltyInput<'_> {
    fn service(&self, queue: usize) -> u32 {
        match self.action.serve {
            Some(c) if c == queue => self.channels[queue],
            _ => 0,
        }
    }

    fn served(&self, k: usize) -> u32 {
        self.service(k).min(self.state.0[k])
    }

    fn drops(&self, k: usize) -> u32 {
        if self.forced_renewal {
            self.arrivals[k] + self.state.0[k] - self.served(k)
        } else {
            self.arrivals[k] - self.action.admit[k]
        }
    }
}

/// Evaluate a library penalty.
pub fn penalty_value(spec: &PenaltySpec, input: &PenaltyInput<'_>) -> f64 {
    match spec.kind {
        PenaltyKind::Congestion => input.state.0[spec.target_queue] as f64,
        PenaltyKind::DropRate => input.drops(spec.target_queue) as f64,
        PenaltyKind::Delay => {
            let k = spec.target_queue;
            input.state.0[k] as f64 - input.served(k) as f64 * spec.bound
        }
        PenaltyKind::WeightedDropObjective => spec
            .weight
            .iter()
            .enumerate()
            .map(|(k, w)| w * input.drops(k) as f64)
            .sum(),
    }
}

pub type PenaltyFn = dyn Fn(&PenaltyInput<'_>) -> f64 + Send + Sync;

/// User-supplied penalty with declared bounds. Not covered by the performance
/// guarantees unless the declared bounds actually hold.
#[derive(Clone)]
pub struct CustomPenalty {
    pub name: String,
    pub eval: Arc<PenaltyFn>,
    pub min: f64,
    pub max: f64,
    pub target: f64,
}

impl fmt::Debug for CustomPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPenalty")
            .field("name", &self.name)
            .field("min", &self.min)
            .field("max", &self.max)
            .field("target", &self.target)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Penalty {
    Zero,
    Library(PenaltySpec),
    Custom(CustomPenalty),
}

impl Penalty {
    pub fn evaluate(&self, input: &PenaltyInput<'_>) -> f64 {
        match self {
            Penalty::Zero => 0.0,
            Penalty::Library(spec) => penalty_value(spec, input),
            Penalty::Custom(c) => (c.eval)(input),
        }
    }

    fn target(&self) -> f64 {
        match self {
            Penalty::Zero => 0.0,
            Penalty::Library(spec) => spec.average_target(),
            Penalty::Custom(c) => c.target,
        }
    }
}

/// Auxiliary-variable problem attached to an instance: penalties `x_1..x_M`,
/// objective `f` and constraints `h_l(x̄) <= c_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedConfig {
    pub penalties: Vec<PenaltySpec>,
    pub objective: ConvexFunctionSpec,
    #[serde(default)]
    pub constraints: Vec<ConvexConstraintSpec>,
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexConstraintSpec {
    pub function: ConvexFunctionSpec,
    pub bound: f64,
}

/// JSON instance document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    #[serde(default)]
    pub name: String,
    pub k: usize,
    pub n: usize,
    pub b_max: u32,
    pub phi: f64,
    pub outcomes: Vec<OutcomeSpec>,
    #[serde(default)]
    pub objective: Option<PenaltySpec>,
    #[serde(default)]
    pub constraints: Vec<PenaltySpec>,
    #[serde(default)]
    pub generalized: Option<GeneralizedConfig>,
    #[serde(default)]
    pub state_ceiling: Option<usize>,
}

impl InstanceConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<string>".into(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k", "at least one delay-constrained queue is required"));
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(Error::config("phi", "forced renewal probability must lie in (0, 1]"));
        }
        if self.outcomes.is_empty() {
            return Err(Error::config("outcomes", "support must be non-empty"));
        }
        let width = self.k + self.n;
        let mut total = 0.0;
        for (i, o) in self.outcomes.iter().enumerate() {
            if !(o.prob.is_finite() && o.prob >= 0.0) {
                return Err(Error::config(format!("outcomes[{i}].prob"), "must be a finite nonnegative number"));
            }
            if o.arrivals.len() != width {
                return Err(Error::config(
                    format!("outcomes[{i}].arrivals"),
                    format!("expected {width} entries, got {}", o.arrivals.len()),
                ));
            }
            if o.channels.len() != width {
                return Err(Error::config(
                    format!("outcomes[{i}].channels"),
                    format!("expected {width} entries, got {}", o.channels.len()),
                ));
            }
            total += o.prob;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::config("outcomes", format!("probabilities sum to {total}, not 1")));
        }
        if let Some(obj) = &self.objective {
            obj.validate(self.k, "objective")?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            c.validate(self.k, &format!("constraints[{i}]"))?;
            if c.kind == PenaltyKind::WeightedDropObjective {
                return Err(Error::config(
                    format!("constraints[{i}].kind"),
                    "weighted_drop_objective can only be the objective",
                ));
            }
        }
        if let Some(g) = &self.generalized {
            if !self.constraints.is_empty() || self.objective.is_some() {
                return Err(Error::config(
                    "generalized",
                    "generalized mode replaces `objective` and `constraints`; leave them empty",
                ));
            }
            if g.penalties.is_empty() {
                return Err(Error::config("generalized.penalties", "at least one penalty is required"));
            }
            for (i, p) in g.penalties.iter().enumerate() {
                p.validate(self.k, &format!("generalized.penalties[{i}]"))?;
            }
            let m = g.penalties.len();
            g.objective.validate(m, "generalized.objective")?;
            for (i, c) in g.constraints.iter().enumerate() {
                c.function.validate(m, &format!("generalized.constraints[{i}].function"))?;
                if !c.bound.is_finite() {
                    return Err(Error::config(format!("generalized.constraints[{i}].bound"), "must be finite"));
                }
            }
            if !(g.alpha.is_finite() && g.alpha >= 0.0) {
                return Err(Error::config("generalized.alpha", "must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// All `(B_max + 1)^K` buffer vectors, first component varying fastest; index 0 is
/// the all-zero state.
pub fn enumerate_states(k: usize, b_max: u32, ceiling: usize) -> Result<Vec<MarkovState>> {
    if k == 0 {
        return Err(Error::config("k", "at least one delay-constrained queue is required"));
    }
    let radix = b_max as u128 + 1;
    let mut count: u128 = 1;
    for _ in 0..k {
        count = count.saturating_mul(radix);
        if count > ceiling as u128 {
            return Err(Error::Capacity {
                what: "state count",
                size: radix.saturating_pow(k as u32),
                ceiling: ceiling as u128,
            });
        }
    }
    let mut states = Vec::with_capacity(count as usize);
    let mut z = vec![0u32; k];
    for _ in 0..count {
        states.push(MarkovState(z.clone()));
        for digit in z.iter_mut() {
            if *digit < b_max {
                *digit += 1;
                break;
            }
            *digit = 0;
        }
    }
    Ok(states)
}

/// One admissible choice at `(z, ω)` with its effects, in tabulated form.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotOption {
    pub action: ControlAction,
    /// Successor state index when no forced renewal happens.
    pub next_state: usize,
    /// `μ_n` for the unconstrained queues.
    pub service: Vec<f64>,
    /// `R_n` for the unconstrained queues.
    pub arrivals: Vec<f64>,
    /// Penalties `x_0..x_M`, indexed by the forced-renewal flag.
    pub penalties: [Vec<f64>; 2],
    /// Packets removed from each tracked buffer, `min(μ_k, Z_k)`.
    pub buffer_served: Vec<u32>,
}

/// Finite Markov-modulated network. State 0 must be the renewal state.
pub trait MarkovModulatedNetwork {
    fn forced_renewal_probability(&self) -> f64;
    fn outcome_probabilities(&self) -> Vec<f64>;
    fn num_states(&self) -> usize;
    /// Number of queues `Q_n` to stabilize.
    fn num_queues(&self) -> usize;
    /// Number of finite buffers whose packets are timestamped.
    fn num_buffers(&self) -> usize {
        0
    }
    /// `[x^min, x^max]` for `x_0..x_M`.
    fn penalty_ranges(&self) -> Vec<(f64, f64)>;
    /// `x_m^av` for `m = 1..M`.
    fn constraint_targets(&self) -> Vec<f64>;
    fn slot_options(&self, state: usize, omega: usize) -> Vec<SlotOption>;
}

/// The delay-constrained wireless system.
#[derive(Clone, Debug)]
pub struct WirelessSystem {
    pub config: InstanceConfig,
    pub k: usize,
    pub n: usize,
    pub b_max: u32,
    pub phi: f64,
    pub a_max: u32,
    pub s_max: u32,
    states: Vec<MarkovState>,
    probs: Vec<f64>,
    /// `x_0..x_M`; index 0 is the objective (zero when absent or in generalized mode).
    penalties: Vec<Penalty>,
}

impl WirelessSystem {
    pub fn new(config: InstanceConfig) -> Result<Self> {
        config.validate()?;
        let ceiling = config.state_ceiling.unwrap_or(DEFAULT_STATE_CEILING);
        let states = enumerate_states(config.k, config.b_max, ceiling)?;
        let a_max = config.outcomes.iter().flat_map(|o| o.arrivals.iter().copied()).max().unwrap_or(0);
        let s_max = config.outcomes.iter().flat_map(|o| o.channels.iter().copied()).max().unwrap_or(0);
        let probs = config.outcomes.iter().map(|o| o.prob).collect();
        let mut penalties = Vec::new();
        match &config.generalized {
            Some(g) => {
                penalties.push(Penalty::Zero);
                penalties.extend(g.penalties.iter().cloned().map(Penalty::Library));
            }
            None => {
                penalties.push(config.objective.clone().map_or(Penalty::Zero, Penalty::Library));
                penalties.extend(config.constraints.iter().cloned().map(Penalty::Library));
            }
        }
        Ok(WirelessSystem {
            k: config.k,
            n: config.n,
            b_max: config.b_max,
            phi: config.phi,
            a_max,
            s_max,
            states,
            probs,
            penalties,
            config,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        WirelessSystem::new(InstanceConfig::load(path)?)
    }

    /// Append a user penalty as an extra constraint `x̄ <= target`.
    pub fn with_custom_constraint(mut self, penalty: CustomPenalty) -> Self {
        self.penalties.push(Penalty::Custom(penalty));
        self
    }

    pub fn states(&self) -> &[MarkovState] {
        &self.states
    }

    pub fn state_index(&self, z: &MarkovState) -> usize {
        let radix = self.b_max as usize + 1;
        z.0.iter().rev().fold(0, |acc, &d| acc * radix + d as usize)
    }

    pub fn outcome(&self, omega: usize) -> &OutcomeSpec {
        &self.config.outcomes[omega]
    }

    pub fn num_outcomes(&self) -> usize {
        self.config.outcomes.len()
    }

    pub fn penalties(&self) -> &[Penalty] {
        &self.penalties
    }

    pub fn is_generalized(&self) -> bool {
        self.config.generalized.is_some()
    }

    /// Admissible actions, serve index ascending ("none" first) and then admit
    /// vectors in lexicographic order. The buffer cap is applied as if no forced
    /// renewal happens, so the set does not depend on `φ(t)`.
    pub fn feasible_actions(&self, outcome: Outcome, state: &MarkovState) -> Vec<ControlAction> {
        let o = &self.config.outcomes[outcome.omega];
        let mut actions = Vec::new();
        let serves = std::iter::once(None).chain((0..self.k + self.n).map(Some));
        for serve in serves {
            let caps: Vec<u32> = (0..self.k)
                .map(|k| {
                    let mu = if serve == Some(k) { o.channels[k] } else { 0 };
                    let remaining = state.0[k].saturating_sub(mu);
                    o.arrivals[k].min(self.b_max - remaining)
                })
                .collect();
            let mut admit = vec![0u32; self.k];
            loop {
                actions.push(ControlAction {
                    serve,
                    admit: admit.clone(),
                });
                // odometer with the last component fastest gives lexicographic order
                let mut pos = self.k;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    if admit[pos] < caps[pos] {
                        admit[pos] += 1;
                        for a in admit.iter_mut().skip(pos + 1) {
                            *a = 0;
                        }
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos != usize::MAX {
                    break;
                }
            }
        }
        actions
    }

    fn check_action(&self, outcome: Outcome, state: &MarkovState, action: &ControlAction) -> Result<()> {
        if outcome.omega >= self.num_outcomes() {
            return Err(Error::InfeasibleAction(format!("outcome index {} out of range", outcome.omega)));
        }
        if state.0.len() != self.k || state.0.iter().any(|&z| z > self.b_max) {
            return Err(Error::InfeasibleAction(format!("state {state} outside the state space")));
        }
        if action.admit.len() != self.k {
            return Err(Error::InfeasibleAction("admit vector has the wrong length".into()));
        }
        if let Some(c) = action.serve {
            if c >= self.k + self.n {
                return Err(Error::InfeasibleAction(format!("channel {c} does not exist")));
            }
        }
        let o = &self.config.outcomes[outcome.omega];
        for k in 0..self.k {
            let mu = if action.serve == Some(k) { o.channels[k] } else { 0 };
            if action.admit[k] > o.arrivals[k] {
                return Err(Error::InfeasibleAction(format!(
                    "admit[{k}] = {} exceeds arrivals {}",
                    action.admit[k], o.arrivals[k]
                )));
            }
            if state.0[k].saturating_sub(mu) + action.admit[k] > self.b_max {
                return Err(Error::InfeasibleAction(format!("buffer {k} would overflow")));
            }
        }
        Ok(())
    }

    /// Apply one slot. Deterministic in its inputs.
    pub fn step(&self, state: &MarkovState, outcome: Outcome, action: &ControlAction) -> Result<SlotEffects> {
        self.check_action(outcome, state, action)?;
        Ok(self.step_unchecked(state, outcome, action))
    }

    fn step_unchecked(&self, state: &MarkovState, outcome: Outcome, action: &ControlAction) -> SlotEffects {
        let o = &self.config.outcomes[outcome.omega];
        let width = self.k + self.n;
        let mut mu = vec![0.0; width];
        if let Some(c) = action.serve {
            mu[c] = o.channels[c] as f64;
        }
        let mut arrivals = vec![0.0; width];
        let mut served = vec![0; self.k];
        let mut refused = vec![0; self.k];
        let mut next = vec![0; self.k];
        for k in 0..self.k {
            let offered = mu[k] as u32;
            served[k] = offered.min(state.0[k]);
            refused[k] = o.arrivals[k] - action.admit[k];
            arrivals[k] = action.admit[k] as f64;
            if !outcome.forced_renewal {
                next[k] = state.0[k].saturating_sub(offered) + action.admit[k];
            }
        }
        for n in self.k..width {
            arrivals[n] = o.arrivals[n] as f64;
        }
        let input = PenaltyInput {
            state,
            arrivals: &o.arrivals,
            channels: &o.channels,
            forced_renewal: outcome.forced_renewal,
            action,
        };
        let penalties = self.penalties.iter().map(|p| p.evaluate(&input)).collect();
        SlotEffects {
            mu,
            arrivals,
            penalties,
            next_state: MarkovState(next),
            served,
            refused,
        }
    }

    pub fn evaluate_penalty(
        &self,
        spec: &PenaltySpec,
        state: &MarkovState,
        outcome: Outcome,
        action: &ControlAction,
    ) -> f64 {
        let o = &self.config.outcomes[outcome.omega];
        penalty_value(
            spec,
            &PenaltyInput {
                state,
                arrivals: &o.arrivals,
                channels: &o.channels,
                forced_renewal: outcome.forced_renewal,
                action,
            },
        )
    }

    pub fn sampler(&self) -> Result<OutcomeSampler> {
        OutcomeSampler::new(&self.probs, self.phi)
    }
}

impl MarkovModulatedNetwork for WirelessSystem {
    fn forced_renewal_probability(&self) -> f64 {
        self.phi
    }

    fn outcome_probabilities(&self) -> Vec<f64> {
        self.probs.clone()
    }

    fn num_states(&self) -> usize {
        self.states.len()
    }

    fn num_queues(&self) -> usize {
        self.n
    }

    fn num_buffers(&self) -> usize {
        self.k
    }

    fn penalty_ranges(&self) -> Vec<(f64, f64)> {
        self.penalties
            .iter()
            .map(|p| match p {
                Penalty::Zero => (0.0, 0.0),
                Penalty::Library(spec) => spec.range(self.b_max, self.a_max, self.s_max),
                Penalty::Custom(c) => (c.min, c.max),
            })
            .collect()
    }

    fn constraint_targets(&self) -> Vec<f64> {
        self.penalties.iter().skip(1).map(Penalty::target).collect()
    }

    fn slot_options(&self, state: usize, omega: usize) -> Vec<SlotOption> {
        let z = &self.states[state];
        self.feasible_actions(Outcome { omega, forced_renewal: false }, z)
            .into_iter()
            .map(|action| {
                let calm = self.step_unchecked(z, Outcome { omega, forced_renewal: false }, &action);
                let forced = self.step_unchecked(z, Outcome { omega, forced_renewal: true }, &action);
                SlotOption {
                    next_state: self.state_index(&calm.next_state),
                    service: calm.mu[self.k..].to_vec(),
                    arrivals: calm.arrivals[self.k..].to_vec(),
                    penalties: [calm.penalties, forced.penalties],
                    buffer_served: calm.served,
                    action,
                }
            })
            .collect()
    }
}

/// Draws `Ω(t)` i.i.d.: `ω` from the categorical support, `φ(t)` from an
/// independent Bernoulli.
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    omega: WeightedIndex<f64>,
    forced: Bernoulli,
    single: bool,
}

impl OutcomeSampler {
    pub fn new(probs: &[f64], phi: f64) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::config("outcomes", format!("probabilities sum to {total}, not 1")));
        }
        let omega = WeightedIndex::new(probs).map_err(|e| Error::config("outcomes", e.to_string()))?;
        let forced = Bernoulli::new(phi).map_err(|e| Error::config("phi", e.to_string()))?;
        Ok(OutcomeSampler {
            omega,
            forced,
            single: probs.len() == 1,
        })
    }

    pub fn sample_omega<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.single {
            0
        } else {
            self.omega.sample(rng)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let omega = self.sample_omega(rng);
        let forced_renewal = self.forced.sample(rng);
        Outcome { omega, forced_renewal }
    }
}

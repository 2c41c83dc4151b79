//! Auxiliary variables of the generalized algorithm: the convex objective `f`,
//! the convex constraints `h_l(γ) <= c_l` and the box each `γ_m` lives in.

use crate::convex::{ConvexFunction, WeightedSum};
use crate::error::{Error, Result};
use crate::model::GeneralizedConfig;
use crate::queues::CombinedBacklog;

/// Vertex enumeration is used for maxima of convex functions on the box.
pub const MAX_VERTEX_DIM: usize = 20;

#[derive(Clone, Debug)]
pub struct AuxiliaryState {
    pub objective: ConvexFunction,
    /// `(h_l, c_l)`.
    pub constraints: Vec<(ConvexFunction, f64)>,
    pub alpha: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AuxiliaryState {
    /// Box `[x_m^min − α, x_m^max + α]` from the penalty ranges (objective slot
    /// excluded).
    pub fn new(
        objective: ConvexFunction,
        constraints: Vec<(ConvexFunction, f64)>,
        alpha: f64,
        ranges: &[(f64, f64)],
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::config("alpha", "must be finite and nonnegative"));
        }
        let m = ranges.len();
        if objective.dim() != m || constraints.iter().any(|(h, _)| h.dim() != m) {
            return Err(Error::config("generalized", "function dimension differs from the penalty count"));
        }
        Ok(AuxiliaryState {
            objective,
            constraints,
            alpha,
            lower: ranges.iter().map(|r| r.0 - alpha).collect(),
            upper: ranges.iter().map(|r| r.1 + alpha).collect(),
        })
    }

    /// `ranges` are the ranges of `x_1..x_M`.
    pub fn from_config(cfg: &GeneralizedConfig, ranges: &[(f64, f64)]) -> Result<Self> {
        let m = cfg.penalties.len();
        let objective = ConvexFunction::from_spec(&cfg.objective, m);
        let constraints = cfg
            .constraints
            .iter()
            .map(|c| (ConvexFunction::from_spec(&c.function, m), c.bound))
            .collect();
        AuxiliaryState::new(objective, constraints, cfg.alpha, ranges)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn in_box(&self, gamma: &[f64]) -> bool {
        gamma
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(g, (lo, hi))| *lo <= *g && *g <= *hi)
    }

    /// `[min, max]` of `f` over the box: the minimum by the box minimizer, the
    /// maximum by checking every vertex.
    pub fn function_range(&self, f: &ConvexFunction) -> Result<(f64, f64)> {
        let m = self.dim();
        if m > MAX_VERTEX_DIM {
            return Err(Error::Capacity {
                what: "auxiliary dimension for vertex enumeration",
                size: m as u128,
                ceiling: MAX_VERTEX_DIM as u128,
            });
        }
        let arg = WeightedSum {
            terms: vec![(1.0, f)],
            linear: vec![0.0; m],
        }
        .minimize(&self.lower, &self.upper)?;
        let mut v = vec![0.0; m];
        let mut max = f64::NEG_INFINITY;
        for mask in 0u32..(1u32 << m) {
            for (i, x) in v.iter_mut().enumerate() {
                *x = if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] };
            }
            max = max.max(f.value(&v));
        }
        Ok((f.value(&arg), max))
    }

    pub fn objective_range(&self) -> Result<(f64, f64)> {
        self.function_range(&self.objective)
    }
}

/// Minimizer of `V f(γ) − Σ_m W_m γ_m + Σ_l Y_l h_l(γ)` over the box.
pub fn aux_minimize(theta: &CombinedBacklog, v: f64, aux: &AuxiliaryState) -> Result<Vec<f64>> {
    if theta.w.len() != aux.dim() || theta.y.len() != aux.constraints.len() {
        return Err(Error::Domain("backlog does not match the auxiliary problem".into()));
    }
    let mut terms = vec![(v, &aux.objective)];
    terms.extend(aux.constraints.iter().zip(&theta.y).map(|((h, _), y)| (*y, h)));
    let linear = theta.w.iter().map(|w| -w).collect();
    WeightedSum { terms, linear }.minimize(&aux.lower, &aux.upper)
}

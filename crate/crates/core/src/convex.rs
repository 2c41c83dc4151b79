//! Convex functions of the penalty vector and box-constrained minimizers.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance of the one-dimensional minimizers.
pub const LINE_TOLERANCE: f64 = 1e-9;
/// Stopping tolerance (max coordinate move per sweep) of coordinate descent.
pub const DESCENT_TOLERANCE: f64 = 1e-8;
pub const DESCENT_SWEEP_CAP: usize = 10_000;

/// Built-in convex functions, as they appear in instance files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexFunctionSpec {
    Zero,
    /// `Σ coeffs[m] γ_m + offset`.
    Linear {
        coeffs: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `Σ weights[m] (γ_m − centers[m])²`, weights nonnegative.
    Quadratic { weights: Vec<f64>, centers: Vec<f64> },
    /// Euclidean distance `‖γ − center‖₂`. Not separable.
    Distance { center: Vec<f64> },
}

impl ConvexFunctionSpec {
    pub fn validate(&self, m: usize, field: &str) -> Result<()> {
        let check = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != m {
                return Err(Error::config(
                    format!("{field}.{name}"),
                    format!("expected {m} entries, got {}", v.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(format!("{field}.{name}"), "entries must be finite"));
            }
            Ok(())
        };
        match self {
            ConvexFunctionSpec::Zero => Ok(()),
            ConvexFunctionSpec::Linear { coeffs, offset } => {
                check("coeffs", coeffs)?;
                if !offset.is_finite() {
                    return Err(Error::config(format!("{field}.offset"), "must be finite"));
                }
                Ok(())
            }
            ConvexFunctionSpec::Quadratic { weights, centers } => {
                check("weights", weights)?;
                check("centers", centers)?;
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(Error::config(format!("{field}.weights"), "weights must be nonnegative"));
                }
                Ok(())
            }
            ConvexFunctionSpec::Distance { center } => check("center", center),
        }
    }
}

pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type VectorFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Convex function of one coordinate, optionally with a subgradient oracle.
#[derive(Clone)]
pub struct ScalarConvex {
    pub value: Arc<ScalarFn>,
    pub subgradient: Option<Arc<ScalarFn>>,
}

impl ScalarConvex {
    pub fn new(value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarConvex {
            value: Arc::new(value),
            subgradient: None,
        }
    }

    pub fn with_subgradient(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.subgradient = Some(Arc::new(g));
        self
    }

    fn zero() -> Self {
        ScalarConvex::new(|_| 0.0).with_subgradient(|_| 0.0)
    }
}

#[derive(Clone)]
enum Shape {
    Separable(Vec<ScalarConvex>),
    Joint(Arc<VectorFn>),
}

/// Convex function on `R^M`.
#[derive(Clone)]
pub struct ConvexFunction {
    dim: usize,
    shape: Shape,
}

impl fmt::Debug for ConvexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.shape {
            Shape::Separable(_) => "separable",
            Shape::Joint(_) => "joint",
        };
        write!(f, "ConvexFunction({kind}, dim={})", self.dim)
    }
}

impl ConvexFunction {
    pub fn zero(dim: usize) -> Self {
        ConvexFunction::separable((0..dim).map(|_| ScalarConvex::zero()).collect())
    }

    pub fn separable(parts: Vec<ScalarConvex>) -> Self {
        ConvexFunction {
            dim: parts.len(),
            shape: Shape::Separable(parts),
        }
    }

    pub fn joint(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ConvexFunction {
            dim,
            shape: Shape::Joint(Arc::new(f)),
        }
    }

    pub fn from_spec(spec: &ConvexFunctionSpec, dim: usize) -> Self {
        match spec.clone() {
            ConvexFunctionSpec::Zero => ConvexFunction::zero(dim),
            ConvexFunctionSpec::Linear { coeffs, offset } => ConvexFunction::separable(
                coeffs
                    .into_iter()
                    .enumerate()
                    .map(|(m, c)| {
                        let shift = if m == 0 { offset } else { 0.0 };
                        ScalarConvex::new(move |g| c * g + shift).with_subgradient(move |_| c)
                    })
                    .collect(),
            ),
            ConvexFunctionSpec::Quadratic { weights, centers } => ConvexFunction::separable(
                weights
                    .into_iter()
                    .zip(centers)
                    .map(|(w, c)| {
                        ScalarConvex::new(move |g| w * (g - c) * (g - c))
                            .with_subgradient(move |g| 2.0 * w * (g - c))
                    })
                    .collect(),
            ),
            ConvexFunctionSpec::Distance { center } => ConvexFunction::joint(dim, move |g| {
                g.iter()
                    .zip(&center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.shape, Shape::Separable(_))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Separable(parts) => parts.iter().zip(x).map(|(p, &g)| (p.value)(g)).sum(),
            Shape::Joint(f) => f(x),
        }
    }

    fn part(&self, m: usize) -> Option<&ScalarConvex> {
        match &self.shape {
            Shape::Separable(parts) => parts.get(m),
            Shape::Joint(_) => None,
        }
    }
}

/// Minimize a convex function of one variable over `[lo, hi]` by golden-section
/// search, comparing the final point against both ends.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi - lo <= tol {
        return best_of(&f, &[lo, 0.5 * (lo + hi), hi]);
    }
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    best_of(&f, &[0.5 * (a + b), lo, hi])
}

fn best_of(f: &impl Fn(f64) -> f64, candidates: &[f64]) -> f64 {
    let mut best = candidates[0];
    let mut best_value = f(best);
    for &x in &candidates[1..] {
        let v = f(x);
        if v < best_value {
            best = x;
            best_value = v;
        }
    }
    best
}

/// Minimize a convex function of one variable over `[lo, hi]` by bisection on the
/// sign of a subgradient.
pub fn subgradient_bisection(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if g(lo) >= 0.0 {
        return lo;
    }
    if g(hi) <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let s = g(mid);
        if s == 0.0 {
            return mid;
        }
        if s > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// `Σ_i weight_i · f_i(γ)` plus a linear term `Σ_m linear_m γ_m`, minimized over a box.
pub struct WeightedSum<'a> {
    pub terms: Vec<(f64, &'a ConvexFunction)>,
    pub linear: Vec<f64>,
}

impl WeightedSum<'_> {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (w, f) in &self.terms {
            if *w != 0.0 {
                total += w * f.value(x);
            }
        }
        total + self.linear.iter().zip(x).map(|(c, g)| c * g).sum::<f64>()
    }

    fn coordinate_value(&self, m: usize, g: f64) -> Option<f64> {
        let mut total = self.linear[m] * g;
        for (w, f) in &self.terms {
            if *w != 0.0 {
                total += w * (f.part(m)?.value)(g);
            }
        }
        Some(total)
    }

    fn coordinate_subgradient(&self, m: usize, g: f64) -> Option<f64> {
        let mut total = self.linear[m];
        for (w, f) in &self.terms {
            if *w != 0.0 {
                total += w * (f.part(m)?.subgradient.as_ref()?)(g);
            }
        }
        Some(total)
    }

    fn separable(&self) -> bool {
        self.terms.iter().all(|(w, f)| *w == 0.0 || f.is_separable())
    }

    fn has_subgradients(&self, m: usize) -> bool {
        self.terms
            .iter()
            .all(|(w, f)| *w == 0.0 || f.part(m).is_some_and(|p| p.subgradient.is_some()))
    }

    /// Minimizer over `[lower, upper]`. Separable problems are solved coordinate by
    /// coordinate; joint ones by cyclic coordinate descent started at the box centre.
    pub fn minimize(&self, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
        let m = lower.len();
        if upper.len() != m || self.linear.len() != m {
            return Err(Error::Domain("box and weight dimensions differ".into()));
        }
        for i in 0..m {
            if !(lower[i] <= upper[i]) {
                return Err(Error::config(
                    format!("box[{i}]"),
                    format!("empty interval [{}, {}]", lower[i], upper[i]),
                ));
            }
        }
        if self.separable() {
            return Ok((0..m)
                .map(|i| {
                    if self.has_subgradients(i) {
                        subgradient_bisection(
                            |g| self.coordinate_subgradient(i, g).unwrap(),
                            lower[i],
                            upper[i],
                            LINE_TOLERANCE,
                        )
                    } else {
                        golden_section(
                            |g| self.coordinate_value(i, g).unwrap(),
                            lower[i],
                            upper[i],
                            LINE_TOLERANCE,
                        )
                    }
                })
                .collect());
        }
        let mut x: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
        for _ in 0..DESCENT_SWEEP_CAP {
            let mut moved = 0.0f64;
            for i in 0..m {
                let old = x[i];
                let best = golden_section(
                    |g| {
                        let mut probe = x.clone();
                        probe[i] = g;
                        self.value(&probe)
                    },
                    lower[i],
                    upper[i],
                    LINE_TOLERANCE,
                );
                x[i] = best;
                moved = moved.max((best - old).abs());
            }
            if moved < DESCENT_TOLERANCE {
                break;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_interior_and_boundary() {
        let x = golden_section(|g| (g - 0.3) * (g - 0.3), -1.0, 1.0, LINE_TOLERANCE);
        assert!((x - 0.3).abs() < 1e-8);
        let x = golden_section(|g| -2.0 * g, -1.0, 1.0, LINE_TOLERANCE);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn bisection_root() {
        let x = subgradient_bisection(|g| 4.0 * g - 4.0, -10.0, 10.0, LINE_TOLERANCE);
        assert!((x - 1.0).abs() < 1e-9);
        assert_eq!(subgradient_bisection(|_| -2.0, -1.0, 1.0, LINE_TOLERANCE), 1.0);
    }

    #[test]
    fn spec_functions_evaluate() {
        let f = ConvexFunction::from_spec(
            &ConvexFunctionSpec::Quadratic {
                weights: vec![1.0, 2.0],
                centers: vec![0.0, 1.0],
            },
            2,
        );
        assert_eq!(f.value(&[2.0, 0.0]), 4.0 + 2.0);
        let d = ConvexFunction::from_spec(&ConvexFunctionSpec::Distance { center: vec![0.0, 0.0] }, 2);
        assert_eq!(d.value(&[3.0, 4.0]), 5.0);
        assert!(!d.is_separable());
    }

    #[test]
    fn joint_minimization() {
        let d = ConvexFunction::from_spec(&ConvexFunctionSpec::Distance { center: vec![0.5, -0.25] }, 2);
        let sum = WeightedSum {
            terms: vec![(1.0, &d)],
            linear: vec![0.0, 0.0],
        };
        let x = sum.minimize(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-6 && (x[1] + 0.25).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn empty_box_is_config_error() {
        let f = ConvexFunction::zero(1);
        let sum = WeightedSum {
            terms: vec![(1.0, &f)],
            linear: vec![0.0],
        };
        assert!(matches!(sum.minimize(&[1.0], &[0.0]), Err(Error::Config { .. })));
    }
}

//! Real and virtual queue backlogs, the quadratic Lyapunov function and the
//! drift constants.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::auxiliary::AuxiliaryState;
use crate::error::{Error, Result};
use crate::scheduler::{RenewalConfig, RenewalKind};
use crate::tables::NetworkTables;

pub fn update_q(q: f64, mu: f64, r: f64) -> f64 {
    (q - mu).max(0.0) + r
}

/// Virtual queue for `x̄ <= x_av`; `x_av` may be negative.
pub fn update_y(y: f64, x_av: f64, x: f64) -> f64 {
    (y - x_av + x).max(0.0)
}

/// Signed queue for the equality `γ̄ = x̄`.
pub fn update_w(w: f64, gamma: f64, x: f64) -> f64 {
    w - gamma + x
}

/// Virtual queue for `h_l(γ̄) <= c_l`.
pub fn update_yl(y: f64, c_l: f64, h_val: f64) -> f64 {
    (y - c_l + h_val).max(0.0)
}

/// `Θ = [Q; Y; W]`. In the base algorithm `y` holds one queue per constraint and `w`
/// is empty; in the generalized algorithm `y` holds one queue per convex
/// constraint `h_l` and `w` one per penalty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CombinedBacklog {
    pub q: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
}

impl CombinedBacklog {
    pub fn zeros(n: usize, y: usize, w: usize) -> Self {
        CombinedBacklog {
            q: vec![0.0; n],
            y: vec![0.0; y],
            w: vec![0.0; w],
        }
    }

    pub fn lyapunov(&self) -> f64 {
        lyapunov(self)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.y)
            .chain(&self.w)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn queue_sum(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Entrywise `self − other`; used to isolate the backlog-dependent part of a
    /// stage cost.
    pub fn minus(&self, other: &CombinedBacklog) -> CombinedBacklog {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        CombinedBacklog {
            q: sub(&self.q, &other.q),
            y: sub(&self.y, &other.y),
            w: sub(&self.w, &other.w),
        }
    }
}

pub fn lyapunov(theta: &CombinedBacklog) -> f64 {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    0.5 * (sq(&theta.q) + sq(&theta.y) + sq(&theta.w))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants {
    pub sigma_sq: f64,
    pub b_const: f64,
    /// Zero unless an auxiliary problem is supplied.
    pub b2_const: f64,
    pub et2_bound: f64,
}

/// Upper bound on `E[T²]` for a renewal interval.
pub fn renewal_second_moment_bound(phi: f64, renewal: &RenewalConfig) -> f64 {
    match renewal.kind {
        RenewalKind::Type1 | RenewalKind::Type2 => (2.0 - phi) / (phi * phi),
        RenewalKind::Type3 => {
            let b = renewal.b as f64;
            b * (1.0 - phi) / (phi * phi) + b * b / (phi * phi)
        }
    }
}

/// Exact maximum over the tabulated support of `Σ_n (μ_n² + R_n²)`.
fn max_queue_term(tables: &NetworkTables) -> f64 {
    (0..tables.num_options())
        .map(|a| {
            let mu = tables.service(a);
            let r = tables.arrivals(a);
            mu.iter().zip(r).map(|(m, r)| m * m + r * r).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn compute_drift_constants(
    tables: &NetworkTables,
    renewal: &RenewalConfig,
    aux: Option<&AuxiliaryState>,
) -> Result<DriftConstants> {
    let et2_bound = renewal_second_moment_bound(tables.phi, renewal);
    let m = tables.num_penalties;
    let queue_part = max_queue_term(tables);

    let mut sigma_sq = 0.0f64;
    for a in 0..tables.num_options() {
        let mu = tables.service(a);
        let r = tables.arrivals(a);
        let base: f64 = mu.iter().zip(r).map(|(m, r)| m * m + r * r).sum();
        for forced in [false, true] {
            let x = tables.penalties(a, forced);
            let penalty: f64 = (1..m)
                .map(|i| {
                    let d = x[i] - tables.targets[i - 1];
                    d * d
                })
                .sum();
            sigma_sq = sigma_sq.max(base + penalty);
        }
    }
    if tables.num_options() == 0 {
        sigma_sq = queue_part;
    }

    let b2_const = match aux {
        None => 0.0,
        Some(aux) => {
            if aux.dim() + 1 != m {
                return Err(Error::Domain("auxiliary dimension does not match the penalty count".into()));
            }
            let mut gap = 0.0;
            for i in 0..aux.dim() {
                let (lo, hi) = (aux.lower[i], aux.upper[i]);
                let mut worst = 0.0f64;
                for a in 0..tables.num_options() {
                    for forced in [false, true] {
                        let x = tables.penalties(a, forced)[i + 1];
                        worst = worst.max((x - lo).abs()).max((x - hi).abs());
                    }
                }
                gap += worst * worst;
            }
            for (l, (h, c)) in aux.constraints.iter().enumerate() {
                let (h_min, h_max) = aux.function_range(h).map_err(|e| match e {
                    Error::Capacity { .. } => e,
                    other => Error::Domain(format!("constraint {l}: {other}")),
                })?;
                gap += ((h_max - c).powi(2)).max((h_min - c).powi(2));
            }
            et2_bound * (queue_part + gap) / 2.0
        }
    };

    Ok(DriftConstants {
        sigma_sq,
        b_const: sigma_sq * et2_bound / 2.0,
        b2_const,
        et2_bound,
    })
}

/// Per-buffer FIFO arrival timestamps, for measuring the delay of packets that
/// are served rather than dropped.
#[derive(Clone, Debug, Default)]
pub struct DelayTracker {
    buffers: Vec<VecDeque<u64>>,
    pub served: Vec<u64>,
    pub total_delay: Vec<u64>,
    pub flushed: Vec<u64>,
}

impl DelayTracker {
    pub fn new(k: usize) -> Self {
        DelayTracker {
            buffers: vec![VecDeque::new(); k],
            served: vec![0; k],
            total_delay: vec![0; k],
            flushed: vec![0; k],
        }
    }

    /// Serve `served[k]` head-of-line packets at slot `t`, then either flush every
    /// buffer (forced renewal) or append this slot's admitted packets.
    pub fn slot(&mut self, t: u64, served: &[u32], admitted: &[u32], forced: bool) {
        for (k, buf) in self.buffers.iter_mut().enumerate() {
            for _ in 0..served[k] {
                let arrived = buf.pop_front().expect("served more packets than buffered");
                self.served[k] += 1;
                self.total_delay[k] += t - arrived;
            }
            if forced {
                self.flushed[k] += buf.len() as u64;
                buf.clear();
            } else {
                buf.extend(std::iter::repeat_n(t, admitted[k] as usize));
            }
        }
    }

    pub fn occupancy(&self, k: usize) -> usize {
        self.buffers[k].len()
    }

    pub fn mean_delay(&self, k: usize) -> Option<f64> {
        (self.served[k] > 0).then(|| self.total_delay[k] as f64 / self.served[k] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn updates() {
        assert_eq!(update_q(5.0, 3.0, 2.0), 4.0);
        assert_eq!(update_q(1.0, 3.0, 0.0), 0.0);
        assert_eq!(update_q(0.0, 0.0, 7.0), 7.0);
        assert_eq!(update_y(2.0, 1.0, 0.5), 1.5);
        assert_eq!(update_y(0.3, 1.0, 0.5), 0.0);
        assert_eq!(update_y(0.0, -1.0, 0.0), 1.0);
        assert_eq!(update_w(-2.0, 1.0, 3.0), 0.0);
        assert_eq!(update_w(0.0, 2.0, 0.5), -1.5);
        assert_eq!(update_w(5.0, 0.0, 0.0), 5.0);
        assert_eq!(update_yl(1.0, 2.0, 2.0), 1.0);
        assert_eq!(update_yl(0.0, 5.0, 1.0), 0.0);
        assert_eq!(update_yl(3.0, 0.0, 1.0), 4.0);
    }

    #[test]
    fn lyapunov_values() {
        assert_eq!(lyapunov(&CombinedBacklog::zeros(2, 1, 0)), 0.0);
        let t = CombinedBacklog { q: vec![3.0], y: vec![4.0], w: vec![] };
        assert_eq!(lyapunov(&t), 12.5);
        let t = CombinedBacklog { q: vec![0.0], y: vec![0.0], w: vec![-2.0] };
        assert_eq!(lyapunov(&t), 2.0);
    }

    #[test]
    fn second_moment_bounds() {
        let t1 = RenewalConfig { kind: RenewalKind::Type1, b: 1 };
        assert_eq!(renewal_second_moment_bound(0.5, &t1), 6.0);
        let t3 = RenewalConfig { kind: RenewalKind::Type3, b: 2 };
        assert_eq!(renewal_second_moment_bound(0.5, &t3), 20.0);
    }

    #[test]
    fn fifo_delays() {
        let mut d = DelayTracker::new(1);
        d.slot(0, &[0], &[2], false);
        d.slot(1, &[1], &[1], false);
        d.slot(3, &[2], &[0], false);
        assert_eq!(d.served[0], 3);
        assert_eq!(d.total_delay[0], 1 + 3 + 2);
        d.slot(4, &[0], &[3], false);
        d.slot(5, &[1], &[0], true);
        assert_eq!(d.flushed[0], 2);
        assert_eq!(d.occupancy(0), 0);
    }
}

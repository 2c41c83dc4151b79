//! Flat, precomputed tables of a [`MarkovModulatedNetwork`].
//!
//! Options for `(z, ω)` occupy the index range `offsets[z·|ω| + ω] .. offsets[..+1]`
//! of every per-option array.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{ControlAction, MarkovModulatedNetwork};

/// Ceiling on the total number of tabulated `(z, ω, action)` triples.
pub const DEFAULT_OPTION_CEILING: usize = 50_000_000;

#[derive(Clone, Debug)]
pub struct NetworkTables {
    pub phi: f64,
    pub probs: Vec<f64>,
    pub num_states: usize,
    pub num_outcomes: usize,
    pub num_queues: usize,
    pub num_buffers: usize,
    /// `M + 1` (objective plus constraints).
    pub num_penalties: usize,
    pub penalty_ranges: Vec<(f64, f64)>,
    pub targets: Vec<f64>,
    offsets: Vec<usize>,
    actions: Vec<ControlAction>,
    next: Vec<u32>,
    service: Vec<f64>,
    arrivals: Vec<f64>,
    penalties: Vec<f64>,
    buffer_served: Vec<u32>,
}

impl NetworkTables {
    pub fn build(net: &dyn MarkovModulatedNetwork) -> Result<Self> {
        NetworkTables::build_with_ceiling(net, DEFAULT_OPTION_CEILING)
    }

    pub fn build_with_ceiling(net: &dyn MarkovModulatedNetwork, ceiling: usize) -> Result<Self> {
        let probs = net.outcome_probabilities();
        let num_states = net.num_states();
        let num_outcomes = probs.len();
        let num_queues = net.num_queues();
        let num_buffers = net.num_buffers();
        let penalty_ranges = net.penalty_ranges();
        let num_penalties = penalty_ranges.len();
        let targets = net.constraint_targets();
        if targets.len() + 1 != num_penalties {
            return Err(Error::Domain("penalty ranges and constraint targets disagree".into()));
        }
        let mut t = NetworkTables {
            phi: net.forced_renewal_probability(),
            probs,
            num_states,
            num_outcomes,
            num_queues,
            num_buffers,
            num_penalties,
            penalty_ranges,
            targets,
            offsets: Vec::with_capacity(num_states * num_outcomes + 1),
            actions: Vec::new(),
            next: Vec::new(),
            service: Vec::new(),
            arrivals: Vec::new(),
            penalties: Vec::new(),
            buffer_served: Vec::new(),
        };
        t.offsets.push(0);
        for z in 0..num_states {
            for w in 0..num_outcomes {
                let options = net.slot_options(z, w);
                if options.is_empty() {
                    return Err(Error::Domain(format!("no admissible action at state {z}, outcome {w}")));
                }
                for o in options {
                    if o.next_state >= num_states {
                        return Err(Error::Domain(format!("successor {} out of range", o.next_state)));
                    }
                    t.next.push(o.next_state as u32);
                    t.service.extend_from_slice(&o.service);
                    t.arrivals.extend_from_slice(&o.arrivals);
                    t.penalties.extend_from_slice(&o.penalties[0]);
                    t.penalties.extend_from_slice(&o.penalties[1]);
                    t.buffer_served.extend_from_slice(&o.buffer_served);
                    t.actions.push(o.action);
                }
                if t.actions.len() > ceiling {
                    return Err(Error::Capacity {
                        what: "tabulated action count",
                        size: t.actions.len() as u128,
                        ceiling: ceiling as u128,
                    });
                }
                t.offsets.push(t.actions.len());
            }
        }
        Ok(t)
    }

    pub fn num_options(&self) -> usize {
        self.actions.len()
    }

    pub fn options(&self, state: usize, omega: usize) -> Range<usize> {
        let i = state * self.num_outcomes + omega;
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn action(&self, a: usize) -> &ControlAction {
        &self.actions[a]
    }

    pub fn next_state(&self, a: usize) -> usize {
        self.next[a] as usize
    }

    pub fn service(&self, a: usize) -> &[f64] {
        let n = self.num_queues;
        &self.service[a * n..(a + 1) * n]
    }

    pub fn arrivals(&self, a: usize) -> &[f64] {
        let n = self.num_queues;
        &self.arrivals[a * n..(a + 1) * n]
    }

    /// Penalties `x_0..x_M` of option `a` under forced-renewal flag `forced`.
    pub fn penalties(&self, a: usize, forced: bool) -> &[f64] {
        let p = self.num_penalties;
        let start = (2 * a + forced as usize) * p;
        &self.penalties[start..start + p]
    }

    pub fn buffer_served(&self, a: usize) -> &[u32] {
        let k = self.num_buffers;
        &self.buffer_served[a * k..(a + 1) * k]
    }

    /// Largest service and arrival over all options, per queue.
    pub fn queue_extremes(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_queues;
        let mut mu = vec![0.0f64; n];
        let mut r = vec![0.0f64; n];
        for a in 0..self.num_options() {
            for i in 0..n {
                mu[i] = mu[i].max(self.service(a)[i]);
                r[i] = r[i].max(self.arrivals(a)[i]);
            }
        }
        (mu, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceConfig, OutcomeSpec, PenaltySpec, WirelessSystem};

    #[test]
    fn tables_mirror_the_model() {
        let sys = WirelessSystem::new(InstanceConfig {
            name: String::new(),
            k: 1,
            n: 1,
            b_max: 2,
            phi: 0.25,
            outcomes: vec![
                OutcomeSpec { prob: 0.5, arrivals: vec![1, 1], channels: vec![1, 2] },
                OutcomeSpec { prob: 0.5, arrivals: vec![2, 0], channels: vec![2, 1] },
            ],
            objective: Some(PenaltySpec::congestion(0, 0.0)),
            constraints: vec![PenaltySpec::drop_rate(0, 0.5)],
            generalized: None,
            state_ceiling: None,
        })
        .unwrap();
        let t = NetworkTables::build(&sys).unwrap();
        assert_eq!(t.num_states, 3);
        assert_eq!(t.num_penalties, 2);
        for z in 0..3 {
            for w in 0..2 {
                let range = t.options(z, w);
                let outcome = crate::model::Outcome { omega: w, forced_renewal: false };
                let acts = sys.feasible_actions(outcome, &sys.states()[z]);
                assert_eq!(range.len(), acts.len());
                for (a, act) in range.zip(&acts) {
                    assert_eq!(t.action(a), act);
                    let fx = sys.step(&sys.states()[z], outcome, act).unwrap();
                    assert_eq!(t.next_state(a), sys.state_index(&fx.next_state));
                    assert_eq!(t.penalties(a, false), fx.penalties.as_slice());
                    assert_eq!(t.service(a), &fx.mu[1..]);
                }
            }
        }
    }
}

//! Library results against brute force on instances small enough to enumerate
//! every deterministic policy. Frame costs are rebuilt from the model layer,
//! not from the precomputed tables.

use mmsched::model::{InstanceConfig, MarkovState, Outcome, OutcomeSpec, PenaltySpec, WirelessSystem};
use mmsched::oracle::{lp_max_slack, lp_optimal_penalty};
use mmsched::queues::CombinedBacklog;
use mmsched::ssp::{solve_exact, SspProblem, StageCostContext, Termination};
use mmsched::tables::NetworkTables;
use nalgebra::{DMatrix, DVector};

fn small_instance(n: usize, phi: f64) -> InstanceConfig {
    let outcome = |prob: f64, a: u32, s: u32| OutcomeSpec {
        prob,
        arrivals: vec![a; 1 + n],
        channels: vec![s; 1 + n],
    };
    InstanceConfig {
        name: "enum".into(),
        k: 1,
        n,
        b_max: 1,
        phi,
        outcomes: vec![outcome(0.35, 1, 1), outcome(0.65, 0, 1)],
        objective: Some(PenaltySpec::drop_rate(0, 0.0)),
        constraints: vec![PenaltySpec::congestion(0, 0.6)],
        generalized: None,
        state_ceiling: None,
    }
}

/// Drift-plus-penalty weight of one slot straight from `step`.
fn slot_cost(sys: &WirelessSystem, z: &MarkovState, o: Outcome, act: &mmsched::model::ControlAction, q: &[f64], y: &[f64], v: f64) -> f64 {
    let fx = sys.step(z, o, act).unwrap();
    let mut c = v * fx.penalties[0];
    for (i, qn) in q.iter().enumerate() {
        c -= qn * (fx.mu[sys.k + i] - fx.arrivals[sys.k + i]);
    }
    for (m, ym) in y.iter().enumerate() {
        c -= ym * (sys.config.constraints[m].average_target() - fx.penalties[m + 1]);
    }
    c
}

/// Every map from (state, outcome) to a feasible action, as index vectors.
fn all_policies(choices: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in choices {
        out = out
            .into_iter()
            .flat_map(|p| (0..c).map(move |i| [p.clone(), vec![i]].concat()))
            .collect();
    }
    out
}

/// `min_π J^π(z)` for every state, each `J^π` solved as a linear system.
fn enumerated_optimum(sys: &WirelessSystem, q: &[f64], y: &[f64], v: f64, termination: Termination) -> Vec<f64> {
    let states = sys.states().to_vec();
    let s = states.len();
    let nw = sys.num_outcomes();
    let phi = sys.config.phi;
    let actions: Vec<Vec<_>> = (0..s * nw)
        .map(|i| sys.feasible_actions(Outcome { omega: i % nw, forced_renewal: false }, &states[i / nw]))
        .collect();
    // a forced slot ends the frame, so its best action is myopic
    let forced_best: Vec<f64> = (0..s * nw)
        .map(|i| {
            let o = Outcome { omega: i % nw, forced_renewal: true };
            sys.feasible_actions(o, &states[i / nw])
                .iter()
                .map(|a| slot_cost(sys, &states[i / nw], o, a, q, y, v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let choices: Vec<usize> = actions.iter().map(Vec::len).collect();
    let mut best = vec![f64::INFINITY; s];
    for policy in all_policies(&choices) {
        let mut a = DMatrix::<f64>::identity(s, s);
        let mut b = DVector::<f64>::zeros(s);
        for z in 0..s {
            for w in 0..nw {
                let i = z * nw + w;
                let p = sys.outcome(w).prob;
                let o = Outcome { omega: w, forced_renewal: false };
                let act = &actions[i][policy[i]];
                b[z] += p * (phi * forced_best[i] + (1.0 - phi) * slot_cost(sys, &states[z], o, act, q, y, v));
                let next = sys.state_index(&sys.step(&states[z], o, act).unwrap().next_state);
                if !(termination == Termination::ZeroState && next == 0) {
                    a[(z, next)] -= p * (1.0 - phi);
                }
            }
        }
        let j = a.lu().solve(&b).expect("phi > 0 makes the system nonsingular");
        for z in 0..s {
            best[z] = best[z].min(j[z]);
        }
    }
    best
}

#[test]
fn exact_solver_matches_policy_enumeration() {
    for (n, phi) in [(0, 0.3), (1, 0.3), (1, 0.8)] {
        let sys = WirelessSystem::new(small_instance(n, phi)).unwrap();
        let tables = NetworkTables::build(&sys).unwrap();
        for (q, y, v) in [(vec![0.0; n], vec![0.0], 1.0), (vec![7.5; n], vec![3.0], 2.0), (vec![40.0; n], vec![0.5], 0.0)] {
            for termination in [Termination::ZeroState, Termination::ForcedOnly] {
                let theta = CombinedBacklog { q: q.clone(), y: y.clone(), w: vec![] };
                let ctx = StageCostContext::new(theta, v);
                let j = solve_exact(&SspProblem::new(&tables, &ctx, termination)).unwrap();
                let brute = enumerated_optimum(&sys, &q, &y, v, termination);
                for (z, want) in brute.iter().enumerate() {
                    assert!(
                        (j.get(z) - want).abs() <= 1e-8 * want.abs().max(1.0),
                        "n={n} phi={phi} {termination:?} z={z}: {} vs {want}",
                        j.get(z)
                    );
                }
            }
        }
    }
}

#[test]
fn lp_optimum_matches_best_deterministic_policy_without_constraints() {
    // no constraints and no queues: some deterministic policy is optimal
    let mut cfg = small_instance(0, 0.25);
    cfg.constraints.clear();
    let sys = WirelessSystem::new(cfg).unwrap();
    let tables = NetworkTables::build(&sys).unwrap();
    let (lp, _) = lp_optimal_penalty(&tables).unwrap();

    let states = sys.states().to_vec();
    let (s, nw, phi) = (states.len(), sys.num_outcomes(), sys.config.phi);
    let drop = |z: &MarkovState, o: Outcome, a: &mmsched::model::ControlAction| sys.step(z, o, a).unwrap().penalties[0];
    let actions: Vec<Vec<_>> = (0..s * nw)
        .map(|i| sys.feasible_actions(Outcome { omega: i % nw, forced_renewal: false }, &states[i / nw]))
        .collect();
    let choices: Vec<usize> = actions.iter().map(Vec::len).collect();
    let mut best = f64::INFINITY;
    for policy in all_policies(&choices) {
        let mut p = DMatrix::<f64>::zeros(s, s);
        let mut cost = vec![0.0; s];
        for z in 0..s {
            for w in 0..nw {
                let i = z * nw + w;
                let pw = sys.outcome(w).prob;
                let calm = Outcome { omega: w, forced_renewal: false };
                let forced = Outcome { omega: w, forced_renewal: true };
                let act = &actions[i][policy[i]];
                let forced_min = sys
                    .feasible_actions(forced, &states[z])
                    .iter()
                    .map(|a| drop(&states[z], forced, a))
                    .fold(f64::INFINITY, f64::min);
                cost[z] += pw * ((1.0 - phi) * drop(&states[z], calm, act) + phi * forced_min);
                let next = sys.state_index(&sys.step(&states[z], calm, act).unwrap().next_state);
                p[(z, next)] += pw * (1.0 - phi);
                p[(z, 0)] += pw * phi;
            }
        }
        // stationary distribution: π(P − I) = 0, Σπ = 1
        let mut m = (p.transpose() - DMatrix::identity(s, s)).insert_row(s, 1.0);
        let mut rhs = DVector::zeros(s + 1);
        rhs[s] = 1.0;
        m = m.remove_row(0);
        rhs = rhs.remove_row(0);
        let pi = m.lu().solve(&rhs).unwrap();
        best = best.min((0..s).map(|z| pi[z] * cost[z]).sum::<f64>());
    }
    assert!((lp - best).abs() < 1e-9, "lp {lp} vs enumeration {best}");
}

#[test]
fn slack_matches_hand_computation() {
    // K = 1, b_max = 1, one queue with arrival 1 w.p. 0.35 and service 1 always.
    // Serving the queue every slot gives drift 1 − 0.35 = 0.65, and the
    // congestion constraint can be met with room to spare.
    let sys = WirelessSystem::new(small_instance(1, 1.0)).unwrap();
    let tables = NetworkTables::build(&sys).unwrap();
    let eps = lp_max_slack(&tables).unwrap();
    // with phi = 1 the buffer is flushed every slot, so congestion is 0 and the
    // best common slack is min(0.65, 0.6 − 0) = 0.6
    assert!((eps - 0.6).abs() < 1e-9, "{eps}");
}

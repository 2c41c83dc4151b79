//! Sampled value iteration: the classic 1/(b+1) step against a fixed step,
//! tracking the distance to the exact fixed point.
//!
//!     cargo run --example robbins_monro -- [gamma] [batch]

use mmsched::model::WirelessSystem;
use mmsched::queues::CombinedBacklog;
use mmsched::rng;
use mmsched::ssp::{
    fixed_gamma_envelope, iterate_classic, iterate_fixed_gamma, noise_bound, solve_exact, CostVector, SspProblem,
    StageCostContext, Termination,
};
use mmsched::tables::NetworkTables;

fn main() -> mmsched::Result<()> {
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let batch: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let system = WirelessSystem::load(&path)?;
    let tables = NetworkTables::build(&system)?;
    let ctx = StageCostContext::new(CombinedBacklog { q: vec![10.0], y: vec![4.0], w: vec![] }, 5.0);
    let problem = SspProblem::new(&tables, &ctx, Termination::ForcedOnly);
    let star = solve_exact(&problem)?;

    let iterations = 2000;
    let sampler = system.sampler()?;
    let mut r = rng::stream(1, rng::SOLVER, 0);
    let samples: Vec<usize> = (0..iterations * batch).map(|_| sampler.sample_omega(&mut r)).collect();
    let j0 = CostVector::zeros(tables.num_states);
    let checkpoints = [1, 10, 100, 1000, 2000];

    let mut classic = Vec::new();
    iterate_classic(&problem, &j0, batch, iterations, &samples, |b, j| {
        if checkpoints.contains(&b) {
            classic.push(j.distance(&star));
        }
    })?;
    let mut fixed = Vec::new();
    iterate_fixed_gamma(&problem, &j0, gamma, batch, iterations, &samples, |b, j| {
        if checkpoints.contains(&b) {
            fixed.push(j.squared_distance(&star) / tables.num_states as f64);
        }
    })?;

    let sigma_sq = noise_bound(problem.c_max(), tables.phi, batch);
    let init = star.states().iter().fold(0.0f64, |m, v| m.max(v * v));
    println!("gamma={gamma}, batch={batch}, |J*|={:.3}", star.norm());
    println!("{:>6} {:>14} {:>16} {:>16}", "b", "classic dist", "fixed mean sq", "envelope");
    for (i, &b) in checkpoints.iter().enumerate() {
        let env = fixed_gamma_envelope(b as u64, gamma, tables.phi, sigma_sq, init);
        println!("{b:>6} {:>14.5} {:>16.5} {:>16.3}", classic[i], fixed[i], env);
    }
    Ok(())
}

//! Solve the per-frame shortest-path problem exactly by value iteration and
//! show the geometric contraction of successive sweeps.
//!
//!     cargo run --example exact_ssp -- [Q] [Y] [V]

use mmsched::model::WirelessSystem;
use mmsched::queues::CombinedBacklog;
use mmsched::ssp::{psi_exact, solve_exact_from, SspProblem, StageCostContext, Termination};
use mmsched::tables::NetworkTables;

fn main() -> mmsched::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let arg = |i: usize, d: f64| args.get(i).copied().unwrap_or(d);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let tables = NetworkTables::build(&WirelessSystem::load(&path)?)?;

    let theta = CombinedBacklog { q: vec![arg(0, 20.0)], y: vec![arg(1, 5.0)], w: vec![] };
    let ctx = StageCostContext::new(theta, arg(2, 10.0));
    for termination in [Termination::ZeroState, Termination::ForcedOnly] {
        let problem = SspProblem::new(&tables, &ctx, termination);
        let sol = solve_exact_from(&problem, None, 1e-12, 100_000)?;
        let residual = psi_exact(&problem, &sol.j).distance(&sol.j);
        println!("{termination:?}: {} sweeps, residual {residual:.2e}", sol.sweeps);
        println!("  c_max = {:.3}, |J*| = {:.3} <= c_max/phi = {:.3}", problem.c_max(), sol.j.norm(), problem.j_max());
        println!("  J* = {:?}", sol.j.states());
        let ratios: Vec<String> = sol
            .changes
            .windows(2)
            .take(6)
            .map(|w| format!("{:.3}", w[1] / w[0]))
            .collect();
        println!("  change ratios (<= 1 - phi = {:.2}): {}", 1.0 - tables.phi, ratios.join(" "));
    }
    Ok(())
}

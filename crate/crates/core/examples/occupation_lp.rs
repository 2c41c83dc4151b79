//! Reference values from the occupation-measure linear program: the stability
//! slack, the best achievable objective and the policy that attains it.
//!
//!     cargo run --example occupation_lp -- [instance.json]

use std::path::PathBuf;

use mmsched::model::WirelessSystem;
use mmsched::oracle::{lp_max_slack, lp_optimal_penalty};
use mmsched::queues::compute_drift_constants;
use mmsched::scheduler::RenewalConfig;
use mmsched::tables::NetworkTables;

fn main() -> mmsched::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json"));
    let system = WirelessSystem::load(&path)?;
    let tables = NetworkTables::build(&system)?;
    println!(
        "{}: {} states, {} outcomes, {} options",
        path.display(),
        tables.num_states,
        tables.num_outcomes,
        tables.num_options()
    );

    let eps = lp_max_slack(&tables)?;
    let (x0, policy) = lp_optimal_penalty(&tables)?;
    println!("max slack epsilon   = {eps:.6}");
    println!("optimal objective   = {x0:.6}");

    // the LP policy re-evaluated as a Markov chain must reproduce the LP averages
    let avg = policy.averages(&tables);
    println!("policy averages     = {:?}", avg.penalties);
    println!("queue drift         = {:?}", avg.drift);
    println!("state distribution  = {:?}", avg.states);

    for renewal in [RenewalConfig::type1(), RenewalConfig::type2()] {
        let c = compute_drift_constants(&tables, &renewal, None)?;
        println!("{:?}: sigma^2 = {}, E[T^2] <= {:.4}, B = {:.4}", renewal.kind, c.sigma_sq, c.et2_bound, c.b_const);
    }
    Ok(())
}

//! The network model on its own: buffer states, the actions available in one
//! slot and what each of them does.
//!
//!     cargo run --example wireless_model

use mmsched::model::{Outcome, WirelessSystem};
use mmsched::rng;

fn main() -> mmsched::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let system = WirelessSystem::load(&path)?;
    println!(
        "K={} buffered, N={} unbuffered, {} buffer states, {} outcomes, phi={}",
        system.k,
        system.n,
        system.states().len(),
        system.num_outcomes(),
        system.config.phi
    );

    let z = &system.states()[1];
    let omega = (0..system.num_outcomes())
        .find(|&w| system.outcome(w).arrivals.iter().all(|&a| a > 0))
        .unwrap_or(0);
    let spec = system.outcome(omega);
    println!("\nstate {:?}, arrivals {:?}, channels {:?}", z.0, spec.arrivals, spec.channels);
    for forced in [false, true] {
        let outcome = Outcome { omega, forced_renewal: forced };
        println!("forced renewal = {forced}");
        for action in system.feasible_actions(outcome, z) {
            let fx = system.step(z, outcome, &action)?;
            println!(
                "  serve {:?} admit {:?}: mu {:?} r {:?} x {:?} -> {:?}",
                action.serve, action.admit, fx.mu, fx.arrivals, fx.penalties, fx.next_state.0
            );
        }
    }

    // a short random walk under "serve the first channel, admit everything"
    let sampler = system.sampler()?;
    let mut rng = rng::stream(7, rng::OUTCOMES, 0);
    let mut z = system.states()[0].clone();
    println!("\nrandom walk:");
    for t in 0..10 {
        let outcome = sampler.sample(&mut rng);
        let action = system.feasible_actions(outcome, &z).into_iter().last().expect("non-empty");
        let fx = system.step(&z, outcome, &action)?;
        println!("  t={t} z={:?} omega={} forced={} x={:?}", z.0, outcome.omega, outcome.forced_renewal, fx.penalties);
        z = if outcome.forced_renewal { system.states()[0].clone() } else { fx.next_state };
    }
    Ok(())
}

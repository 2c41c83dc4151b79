//! Every performance bound checked against a simulation, as `mmsched --mode
//! verify` does, printed verdict by verdict.
//!
//!     cargo run --release --example bounds_ledger -- [instance.json]

use std::path::PathBuf;

use mmsched::experiment::{verify, Experiment, ExperimentConfig};

fn main() -> mmsched::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json"));
    let mut cfg = ExperimentConfig::for_instance(path);
    cfg.v = vec![1.0, 10.0, 100.0];
    cfg.slots = 200_000;
    cfg.reps = 2;
    let exp = Experiment::prepare(cfg)?;
    let (oracles, results) = verify(&exp)?;
    println!("epsilon {:?}, x0_opt {:?}, B {:.3}", oracles.epsilon, oracles.x0_opt, oracles.constants.b_const);
    for r in &results {
        for verdict in &r.verdicts {
            let status = match (verdict.vacuous, verdict.pass) {
                (true, _) => "SKIP",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            println!(
                "{status} V={:<5} {:<24} {:>10.5} <= {:>10.5} + {:.5}",
                r.v, verdict.inequality, verdict.measured, verdict.bound, verdict.slack
            );
        }
    }
    Ok(())
}

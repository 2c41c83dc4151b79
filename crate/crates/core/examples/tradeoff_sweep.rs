//! The objective approaches its optimum as O(1/V) while the backlog grows as
//! O(V).
//!
//!     cargo run --release --example tradeoff_sweep

use mmsched::experiment::{Experiment, ExperimentConfig};
use mmsched::oracle::{lp_optimal_penalty, optimization_backlog_bound, optimization_penalty_bound};
use mmsched::scheduler::{NoObserver, Observer};

fn main() -> mmsched::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let mut cfg = ExperimentConfig::for_instance(path);
    cfg.v = vec![1.0, 3.0, 10.0, 30.0, 100.0];
    cfg.slots = 200_000;
    cfg.reps = 2;
    let exp = Experiment::prepare(cfg)?;
    let oracles = exp.oracles(false)?;
    let (x0_opt, _) = lp_optimal_penalty(&exp.tables)?;
    let eps = oracles.epsilon.expect("feasible instance");

    let runs = exp.run_all(|_, _| Ok(Box::new(NoObserver) as Box<dyn Observer + Send>))?;
    println!("x0_opt = {x0_opt:.5}");
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "V", "x0", "bound", "backlog", "bound");
    for &v in &exp.config.v {
        let group: Vec<_> = runs.iter().filter(|r| r.v == v).map(|r| &r.summary).collect();
        let m = exp.measure(&group);
        let inputs = exp.bound_inputs(&oracles, v, 0.0);
        println!(
            "{v:>6} {:>9.5} {:>9.5} {:>9.4} {:>9.2}",
            m.penalties[0].mean,
            optimization_penalty_bound(&inputs, x0_opt, eps),
            m.backlog.mean,
            optimization_backlog_bound(&inputs, eps).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

//! Minimize a convex function of the time averages under a convex constraint,
//! using auxiliary variables and virtual queues W.
//!
//!     cargo run --release --example generalized -- [V]

use mmsched::experiment::{Experiment, ExperimentConfig};
use mmsched::scheduler::NoObserver;

fn main() -> mmsched::Result<()> {
    let v: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10.0);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/generalized.json");
    let mut cfg = ExperimentConfig::for_instance(path);
    cfg.slots = 300_000;
    let exp = Experiment::prepare(cfg)?;
    let oracles = exp.oracles(true)?;
    let s = exp.run_replication(v, 0, &mut NoObserver)?;

    let opt = oracles.generalized_optimum.as_ref().expect("generalized instance");
    println!("optimum f = {:.6} at {:?}", opt.upper, opt.point);
    println!("x averages          {:?}", &s.avg_penalties[1..]);
    println!("f(x average)        {:?}", s.objective_of_average);
    println!("h(x average)        {:?}", s.constraints_of_average);
    println!("gamma averages      {:?}", s.avg_gamma);
    println!("final |W|           {:?}", s.final_theta.w);
    println!("epsilon             {:?}", oracles.generalized_epsilon);
    Ok(())
}

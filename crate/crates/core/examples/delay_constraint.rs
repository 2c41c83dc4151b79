//! An average-delay target enforced through the penalty `Z_k - W^av·R_k`,
//! checked against FIFO delays of the packets actually served.
//!
//!     cargo run --release --example delay_constraint -- [V]

use mmsched::experiment::{Experiment, ExperimentConfig};
use mmsched::scheduler::NoObserver;

fn main() -> mmsched::Result<()> {
    let v: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10.0);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/delay.json");
    let mut cfg = ExperimentConfig::for_instance(path);
    cfg.slots = 300_000;
    let exp = Experiment::prepare(cfg)?;
    let s = exp.run_replication(v, 0, &mut NoObserver)?;
    let d = &s.delays;
    println!("V = {v}");
    println!("drop rate         {:.4}", s.avg_penalties[0]);
    println!("delay penalty     {:.4}  (<= 0 means the target holds on average)", s.avg_penalties[1]);
    println!("served packets    {}", d.served[0]);
    println!("mean FIFO delay   {:?}", d.mean_delay[0]);
    println!("flushed at renewal {}", d.flushed[0]);
    println!("mean occupancy    {:.4}", d.mean_occupancy[0]);
    Ok(())
}

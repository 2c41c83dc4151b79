//! Sampled cost-to-go with outcomes drawn from the recent history instead of
//! fresh samples. Prints the realized per-frame error against the exact
//! solution, scaled into an implied delta.
//!
//!     cargo run --release --example delayed_sampling -- [W]

use mmsched::experiment::{Experiment, ExperimentConfig};
use mmsched::scheduler::FrameCollector;
use mmsched::ssp::{SolverConfig, SolverMode};

fn main() -> mmsched::Result<()> {
    let w: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let mut cfg = ExperimentConfig::for_instance(path);
    cfg.solver = SolverConfig {
        mode: SolverMode::RmFixed,
        gamma: 0.2,
        batch_size: 1,
        iterations: w,
        warm_start: true,
        ..SolverConfig::default()
    };
    cfg.history = Some(w);
    cfg.delta_stride = 4;
    cfg.slots = 100_000;
    let exp = Experiment::prepare(cfg)?;

    for v in [1.0, 10.0, 100.0] {
        let mut frames = FrameCollector::default();
        let s = exp.run_replication(v, 0, &mut frames)?;
        let measured: Vec<f64> = frames.frames.iter().filter_map(|f| f.solver.implied_delta).collect();
        let mean = measured.iter().sum::<f64>() / measured.len().max(1) as f64;
        let gap: Option<u64> = frames.frames.iter().filter_map(|f| f.solver.history_gap).max();
        println!(
            "V={v:>5}: x0 {:.5}, {} frames ({} bootstrapped), delta mean {mean:.4} max {:.4}, oldest sample {:?} slots back",
            s.avg_penalties[0],
            s.frames,
            s.bootstrap_frames,
            s.max_implied_delta.unwrap_or(0.0),
            gap
        );
    }
    Ok(())
}

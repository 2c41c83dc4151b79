//! V = 0 ignores the objective and only stabilizes the queues: the drop-rate
//! constraint is met and the backlog at renewals stays below B/epsilon.
//!
//!     cargo run --release --example feasibility

use mmsched::experiment::{Experiment, ExperimentConfig};
use mmsched::model::{InstanceConfig, PenaltySpec};
use mmsched::oracle::lp_max_slack;
use mmsched::queues::compute_drift_constants;
use mmsched::scheduler::{NoObserver, RenewalConfig};

fn main() -> mmsched::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/tiny-k1n1.json");
    let mut instance = InstanceConfig::load(&path)?;
    instance.objective = None;
    instance.constraints = vec![PenaltySpec::drop_rate(0, 0.3)];

    let mut cfg = ExperimentConfig::for_instance(&path);
    cfg.renewal = RenewalConfig::type1();
    cfg.slots = 200_000;
    let exp = Experiment::from_parts(cfg, instance)?;
    let eps = lp_max_slack(&exp.tables)?;
    let b = compute_drift_constants(&exp.tables, &RenewalConfig::type1(), None)?.b_const;

    let s = exp.run_replication(0.0, 0, &mut NoObserver)?;
    println!("epsilon = {eps:.4}, B = {b:.3}");
    println!("drop rate          {:.4}  (target 0.3)", s.avg_penalties[1]);
    println!("renewal backlog    {:.4}  (bound {:.3})", s.renewal_avg_backlog, b / eps);
    println!("mean frame length  {:.3}", s.mean_frame_length);
    Ok(())
}

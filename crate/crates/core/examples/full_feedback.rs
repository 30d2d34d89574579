//! Full-feedback learner on a random instance; prints the cumulative curves
//! at a few checkpoints.

use symic::gen_random_instance;
use symic::mechanisms::DeviationKind;
use symic::online::{compute_ground_truth, run_full_feedback, LogPolicy, RunConfig};

fn main() -> symic::Result<()> {
    let inst = gen_random_instance(2, 4, 2, 2, 2)?;
    let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced)?;
    println!("optimal IC value {:.6}", truth.opt_value);
    let cfg = RunConfig {
        horizon: 20_000,
        delta: 0.05,
        seed: 1,
        log: LogPolicy::Every(1),
    };
    let run = run_full_feedback(&inst, &truth, &cfg, Default::default())?;
    println!(
        "{:>7} {:>10} {:>12} {:>12}",
        "t", "slack", "regret", "violation"
    );
    for r in run
        .records
        .iter()
        .filter(|r| [1, 10, 100, 1_000, 5_000, 20_000].contains(&r.t))
    {
        println!(
            "{:>7} {:>10.4} {:>12.3} {:>12.3}",
            r.t, r.nu, r.regret_cum, r.viol_raw_cum
        );
    }
    println!(
        "{} LP solves, concentration held: {}",
        run.diagnostics.lp_solves, run.diagnostics.concentration_held
    );
    Ok(())
}

//! Explore-then-optimize learner under bandit feedback for two exploration
//! budgets.

use symic::gen_random_instance;
use symic::mechanisms::DeviationKind;
use symic::online::{
    bandit_slack, compute_ground_truth, exploration_from_alpha, run_bandit, LogPolicy, RunConfig,
};

fn main() -> symic::Result<()> {
    let inst = gen_random_instance(2, 4, 2, 2, 2)?;
    let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced)?;
    let horizon = 30_000;
    for alpha in [0.5, 2.0 / 3.0] {
        let e = exploration_from_alpha(horizon, alpha);
        let cfg = RunConfig {
            horizon,
            delta: 0.05,
            seed: 3,
            log: LogPolicy::Off,
        };
        let run = run_bandit(&inst, &truth, &cfg, e)?;
        let nu = bandit_slack(
            horizon,
            e,
            truth.partition.len(),
            inst.num_actions(),
            cfg.delta,
        );
        println!(
            "alpha {alpha:.3}: E = {e}, slack {nu:.3}, regret {:.2}, violation {:.2}, exploration violation {}",
            run.regret_cum, run.viol_raw_cum, run.diagnostics.exploration_max_abs_violation
        );
    }
    Ok(())
}

//! When do the learners' IC rows start to bind? Compares each slack schedule
//! with the IC gap of the unconstrained optimum: while the slack exceeds that
//! gap the learner can play the unconstrained optimum outright.

use symic::estimators::ff_width;
use symic::gen_random_instance;
use symic::lp::{build_lp, solve_lp, Slack};
use symic::mechanisms::{ic_gap, DeviationKind};
use symic::online::{bandit_slack, compute_ground_truth, exploration_from_alpha};

fn main() -> symic::Result<()> {
    let inst = gen_random_instance(2, 4, 2, 2, 2)?;
    let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced)?;
    let free = build_lp(
        Slack::Unbounded,
        &truth.r_r,
        &truth.r_s,
        truth.deviations.matrices(),
    )?;
    let (xi, v_free) = solve_lp(&free)?;
    let (gap, _) = ic_gap(&xi, &truth.deviations, &truth.r_s)?;
    println!(
        "IC value {:.5}, unconstrained {v_free:.5}, unconstrained IC gap {gap:.5}",
        truth.opt_value
    );

    let delta = 0.05;
    let scale = 2.0 * (inst.n() * inst.num_signals() * inst.num_states()) as f64;
    println!(
        "\n{:>8} {:>14} {:>14} {:>14}",
        "T", "full (t = T)", "bandit a=1/2", "bandit a=2/3"
    );
    for horizon in [1_000u64, 10_000, 100_000, 1_000_000, 10_000_000] {
        let ff = scale
            * ff_width(
                horizon,
                inst.n(),
                inst.num_signals(),
                inst.num_states(),
                horizon,
                delta,
            )?;
        let k = truth.partition.len();
        let b = |a: f64| {
            bandit_slack(
                horizon,
                exploration_from_alpha(horizon, a),
                k,
                inst.num_actions(),
                delta,
            )
        };
        println!(
            "{horizon:>8} {ff:>14.4} {:>14.4} {:>14.4}",
            b(0.5),
            b(2.0 / 3.0)
        );
    }

    // first round at which the full-feedback slack drops below the gap
    let horizon = 100_000;
    let cross = (1..63).map(|k| 1u64 << k).find(|&t| {
        scale
            * ff_width(
                t,
                inst.n(),
                inst.num_signals(),
                inst.num_states(),
                horizon,
                delta,
            )
            .unwrap()
            < gap
    });
    match cross {
        Some(t) => {
            println!("\nfull-feedback slack (T = {horizon}) is below the gap from roughly t = {t}")
        }
        None => println!("\nfull-feedback slack (T = {horizon}) never drops below the gap"),
    }
    Ok(())
}

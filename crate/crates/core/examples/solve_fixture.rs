//! Optimal IC mechanisms for the built-in fixtures, with and without the IC
//! rows, and the LP in CPLEX text format.

use symic::instances::{fixture_instance, Fixture};
use symic::lp::{build_lp, solve_lp, Slack};
use symic::mechanisms::{ic_gap, DeviationKind};
use symic::online::compute_ground_truth;

fn main() -> symic::Result<()> {
    for (fixture, eps) in [
        (Fixture::ThimpX, 0.05),
        (Fixture::ThimpY, 0.01),
        (Fixture::LbX, 0.05),
        (Fixture::LbY, 0.05),
    ] {
        let inst = fixture_instance(fixture, eps)?;
        let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced)?;
        let free = build_lp(
            Slack::Unbounded,
            &truth.r_r,
            &truth.r_s,
            truth.deviations.matrices(),
        )?;
        let (xi_free, v_free) = solve_lp(&free)?;
        let (gap, _) = ic_gap(&xi_free, &truth.deviations, &truth.r_s)?;
        println!(
            "{fixture} (eps = {eps}): IC optimum {:.6}, unconstrained {v_free:.6} with IC gap {gap:.6}",
            truth.opt_value
        );
        for c in 0..truth.partition.len() {
            println!(
                "  {:<16} {:?}",
                truth.partition.label(c, inst.signals()),
                truth.xi_star.row(c)
            );
        }
    }

    let inst = fixture_instance(Fixture::ThimpY, 0.01)?;
    let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced)?;
    let lp = build_lp(
        Slack::Finite(0.0),
        &truth.r_r,
        &truth.r_s,
        truth.deviations.matrices(),
    )?;
    println!("\n{}", lp.to_lp_format());
    Ok(())
}

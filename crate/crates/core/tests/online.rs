//! Invariants of the online learners' bookkeeping.

use symic::online::{FullFeedbackOptions, LogPolicy};
use symic::*;

fn setup() -> (GameInstance, online::GroundTruth) {
    let inst = gen_random_instance(2, 4, 2, 2, 2).unwrap();
    let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced).unwrap();
    (inst, truth)
}

fn cfg(horizon: u64, seed: u64) -> RunConfig {
    RunConfig {
        horizon,
        delta: 0.05,
        seed,
        log: LogPolicy::Every(1),
    }
}

#[test]
fn cumulative_columns_are_running_sums() {
    let (inst, truth) = setup();
    let run = run_full_feedback(
        &inst,
        &truth,
        &cfg(2_000, 1),
        FullFeedbackOptions::default(),
    )
    .unwrap();
    let (mut r, mut v, mut vc) = (0.0, 0.0, 0.0);
    for rec in &run.records {
        r += rec.regret_inst;
        v += rec.viol_raw_inst;
        vc += rec.viol_raw_inst.max(0.0);
        assert_eq!(rec.regret_cum, r);
        assert_eq!(rec.viol_raw_cum, v);
        assert_eq!(rec.viol_clip_cum, vc);
    }
    assert_eq!(run.records.len(), 2_000);
    assert_eq!(run.regret_cum, r);
    assert!(run.records[0].nu.is_infinite());
}

#[test]
fn oracle_short_circuit_has_no_regret() {
    let (inst, truth) = setup();
    let horizon = 3_000;
    let opts = FullFeedbackOptions {
        oracle_short_circuit: true,
    };
    let run = run_full_feedback(&inst, &truth, &cfg(horizon, 4), opts).unwrap();
    assert!(
        run.regret_cum.abs() <= horizon as f64 * 1e-8,
        "{}",
        run.regret_cum
    );
    assert!(run.viol_raw_cum <= horizon as f64 * 1e-8);
}

#[test]
fn true_optimum_stays_feasible_under_concentration() {
    let (inst, truth) = setup();
    for seed in 1..=5 {
        let run = run_full_feedback(
            &inst,
            &truth,
            &cfg(3_000, seed),
            FullFeedbackOptions::default(),
        )
        .unwrap();
        if run.diagnostics.concentration_held {
            assert_eq!(run.diagnostics.star_infeasible_rounds, 0);
        }
        assert!(run.diagnostics.max_lp_ic_excess <= 1e-8);
    }
}

#[test]
fn bandit_exploration_is_exact() {
    let (inst, truth) = setup();
    let e = 40;
    let run = run_bandit(&inst, &truth, &cfg(2_000, 3), e).unwrap();
    assert_eq!(run.diagnostics.exploration_rounds, e * 2);
    assert_eq!(run.diagnostics.exploration_max_abs_violation, 0.0);
    // round-robin on the least-explored action
    let actions: Vec<usize> = run.records[..4]
        .iter()
        .map(|r| r.pi.as_ref().unwrap()[0])
        .collect();
    assert_eq!(actions, [0, 1, 0, 1]);
    // optimization rounds return points feasible for their own LP
    assert!(run.diagnostics.max_lp_ic_excess <= 1e-8);
    let nu = run.records.last().unwrap().nu;
    assert!(nu.is_finite() && nu > 0.0);
}

#[test]
fn bandit_rejects_oversized_exploration() {
    let (inst, truth) = setup();
    assert!(matches!(
        run_bandit(&inst, &truth, &cfg(100, 1), 51),
        Err(Error::InvalidE { .. })
    ));
    assert!(matches!(
        run_bandit(&inst, &truth, &cfg(100, 1), 0),
        Err(Error::InvalidE { .. })
    ));
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let (inst, truth) = setup();
    let csv = |seed| {
        let run = run_bandit(&inst, &truth, &cfg(1_500, seed), 30).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(7), csv(7));
    assert_ne!(csv(7), csv(8));
}

//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stderr (written directly so it shows without `--nocapture`).

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use symic::experiment::{
    run_experiment, run_file_name, AlgorithmChoice, ExperimentConfig, InstanceSource,
};
use symic::mechanisms::expected_utility;
use symic::online::{
    exploration_from_alpha, FullFeedbackOptions, GroundTruth, LogPolicy, RunDiagnostics,
};
use symic::oracle::{brute_force_deviation_matrix, solve_full_lp};
use symic::slope::fit_slope;
use symic::verify::random_mechanism;
use symic::*;

// Criterion 1
const C1_INSTANCES: usize = 50;
const C1_TOL: f64 = 1e-6;
const C1_BUDGET: Duration = Duration::from_secs(120);
// Criterion 2
const C2_TOL: f64 = 1e-12;
const C2_MAX_N: usize = 6;
const C2_MAX_SIGNALS: usize = 3;
const C2_BUDGET: Duration = Duration::from_secs(60);
// Criterion 3
const C3_PAIRS: usize = 200;
const C3_TOL: f64 = 1e-9;
// Criterion 4
const C4_TOL: f64 = 1e-8;
// Criterion 5
const C5_RUNS: u64 = 200;
const C5_HORIZON: u64 = 10_000;
const C5_DELTA: f64 = 0.1;
const C5_EXPLORATION: u64 = 100;
const C5_BUDGET: Duration = Duration::from_secs(600);
// Criteria 6, 7
const GRID: [u64; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
const GRID_SEEDS: u64 = 20;
const GRID_DELTA: f64 = 0.05;
const C6_BAND: (f64, f64) = (0.35, 0.65);
const C6_BUDGET: Duration = Duration::from_secs(30 * 60);
const C7_ALPHAS: [f64; 2] = [1.0 / 2.0, 2.0 / 3.0];
const C7_HALF_WIDTH: f64 = 0.18;
const C7_BUDGET: Duration = Duration::from_secs(45 * 60);
const BOOTSTRAP: usize = 500;
// Criterion 8
const C8_IC_TOL: f64 = 1e-8;

/// The fixed n = 4, |S| = |Theta| = |A| = 2 instance for the online criteria.
const ONLINE_INSTANCE_SEED: u64 = 2;

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion}: {detail}");
}

fn online_instance() -> &'static (GameInstance, GroundTruth) {
    static CELL: OnceLock<(GameInstance, GroundTruth)> = OnceLock::new();
    CELL.get_or_init(|| {
        let inst = gen_random_instance(ONLINE_INSTANCE_SEED, 4, 2, 2, 2).unwrap();
        let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced).unwrap();
        (inst, truth)
    })
}

fn run_cfg(horizon: u64, delta: f64, seed: u64) -> RunConfig {
    RunConfig {
        horizon,
        delta,
        seed,
        log: LogPolicy::Off,
    }
}

/// Per-run outcome kept for the cross-criterion checks.
#[derive(Debug, Clone)]
struct Outcome {
    regret: f64,
    viol_raw: f64,
    diagnostics: RunDiagnostics,
}

type RunOutcome = std::result::Result<Outcome, String>;

fn outcome(r: Result<RunResult>) -> RunOutcome {
    r.map(|res| Outcome {
        regret: res.regret_cum,
        viol_raw: res.viol_raw_cum,
        diagnostics: res.diagnostics,
    })
    .map_err(|e| e.to_string())
}

struct Timed<T> {
    value: T,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed {
        value,
        elapsed: start.elapsed(),
    }
}

struct CompactVsFull {
    worst_gap: f64,
    max_ic_excess: f64,
    errors: Vec<String>,
}

fn c1_data() -> &'static Timed<CompactVsFull> {
    static CELL: OnceLock<Timed<CompactVsFull>> = OnceLock::new();
    CELL.get_or_init(|| {
        timed(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut out = CompactVsFull {
                worst_gap: 0.0,
                max_ic_excess: f64::NEG_INFINITY,
                errors: Vec::new(),
            };
            for i in 0..C1_INSTANCES {
                let n = rng.random_range(2..=3);
                let states = rng.random_range(2..=3);
                let actions = rng.random_range(2..=3);
                let inst = gen_random_instance(1_000 + i as u64, n, states, 2, actions).unwrap();
                let truth = compute_ground_truth(&inst, DeviationKind::InterimReduced).unwrap();
                for slack in [Slack::Finite(0.0), Slack::Finite(0.05), Slack::Unbounded] {
                    let lp = build_lp(slack, &truth.r_r, &truth.r_s, truth.deviations.matrices())
                        .unwrap();
                    let compact = match solve_lp(&lp) {
                        Ok((xi, v)) => {
                            out.max_ic_excess = out.max_ic_excess.max(lp.ic_excess(&xi));
                            v
                        }
                        Err(e) => {
                            out.errors.push(format!("instance {i} slack {slack}: {e}"));
                            continue;
                        }
                    };
                    match solve_full_lp(&inst, slack, truth.deviations.set()) {
                        Ok(full) => out.worst_gap = out.worst_gap.max((compact - full).abs()),
                        Err(e) => out.errors.push(format!("full LP {i} slack {slack}: {e}")),
                    }
                }
            }
            out
        })
    })
}

#[test]
fn criterion_1_compact_lp_matches_full_profile_lp() {
    let d = c1_data();
    let pass = d.value.errors.is_empty() && d.value.worst_gap <= C1_TOL && d.elapsed < C1_BUDGET;
    report(
        1,
        pass,
        &format!(
            "{C1_INSTANCES} instances x 3 slacks, max |compact - full| = {:.3e} (tol {C1_TOL:e}), {} errors, {:.1?}",
            d.value.worst_gap,
            d.value.errors.len(),
            d.elapsed
        ),
    );
}

#[test]
fn criterion_2_deviation_matrix_closed_form() {
    let Timed {
        value: (worst, sym, cases),
        elapsed,
    } = timed(|| {
        let (mut worst, mut sym, mut cases) = (0.0f64, 0.0f64, 0usize);
        for nsig in 1..=C2_MAX_SIGNALS {
            let set = build_deviation_set(DeviationKind::InterimFull, nsig).unwrap();
            for n in 1..=C2_MAX_N {
                let p = enumerate_classes(n, nsig).unwrap();
                for phi in set.functions() {
                    let fast = build_deviation_matrix(phi, &p, 2).unwrap();
                    let first = brute_force_deviation_matrix(phi, &p, 2, 0).unwrap();
                    let second =
                        (n >= 2).then(|| brute_force_deviation_matrix(phi, &p, 2, 1).unwrap());
                    for r in 0..p.len() {
                        for t in 0..p.len() {
                            for a in 0..2 {
                                worst = worst
                                    .max((fast.entry(r, a, t, a) - first.entry(r, a, t, a)).abs());
                                if let Some(m) = &second {
                                    sym = sym
                                        .max((m.entry(r, a, t, a) - first.entry(r, a, t, a)).abs());
                                }
                            }
                            // cross-action blocks vanish
                            worst = worst.max(fast.entry(r, 0, t, 1).abs());
                        }
                    }
                    cases += 1;
                }
            }
        }
        (worst, sym, cases)
    });
    let pass = worst <= C2_TOL && sym == 0.0 && elapsed < C2_BUDGET;
    report(
        2,
        pass,
        &format!(
            "{cases} (phi, n, |S|) cases, max entry error {worst:.3e} (tol {C2_TOL:e}), sender asymmetry {sym:.3e}, {elapsed:.1?}"
        ),
    );
}

#[test]
fn criterion_3_reduced_deviations_transfer() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..C3_PAIRS {
        let n = rng.random_range(1..=3);
        let nsig = rng.random_range(2..=3);
        let states = rng.random_range(2..=3);
        let actions = rng.random_range(2..=3);
        let inst = gen_random_instance(3_000 + i as u64, n, states, nsig, actions).unwrap();
        let p = enumerate_classes(n, nsig).unwrap();
        let (_, r_s) = compute_utility_vectors(&inst, inst.signaling(), &p).unwrap();
        let reduced = DeviationModel::new(
            build_deviation_set(DeviationKind::InterimReduced, nsig).unwrap(),
            &p,
            actions,
        )
        .unwrap();
        let full = DeviationModel::new(
            build_deviation_set(DeviationKind::InterimFull, nsig).unwrap(),
            &p,
            actions,
        )
        .unwrap();
        let xi = random_mechanism(&mut rng, p.len(), actions);
        let (g_red, _) = ic_gap(&xi, &reduced, &r_s).unwrap();
        let (g_full, _) = ic_gap(&xi, &full, &r_s).unwrap();
        worst = worst.max(g_full - nsig as f64 * g_red);
    }
    report(
        3,
        worst <= C3_TOL,
        &format!(
            "{C3_PAIRS} pairs, max(full gap - |S| reduced gap) = {worst:.3e} (tol {C3_TOL:e})"
        ),
    );
}

struct FixtureSolves {
    lb_value: f64,
    lb_full_value: f64,
    lb_structure: Vec<usize>,
    thimp_value: f64,
    max_ic_excess: f64,
}

fn c4_data() -> &'static FixtureSolves {
    static CELL: OnceLock<FixtureSolves> = OnceLock::new();
    CELL.get_or_init(|| {
        let solve = |inst: &GameInstance| {
            let truth = compute_ground_truth(inst, DeviationKind::InterimReduced).unwrap();
            let lp = build_lp(
                Slack::Finite(0.0),
                &truth.r_r,
                &truth.r_s,
                truth.deviations.matrices(),
            )
            .unwrap();
            let (xi, v) = solve_lp(&lp).unwrap();
            (truth, lp.ic_excess(&xi), xi, v)
        };
        let lb = fixture_instance(Fixture::LbX, 0.05).unwrap();
        let (truth, lb_excess, xi, lb_value) = solve(&lb);
        // action played with probability one on each signal, if any
        let lb_structure = (0..lb.num_signals())
            .map(|s| {
                let mut counts = vec![0u32; lb.num_signals()];
                counts[s] = 1;
                let c = truth.partition.index_of_counts(&counts).unwrap();
                (0..2)
                    .find(|&a| (xi.get(c, a) - 1.0).abs() <= C4_TOL)
                    .unwrap_or(usize::MAX)
            })
            .collect();
        let lb_full_value = solve_full_lp(&lb, Slack::Finite(0.0), truth.deviations.set()).unwrap();
        let thimp = fixture_instance(Fixture::ThimpY, 0.01).unwrap();
        let (_, thimp_excess, _, thimp_value) = solve(&thimp);
        FixtureSolves {
            lb_value,
            lb_full_value,
            lb_structure,
            thimp_value,
            max_ic_excess: lb_excess.max(thimp_excess),
        }
    })
}

#[test]
fn criterion_4_fixture_optima() {
    let d = c4_data();
    let structure_ok = d.lb_structure == [0, 0, 1];
    let pass = structure_ok
        && (d.lb_value - 1.0).abs() <= C4_TOL
        && (d.lb_full_value - 1.0).abs() <= C4_TOL
        && (d.thimp_value - 0.99).abs() <= C4_TOL;
    report(
        4,
        pass,
        &format!(
            "lb-X(0.05): value {:.12} (full-profile {:.12}), actions per signal {:?}; thimp-Y(0.01): value {:.12}",
            d.lb_value, d.lb_full_value, d.lb_structure, d.thimp_value
        ),
    );
}

struct Concentration {
    full: Vec<RunOutcome>,
    bandit: Vec<RunOutcome>,
}

fn c5_data() -> &'static Timed<Concentration> {
    static CELL: OnceLock<Timed<Concentration>> = OnceLock::new();
    CELL.get_or_init(|| {
        let (inst, truth) = online_instance();
        timed(|| Concentration {
            full: (1..=C5_RUNS)
                .into_par_iter()
                .map(|s| {
                    outcome(run_full_feedback(
                        inst,
                        truth,
                        &run_cfg(C5_HORIZON, C5_DELTA, s),
                        FullFeedbackOptions::default(),
                    ))
                })
                .collect(),
            bandit: (1..=C5_RUNS)
                .into_par_iter()
                .map(|s| {
                    outcome(run_bandit(
                        inst,
                        truth,
                        &run_cfg(C5_HORIZON, C5_DELTA, s),
                        C5_EXPLORATION,
                    ))
                })
                .collect(),
        })
    })
}

#[test]
fn criterion_5_estimator_concentration() {
    let d = c5_data();
    let runs = C5_RUNS as f64;
    let threshold = (1.0 - C5_DELTA) * runs - 3.0 * (C5_DELTA * (1.0 - C5_DELTA) * runs).sqrt();
    let held = |v: &[RunOutcome]| {
        v.iter()
            .filter(|o| o.as_ref().is_ok_and(|o| o.diagnostics.concentration_held))
            .count()
    };
    let (full, bandit) = (held(&d.value.full), held(&d.value.bandit));
    let pass = full as f64 >= threshold && bandit as f64 >= threshold && d.elapsed < C5_BUDGET;
    report(
        5,
        pass,
        &format!(
            "event held in {full}/{C5_RUNS} full-feedback and {bandit}/{C5_RUNS} bandit (E = {C5_EXPLORATION}) runs, need >= {threshold:.1}, {:.1?}",
            d.elapsed
        ),
    );
}

type Grid = BTreeMap<u64, Vec<RunOutcome>>;

fn full_grid() -> &'static Timed<Grid> {
    static CELL: OnceLock<Timed<Grid>> = OnceLock::new();
    CELL.get_or_init(|| {
        let (inst, truth) = online_instance();
        timed(|| {
            GRID.iter()
                .map(|&t| {
                    let runs = (1..=GRID_SEEDS)
                        .into_par_iter()
                        .map(|s| {
                            outcome(run_full_feedback(
                                inst,
                                truth,
                                &run_cfg(t, GRID_DELTA, s),
                                FullFeedbackOptions::default(),
                            ))
                        })
                        .collect();
                    (t, runs)
                })
                .collect()
        })
    })
}

fn bandit_grid(alpha_index: usize) -> &'static Timed<Grid> {
    static CELLS: [OnceLock<Timed<Grid>>; 2] = [OnceLock::new(), OnceLock::new()];
    CELLS[alpha_index].get_or_init(|| {
        let (inst, truth) = online_instance();
        let alpha = C7_ALPHAS[alpha_index];
        timed(|| {
            GRID.iter()
                .map(|&t| {
                    let e = exploration_from_alpha(t, alpha);
                    let runs = (1..=GRID_SEEDS)
                        .into_par_iter()
                        .map(|s| outcome(run_bandit(inst, truth, &run_cfg(t, GRID_DELTA, s), e)))
                        .collect();
                    (t, runs)
                })
                .collect()
        })
    })
}

/// Slope of the median metric, or a description of why it cannot be fitted.
fn slope_of(grid: &Grid, metric: impl Fn(&Outcome) -> f64) -> std::result::Result<f64, String> {
    let mut groups = BTreeMap::new();
    for (&t, runs) in grid {
        let values: Vec<f64> = runs
            .iter()
            .filter_map(|o| o.as_ref().ok())
            .map(&metric)
            .collect();
        groups.insert(t, values);
    }
    fit_slope(&groups, BOOTSTRAP)
        .map(|f| f.slope)
        .map_err(|e| e.to_string())
}

fn describe(s: &std::result::Result<f64, String>) -> String {
    match s {
        Ok(v) => format!("{v:.3}"),
        Err(e) => format!("unfittable ({e})"),
    }
}

fn in_band(s: &std::result::Result<f64, String>, lo: f64, hi: f64) -> bool {
    s.as_ref().is_ok_and(|&v| (lo..=hi).contains(&v))
}

#[test]
fn criterion_6_full_feedback_rates() {
    let g = full_grid();
    let r = slope_of(&g.value, |o| o.regret);
    let v = slope_of(&g.value, |o| o.viol_raw);
    let pass = in_band(&r, C6_BAND.0, C6_BAND.1)
        && in_band(&v, C6_BAND.0, C6_BAND.1)
        && g.elapsed < C6_BUDGET;
    report(
        6,
        pass,
        &format!(
            "regret slope {}, violation slope {}, target [{}, {}], {:.1?}",
            describe(&r),
            describe(&v),
            C6_BAND.0,
            C6_BAND.1,
            g.elapsed
        ),
    );
}

#[test]
fn criterion_7_bandit_rates() {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut explore_max = 0.0f64;
    for (i, &alpha) in C7_ALPHAS.iter().enumerate() {
        let g = bandit_grid(i);
        elapsed += g.elapsed;
        let r = slope_of(&g.value, |o| o.regret);
        let v = slope_of(&g.value, |o| o.viol_raw);
        let v_target = 1.0 - alpha / 2.0;
        pass &= in_band(&r, alpha - C7_HALF_WIDTH, alpha + C7_HALF_WIDTH);
        pass &= in_band(&v, v_target - C7_HALF_WIDTH, v_target + C7_HALF_WIDTH);
        for o in g.value.values().flatten() {
            match o {
                Ok(o) => explore_max = explore_max.max(o.diagnostics.exploration_max_abs_violation),
                Err(_) => pass = false,
            }
        }
        parts.push(format!(
            "alpha {alpha:.3}: regret slope {} (target {alpha:.3}), violation slope {} (target {v_target:.3})",
            describe(&r),
            describe(&v)
        ));
    }
    pass &= explore_max == 0.0 && elapsed < C7_BUDGET;
    report(
        7,
        pass,
        &format!(
            "{}; max |exploration violation| {explore_max:e}, {elapsed:.1?}",
            parts.join("; ")
        ),
    );
}

#[test]
fn criterion_8_lp_always_feasible() {
    let mut errors: Vec<String> = c1_data().value.errors.clone();
    let mut max_excess = c1_data().value.max_ic_excess.max(c4_data().max_ic_excess);
    let mut solves = 0u64;
    let mut absorb = |o: &RunOutcome| match o {
        Ok(o) => {
            solves += o.diagnostics.lp_solves;
            max_excess = max_excess.max(o.diagnostics.max_lp_ic_excess);
        }
        Err(e) => errors.push(e.clone()),
    };
    let c5 = &c5_data().value;
    c5.full.iter().chain(&c5.bandit).for_each(&mut absorb);
    full_grid().value.values().flatten().for_each(&mut absorb);
    for i in 0..C7_ALPHAS.len() {
        bandit_grid(i)
            .value
            .values()
            .flatten()
            .for_each(&mut absorb);
    }
    let pass = errors.is_empty() && max_excess <= C8_IC_TOL;
    report(
        8,
        pass,
        &format!(
            "{solves} online LP solves plus offline solves, {} failures, max IC-row excess {max_excess:.3e} (tol {C8_IC_TOL:e})",
            errors.len()
        ),
    );
}

#[test]
fn criterion_9_reproducible_csvs() {
    let base = |algorithm, dir: &std::path::Path| ExperimentConfig {
        algorithm,
        deviations: DeviationKind::InterimReduced,
        horizon: 2_000,
        exploration: None,
        alpha: (algorithm == AlgorithmChoice::Bandit).then_some(0.5),
        delta: 0.05,
        epsilon: None,
        seeds: vec![1, 2, 3],
        out_dir: dir.to_path_buf(),
        dump_lp: false,
        instance: InstanceSource::Random {
            seed: ONLINE_INSTANCE_SEED,
            n: 4,
            states: 2,
            signals: 2,
            actions: 2,
        },
    };
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for algorithm in [AlgorithmChoice::FullFeedback, AlgorithmChoice::Bandit] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_experiment(&base(algorithm, a.path())).unwrap();
        run_experiment(&base(algorithm, b.path())).unwrap();
        for seed in [1, 2, 3] {
            let name = run_file_name(seed);
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            compared += 1;
            if x != y || x.is_empty() {
                mismatches.push(format!("{algorithm:?}/{name}"));
            }
        }
    }
    report(
        9,
        mismatches.is_empty(),
        &format!("{compared} run CSVs compared byte-for-byte, mismatches {mismatches:?}"),
    );
}

#[test]
fn online_instance_has_binding_ic() {
    // guards the choice of instance: IC must cost the receiver something
    let (_, truth) = online_instance();
    let lp = build_lp(
        Slack::Unbounded,
        &truth.r_r,
        &truth.r_s,
        truth.deviations.matrices(),
    )
    .unwrap();
    let (xi, free) = solve_lp(&lp).unwrap();
    assert!(free > truth.opt_value + 1e-3);
    assert!((expected_utility(&xi, &truth.r_r).unwrap() - free).abs() < 1e-12);
}

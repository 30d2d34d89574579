//! Compact-versus-brute-force cross-checks on generated instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::game::enumerate_classes;
use crate::instances::gen_random_instance;
use crate::lp::{build_lp, solve_lp, Slack};
use crate::mechanisms::{
    build_deviation_matrix, build_deviation_set, compute_utility_vectors, deviation_utility,
    expected_utility, ic_gap, DeviationKind, DeviationModel, SymmetricMechanism,
};
use crate::oracle::{
    brute_force_deviation_matrix, expand_symmetric, full_profile_payoffs, receiver_utility,
    sender_deviation_utility, solve_full_lp,
};

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances for the LP and utility cross-checks.
    pub instances: usize,
    /// Largest sender count for the deviation-matrix sweep.
    pub max_n: usize,
    pub max_signals: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 50,
            max_n: 6,
            max_signals: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest discrepancy observed.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random row-stochastic mechanism.
pub fn random_mechanism<R: Rng>(
    rng: &mut R,
    num_classes: usize,
    num_actions: usize,
) -> SymmetricMechanism {
    let mut probs = Vec::with_capacity(num_classes * num_actions);
    for _ in 0..num_classes {
        let row: Vec<f64> = (0..num_actions)
            .map(|_| rng.random::<f64>() + 1e-3)
            .collect();
        let s: f64 = row.iter().sum();
        probs.extend(row.into_iter().map(|v| v / s));
    }
    SymmetricMechanism::new(num_classes, num_actions, probs).expect("normalized rows")
}

fn check(name: &str, cases: usize, worst: f64, tol: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: worst <= tol,
        cases,
        worst,
        detail,
    }
}

pub fn run_verification(opts: VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // closed-form deviation matrices, every map S -> S
    let mut worst = 0.0f64;
    let mut sym = 0.0f64;
    let mut cases = 0;
    for nsig in 1..=opts.max_signals {
        let set = build_deviation_set(DeviationKind::InterimFull, nsig)?;
        for n in 1..=opts.max_n {
            let p = enumerate_classes(n, nsig)?;
            for phi in set.functions() {
                let fast = build_deviation_matrix(phi, &p, 1)?;
                let slow = brute_force_deviation_matrix(phi, &p, 1, 0)?;
                for c in 0..p.len() {
                    for d in 0..p.len() {
                        worst = worst.max((fast.get(c, d) - slow.get(c, d)).abs());
                    }
                }
                if n >= 2 {
                    let other = brute_force_deviation_matrix(phi, &p, 1, 1)?;
                    for c in 0..p.len() {
                        for d in 0..p.len() {
                            sym = sym.max((other.get(c, d) - slow.get(c, d)).abs());
                        }
                    }
                }
                cases += 1;
            }
        }
    }
    checks.push(check(
        "deviation matrix closed form",
        cases,
        worst,
        1e-12,
        format!("n <= {}, |S| <= {}", opts.max_n, opts.max_signals),
    ));
    checks.push(check(
        "deviation matrix sender symmetry",
        cases,
        sym,
        0.0,
        String::new(),
    ));

    // utilities of random mechanisms and compact vs full LP values
    let mut util_worst = 0.0f64;
    let mut lp_worst = 0.0f64;
    let mut lp_cases = 0;
    for i in 0..opts.instances {
        let n = rng.random_range(2..=3);
        let ns = rng.random_range(2..=3);
        let na = rng.random_range(2..=3);
        let inst = gen_random_instance(
            opts.seed.wrapping_mul(1000).wrapping_add(i as u64),
            n,
            ns,
            2,
            na,
        )?;
        let p = enumerate_classes(n, 2)?;
        let set = build_deviation_set(DeviationKind::InterimReduced, 2)?;
        let model = DeviationModel::new(set.clone(), &p, na)?;
        let (r_r, r_s) = compute_utility_vectors(&inst, inst.signaling(), &p)?;
        let d = full_profile_payoffs(&inst)?;

        let xi = random_mechanism(&mut rng, p.len(), na);
        let x = expand_symmetric(xi.as_slice(), na, &p)?;
        util_worst =
            util_worst.max((expected_utility(&xi, &r_r)? - receiver_utility(&x, &d)).abs());
        for (phi, m) in set.functions().iter().zip(model.matrices()) {
            let compact = deviation_utility(&xi, m, &r_s)?;
            let full = sender_deviation_utility(&x, &d, phi, 0, n);
            util_worst = util_worst.max((compact - full).abs());
        }

        for slack in [Slack::Finite(0.0), Slack::Finite(0.05), Slack::Unbounded] {
            let lp = build_lp(slack, &r_r, &r_s, model.matrices())?;
            let (_, compact) = solve_lp(&lp)?;
            let full = solve_full_lp(&inst, slack, &set)?;
            lp_worst = lp_worst.max((compact - full).abs());
            lp_cases += 1;
        }
    }
    checks.push(check(
        "utilities vs full-profile enumeration",
        opts.instances,
        util_worst,
        1e-10,
        String::new(),
    ));
    checks.push(check(
        "compact LP value vs full-profile LP value",
        lp_cases,
        lp_worst,
        1e-6,
        "slack in {0, 0.05, inf}".into(),
    ));

    // reduced interim deviations bound full interim deviations up to |S|
    let mut transfer_worst = f64::NEG_INFINITY;
    let mut transfer_cases = 0;
    for i in 0..opts.instances {
        let nsig = rng.random_range(2..=3);
        let n = rng.random_range(1..=3);
        let na = rng.random_range(2..=3);
        let inst = gen_random_instance(opts.seed ^ (0xabc0 + i as u64), n, 2, nsig, na)?;
        let p = enumerate_classes(n, nsig)?;
        let (_, r_s) = compute_utility_vectors(&inst, inst.signaling(), &p)?;
        let reduced = DeviationModel::new(
            build_deviation_set(DeviationKind::InterimReduced, nsig)?,
            &p,
            na,
        )?;
        let full = DeviationModel::new(
            build_deviation_set(DeviationKind::InterimFull, nsig)?,
            &p,
            na,
        )?;
        let xi = random_mechanism(&mut rng, p.len(), na);
        let (g_red, _) = ic_gap(&xi, &reduced, &r_s)?;
        let (g_full, _) = ic_gap(&xi, &full, &r_s)?;
        transfer_worst = transfer_worst.max(g_full - nsig as f64 * g_red);
        transfer_cases += 1;
    }
    checks.push(check(
        "interim gap bounded by |S| x reduced gap",
        transfer_cases,
        transfer_worst,
        1e-9,
        "worst = max(full - |S| * reduced)".into(),
    ));

    Ok(VerifyReport { checks })
}

//! Environment simulation and the two online learning loops.
//!
//! Senders always report truthfully; regret and incentive violation are
//! evaluated each round against the true utility vectors.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{BanditEstimator, FullFeedbackEstimator};
use crate::game::{class_of_profile, enumerate_classes, ClassPartition, GameInstance};
use crate::lp::{build_lp, solve_lp, Slack};
use crate::mechanisms::{
    build_deviation_set, compute_utility_vectors, expected_utility, ic_gap, sample_categorical,
    sample_deterministic, DeterministicMechanism, DeviationKind, DeviationModel, DeviationSet,
    SymmetricMechanism, UtilityVector,
};

/// Independent random streams for one run.
///
/// The environment stream drives states and signals only, so changing how
/// the algorithm draws actions never perturbs the sequence of environments.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub env: ChaCha8Rng,
    pub mechanism: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        let mut env = ChaCha8Rng::seed_from_u64(seed);
        env.set_stream(1);
        let mut mechanism = ChaCha8Rng::seed_from_u64(seed);
        mechanism.set_stream(2);
        Self { env, mechanism }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Play<'a> {
    Randomized(&'a SymmetricMechanism),
    Deterministic(&'a DeterministicMechanism),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub theta: usize,
    pub profile: Vec<usize>,
    pub class: usize,
    pub action: usize,
    pub u_r: f64,
    pub u_s: f64,
}

/// One round of the environment: state, truthful reports, receiver action.
pub fn env_step(
    instance: &GameInstance,
    partition: &ClassPartition,
    play: Play<'_>,
    streams: &mut RunStreams,
) -> Result<Observation> {
    let theta = sample_categorical(instance.prior(), &mut streams.env);
    let scheme = &instance.signaling()[theta];
    let profile: Vec<usize> = (0..instance.n())
        .map(|_| sample_categorical(scheme, &mut streams.env))
        .collect();
    let class = class_of_profile(&profile, partition)?;
    let action = match play {
        Play::Randomized(xi) => sample_categorical(xi.row(class), &mut streams.mechanism),
        Play::Deterministic(pi) => pi.action(class),
    };
    Ok(Observation {
        theta,
        u_r: instance.u_receiver(action, theta),
        u_s: instance.u_sender(action, theta),
        profile,
        class,
        action,
    })
}

/// Everything computed from the true parameters, shared read-only by runs.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub partition: ClassPartition,
    pub deviations: DeviationModel,
    pub r_r: UtilityVector,
    pub r_s: UtilityVector,
    pub xi_star: SymmetricMechanism,
    pub opt_value: f64,
}

pub fn compute_ground_truth(instance: &GameInstance, kind: DeviationKind) -> Result<GroundTruth> {
    let set = build_deviation_set(kind, instance.num_signals())?;
    ground_truth_with(instance, set)
}

pub fn ground_truth_with(instance: &GameInstance, set: DeviationSet) -> Result<GroundTruth> {
    let partition = enumerate_classes(instance.n(), instance.num_signals())?;
    let deviations = DeviationModel::new(set, &partition, instance.num_actions())?;
    let (r_r, r_s) = compute_utility_vectors(instance, instance.signaling(), &partition)?;
    let lp = build_lp(Slack::Finite(0.0), &r_r, &r_s, deviations.matrices())?;
    let (xi_star, opt_value) = solve_lp(&lp)?;
    Ok(GroundTruth {
        partition,
        deviations,
        r_r,
        r_s,
        xi_star,
        opt_value,
    })
}

/// Which rounds are kept in [`RunResult::records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogPolicy {
    /// Every round up to `T = 10^5`, every `ceil(T / 10^4)`-th round beyond.
    #[default]
    Auto,
    Every(u64),
    Off,
}

impl LogPolicy {
    fn stride(self, horizon: u64) -> Option<u64> {
        match self {
            LogPolicy::Auto if horizon <= 100_000 => Some(1),
            LogPolicy::Auto => Some(horizon.div_ceil(10_000)),
            LogPolicy::Every(k) => Some(k.max(1)),
            LogPolicy::Off => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub horizon: u64,
    pub delta: f64,
    pub seed: u64,
    pub log: LogPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FullFeedback,
    Bandit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: u64,
    /// Slack of the LP solved this round; infinite when the IC rows were dropped.
    pub nu: f64,
    pub theta: usize,
    pub profile: Vec<usize>,
    pub class: usize,
    pub action: usize,
    pub u_r: f64,
    pub u_s: f64,
    pub regret_inst: f64,
    pub regret_cum: f64,
    pub viol_raw_inst: f64,
    pub viol_raw_cum: f64,
    pub viol_clip_cum: f64,
    /// Bandit runs only: the deterministic mechanism actually played.
    pub pi: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub lp_solves: u64,
    /// Largest `row . xi - slack` over the IC rows of every LP solved.
    pub max_lp_ic_excess: f64,
    /// Whether the estimator stayed inside its confidence region in every round.
    pub concentration_held: bool,
    /// Rounds where the region held yet the optimal IC mechanism violated the
    /// round's LP by more than `1e-8` (full feedback only).
    pub star_infeasible_rounds: u64,
    pub exploration_rounds: u64,
    /// Largest `|violation|` over exploration rounds (bandit only).
    pub exploration_max_abs_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSnapshot {
    FullFeedback(FullFeedbackEstimator),
    Bandit(BanditEstimator),
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub horizon: u64,
    pub exploration: Option<u64>,
    pub delta: f64,
    pub seed: u64,
    pub opt_value: f64,
    pub regret_cum: f64,
    pub viol_raw_cum: f64,
    pub viol_clip_cum: f64,
    pub records: Vec<RoundRecord>,
    pub diagnostics: RunDiagnostics,
    pub estimator: EstimatorSnapshot,
}

pub const RUN_CSV_HEADER: [&str; 12] = [
    "t",
    "nu",
    "action",
    "theta",
    "class",
    "u_r",
    "u_s",
    "regret_inst",
    "regret_cum",
    "viol_raw_inst",
    "viol_raw_cum",
    "viol_clip_cum",
];

/// 17 significant digits; `inf` for the unbounded slack.
pub fn format_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl RunResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RUN_CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                format_float(r.nu),
                r.action.to_string(),
                r.theta.to_string(),
                r.class.to_string(),
                format_float(r.u_r),
                format_float(r.u_s),
                format_float(r.regret_inst),
                format_float(r.regret_cum),
                format_float(r.viol_raw_inst),
                format_float(r.viol_raw_cum),
                format_float(r.viol_clip_cum),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Accounting {
    stride: Option<u64>,
    horizon: u64,
    regret_cum: f64,
    viol_raw_cum: f64,
    viol_clip_cum: f64,
    records: Vec<RoundRecord>,
}

impl Accounting {
    fn new(cfg: &RunConfig) -> Self {
        let stride = cfg.log.stride(cfg.horizon);
        let capacity = stride.map_or(0, |k| (cfg.horizon / k + 2) as usize);
        Self {
            stride,
            horizon: cfg.horizon,
            regret_cum: 0.0,
            viol_raw_cum: 0.0,
            viol_clip_cum: 0.0,
            records: Vec::with_capacity(capacity),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        t: u64,
        nu: Slack,
        obs: Observation,
        regret: f64,
        violation: f64,
        pi: Option<&DeterministicMechanism>,
    ) {
        self.regret_cum += regret;
        self.viol_raw_cum += violation;
        self.viol_clip_cum += violation.max(0.0);
        let Some(k) = self.stride else { return };
        if !(t - 1).is_multiple_of(k) && t != self.horizon {
            return;
        }
        self.records.push(RoundRecord {
            t,
            nu: nu.as_f64(),
            theta: obs.theta,
            profile: obs.profile,
            class: obs.class,
            action: obs.action,
            u_r: obs.u_r,
            u_s: obs.u_s,
            regret_inst: regret,
            regret_cum: self.regret_cum,
            viol_raw_inst: violation,
            viol_raw_cum: self.viol_raw_cum,
            viol_clip_cum: self.viol_clip_cum,
            pi: pi.map(|p| p.choices().to_vec()),
        });
    }
}

fn check_run(instance: &GameInstance, truth: &GroundTruth, cfg: &RunConfig) -> Result<()> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidDelta(cfg.delta));
    }
    if truth.partition.n() != instance.n()
        || truth.partition.num_signals() != instance.num_signals()
        || truth.r_r.num_actions() != instance.num_actions()
    {
        return Err(Error::DimensionMismatch(
            "ground truth was computed for a different instance".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FullFeedbackOptions {
    /// Debug mode: use the true scheme in place of the estimate and zero slack.
    pub oracle_short_circuit: bool,
}

/// Full-feedback learner: re-estimates the signaling scheme every round and
/// solves the mechanism LP with slack `2 n |S| |Theta| eps_t`.
pub fn run_full_feedback(
    instance: &GameInstance,
    truth: &GroundTruth,
    cfg: &RunConfig,
    opts: FullFeedbackOptions,
) -> Result<RunResult> {
    check_run(instance, truth, cfg)?;
    let mut streams = RunStreams::new(cfg.seed);
    let mut est = FullFeedbackEstimator::new(instance, cfg.horizon, cfg.delta)?;
    let mut acct = Accounting::new(cfg);
    let mut diag = RunDiagnostics {
        concentration_held: true,
        max_lp_ic_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    let slack_scale = 2.0 * (instance.n() * instance.num_signals() * instance.num_states()) as f64;

    for t in 1..=cfg.horizon {
        let abort = |e: Error| Error::RunAborted {
            round: t,
            source: Box::new(e),
        };
        let (scheme, nu) = if opts.oracle_short_circuit {
            (instance.signaling().to_vec(), Slack::Finite(0.0))
        } else {
            (est.psi_hat(), Slack::from_f64(slack_scale * est.width()))
        };
        let (r_r, r_s) =
            compute_utility_vectors(instance, &scheme, &truth.partition).map_err(abort)?;
        let lp = build_lp(nu, &r_r, &r_s, truth.deviations.matrices()).map_err(abort)?;
        let (xi, _) = solve_lp(&lp).map_err(abort)?;
        diag.lp_solves += 1;
        diag.max_lp_ic_excess = diag.max_lp_ic_excess.max(lp.ic_excess(&xi));

        if !opts.oracle_short_circuit {
            if !est.within_confidence(instance.signaling()) {
                diag.concentration_held = false;
            } else if lp.ic_excess(&truth.xi_star) > 1e-8 {
                diag.star_infeasible_rounds += 1;
            }
        }

        let obs = env_step(
            instance,
            &truth.partition,
            Play::Randomized(&xi),
            &mut streams,
        )
        .map_err(abort)?;
        est.update(obs.theta, &obs.profile).map_err(abort)?;
        let regret = truth.opt_value - expected_utility(&xi, &truth.r_r)?;
        let (violation, _) = ic_gap(&xi, &truth.deviations, &truth.r_s)?;
        acct.record(t, nu, obs, regret, violation, None);
    }

    Ok(RunResult {
        algorithm: Algorithm::FullFeedback,
        horizon: cfg.horizon,
        exploration: None,
        delta: cfg.delta,
        seed: cfg.seed,
        opt_value: truth.opt_value,
        regret_cum: acct.regret_cum,
        viol_raw_cum: acct.viol_raw_cum,
        viol_clip_cum: acct.viol_clip_cum,
        records: acct.records,
        diagnostics: diag,
        estimator: EstimatorSnapshot::FullFeedback(est),
    })
}

/// Slack used in every optimization round of the bandit learner.
pub fn bandit_slack(
    horizon: u64,
    exploration: u64,
    num_classes: usize,
    num_actions: usize,
    delta: f64,
) -> f64 {
    let log_term = (8.0 * horizon as f64 * (num_classes * num_actions) as f64 / delta).ln();
    2.0 * num_classes as f64 * (log_term / (2.0 * exploration as f64)).sqrt()
}

/// `floor(T^alpha)`, guarded against floating error at exact powers.
pub fn exploration_from_alpha(horizon: u64, alpha: f64) -> u64 {
    let raw = (horizon as f64).powf(alpha);
    let mut e = raw.round() as u64;
    if (e as f64 - raw).abs() > 1e-9 * raw.max(1.0) {
        e = raw.floor() as u64;
    }
    e
}

/// Explore-then-commit learner for bandit feedback.
///
/// Rounds `1..=|A| E` play constant mechanisms on the least-explored action;
/// later rounds solve the LP with the optimistic objective `r_R + eta`, the
/// estimated sender vector and slack [`bandit_slack`], then play a
/// deterministic mechanism sampled from the solution.
pub fn run_bandit(
    instance: &GameInstance,
    truth: &GroundTruth,
    cfg: &RunConfig,
    exploration: u64,
) -> Result<RunResult> {
    check_run(instance, truth, cfg)?;
    let na = instance.num_actions();
    let k = truth.partition.len();
    if exploration == 0 || exploration.saturating_mul(na as u64) > cfg.horizon {
        return Err(Error::InvalidE {
            e: exploration,
            num_actions: na,
            horizon: cfg.horizon,
        });
    }
    let mut streams = RunStreams::new(cfg.seed);
    let mut est = BanditEstimator::new(k, na, cfg.horizon, cfg.delta)?;
    let mut acct = Accounting::new(cfg);
    let mut diag = RunDiagnostics {
        concentration_held: true,
        max_lp_ic_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    let nu = Slack::Finite(bandit_slack(cfg.horizon, exploration, k, na, cfg.delta));
    let explore_until = exploration * na as u64;

    for t in 1..=cfg.horizon {
        let abort = |e: Error| Error::RunAborted {
            round: t,
            source: Box::new(e),
        };
        let exploring = t <= explore_until;
        let (xi, slack) = if exploring {
            let a = (0..na)
                .min_by_key(|&a| (est.action_total(a), a))
                .expect("at least one action");
            (SymmetricMechanism::constant(k, na, a), Slack::Unbounded)
        } else {
            let objective = est.r_hat_receiver().add(&est.widths()).map_err(abort)?;
            let r_s_hat = est.r_hat_sender();
            let lp =
                build_lp(nu, &objective, &r_s_hat, truth.deviations.matrices()).map_err(abort)?;
            let (xi, _) = solve_lp(&lp).map_err(abort)?;
            diag.lp_solves += 1;
            diag.max_lp_ic_excess = diag.max_lp_ic_excess.max(lp.ic_excess(&xi));
            (xi, nu)
        };

        let pi = sample_deterministic(&xi, &mut streams.mechanism);
        let obs = env_step(
            instance,
            &truth.partition,
            Play::Deterministic(&pi),
            &mut streams,
        )
        .map_err(abort)?;
        est.update(&pi, obs.class, obs.action, obs.u_r, obs.u_s)
            .map_err(abort)?;
        if diag.concentration_held && !est.within_confidence(&truth.r_r, &truth.r_s) {
            diag.concentration_held = false;
        }

        let regret = truth.opt_value - expected_utility(&xi, &truth.r_r)?;
        let (violation, _) = ic_gap(&xi, &truth.deviations, &truth.r_s)?;
        if exploring {
            diag.exploration_rounds += 1;
            diag.exploration_max_abs_violation =
                diag.exploration_max_abs_violation.max(violation.abs());
        }
        acct.record(t, slack, obs, regret, violation, Some(&pi));
    }

    Ok(RunResult {
        algorithm: Algorithm::Bandit,
        horizon: cfg.horizon,
        exploration: Some(exploration),
        delta: cfg.delta,
        seed: cfg.seed,
        opt_value: truth.opt_value,
        regret_cum: acct.regret_cum,
        viol_raw_cum: acct.viol_raw_cum,
        viol_clip_cum: acct.viol_clip_cum,
        records: acct.records,
        diagnostics: diag,
        estimator: EstimatorSnapshot::Bandit(est),
    })
}

//! Online estimators and confidence widths for the two feedback models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::mechanisms::{DeterministicMechanism, UtilityVector};

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

/// Width of the signaling-scheme confidence region at round `t`.
///
/// `sqrt(log(2 T |S| |Theta| / delta) / (2 (t - 1) n))`, infinite at `t = 1`.
pub fn ff_width(
    t: u64,
    n: usize,
    num_signals: usize,
    num_states: usize,
    horizon: u64,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if t == 0 || horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    if t == 1 {
        return Ok(f64::INFINITY);
    }
    let log_term = (2.0 * horizon as f64 * num_signals as f64 * num_states as f64 / delta).ln();
    Ok((log_term / (2.0 * (t - 1) as f64 * n as f64)).sqrt())
}

/// Width of a utility-vector entry sampled `count` times.
///
/// `sqrt(log(8 T |C| |A| / delta) / (2 N))`, infinite at `N = 0`.
pub fn bandit_width(
    count: u64,
    horizon: u64,
    num_classes: usize,
    num_actions: usize,
    delta: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if count == 0 {
        return Ok(f64::INFINITY);
    }
    let log_term = (8.0 * horizon as f64 * num_classes as f64 * num_actions as f64 / delta).ln();
    Ok((log_term / (2.0 * count as f64)).sqrt())
}

/// Empirical signaling scheme from observed states and full profiles.
#[derive(Debug, Clone, Serialize)]
pub struct FullFeedbackEstimator {
    n: usize,
    num_signals: usize,
    prior: Vec<f64>,
    counts: Vec<Vec<u64>>,
    rounds: u64,
    horizon: u64,
    delta: f64,
}

impl FullFeedbackEstimator {
    pub fn new(instance: &GameInstance, horizon: u64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        Ok(Self {
            n: instance.n(),
            num_signals: instance.num_signals(),
            prior: instance.prior().to_vec(),
            counts: vec![vec![0; instance.num_signals()]; instance.num_states()],
            rounds: 0,
            horizon,
            delta,
        })
    }

    /// Rounds observed so far; the next round to be played is `rounds() + 1`.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn update(&mut self, theta: usize, profile: &[usize]) -> Result<()> {
        if theta >= self.prior.len() {
            return Err(Error::InvalidIndex(format!("state {theta}")));
        }
        if profile.len() != self.n {
            return Err(Error::InvalidIndex(format!(
                "profile of length {} for n = {}",
                profile.len(),
                self.n
            )));
        }
        if let Some(&s) = profile.iter().find(|&&s| s >= self.num_signals) {
            return Err(Error::InvalidIndex(format!("signal {s}")));
        }
        for &s in profile {
            self.counts[theta][s] += 1;
        }
        self.rounds += 1;
        Ok(())
    }

    /// `counts[theta][s] / (t n p(theta))`; uniform before any data.
    ///
    /// Rows are not normalized and may exceed one.
    pub fn psi_hat(&self) -> Vec<Vec<f64>> {
        if self.rounds == 0 {
            let u = 1.0 / self.num_signals as f64;
            return vec![vec![u; self.num_signals]; self.counts.len()];
        }
        let denom = self.rounds as f64 * self.n as f64;
        self.counts
            .iter()
            .zip(&self.prior)
            .map(|(row, &p)| row.iter().map(|&c| c as f64 / (denom * p)).collect())
            .collect()
    }

    /// Width for the upcoming round `rounds() + 1`.
    pub fn width(&self) -> f64 {
        ff_width(
            self.rounds + 1,
            self.n,
            self.num_signals,
            self.counts.len(),
            self.horizon,
            self.delta,
        )
        .expect("parameters validated at construction")
    }

    /// Whether every entry lies within `width / p(theta)` of `truth`.
    pub fn within_confidence(&self, truth: &[Vec<f64>]) -> bool {
        let w = self.width();
        if w.is_infinite() {
            return true;
        }
        let hat = self.psi_hat();
        hat.iter()
            .zip(truth)
            .zip(&self.prior)
            .all(|((h, t), &p)| h.iter().zip(t).all(|(a, b)| (a - b).abs() <= w / p))
    }
}

/// Utility-vector estimates from bandit observations.
#[derive(Debug, Clone, Serialize)]
pub struct BanditEstimator {
    num_classes: usize,
    num_actions: usize,
    sums_r: Vec<f64>,
    sums_s: Vec<f64>,
    counts: Vec<u64>,
    horizon: u64,
    delta: f64,
}

impl BanditEstimator {
    pub fn new(num_classes: usize, num_actions: usize, horizon: u64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        let len = num_classes * num_actions;
        Ok(Self {
            num_classes,
            num_actions,
            sums_r: vec![0.0; len],
            sums_s: vec![0.0; len],
            counts: vec![0; len],
            horizon,
            delta,
        })
    }

    pub fn count(&self, class: usize, action: usize) -> u64 {
        self.counts[class * self.num_actions + action]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total prescriptions of `action` across classes.
    pub fn action_total(&self, action: usize) -> u64 {
        (0..self.num_classes).map(|c| self.count(c, action)).sum()
    }

    /// Records one round played with `pi`.
    ///
    /// Every class that `pi` maps to some action receives a sample for that
    /// action; only the realized class receives a nonzero one.
    pub fn update(
        &mut self,
        pi: &DeterministicMechanism,
        realized_class: usize,
        action_played: usize,
        u_r: f64,
        u_s: f64,
    ) -> Result<()> {
        if pi.num_classes() != self.num_classes || pi.num_actions() != self.num_actions {
            return Err(Error::DimensionMismatch(
                "mechanism does not match estimator".into(),
            ));
        }
        if realized_class >= self.num_classes {
            return Err(Error::InvalidIndex(format!("class {realized_class}")));
        }
        let prescribed = pi.action(realized_class);
        if prescribed != action_played {
            return Err(Error::InconsistentAction {
                class: realized_class,
                prescribed,
                played: action_played,
            });
        }
        for u in [u_r, u_s] {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::ObservationOutOfRange(u));
            }
        }
        for (c, &a) in pi.choices().iter().enumerate() {
            self.counts[c * self.num_actions + a] += 1;
        }
        let idx = realized_class * self.num_actions + action_played;
        self.sums_r[idx] += u_r;
        self.sums_s[idx] += u_s;
        Ok(())
    }

    fn estimate(&self, sums: &[f64]) -> UtilityVector {
        let values = sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect();
        UtilityVector::new(self.num_classes, self.num_actions, values)
            .expect("shape fixed at construction")
    }

    pub fn r_hat_receiver(&self) -> UtilityVector {
        self.estimate(&self.sums_r)
    }

    pub fn r_hat_sender(&self) -> UtilityVector {
        self.estimate(&self.sums_s)
    }

    /// Per-entry widths, infinite for entries never sampled.
    pub fn widths(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&n| {
                bandit_width(
                    n,
                    self.horizon,
                    self.num_classes,
                    self.num_actions,
                    self.delta,
                )
                .expect("parameters validated at construction")
            })
            .collect()
    }

    /// Whether both estimates lie within their widths of the true vectors.
    pub fn within_confidence(&self, r_r: &UtilityVector, r_s: &UtilityVector) -> bool {
        let w = self.widths();
        let hr = self.r_hat_receiver();
        let hs = self.r_hat_sender();
        (0..w.len()).all(|i| {
            (hr.as_slice()[i] - r_r.as_slice()[i]).abs() <= w[i]
                && (hs.as_slice()[i] - r_s.as_slice()[i]).abs() <= w[i]
        })
    }
}

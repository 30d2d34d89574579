//! Brute-force references over the full signal-profile space.
//!
//! Nothing here reuses the class bookkeeping of the compact path: profiles
//! are enumerated directly and histograms recomputed locally, so the
//! cross-checks against [`crate::mechanisms`] and [`crate::lp`] are not
//! circular.

use crate::error::{Error, Result};
use crate::game::{ClassPartition, GameInstance};
use crate::lp::Slack;
use crate::mechanisms::{DeviationFunction, DeviationMatrix, DeviationSet};
use crate::simplex::{LinearProgram, Outcome, RowKind};

pub const PROFILE_LIMIT: u128 = 1_000_000;
pub const FULL_LP_VARIABLE_LIMIT: u128 = 100_000;

fn profile_count(n: usize, num_signals: usize) -> Result<usize> {
    let size = (num_signals as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if size > PROFILE_LIMIT {
        return Err(Error::TooLarge {
            what: "signal profile space",
            size,
            limit: PROFILE_LIMIT,
        });
    }
    Ok(size as usize)
}

/// Profile number `idx` in base `|S|`, sender 0 most significant.
fn decode(mut idx: usize, n: usize, num_signals: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % num_signals;
        idx /= num_signals;
    }
    out
}

fn encode(profile: &[usize], num_signals: usize) -> usize {
    profile.iter().fold(0, |acc, &s| acc * num_signals + s)
}

/// All `|S|^n` profiles in base-`|S|` order.
pub fn enumerate_profiles(n: usize, num_signals: usize) -> Result<Vec<Vec<usize>>> {
    let total = profile_count(n, num_signals)?;
    Ok((0..total).map(|i| decode(i, n, num_signals)).collect())
}

/// A mechanism over full profiles, rows indexed like [`enumerate_profiles`].
#[derive(Debug, Clone, PartialEq)]
pub struct FullMechanism {
    num_actions: usize,
    probs: Vec<f64>,
}

impl FullMechanism {
    pub fn new(num_profiles: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_profiles * num_actions {
            return Err(Error::DimensionMismatch("full mechanism table".into()));
        }
        for row in probs.chunks(num_actions) {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&v| v < -1e-9) {
                return Err(Error::DimensionMismatch(format!(
                    "full mechanism row sums to {sum}"
                )));
            }
        }
        Ok(Self { num_actions, probs })
    }

    pub fn get(&self, profile: usize, action: usize) -> f64 {
        self.probs[profile * self.num_actions + action]
    }

    pub fn num_profiles(&self) -> usize {
        self.probs.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

/// `d[s,a] = sum_theta p(theta) prod_i psi(s_i|theta) u(a,theta)` for both roles.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPayoffs {
    pub num_actions: usize,
    pub receiver: Vec<f64>,
    pub sender: Vec<f64>,
}

impl FullPayoffs {
    pub fn receiver(&self, profile: usize, action: usize) -> f64 {
        self.receiver[profile * self.num_actions + action]
    }

    pub fn sender(&self, profile: usize, action: usize) -> f64 {
        self.sender[profile * self.num_actions + action]
    }
}

pub fn full_profile_payoffs(instance: &GameInstance) -> Result<FullPayoffs> {
    let (n, nsig, na) = (instance.n(), instance.num_signals(), instance.num_actions());
    let profiles = enumerate_profiles(n, nsig)?;
    let mut receiver = vec![0.0; profiles.len() * na];
    let mut sender = vec![0.0; profiles.len() * na];
    for (i, profile) in profiles.iter().enumerate() {
        for theta in 0..instance.num_states() {
            let mut w = instance.prior()[theta];
            for &s in profile {
                w *= instance.signaling()[theta][s];
            }
            for a in 0..na {
                receiver[i * na + a] += w * instance.u_receiver(a, theta);
                sender[i * na + a] += w * instance.u_sender(a, theta);
            }
        }
    }
    Ok(FullPayoffs {
        num_actions: na,
        receiver,
        sender,
    })
}

/// Expands a per-class table to profiles: `x[s,a] = table[class(s), a]`.
pub fn expand_symmetric(
    table: &[f64],
    num_actions: usize,
    partition: &ClassPartition,
) -> Result<FullMechanism> {
    let profiles = enumerate_profiles(partition.n(), partition.num_signals())?;
    let mut probs = Vec::with_capacity(profiles.len() * num_actions);
    for profile in &profiles {
        let c = locate_class(profile, partition)?;
        probs.extend_from_slice(&table[c * num_actions..(c + 1) * num_actions]);
    }
    FullMechanism::new(profiles.len(), num_actions, probs)
}

/// Class index by linear scan over the partition's count vectors.
fn locate_class(profile: &[usize], partition: &ClassPartition) -> Result<usize> {
    let mut hist = vec![0u32; partition.num_signals()];
    for &s in profile {
        hist[s] += 1;
    }
    partition
        .classes()
        .iter()
        .position(|c| *c == hist)
        .ok_or_else(|| Error::Internal(format!("no class for profile {profile:?}")))
}

pub fn receiver_utility(x: &FullMechanism, d: &FullPayoffs) -> f64 {
    x.probs.iter().zip(&d.receiver).map(|(a, b)| a * b).sum()
}

/// Sender utility when sender `sender` reports through `phi` and the rest are truthful.
pub fn sender_deviation_utility(
    x: &FullMechanism,
    d: &FullPayoffs,
    phi: &DeviationFunction,
    sender: usize,
    n: usize,
) -> f64 {
    let nsig = phi.num_signals();
    let mut total = 0.0;
    for idx in 0..x.num_profiles() {
        let mut profile = decode(idx, n, nsig);
        profile[sender] = phi.apply(profile[sender]);
        let reported = encode(&profile, nsig);
        for a in 0..x.num_actions {
            total += x.get(reported, a) * d.sender(idx, a);
        }
    }
    total
}

/// Optimal receiver value over all (not necessarily symmetric) mechanisms
/// whose deviation gain is at most `slack` for every sender and every `phi`.
pub fn solve_full_lp(
    instance: &GameInstance,
    slack: Slack,
    deviations: &DeviationSet,
) -> Result<f64> {
    match build_full_lp(instance, slack, deviations)?.solve()? {
        Outcome::Optimal { value, .. } => Ok(value),
        other => Err(Error::Internal(format!("full-profile LP: {other:?}"))),
    }
}

/// The full-profile LP itself; variables are `x[profile * |A| + a]`.
pub fn build_full_lp(
    instance: &GameInstance,
    slack: Slack,
    deviations: &DeviationSet,
) -> Result<LinearProgram> {
    if let Slack::Finite(eps) = slack {
        if !(eps >= 0.0) {
            return Err(Error::NegativeEpsilon(eps));
        }
    }
    let (n, nsig, na) = (instance.n(), instance.num_signals(), instance.num_actions());
    let num_profiles = profile_count(n, nsig)?;
    let vars = (num_profiles * na) as u128;
    if vars > FULL_LP_VARIABLE_LIMIT {
        return Err(Error::TooLarge {
            what: "full-profile LP",
            size: vars,
            limit: FULL_LP_VARIABLE_LIMIT,
        });
    }
    let d = full_profile_payoffs(instance)?;
    let mut lp = LinearProgram::new(d.receiver.clone());
    for s in 0..num_profiles {
        let mut row = vec![0.0; num_profiles * na];
        row[s * na..(s + 1) * na].fill(1.0);
        lp.push(row, RowKind::Eq, 1.0);
    }
    if let Slack::Finite(eps) = slack {
        for sender in 0..n {
            for phi in deviations.functions() {
                // coefficient on x[s', a] collects d_S[s, a] over profiles s reported as s'
                let mut row: Vec<f64> = d.sender.iter().map(|v| -v).collect();
                for idx in 0..num_profiles {
                    let mut profile = decode(idx, n, nsig);
                    profile[sender] = phi.apply(profile[sender]);
                    let reported = encode(&profile, nsig);
                    for a in 0..na {
                        row[reported * na + a] += d.sender(idx, a);
                    }
                }
                lp.push(row, RowKind::Le, eps);
            }
        }
    }
    Ok(lp)
}

/// Deviation matrix by direct enumeration, with `sender` as the deviating sender.
pub fn brute_force_deviation_matrix(
    phi: &DeviationFunction,
    partition: &ClassPartition,
    num_actions: usize,
    sender: usize,
) -> Result<DeviationMatrix> {
    let (n, nsig) = (partition.n(), partition.num_signals());
    if sender >= n {
        return Err(Error::InvalidIndex(format!("sender {sender} with n = {n}")));
    }
    let k = partition.len();
    let mut hits = vec![0u64; k * k];
    let mut sizes = vec![0u64; k];
    for idx in 0..profile_count(n, nsig)? {
        let mut profile = decode(idx, n, nsig);
        let truth = locate_class(&profile, partition)?;
        sizes[truth] += 1;
        profile[sender] = phi.apply(profile[sender]);
        let reported = locate_class(&profile, partition)?;
        hits[reported * k + truth] += 1;
    }
    let block = (0..k * k)
        .map(|i| hits[i] as f64 / sizes[i % k] as f64)
        .collect();
    DeviationMatrix::from_block(k, num_actions, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{enumerate_classes, tests::uniform_spec, validate_instance};
    use crate::mechanisms::{build_deviation_set, DeviationKind};

    #[test]
    fn profile_space_guard() {
        assert_eq!(enumerate_profiles(2, 3).unwrap().len(), 9);
        assert!(matches!(
            enumerate_profiles(13, 3),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn payoffs_sum_to_one_for_unit_utility() {
        let mut spec = uniform_spec();
        spec.signaling = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        spec.u_receiver = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let inst = validate_instance(spec).unwrap();
        let d = full_profile_payoffs(&inst).unwrap();
        for a in 0..2 {
            let total: f64 = (0..4).map(|s| d.receiver(s, a)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sender_payoffs() {
        let mut spec = uniform_spec();
        spec.n = 1;
        spec.prior = vec![0.3, 0.7];
        spec.signaling = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        spec.u_sender = vec![vec![0.1, 0.9], vec![0.5, 0.25]];
        let inst = validate_instance(spec).unwrap();
        let d = full_profile_payoffs(&inst).unwrap();
        let expect = 0.3 * 0.8 * 0.5 + 0.7 * 0.4 * 0.25;
        assert!((d.sender(1, 1) - expect).abs() < 1e-15);
    }

    #[test]
    fn identity_and_unconstrained() {
        let p = enumerate_classes(3, 2).unwrap();
        let m = brute_force_deviation_matrix(&DeviationFunction::identity(2), &p, 2, 0).unwrap();
        for c in 0..p.len() {
            assert_eq!(m.get(c, c), 1.0);
        }

        let mut spec = uniform_spec();
        spec.signaling = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        spec.u_receiver = vec![vec![0.9, 0.1], vec![0.3, 0.5]];
        let inst = validate_instance(spec).unwrap();
        let d = full_profile_payoffs(&inst).unwrap();
        let set = build_deviation_set(DeviationKind::InterimReduced, 2).unwrap();
        let value = solve_full_lp(&inst, Slack::Unbounded, &set).unwrap();
        let expect: f64 = (0..4).map(|s| d.receiver(s, 0).max(d.receiver(s, 1))).sum();
        assert!((value - expect).abs() < 1e-12);
    }
}

//! Game instances and the symmetric class partition of signal profiles.
//!
//! A profile is a vector of `n` signal indices, one per sender. Two profiles
//! belong to the same class when they have the same signal histogram, so a
//! class is identified by its count vector `c` with `sum(c) == n`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Raw instance description, the on-disk JSON schema.
///
/// Matrices are nested row-major arrays: `signaling[state][signal]`,
/// `u_receiver[action][state]`, `u_sender[action][state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub states: Vec<String>,
    pub signals: Vec<String>,
    pub actions: Vec<String>,
    pub prior: Vec<f64>,
    pub signaling: Vec<Vec<f64>>,
    pub u_receiver: Vec<Vec<f64>>,
    pub u_sender: Vec<Vec<f64>>,
}

/// A validated game between one receiver and `n` symmetric senders.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    spec: InstanceSpec,
}

impl GameInstance {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn num_states(&self) -> usize {
        self.spec.states.len()
    }

    pub fn num_signals(&self) -> usize {
        self.spec.signals.len()
    }

    pub fn num_actions(&self) -> usize {
        self.spec.actions.len()
    }

    pub fn states(&self) -> &[String] {
        &self.spec.states
    }

    pub fn signals(&self) -> &[String] {
        &self.spec.signals
    }

    pub fn actions(&self) -> &[String] {
        &self.spec.actions
    }

    pub fn prior(&self) -> &[f64] {
        &self.spec.prior
    }

    /// `signaling()[state][signal]`.
    pub fn signaling(&self) -> &[Vec<f64>] {
        &self.spec.signaling
    }

    pub fn u_receiver(&self, action: usize, state: usize) -> f64 {
        self.spec.u_receiver[action][state]
    }

    pub fn u_sender(&self, action: usize, state: usize) -> f64 {
        self.spec.u_sender[action][state]
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: InstanceSpec = serde_json::from_str(text)?;
        validate_instance(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.spec)?)
    }
}

/// Checks the model constraints and wraps the description as a [`GameInstance`].
///
/// States with zero prior mass are rejected rather than dropped, since the
/// full-feedback estimator divides by the prior.
pub fn validate_instance(spec: InstanceSpec) -> Result<GameInstance> {
    if spec.n == 0 {
        return Err(Error::EmptyDimension("sender"));
    }
    let (ns, nsig, na) = (spec.states.len(), spec.signals.len(), spec.actions.len());
    if ns == 0 {
        return Err(Error::EmptyDimension("state"));
    }
    if nsig == 0 {
        return Err(Error::EmptyDimension("signal"));
    }
    if na == 0 {
        return Err(Error::EmptyDimension("action"));
    }
    if spec.prior.len() != ns {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries for {} states",
            spec.prior.len(),
            ns
        )));
    }
    if spec.signaling.len() != ns || spec.signaling.iter().any(|row| row.len() != nsig) {
        return Err(Error::DimensionMismatch(format!(
            "signaling must be {ns}x{nsig} (state x signal)"
        )));
    }
    for (name, table) in [
        ("u_receiver", &spec.u_receiver),
        ("u_sender", &spec.u_sender),
    ] {
        if table.len() != na || table.iter().any(|row| row.len() != ns) {
            return Err(Error::DimensionMismatch(format!(
                "{name} must be {na}x{ns} (action x state)"
            )));
        }
    }

    let sum: f64 = spec.prior.iter().sum();
    if let Some(state) = spec.prior.iter().position(|&p| !(p >= 0.0)) {
        return Err(Error::NonStochasticPrior {
            sum,
            state: Some(state),
        });
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NonStochasticPrior { sum, state: None });
    }
    if let Some(state) = spec.prior.iter().position(|&p| p == 0.0) {
        return Err(Error::ZeroPriorState { state });
    }

    for (state, row) in spec.signaling.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NonStochasticSignaling { state, sum });
        }
    }

    for (table_name, table) in [("receiver", &spec.u_receiver), ("sender", &spec.u_sender)] {
        for (action, row) in table.iter().enumerate() {
            for (state, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::UtilityOutOfRange {
                        table: table_name,
                        action,
                        state,
                        value,
                    });
                }
            }
        }
    }

    Ok(GameInstance { spec })
}

/// Exact binomial coefficient with overflow detection.
fn binomial(m: u64, k: u64) -> Option<u64> {
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (m - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((m - i) as u128)? / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `(sum c)! / prod(c[s]!)`, computed as a product of binomials.
pub fn multinomial(counts: &[u32]) -> Result<u64> {
    let mut total = 0u64;
    let mut acc = 1u64;
    for &c in counts {
        total += c as u64;
        let step = binomial(total, c as u64).and_then(|b| acc.checked_mul(b));
        match step {
            Some(v) => acc = v,
            None => {
                let n: u64 = counts.iter().map(|&c| c as u64).sum();
                let ln =
                    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>();
                let bits = (ln / std::f64::consts::LN_2).floor() as u32 + 1;
                return Err(Error::Overflow {
                    required_bits: bits,
                });
            }
        }
    }
    Ok(acc)
}

/// Classes of signal profiles under sender permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    n: usize,
    num_signals: usize,
    classes: Vec<Vec<u32>>,
    sizes: Vec<u64>,
    index: HashMap<Vec<u32>, usize>,
}

impl ClassPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Count vectors in lexicographic order.
    pub fn classes(&self) -> &[Vec<u32>] {
        &self.classes
    }

    pub fn counts(&self, class: usize) -> &[u32] {
        &self.classes[class]
    }

    /// Number of profiles in each class.
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn size(&self, class: usize) -> u64 {
        self.sizes[class]
    }

    pub fn index_of_counts(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    /// Human-readable label such as `s0:2|s1:1`.
    pub fn label(&self, class: usize, signal_names: &[String]) -> String {
        self.classes[class]
            .iter()
            .zip(signal_names)
            .map(|(c, name)| format!("{name}:{c}"))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// All compositions of `n` into `num_signals` nonnegative parts, lexicographically.
pub fn enumerate_classes(n: usize, num_signals: usize) -> Result<ClassPartition> {
    if n == 0 {
        return Err(Error::EmptyDimension("sender"));
    }
    if num_signals == 0 {
        return Err(Error::EmptyDimension("signal"));
    }
    let mut classes = Vec::new();
    let mut current = vec![0u32; num_signals];
    compositions(n as u32, 0, &mut current, &mut classes);

    let sizes = classes
        .iter()
        .map(|c| multinomial(c))
        .collect::<Result<Vec<_>>>()?;
    let index = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    Ok(ClassPartition {
        n,
        num_signals,
        classes,
        sizes,
        index,
    })
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Histogram of a profile, one count per signal.
pub fn profile_counts(profile: &[usize], num_signals: usize) -> Result<Vec<u32>> {
    let mut counts = vec![0u32; num_signals];
    for (position, &s) in profile.iter().enumerate() {
        if s >= num_signals {
            return Err(Error::InvalidSignalIndex {
                position,
                index: s,
                num_signals,
            });
        }
        counts[s] += 1;
    }
    Ok(counts)
}

pub fn class_of_profile(profile: &[usize], partition: &ClassPartition) -> Result<usize> {
    if profile.len() != partition.n() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} entries, expected n = {}",
            profile.len(),
            partition.n()
        )));
    }
    let counts = profile_counts(profile, partition.num_signals())?;
    partition
        .index_of_counts(&counts)
        .ok_or_else(|| Error::Internal("histogram missing from partition".into()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn uniform_spec() -> InstanceSpec {
        InstanceSpec {
            n: 2,
            states: vec!["t0".into(), "t1".into()],
            signals: vec!["s0".into(), "s1".into()],
            actions: vec!["a0".into(), "a1".into()],
            prior: vec![0.5, 0.5],
            signaling: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            u_receiver: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            u_sender: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        }
    }

    #[test]
    fn accepts_uniform_instance() {
        let inst = validate_instance(uniform_spec()).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.num_actions(), 2);
    }

    #[test]
    fn rejects_bad_prior() {
        let mut spec = uniform_spec();
        spec.prior = vec![0.5, 0.6];
        assert!(matches!(
            validate_instance(spec),
            Err(Error::NonStochasticPrior { .. })
        ));
    }

    #[test]
    fn rejects_zero_prior_state() {
        let mut spec = uniform_spec();
        spec.prior = vec![1.0, 0.0];
        assert!(matches!(
            validate_instance(spec),
            Err(Error::ZeroPriorState { state: 1 })
        ));
    }

    #[test]
    fn rejects_bad_signaling_and_utilities() {
        let mut spec = uniform_spec();
        spec.signaling[1] = vec![0.7, 0.7];
        assert!(matches!(
            validate_instance(spec),
            Err(Error::NonStochasticSignaling { state: 1, .. })
        ));
        let mut spec = uniform_spec();
        spec.u_sender[1][0] = 1.5;
        assert!(matches!(
            validate_instance(spec),
            Err(Error::UtilityOutOfRange {
                table: "sender",
                action: 1,
                state: 0,
                ..
            })
        ));
    }

    #[test]
    fn json_round_trip() {
        let inst = validate_instance(uniform_spec()).unwrap();
        let back = GameInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn two_senders_two_signals() {
        let p = enumerate_classes(2, 2).unwrap();
        assert_eq!(p.classes(), &[vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(p.sizes(), &[1, 2, 1]);
    }

    #[test]
    fn class_sizes() {
        let p = enumerate_classes(4, 2).unwrap();
        assert_eq!(p.size(p.index_of_counts(&[2, 2]).unwrap()), 6);

        let p = enumerate_classes(3, 3).unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(p.sizes().iter().sum::<u64>(), 27);
    }

    #[test]
    fn multinomial_overflow_reports_width() {
        assert_eq!(multinomial(&[3, 2]).unwrap(), 10);
        match multinomial(&[40, 40, 40]) {
            Err(Error::Overflow { required_bits }) => assert!(required_bits > 64),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn classes_of_profiles() {
        let p = enumerate_classes(2, 2).unwrap();
        assert_eq!(p.counts(class_of_profile(&[1, 0], &p).unwrap()), &[1, 1]);

        let p = enumerate_classes(3, 3).unwrap();
        assert_eq!(
            p.counts(class_of_profile(&[0, 0, 0], &p).unwrap()),
            &[3, 0, 0]
        );
        assert_eq!(
            class_of_profile(&[0, 1, 1], &p).unwrap(),
            class_of_profile(&[1, 0, 1], &p).unwrap()
        );
        assert!(matches!(
            class_of_profile(&[0, 3, 1], &p),
            Err(Error::InvalidSignalIndex { position: 1, .. })
        ));
    }
}

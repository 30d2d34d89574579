//! Symmetric mechanisms, deviation functions and the linear maps they induce.
//!
//! A symmetric mechanism assigns a distribution over actions to every class
//! of signal profiles. When one sender misreports through a deviation
//! function `phi`, the class reported to the receiver changes; the matrix
//! [`DeviationMatrix`] tracks where the probability mass of each true class
//! ends up, so that sender utilities under deviation stay linear in the
//! mechanism.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{multinomial, ClassPartition, GameInstance};

const ROW_TOL: f64 = 1e-9;

/// Row-stochastic class x action table.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMechanism {
    num_classes: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl SymmetricMechanism {
    pub fn new(num_classes: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_classes * num_actions {
            return Err(Error::DimensionMismatch(format!(
                "mechanism table has {} entries, expected {}x{}",
                probs.len(),
                num_classes,
                num_actions
            )));
        }
        for c in 0..num_classes {
            let row = &probs[c * num_actions..(c + 1) * num_actions];
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&v| !(v >= -ROW_TOL)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "mechanism row {c} is not a distribution (sum = {sum})"
                )));
            }
        }
        Ok(Self {
            num_classes,
            num_actions,
            probs,
        })
    }

    /// Plays `action` regardless of the reported profile.
    pub fn constant(num_classes: usize, num_actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; num_classes * num_actions];
        for c in 0..num_classes {
            probs[c * num_actions + action] = 1.0;
        }
        Self {
            num_classes,
            num_actions,
            probs,
        }
    }

    pub fn uniform(num_classes: usize, num_actions: usize) -> Self {
        Self {
            num_classes,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_classes * num_actions],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, class: usize, action: usize) -> f64 {
        self.probs[class * self.num_actions + action]
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.probs[class * self.num_actions..(class + 1) * self.num_actions]
    }

    /// Flattened with index `class * |A| + action`.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

impl From<&DeterministicMechanism> for SymmetricMechanism {
    fn from(pi: &DeterministicMechanism) -> Self {
        let mut probs = vec![0.0; pi.choices.len() * pi.num_actions];
        for (c, &a) in pi.choices.iter().enumerate() {
            probs[c * pi.num_actions + a] = 1.0;
        }
        Self {
            num_classes: pi.choices.len(),
            num_actions: pi.num_actions,
            probs,
        }
    }
}

/// A 0/1 mechanism, stored as the chosen action per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicMechanism {
    num_actions: usize,
    choices: Vec<usize>,
}

impl DeterministicMechanism {
    pub fn new(num_actions: usize, choices: Vec<usize>) -> Result<Self> {
        if let Some(c) = choices.iter().position(|&a| a >= num_actions) {
            return Err(Error::InvalidIndex(format!(
                "class {c} maps to action {} but |A| = {num_actions}",
                choices[c]
            )));
        }
        Ok(Self {
            num_actions,
            choices,
        })
    }

    pub fn constant(num_classes: usize, num_actions: usize, action: usize) -> Self {
        Self {
            num_actions,
            choices: vec![action; num_classes],
        }
    }

    pub fn action(&self, class: usize) -> usize {
        self.choices[class]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_classes(&self) -> usize {
        self.choices.len()
    }

    /// Entry of the 0/1 table.
    pub fn get(&self, class: usize, action: usize) -> bool {
        self.choices[class] == action
    }
}

/// A misreporting rule: the signal reported for each observed signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviationFunction(Vec<usize>);

impl DeviationFunction {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let num_signals = map.len();
        if let Some((position, &index)) = map.iter().enumerate().find(|(_, &t)| t >= num_signals) {
            return Err(Error::InvalidSignalIndex {
                position,
                index,
                num_signals,
            });
        }
        Ok(Self(map))
    }

    pub fn identity(num_signals: usize) -> Self {
        Self((0..num_signals).collect())
    }

    pub fn apply(&self, signal: usize) -> usize {
        self.0[signal]
    }

    pub fn num_signals(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(s, &t)| s == t)
    }
}

impl fmt::Display for DeviationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(s, t)| format!("{s}->{t}"))
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// Constant maps: a sender commits to a report before seeing the signal.
    ExAnte,
    /// Identity plus every single-signal swap; sufficient up to a factor |S|.
    InterimReduced,
    /// Every map S -> S.
    InterimFull,
    Custom,
}

pub const INTERIM_FULL_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSet {
    kind: DeviationKind,
    functions: Vec<DeviationFunction>,
}

impl DeviationSet {
    pub fn custom(functions: Vec<DeviationFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::EmptyDeviationSet);
        }
        let k = functions[0].num_signals();
        if functions.iter().any(|f| f.num_signals() != k) {
            return Err(Error::DimensionMismatch(
                "deviation functions disagree on |S|".into(),
            ));
        }
        Ok(Self {
            kind: DeviationKind::Custom,
            functions,
        })
    }

    pub fn kind(&self) -> DeviationKind {
        self.kind
    }

    pub fn functions(&self) -> &[DeviationFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

pub fn build_deviation_set(kind: DeviationKind, num_signals: usize) -> Result<DeviationSet> {
    if num_signals == 0 {
        return Err(Error::EmptyDimension("signal"));
    }
    let functions = match kind {
        DeviationKind::ExAnte => (0..num_signals)
            .map(|t| DeviationFunction(vec![t; num_signals]))
            .collect(),
        DeviationKind::InterimReduced => {
            let mut out = vec![DeviationFunction::identity(num_signals)];
            for s in 0..num_signals {
                for t in (0..num_signals).filter(|&t| t != s) {
                    let mut map: Vec<usize> = (0..num_signals).collect();
                    map[s] = t;
                    out.push(DeviationFunction(map));
                }
            }
            out
        }
        DeviationKind::InterimFull => {
            let size = (num_signals as u128).checked_pow(num_signals as u32);
            match size {
                Some(size) if size <= INTERIM_FULL_LIMIT => {}
                _ => {
                    return Err(Error::TooLarge {
                        what: "interim deviation set",
                        size: size.unwrap_or(u128::MAX),
                        limit: INTERIM_FULL_LIMIT,
                    })
                }
            }
            let mut out = Vec::new();
            let mut map = vec![0usize; num_signals];
            loop {
                out.push(DeviationFunction(map.clone()));
                // odometer, last position fastest
                let mut pos = num_signals;
                loop {
                    if pos == 0 {
                        return Ok(DeviationSet {
                            kind,
                            functions: out,
                        });
                    }
                    pos -= 1;
                    map[pos] += 1;
                    if map[pos] < num_signals {
                        break;
                    }
                    map[pos] = 0;
                }
            }
        }
        DeviationKind::Custom => {
            return Err(Error::Config(
                "custom deviation sets are built from explicit lists".into(),
            ))
        }
    };
    Ok(DeviationSet { kind, functions })
}

/// Unnormalized class x action utilities `r[c,a] = |c| sum_theta p(theta) u(a,theta) prod_s psi(s|theta)^c[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector {
    num_classes: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl UtilityVector {
    pub fn new(num_classes: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_classes * num_actions {
            return Err(Error::DimensionMismatch(format!(
                "utility vector has {} entries, expected {}x{}",
                values.len(),
                num_classes,
                num_actions
            )));
        }
        Ok(Self {
            num_classes,
            num_actions,
            values,
        })
    }

    pub fn zeros(num_classes: usize, num_actions: usize) -> Self {
        Self {
            num_classes,
            num_actions,
            values: vec![0.0; num_classes * num_actions],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, class: usize, action: usize) -> f64 {
        self.values[class * self.num_actions + action]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Entrywise sum, used for optimistic objectives.
    pub fn add(&self, other: &[f64]) -> Result<Self> {
        if other.len() != self.values.len() {
            return Err(Error::DimensionMismatch("bonus vector length".into()));
        }
        Ok(Self {
            num_classes: self.num_classes,
            num_actions: self.num_actions,
            values: self.values.iter().zip(other).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Receiver and sender utility vectors for a (possibly estimated) scheme.
///
/// `scheme[state][signal]` only needs nonnegative entries; estimated schemes
/// are not row-stochastic in general.
pub fn compute_utility_vectors(
    instance: &GameInstance,
    scheme: &[Vec<f64>],
    partition: &ClassPartition,
) -> Result<(UtilityVector, UtilityVector)> {
    let (ns, nsig, na) = (
        instance.num_states(),
        instance.num_signals(),
        instance.num_actions(),
    );
    if scheme.len() != ns || scheme.iter().any(|row| row.len() != nsig) {
        return Err(Error::DimensionMismatch(format!(
            "scheme must be {ns}x{nsig}"
        )));
    }
    if partition.num_signals() != nsig || partition.n() != instance.n() {
        return Err(Error::DimensionMismatch(
            "partition does not match instance".into(),
        ));
    }
    let k = partition.len();
    let mut r_r = vec![0.0; k * na];
    let mut r_s = vec![0.0; k * na];
    let mut weight = vec![0.0; ns];
    for c in 0..k {
        let counts = partition.counts(c);
        let size = partition.size(c) as f64;
        for (theta, w) in weight.iter_mut().enumerate() {
            let lik: f64 = counts
                .iter()
                .zip(&scheme[theta])
                .map(|(&cnt, &q)| q.powi(cnt as i32))
                .product();
            *w = size * instance.prior()[theta] * lik;
        }
        for a in 0..na {
            let mut acc_r = 0.0;
            let mut acc_s = 0.0;
            for (theta, &w) in weight.iter().enumerate() {
                acc_r += w * instance.u_receiver(a, theta);
                acc_s += w * instance.u_sender(a, theta);
            }
            r_r[c * na + a] = acc_r;
            r_s[c * na + a] = acc_s;
        }
    }
    Ok((
        UtilityVector::new(k, na, r_r)?,
        UtilityVector::new(k, na, r_s)?,
    ))
}

/// Pushforward of class mass under a single sender's deviation.
///
/// Entry `(c, c')` is the fraction of profiles in true class `c'` whose
/// report lands in class `c`. The same block applies to every action, so
/// only one `K x K` block is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationMatrix {
    num_classes: usize,
    num_actions: usize,
    block: Vec<f64>,
}

impl DeviationMatrix {
    pub fn from_block(num_classes: usize, num_actions: usize, block: Vec<f64>) -> Result<Self> {
        if block.len() != num_classes * num_classes {
            return Err(Error::DimensionMismatch(
                "deviation block must be KxK".into(),
            ));
        }
        Ok(Self {
            num_classes,
            num_actions,
            block,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `A[(reported, a), (truth, a)]`; identical for every action.
    pub fn get(&self, reported: usize, truth: usize) -> f64 {
        self.block[reported * self.num_classes + truth]
    }

    /// Full-index accessor; cross-action entries are zero.
    pub fn entry(&self, reported: usize, a: usize, truth: usize, b: usize) -> f64 {
        if a == b {
            self.get(reported, truth)
        } else {
            0.0
        }
    }

    /// Block for `action`; all blocks coincide.
    pub fn block(&self, _action: usize) -> &[f64] {
        &self.block
    }
}

/// Closed-form entry `(c, c')` for deviating sender 1.
fn closed_form_entry(
    reported: &[u32],
    truth: &[u32],
    truth_size: u64,
    phi: &DeviationFunction,
) -> Result<f64> {
    let l1: u32 = reported
        .iter()
        .zip(truth)
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    // profiles of `truth` in which sender 1 holds signal s
    let with_first = |s: usize| -> Result<u64> {
        let mut rest = truth.to_vec();
        rest[s] -= 1;
        multinomial(&rest)
    };
    let numerator = match l1 {
        0 => {
            let mut acc = 0u64;
            for s in (0..truth.len()).filter(|&s| phi.apply(s) == s && truth[s] > 0) {
                acc += with_first(s)?;
            }
            acc
        }
        2 => {
            let iota = (0..truth.len()).find(|&s| truth[s] == reported[s] + 1);
            let sigma = (0..truth.len()).find(|&s| reported[s] == truth[s] + 1);
            match (iota, sigma) {
                (Some(iota), Some(sigma)) if phi.apply(iota) == sigma => with_first(iota)?,
                _ => 0,
            }
        }
        _ => 0,
    };
    Ok(numerator as f64 / truth_size as f64)
}

pub fn build_deviation_matrix(
    phi: &DeviationFunction,
    partition: &ClassPartition,
    num_actions: usize,
) -> Result<DeviationMatrix> {
    if phi.num_signals() != partition.num_signals() {
        return Err(Error::DimensionMismatch(
            "deviation function and partition disagree on |S|".into(),
        ));
    }
    let k = partition.len();
    let mut block = vec![0.0; k * k];
    for truth in 0..k {
        let tc = partition.counts(truth);
        let size = partition.size(truth);
        for reported in 0..k {
            block[reported * k + truth] =
                closed_form_entry(partition.counts(reported), tc, size, phi)?;
        }
    }
    DeviationMatrix::from_block(k, num_actions, block)
}

/// A deviation set together with its (scheme-independent) matrices.
#[derive(Debug, Clone)]
pub struct DeviationModel {
    set: DeviationSet,
    matrices: Vec<DeviationMatrix>,
}

impl DeviationModel {
    pub fn new(set: DeviationSet, partition: &ClassPartition, num_actions: usize) -> Result<Self> {
        let matrices = set
            .functions()
            .iter()
            .map(|phi| build_deviation_matrix(phi, partition, num_actions))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { set, matrices })
    }

    pub fn set(&self) -> &DeviationSet {
        &self.set
    }

    pub fn matrices(&self) -> &[DeviationMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

fn check_shape(xi: &SymmetricMechanism, r: &UtilityVector) -> Result<()> {
    if xi.num_classes != r.num_classes || xi.num_actions != r.num_actions {
        return Err(Error::DimensionMismatch(format!(
            "mechanism is {}x{}, utility vector is {}x{}",
            xi.num_classes, xi.num_actions, r.num_classes, r.num_actions
        )));
    }
    Ok(())
}

fn check_matrix(xi: &SymmetricMechanism, m: &DeviationMatrix) -> Result<()> {
    if xi.num_classes != m.num_classes || xi.num_actions != m.num_actions {
        return Err(Error::DimensionMismatch(
            "deviation matrix does not match mechanism".into(),
        ));
    }
    Ok(())
}

pub fn expected_utility(xi: &SymmetricMechanism, r: &UtilityVector) -> Result<f64> {
    check_shape(xi, r)?;
    Ok(xi.probs.iter().zip(&r.values).map(|(x, v)| x * v).sum())
}

/// `xi^T A r`: a sender's expected utility when deviating.
pub fn deviation_utility(
    xi: &SymmetricMechanism,
    m: &DeviationMatrix,
    r: &UtilityVector,
) -> Result<f64> {
    check_shape(xi, r)?;
    check_matrix(xi, m)?;
    let (k, na) = (xi.num_classes, xi.num_actions);
    let mut total = 0.0;
    for truth in 0..k {
        for reported in 0..k {
            let w = m.get(reported, truth);
            if w == 0.0 {
                continue;
            }
            for a in 0..na {
                total += xi.probs[reported * na + a] * w * r.values[truth * na + a];
            }
        }
    }
    Ok(total)
}

/// Gain `xi^T (A r - r)` of one deviation.
///
/// Evaluated as `sum_{c',a} r[c',a] sum_c A[c,c'] (xi[c,a] - xi[c',a])`,
/// which equals the plain difference because columns of `A` sum to one and
/// is exactly zero for mechanisms that ignore reports.
fn deviation_gain(xi: &SymmetricMechanism, m: &DeviationMatrix, r: &UtilityVector) -> f64 {
    let (k, na) = (xi.num_classes, xi.num_actions);
    let mut total = 0.0;
    for truth in 0..k {
        for reported in 0..k {
            let w = m.get(reported, truth);
            if w == 0.0 || reported == truth {
                continue;
            }
            for a in 0..na {
                let diff = xi.probs[reported * na + a] - xi.probs[truth * na + a];
                total += w * diff * r.values[truth * na + a];
            }
        }
    }
    total
}

/// Largest deviation gain over the set, with the (first) maximizing index.
pub fn ic_gap(
    xi: &SymmetricMechanism,
    deviations: &DeviationModel,
    r_s: &UtilityVector,
) -> Result<(f64, usize)> {
    check_shape(xi, r_s)?;
    if deviations.is_empty() {
        return Err(Error::EmptyDeviationSet);
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, m) in deviations.matrices().iter().enumerate() {
        check_matrix(xi, m)?;
        let g = deviation_gain(xi, m, r_s);
        if g > best.0 {
            best = (g, i);
        }
    }
    Ok(best)
}

/// Draws one action per class from the rows of `xi`.
pub fn sample_deterministic<R: Rng + ?Sized>(
    xi: &SymmetricMechanism,
    rng: &mut R,
) -> DeterministicMechanism {
    let choices = (0..xi.num_classes)
        .map(|c| sample_categorical(xi.row(c), rng))
        .collect();
    DeterministicMechanism {
        num_actions: xi.num_actions,
        choices,
    }
}

/// Inverse-CDF draw; consumes exactly one uniform.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// `xi'` with `xi'^T = xi^T A`.
pub fn apply_pushforward(
    xi: &SymmetricMechanism,
    m: &DeviationMatrix,
) -> Result<SymmetricMechanism> {
    check_matrix(xi, m)?;
    let (k, na) = (xi.num_classes, xi.num_actions);
    let mut probs = vec![0.0; k * na];
    for truth in 0..k {
        for reported in 0..k {
            let w = m.get(reported, truth);
            if w == 0.0 {
                continue;
            }
            for a in 0..na {
                probs[truth * na + a] += xi.probs[reported * na + a] * w;
            }
        }
    }
    SymmetricMechanism::new(k, na, probs)
}

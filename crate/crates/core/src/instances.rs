//! Instance generators: seeded random games and the hard-coded fixtures
//! from the impossibility and lower-bound constructions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{validate_instance, GameInstance, InstanceSpec};

fn names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

/// Uniform draw from the probability simplex (normalized exponentials).
fn simplex_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 && raw.iter().all(|&v| v > 0.0) {
            return raw.into_iter().map(|v| v / sum).collect();
        }
    }
}

/// Random game: prior and signaling rows uniform on the simplex, utilities
/// i.i.d. uniform on `[0, 1]`.
pub fn gen_random_instance(
    seed: u64,
    n: usize,
    num_states: usize,
    num_signals: usize,
    num_actions: usize,
) -> Result<GameInstance> {
    if n == 0 || num_states == 0 || num_signals == 0 || num_actions == 0 {
        return Err(Error::EmptyDimension("element in every dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = simplex_point(&mut rng, num_states);
    let signaling = (0..num_states)
        .map(|_| simplex_point(&mut rng, num_signals))
        .collect();
    let mut table = || -> Vec<Vec<f64>> {
        (0..num_actions)
            .map(|_| (0..num_states).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    let u_receiver = table();
    let u_sender = table();
    validate_instance(InstanceSpec {
        n,
        states: names("theta", num_states),
        signals: names("s", num_signals),
        actions: names("a", num_actions),
        prior,
        signaling,
        u_receiver,
        u_sender,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fixture {
    /// Two-state impossibility pair, instance X.
    #[serde(rename = "thimp-X")]
    ThimpX,
    #[serde(rename = "thimp-Y")]
    ThimpY,
    /// Three-state lower-bound pair, instance X.
    #[serde(rename = "lb-X")]
    LbX,
    #[serde(rename = "lb-Y")]
    LbY,
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thimp-x" => Ok(Fixture::ThimpX),
            "thimp-y" => Ok(Fixture::ThimpY),
            "lb-x" => Ok(Fixture::LbX),
            "lb-y" => Ok(Fixture::LbY),
            _ => Err(Error::UnknownFixture(s.to_string())),
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fixture::ThimpX => "thimp-X",
            Fixture::ThimpY => "thimp-Y",
            Fixture::LbX => "lb-X",
            Fixture::LbY => "lb-Y",
        })
    }
}

pub fn gen_paper_instance(name: &str, eps: f64) -> Result<GameInstance> {
    fixture_instance(name.parse()?, eps)
}

pub fn fixture_instance(fixture: Fixture, eps: f64) -> Result<GameInstance> {
    let spec = match fixture {
        Fixture::ThimpX | Fixture::ThimpY => {
            if !(eps >= 0.0 && 4.0 * eps <= 1.0) {
                return Err(Error::EpsOutOfRange {
                    eps,
                    range: "0 <= eps <= 1/4",
                });
            }
            let leak = if fixture == Fixture::ThimpX {
                4.0 * eps
            } else {
                2.0 * eps
            };
            InstanceSpec {
                n: 1,
                states: vec!["theta1".into(), "theta2".into()],
                signals: vec!["s1".into(), "s2".into()],
                actions: vec!["a".into(), "b".into()],
                prior: vec![0.5, 0.5],
                signaling: vec![vec![1.0 - leak, leak], vec![0.0, 1.0]],
                u_receiver: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                u_sender: vec![vec![1.0, 0.0], vec![0.0, 2.0 * eps]],
            }
        }
        Fixture::LbX | Fixture::LbY => {
            if !(0.0..1.0 / 3.0).contains(&eps) {
                return Err(Error::EpsOutOfRange {
                    eps,
                    range: "0 <= eps < 1/3",
                });
            }
            let sign = if fixture == Fixture::LbX { -1.0 } else { 1.0 };
            InstanceSpec {
                n: 1,
                states: vec!["theta1".into(), "theta2".into(), "theta3".into()],
                signals: vec!["s1".into(), "s2".into(), "s3".into()],
                actions: vec!["a".into(), "b".into()],
                prior: vec![1.0 / 3.0 + sign * eps, 1.0 / 3.0 - sign * eps, 1.0 / 3.0],
                signaling: vec![
                    vec![0.5, 0.5, 0.0],
                    vec![0.5, 0.5, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                u_receiver: vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
                u_sender: vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]],
            }
        }
    };
    validate_instance(spec)
}

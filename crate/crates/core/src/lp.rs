//! The mechanism LP: maximize receiver utility over symmetric mechanisms
//! subject to per-deviation incentive constraints with slack.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::mechanisms::{DeviationMatrix, SymmetricMechanism, UtilityVector};
use crate::simplex::{LinearProgram, Outcome, RowKind};

const FEAS_TOL: f64 = 1e-9;

/// Slack on the incentive constraints. `Unbounded` drops them entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slack {
    Finite(f64),
    Unbounded,
}

impl Slack {
    /// Maps `f64::INFINITY` to the sentinel.
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            Slack::Unbounded
        } else {
            Slack::Finite(v)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Slack::Finite(v) => v,
            Slack::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for Slack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slack::Finite(v) => write!(f, "{v}"),
            Slack::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MechanismLP {
    num_classes: usize,
    num_actions: usize,
    slack: Slack,
    objective: Vec<f64>,
    ic_rows: Vec<Vec<f64>>,
}

impl MechanismLP {
    pub fn num_variables(&self) -> usize {
        self.num_classes * self.num_actions
    }

    pub fn num_equalities(&self) -> usize {
        self.num_classes
    }

    pub fn num_inequalities(&self) -> usize {
        self.ic_rows.len()
    }

    pub fn slack(&self) -> Slack {
        self.slack
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Coefficients `A r_S - r_S` of each incentive row.
    pub fn ic_rows(&self) -> &[Vec<f64>] {
        &self.ic_rows
    }

    /// Largest `row . xi - slack` over the incentive rows (0 when there are none).
    pub fn ic_excess(&self, xi: &SymmetricMechanism) -> f64 {
        let Slack::Finite(eps) = self.slack else {
            return f64::NEG_INFINITY;
        };
        self.ic_rows
            .iter()
            .map(|row| dot(row, xi.as_slice()) - eps)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn to_linear_program(&self) -> LinearProgram {
        let (k, na) = (self.num_classes, self.num_actions);
        let mut lp = LinearProgram::new(self.objective.clone());
        for c in 0..k {
            let mut coeffs = vec![0.0; k * na];
            coeffs[c * na..(c + 1) * na].fill(1.0);
            lp.push(coeffs, RowKind::Eq, 1.0);
        }
        if let Slack::Finite(eps) = self.slack {
            for row in &self.ic_rows {
                lp.push(row.clone(), RowKind::Le, eps);
            }
        }
        lp
    }

    /// CPLEX LP text form, for debugging.
    pub fn to_lp_format(&self) -> String {
        let (k, na) = (self.num_classes, self.num_actions);
        let var = |c: usize, a: usize| format!("x_{c}_{a}");
        let term_list = |coeffs: &[f64]| {
            let mut s = String::new();
            for (i, &v) in coeffs.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let sign = if v < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {:.17e} {}", v.abs(), var(i / na, i % na));
            }
            if s.is_empty() {
                s.push_str(" 0 x_0_0");
            }
            s
        };
        let mut out = String::from("\\ symmetric mechanism LP\nMaximize\n obj:");
        out.push_str(&term_list(&self.objective));
        out.push_str("\nSubject To\n");
        for c in 0..k {
            let _ = write!(out, " class_{c}:");
            for a in 0..na {
                let _ = write!(out, " + {}", var(c, a));
            }
            out.push_str(" = 1\n");
        }
        if let Slack::Finite(eps) = self.slack {
            for (i, row) in self.ic_rows.iter().enumerate() {
                let _ = writeln!(out, " ic_{i}:{} <= {eps:.17e}", term_list(row));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_lp(
    slack: Slack,
    r_r: &UtilityVector,
    r_s: &UtilityVector,
    deviation_matrices: &[DeviationMatrix],
) -> Result<MechanismLP> {
    if let Slack::Finite(eps) = slack {
        if !(eps >= 0.0) {
            return Err(Error::NegativeEpsilon(eps));
        }
    }
    let (k, na) = (r_r.num_classes(), r_r.num_actions());
    if r_s.num_classes() != k || r_s.num_actions() != na {
        return Err(Error::DimensionMismatch(
            "receiver and sender utility vectors differ in shape".into(),
        ));
    }
    if let Some(i) = r_r.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteCoefficient(i));
    }
    let mut ic_rows = Vec::new();
    if let Slack::Finite(_) = slack {
        for m in deviation_matrices {
            if m.num_classes() != k || m.num_actions() != na {
                return Err(Error::DimensionMismatch(
                    "deviation matrix does not match utility vectors".into(),
                ));
            }
            let mut row = vec![0.0; k * na];
            for reported in 0..k {
                for truth in 0..k {
                    let w = m.get(reported, truth);
                    if w == 0.0 {
                        continue;
                    }
                    for a in 0..na {
                        row[reported * na + a] += w * r_s.get(truth, a);
                    }
                }
            }
            for (v, s) in row.iter_mut().zip(r_s.as_slice()) {
                *v -= s;
            }
            ic_rows.push(row);
        }
    }
    Ok(MechanismLP {
        num_classes: k,
        num_actions: na,
        slack,
        objective: r_r.as_slice().to_vec(),
        ic_rows,
    })
}

/// Optimal mechanism and its objective value `xi^T r_R`.
pub fn solve_lp(model: &MechanismLP) -> Result<(SymmetricMechanism, f64)> {
    let lp = model.to_linear_program();
    let x = match lp.solve()? {
        Outcome::Optimal { x, .. } => x,
        Outcome::Infeasible => {
            return Err(Error::Internal(
                "mechanism LP reported infeasible; constant mechanisms are always feasible".into(),
            ))
        }
        Outcome::Unbounded => {
            return Err(Error::Internal("mechanism LP reported unbounded".into()))
        }
    };
    let residual = lp.max_violation(&x);
    if residual > FEAS_TOL {
        return Err(Error::NumericalFailure(format!(
            "solution violates constraints by {residual:e}"
        )));
    }
    // strip round-off: clamp tiny negatives and renormalize each row
    let mut probs: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
    for row in probs.chunks_mut(model.num_actions) {
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
    let xi = SymmetricMechanism::new(model.num_classes, model.num_actions, probs)?;
    let value = dot(xi.as_slice(), &model.objective);
    Ok((xi, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::enumerate_classes;
    use crate::mechanisms::{build_deviation_set, DeviationKind, DeviationModel};

    fn model_2x2() -> (DeviationModel, UtilityVector, UtilityVector) {
        let p = enumerate_classes(2, 2).unwrap();
        let set = build_deviation_set(DeviationKind::InterimReduced, 2).unwrap();
        let model = DeviationModel::new(set, &p, 2).unwrap();
        let r_r = UtilityVector::new(3, 2, vec![0.1, 0.3, 0.2, 0.05, 0.0, 0.35]).unwrap();
        let r_s = UtilityVector::new(3, 2, vec![0.3, 0.0, 0.1, 0.2, 0.2, 0.1]).unwrap();
        (model, r_r, r_s)
    }

    #[test]
    fn row_counts() {
        let (model, r_r, r_s) = model_2x2();
        let lp = build_lp(Slack::Finite(0.0), &r_r, &r_s, model.matrices()).unwrap();
        assert_eq!(lp.num_variables(), 6);
        assert_eq!(lp.num_equalities(), 3);
        assert_eq!(lp.num_inequalities(), 3);
        let lp = build_lp(Slack::Unbounded, &r_r, &r_s, model.matrices()).unwrap();
        assert_eq!(lp.num_inequalities(), 0);
        assert!(matches!(
            build_lp(Slack::Finite(-0.1), &r_r, &r_s, model.matrices()),
            Err(Error::NegativeEpsilon(_))
        ));
    }

    #[test]
    fn unconstrained_picks_argmax_per_class() {
        let (model, r_r, r_s) = model_2x2();
        let lp = build_lp(Slack::Unbounded, &r_r, &r_s, model.matrices()).unwrap();
        let (xi, value) = solve_lp(&lp).unwrap();
        assert!((value - (0.3 + 0.2 + 0.35)).abs() < 1e-12);
        assert_eq!(xi.row(0), &[0.0, 1.0]);
        assert_eq!(xi.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn constrained_solution_respects_rows() {
        let (model, r_r, r_s) = model_2x2();
        for eps in [0.0, 0.01, 0.05] {
            let lp = build_lp(Slack::Finite(eps), &r_r, &r_s, model.matrices()).unwrap();
            let (xi, value) = solve_lp(&lp).unwrap();
            assert!(lp.ic_excess(&xi) <= 1e-9);
            let (gap, _) = crate::mechanisms::ic_gap(&xi, &model, &r_s).unwrap();
            assert!(gap <= eps + 1e-8);
            assert!(value <= 0.85 + 1e-12);
        }
    }

    #[test]
    fn lp_dump_mentions_every_row() {
        let (model, r_r, r_s) = model_2x2();
        let lp = build_lp(Slack::Finite(0.0), &r_r, &r_s, model.matrices()).unwrap();
        let text = lp.to_lp_format();
        assert!(text.starts_with("\\ symmetric"));
        assert_eq!(text.matches("class_").count(), 3);
        assert_eq!(text.matches("ic_").count(), 3);
        assert!(text.trim_end().ends_with("End"));
    }
}

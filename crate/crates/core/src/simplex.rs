//! Dense two-phase primal simplex for small LPs.
//!
//! Solves `max c^T x` subject to `<=` and `=` rows and `x >= 0`. Pivoting is
//! Dantzig's rule with a switch to Bland's rule after a run of degenerate
//! pivots; all ties resolve to the lowest index, so the returned vertex is a
//! deterministic function of the input.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-12;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            num_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row { coeffs, kind, rhs });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<Outcome> {
        let outcome = Tableau::build(self).run()?;
        if let Outcome::Optimal { x, .. } = &outcome {
            let scale = self
                .rows
                .iter()
                .flat_map(|r| r.coeffs.iter().chain([&r.rhs]))
                .fold(1.0f64, |m, v| m.max(v.abs()));
            let violation = self.max_violation(x);
            if violation > RESIDUAL_TOL * scale {
                return Err(Error::NumericalFailure(format!(
                    "simplex returned a point violating its rows by {violation:e}"
                )));
            }
        }
        Ok(outcome)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, `cols + 1` entries per row, rhs last
    data: Vec<f64>,
    basis: Vec<usize>,
    num_original: usize,
    first_artificial: usize,
    objective: Vec<f64>,
    max_iters: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars;
        // normalize to nonnegative rhs; a flipped <= row becomes >=
        let mut normalized: Vec<(Vec<f64>, i8, f64)> = Vec::with_capacity(m);
        for row in &lp.rows {
            let flip = row.rhs < 0.0;
            // equilibrate so that tolerances are relative to the row's scale
            let norm = row.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let norm = if norm > 0.0 { norm } else { 1.0 };
            let sign = if flip { -1.0 / norm } else { 1.0 / norm };
            let coeffs = row.coeffs.iter().map(|v| v * sign).collect();
            let kind = match (row.kind, flip) {
                (RowKind::Eq, _) => 0,
                (RowKind::Le, false) => -1,
                (RowKind::Le, true) => 1,
            };
            normalized.push((coeffs, kind, row.rhs * sign));
        }
        let num_slack = normalized.iter().filter(|r| r.1 != 0).count();
        let num_art = normalized.iter().filter(|r| r.1 >= 0).count();
        let cols = n + num_slack + num_art;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = n + num_slack;
        for (i, (coeffs, kind, rhs)) in normalized.into_iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match kind {
                -1 => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                1 => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                _ => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            rows: m,
            cols,
            data,
            basis,
            num_original: n,
            first_artificial: n + num_slack,
            objective: lp.objective.clone(),
            max_iters: 100 * (m + cols) + 1000,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, col: usize, reduced: &mut [f64]) {
        let width = self.cols + 1;
        let p = self.at(r, col);
        for v in &mut self.data[r * width..(r + 1) * width] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * width..(r + 1) * width].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * width + col];
            if f != 0.0 {
                for (v, pr) in self.data[i * width..(i + 1) * width]
                    .iter_mut()
                    .zip(&pivot_row)
                {
                    *v -= f * pr;
                }
                self.data[i * width + col] = 0.0;
            }
        }
        let f = reduced[col];
        if f != 0.0 {
            for (v, pr) in reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            reduced[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Reduced-cost row (with `-objective value` in the last slot) for `cost`.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.cols + 1;
        let mut reduced = vec![0.0; width];
        reduced[..self.cols].copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (v, t) in reduced
                    .iter_mut()
                    .zip(&self.data[i * width..(i + 1) * width])
                {
                    *v -= cb * t;
                }
            }
        }
        reduced
    }

    /// Maximizes over the current basis. Returns false when unbounded.
    fn optimize(&mut self, reduced: &mut [f64], allowed: usize, iters: &mut usize) -> Result<bool> {
        let mut degenerate = 0usize;
        loop {
            *iters += 1;
            if *iters > self.max_iters {
                return Err(Error::NumericalFailure(format!(
                    "simplex iteration limit ({}) reached",
                    self.max_iters
                )));
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = OPT_TOL;
            for (j, &d) in reduced.iter().enumerate().take(allowed) {
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };

            // a basic artificial left over from phase 1 must stay at zero, so
            // it leaves as soon as the entering column touches its row
            let stuck = (allowed <= self.first_artificial)
                .then(|| {
                    (0..self.rows).find(|&i| {
                        self.basis[i] >= self.first_artificial && self.at(i, col).abs() > PIVOT_TOL
                    })
                })
                .flatten();
            let leave = match stuck {
                Some(i) => Some((i, 0.0)),
                None => self.ratio_test(col, bland),
            };
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, col, reduced);
        }
    }

    /// Two-pass ratio test: find the smallest ratio, then among rows within
    /// `RATIO_TOL` of it take the largest pivot (or, under Bland's rule, the
    /// lowest basic index).
    fn ratio_test(&self, col: usize, bland: bool) -> Option<(usize, f64)> {
        let min_ratio = (0..self.rows)
            .filter(|&i| self.at(i, col) > PIVOT_TOL)
            .map(|i| self.rhs(i).max(0.0) / self.at(i, col))
            .min_by(f64::total_cmp)?;
        let mut best: Option<usize> = None;
        for i in 0..self.rows {
            let a = self.at(i, col);
            if a <= PIVOT_TOL || self.rhs(i).max(0.0) / a > min_ratio + RATIO_TOL {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(r) if bland && self.basis[i] < self.basis[r] => Some(i),
                Some(r) if !bland && a > self.at(r, col) => Some(i),
                keep => keep,
            };
        }
        best.map(|r| (r, self.rhs(r).max(0.0) / self.at(r, col)))
    }

    fn run(mut self) -> Result<Outcome> {
        let mut iters = 0;
        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            let mut reduced = self.reduced_costs(&cost);
            self.optimize(&mut reduced, self.cols, &mut iters)?;
            let infeasibility: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs(i).abs())
                .sum();
            if infeasibility > FEAS_TOL {
                return Ok(Outcome::Infeasible);
            }
            // drive remaining (zero-level) artificials out of the basis
            for i in 0..self.rows {
                if self.basis[i] < self.first_artificial {
                    continue;
                }
                let col = (0..self.first_artificial)
                    .filter(|&j| self.at(i, j).abs() > 1e-9)
                    .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
                if let Some(col) = col {
                    let mut scratch = vec![0.0; self.cols + 1];
                    self.pivot(i, col, &mut scratch);
                }
            }
        }

        let mut cost = vec![0.0; self.cols];
        cost[..self.num_original].copy_from_slice(&self.objective);
        let mut reduced = self.reduced_costs(&cost);
        if !self.optimize(&mut reduced, self.first_artificial, &mut iters)? {
            return Ok(Outcome::Unbounded);
        }
        let mut x = vec![0.0; self.num_original];
        for i in 0..self.rows {
            if self.basis[i] < self.num_original {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(Outcome::Optimal { x, value })
    }
}

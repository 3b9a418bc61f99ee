//! Dense two-phase simplex for small linear programs.
//!
//! Minimises `c^T x` over `x >= 0` subject to rows `a^T x (<=|>=|=) b`.
//! Pivoting follows Bland's rule (lowest eligible index enters, lowest
//! basic index leaves on ratio ties), so the method terminates and the
//! result is reproducible.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-10;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Minimise `objective · x` with `x >= 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram { objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint(mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> Result<Self> {
        if coeffs.len() != self.objective.len() {
            return Err(Error::invalid("constraint width differs from the number of variables"));
        }
        if coeffs.iter().chain([&rhs]).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite constraint coefficient".into()));
        }
        self.rows.push((coeffs, rel, rhs));
        Ok(self)
    }

    pub fn solve(&self) -> Result<LpSolution> {
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite objective coefficient".into()));
        }
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// m rows of `cols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        // normalise to b >= 0
        let norm: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = norm.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = norm.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let cols = first_artificial + n_art;
        let mut rows = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, first_artificial);
        for (i, (coeffs, rel, b)) in norm.iter().enumerate() {
            rows[i][..n].copy_from_slice(coeffs);
            rows[i][cols] = *b;
            match rel {
                Relation::Le => {
                    rows[i][s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    rows[i][s] = -1.0;
                    s += 1;
                    rows[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
                Relation::Eq => {
                    rows[i][a] = 1.0;
                    basis[i] = a;
                    a += 1;
                }
            }
        }
        Tableau { rows, basis, n_orig: n, first_artificial, cols }
    }

    /// Reduced-cost row for `cost` (indexed by column) under the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = cost.to_vec();
        r.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, aj) in r.iter_mut().zip(&self.rows[i]) {
                    *rj -= cb * aj;
                }
            }
        }
        r
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [f64]) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                let f = r[col];
                if f != 0.0 {
                    for (v, pv) in r.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    r[col] = 0.0;
                }
            }
        }
        let f = reduced[col];
        if f != 0.0 {
            for (v, pv) in reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations over columns `< allowed`.
    fn iterate(&mut self, reduced: &mut [f64], allowed: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let Some(col) = (0..allowed).find(|&j| reduced[j] < -COST_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, r) in self.rows.iter().enumerate() {
                if r[col] > PIVOT_EPS {
                    let ratio = r[self.cols] / r[col];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_EPS || ((ratio - lr).abs() <= PIVOT_EPS && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col, reduced);
        }
        Err(Error::Numerical("simplex pivot limit reached".into()))
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution> {
        // phase 1: minimise the sum of artificials
        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            cost[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            let mut reduced = self.reduced_costs(&cost);
            self.iterate(&mut reduced, self.cols)?;
            let infeasibility = -reduced[self.cols];
            if infeasibility > FEASIBILITY_EPS {
                return Err(Error::Infeasible);
            }
            self.drive_out_artificials(&mut reduced);
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.n_orig].copy_from_slice(objective);
        let mut reduced = self.reduced_costs(&cost);
        self.iterate(&mut reduced, self.first_artificial)?;
        let mut x = vec![0.0; self.n_orig];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_orig {
                x[b] = self.rows[i][self.cols].max(0.0);
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        if x.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::Numerical("non-finite simplex solution".into()));
        }
        Ok(LpSolution { x, objective: value })
    }

    fn drive_out_artificials(&mut self, reduced: &mut [f64]) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > PIVOT_EPS) {
                    Some(col) => {
                        self.pivot(i, col, reduced);
                        i += 1;
                    }
                    None => {
                        // redundant row
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
}

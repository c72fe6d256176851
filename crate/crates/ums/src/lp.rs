//! Bounded-variable primal simplex over exact rationals.
//!
//! Two-phase dense simplex with Bland's rule, so termination is guaranteed
//! and every verdict (optimal value, infeasibility, unboundedness) is exact.
//! Model sizes in this crate are desk-scale; no effort is spent on sparse
//! factorizations.

use crate::rational::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// Minimize objective · x subject to rows and per-variable bounds
/// (finite lower, optional upper).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub bounds: Vec<(Rat, Option<Rat>)>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<Rat>,
    pub objective: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    structural: usize,
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    basic_value: Vec<Rat>,
    status: Vec<VarStatus>,
    lower: Vec<Rat>,
    upper: Vec<Option<Rat>>,
}

enum StepResult {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn value_of(&self, col: usize) -> Rat {
        match self.status[col] {
            VarStatus::Basic => {
                let row = self.basis.iter().position(|&b| b == col).expect("basic");
                self.basic_value[row].clone()
            }
            VarStatus::AtLower => self.lower[col].clone(),
            VarStatus::AtUpper => self.upper[col].clone().expect("upper bound"),
        }
    }

    fn nonbasic_value(&self, col: usize) -> Rat {
        match self.status[col] {
            VarStatus::AtLower => self.lower[col].clone(),
            VarStatus::AtUpper => self.upper[col].clone().expect("upper bound"),
            VarStatus::Basic => unreachable!("nonbasic expected"),
        }
    }

    /// Reduced costs of `cost` with respect to the current basis.
    fn reduced_costs(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            let cb = cost[b].clone();
            for (j, dj) in d.iter_mut().enumerate() {
                if !self.rows[i][j].is_zero() {
                    *dj -= &cb * &self.rows[i][j];
                }
            }
        }
        d
    }

    fn step(&mut self, d: &mut [Rat]) -> StepResult {
        let cols = self.status.len();
        // Entering: Bland's rule, smallest favorable index. Columns fixed to
        // a single value never enter.
        let mut entering = None;
        for j in 0..cols {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            if Some(&self.lower[j]) == self.upper[j].as_ref() {
                continue;
            }
            let favorable = match self.status[j] {
                VarStatus::AtLower => d[j].is_negative(),
                VarStatus::AtUpper => d[j].is_positive(),
                VarStatus::Basic => false,
            };
            if favorable {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return StepResult::Optimal;
        };
        let increasing = self.status[j] == VarStatus::AtLower;

        // Ratio test: entering moves by t >= 0; basic i moves by
        // -sigma * a_ij * t. Ties leave the smallest column index (Bland);
        // a bound flip counts as the entering column leaving itself.
        let mut best: Option<(Rat, usize, Option<usize>)> = None;
        if let Some(u) = &self.upper[j] {
            best = Some((u - &self.lower[j], j, None));
        }
        for i in 0..self.rows.len() {
            let a = &self.rows[i][j];
            if a.is_zero() {
                continue;
            }
            let decreasing_basic = if increasing { a.is_positive() } else { a.is_negative() };
            let b = self.basis[i];
            let limit = if decreasing_basic {
                Some((&self.basic_value[i] - &self.lower[b]) / a.abs())
            } else {
                self.upper[b]
                    .as_ref()
                    .map(|u| (u - &self.basic_value[i]) / a.abs())
            };
            if let Some(limit) = limit {
                debug_assert!(!limit.is_negative(), "bounds invariant broken");
                let better = match &best {
                    None => true,
                    Some((t, col, _)) => limit < *t || (limit == *t && b < *col),
                };
                if better {
                    best = Some((limit, b, Some(i)));
                }
            }
        }
        let Some((t, _, pivot_row)) = best else {
            return StepResult::Unbounded;
        };

        let sigma = if increasing { Rat::one() } else { -Rat::one() };
        if !t.is_zero() {
            let delta = &sigma * &t;
            for i in 0..self.rows.len() {
                if !self.rows[i][j].is_zero() {
                    let change = &self.rows[i][j] * &delta;
                    self.basic_value[i] -= change;
                }
            }
        }
        match pivot_row {
            None => {
                self.status[j] = if increasing { VarStatus::AtUpper } else { VarStatus::AtLower };
            }
            Some(r) => {
                let entering_value = self.nonbasic_value(j) + &sigma * &t;
                let leaving = self.basis[r];
                // The leaving variable stops at the bound the ratio test hit.
                self.status[leaving] = if (increasing && self.rows[r][j].is_positive())
                    || (!increasing && self.rows[r][j].is_negative())
                {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                let inv = self.rows[r][j].recip();
                for v in self.rows[r].iter_mut() {
                    if !v.is_zero() {
                        *v *= &inv;
                    }
                }
                let pivot = std::mem::take(&mut self.rows[r]);
                for (i, row) in self.rows.iter_mut().enumerate() {
                    if i == r || row[j].is_zero() {
                        continue;
                    }
                    let f = row[j].clone();
                    for (v, p) in row.iter_mut().zip(&pivot) {
                        if !p.is_zero() {
                            *v -= &f * p;
                        }
                    }
                }
                if !d[j].is_zero() {
                    let f = d[j].clone();
                    for (v, p) in d.iter_mut().zip(&pivot) {
                        if !p.is_zero() {
                            *v -= &f * p;
                        }
                    }
                }
                self.rows[r] = pivot;
                self.basis[r] = j;
                self.status[j] = VarStatus::Basic;
                self.basic_value[r] = entering_value;
            }
        }
        StepResult::Moved
    }

    fn run(&mut self, cost: &[Rat]) -> StepResult {
        let mut d = self.reduced_costs(cost);
        loop {
            match self.step(&mut d) {
                StepResult::Moved => continue,
                other => return other,
            }
        }
    }
}

/// Solves the program exactly.
pub fn solve_exact(lp: &LinearProgram) -> LpOutcome {
    let n = lp.objective.len();
    debug_assert_eq!(lp.bounds.len(), n);
    for (l, u) in &lp.bounds {
        if let Some(u) = u {
            if u < l {
                return LpOutcome::Infeasible;
            }
        }
    }

    let m = lp.rows.len();
    let slack_count = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let mut lower = Vec::with_capacity(n + slack_count);
    let mut upper = Vec::with_capacity(n + slack_count);
    for (l, u) in &lp.bounds {
        lower.push(l.clone());
        upper.push(u.clone());
    }

    let mut rows: Vec<Vec<Rat>> = vec![vec![Rat::zero(); n + slack_count]; m];
    let mut residual: Vec<Rat> = Vec::with_capacity(m);
    let mut slack_col = n;
    let mut slack_of_row: Vec<Option<usize>> = vec![None; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut lhs_at_bounds = Rat::zero();
        for (col, coef) in &row.coeffs {
            debug_assert!(*col < n);
            rows[i][*col] += coef;
            lhs_at_bounds += coef * &lp.bounds[*col].0;
        }
        match row.relation {
            Relation::Le => {
                rows[i][slack_col] = Rat::one();
                slack_of_row[i] = Some(slack_col);
                lower.push(Rat::zero());
                upper.push(None);
                slack_col += 1;
            }
            Relation::Ge => {
                rows[i][slack_col] = -Rat::one();
                slack_of_row[i] = Some(slack_col);
                lower.push(Rat::zero());
                upper.push(None);
                slack_col += 1;
            }
            Relation::Eq => {}
        }
        residual.push(&row.rhs - &lhs_at_bounds);
    }

    // Initial basis: the row's slack where its value comes out within its
    // bounds, an artificial variable otherwise.
    let mut status = vec![VarStatus::AtLower; n + slack_count];
    let mut basis = Vec::with_capacity(m);
    let mut basic_value = Vec::with_capacity(m);
    let mut artificial_cols = Vec::new();
    for i in 0..m {
        let r = residual[i].clone();
        let slack_ok = match lp.rows[i].relation {
            Relation::Le => !r.is_negative(),
            Relation::Ge => !r.is_positive(),
            Relation::Eq => false,
        };
        if slack_ok {
            // Canonical form needs a +1 coefficient on the basic column;
            // Ge slacks carry -1, so flip the whole row.
            if lp.rows[i].relation == Relation::Ge {
                for v in rows[i].iter_mut() {
                    *v = -v.clone();
                }
            }
            let s = slack_of_row[i].expect("inequality slack");
            status[s] = VarStatus::Basic;
            basis.push(s);
            basic_value.push(r.abs());
        } else {
            if r.is_negative() {
                for v in rows[i].iter_mut() {
                    *v = -v.clone();
                }
                residual[i] = -r;
            }
            let col = status.len();
            for row in rows.iter_mut() {
                row.push(Rat::zero());
            }
            rows[i][col] = Rat::one();
            status.push(VarStatus::Basic);
            lower.push(Rat::zero());
            upper.push(None);
            basis.push(col);
            basic_value.push(residual[i].clone());
            artificial_cols.push(col);
        }
    }
    let cols = status.len();

    let mut tableau = Tableau {
        structural: n,
        rows,
        basis,
        basic_value,
        status,
        lower,
        upper,
    };

    // Phase 1: minimize the artificial sum.
    if !artificial_cols.is_empty() {
        let mut cost = vec![Rat::zero(); cols];
        for &c in &artificial_cols {
            cost[c] = Rat::one();
        }
        if let StepResult::Unbounded = tableau.run(&cost) {
            unreachable!("phase 1 objective is bounded below by zero");
        }
        let infeasibility: Rat = artificial_cols.iter().map(|&c| tableau.value_of(c)).sum();
        if !infeasibility.is_zero() {
            return LpOutcome::Infeasible;
        }
        for &c in &artificial_cols {
            tableau.lower[c] = Rat::zero();
            tableau.upper[c] = Some(Rat::zero());
        }
    }

    // Phase 2.
    let mut cost = vec![Rat::zero(); cols];
    cost[..n].clone_from_slice(&lp.objective);
    if let StepResult::Unbounded = tableau.run(&cost) {
        return LpOutcome::Unbounded;
    }

    let values: Vec<Rat> = (0..tableau.structural).map(|j| tableau.value_of(j)).collect();
    let objective = lp.objective.iter().zip(&values).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal(LpSolution { values, objective })
}

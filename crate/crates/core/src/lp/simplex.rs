//! Dense bounded-variable primal simplex over exact rationals.
//!
//! Columns are laid out as `[structural | slack | artificial]`. Row `i` of
//! the original problem becomes the equality `a_i . x - s_i (+/- t_i) = 0`
//! with the slack `s_i` boxed by the row range. Every nonbasic column sits at
//! one of its bounds. Bland's rule picks both the entering and the leaving
//! column, so the method cannot cycle.

use num::{One, Signed, Zero};

use super::{LinearProgram, Sense};
use crate::rational::Rational;

pub(crate) struct Solution {
    pub values: Vec<Rational>,
    /// Objective in the problem's own sense (zero without an objective).
    pub objective: Rational,
}

struct Tableau {
    /// `B^-1 A`, one entry per column.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    value: Vec<Rational>,
    lower: Vec<Rational>,
    upper: Vec<Option<Rational>>,
}

enum Leaving {
    /// The entering column hits its own opposite bound.
    Flip,
    Row(usize),
}

impl Tableau {
    fn at_lower(&self, j: usize) -> bool {
        self.value[j] == self.lower[j]
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j].as_ref() == Some(&self.lower[j])
    }

    /// Minimizes `cost . x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[Rational]) {
        let ncols = self.value.len();
        loop {
            let mut entering = None;
            for j in 0..ncols {
                if self.is_basic[j] || self.is_fixed(j) {
                    continue;
                }
                let mut reduced = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !row[j].is_zero() {
                        reduced -= cb * &row[j];
                    }
                }
                let can_increase = self.at_lower(j);
                if (reduced.is_negative() && can_increase) || (reduced.is_positive() && !can_increase) {
                    entering = Some((j, can_increase));
                    break;
                }
            }
            let Some((j, increase)) = entering else {
                return;
            };
            self.step(j, increase);
        }
    }

    fn step(&mut self, j: usize, increase: bool) {
        // theta >= 0 is the move length; column j changes by +/- theta and
        // basic column b in row i by -(+/-)theta * rows[i][j].
        let mut best: Option<(Rational, usize, Leaving)> = None;
        let mut consider = |theta: Rational, col: usize, leaving: Leaving| {
            let better = match &best {
                None => true,
                Some((t, c, _)) => theta < *t || (theta == *t && col < *c),
            };
            if better {
                best = Some((theta, col, leaving));
            }
        };
        if let Some(u) = &self.upper[j] {
            consider(u - &self.lower[j], j, Leaving::Flip);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[j];
            if a.is_zero() {
                continue;
            }
            let b = self.basis[i];
            // rate of change of the basic value per unit theta
            let rate = if increase { -a.clone() } else { a.clone() };
            if rate.is_negative() {
                consider((&self.value[b] - &self.lower[b]) / -rate, b, Leaving::Row(i));
            } else if let Some(ub) = &self.upper[b] {
                consider((ub - &self.value[b]) / rate, b, Leaving::Row(i));
            }
        }
        let (theta, _, leaving) = best.expect("boxed problems cannot be unbounded");

        let delta = if increase { theta } else { -theta };
        if !delta.is_zero() {
            self.value[j] += &delta;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    let b = self.basis[i];
                    let change = a * &delta;
                    self.value[b] -= change;
                }
            }
        }
        if let Leaving::Row(r) = leaving {
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let old = self.basis[r];
        // snap the leaving column onto the bound it reached
        if self.value[old] != self.lower[old] {
            if let Some(u) = &self.upper[old] {
                debug_assert!(self.value[old] == *u);
                self.value[old] = u.clone();
            }
        }
        let pivot = self.rows[r][j].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &pivot;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let factor = row[j].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }
}

/// Solves the relaxation of `prob` with the given variable bounds.
/// Returns `None` when the polytope is empty.
pub(crate) fn solve(prob: &LinearProgram, lower: &[Rational], upper: &[Rational]) -> Option<Solution> {
    let n = prob.variables.len();
    let m = prob.rows.len();
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return None;
    }

    // Slack ranges, tightened by what the box can actually produce.
    let mut slack_lo = Vec::with_capacity(m);
    let mut slack_hi = Vec::with_capacity(m);
    for row in &prob.rows {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for (a, (l, u)) in row.coefficients.iter().zip(lower.iter().zip(upper)) {
            if a.is_positive() {
                lo += a * l;
                hi += a * u;
            } else if a.is_negative() {
                lo += a * u;
                hi += a * l;
            }
        }
        if let Some(rl) = &row.lower {
            if *rl > lo {
                lo = rl.clone();
            }
        }
        if let Some(ru) = &row.upper {
            if *ru < hi {
                hi = ru.clone();
            }
        }
        if lo > hi {
            return None;
        }
        slack_lo.push(lo);
        slack_hi.push(hi);
    }

    let ncols = n + 2 * m;
    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        is_basic: vec![false; ncols],
        value: Vec::with_capacity(ncols),
        lower: Vec::with_capacity(ncols),
        upper: Vec::with_capacity(ncols),
    };
    t.value.extend(lower.iter().cloned());
    t.lower.extend(lower.iter().cloned());
    t.upper.extend(upper.iter().cloned().map(Some));
    t.value.extend(std::iter::repeat_n(Rational::zero(), 2 * m));
    t.lower.extend(std::iter::repeat_n(Rational::zero(), 2 * m));
    t.upper.extend(std::iter::repeat_n(None, 2 * m));

    let mut phase_one_cost = vec![Rational::zero(); ncols];
    let mut needs_phase_one = false;
    for (i, row) in prob.rows.iter().enumerate() {
        let s = n + i;
        let a = n + m + i;
        t.lower[s] = slack_lo[i].clone();
        t.upper[s] = Some(slack_hi[i].clone());
        let activity: Rational = row
            .coefficients
            .iter()
            .zip(lower)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, l)| c * l)
            .sum();
        let mut coeffs = vec![Rational::zero(); ncols];
        if activity >= slack_lo[i] && activity <= slack_hi[i] {
            // s_i - a_i.x = 0 with the slack basic
            for (j, c) in row.coefficients.iter().enumerate() {
                coeffs[j] = -c.clone();
            }
            coeffs[s] = Rational::one();
            t.value[s] = activity;
            t.upper[a] = Some(Rational::zero());
            t.basis.push(s);
            t.is_basic[s] = true;
        } else {
            let bound = if activity < slack_lo[i] {
                slack_lo[i].clone()
            } else {
                slack_hi[i].clone()
            };
            let residual = &activity - &bound;
            // a_i.x - s_i + d t_i = 0 with d = -sign(residual), scaled by d
            let d = if residual.is_positive() {
                -Rational::one()
            } else {
                Rational::one()
            };
            for (j, c) in row.coefficients.iter().enumerate() {
                coeffs[j] = &d * c;
            }
            coeffs[s] = -d.clone();
            coeffs[a] = Rational::one();
            t.value[s] = bound;
            t.value[a] = residual.abs();
            t.basis.push(a);
            t.is_basic[a] = true;
            phase_one_cost[a] = Rational::one();
            needs_phase_one = true;
        }
        t.rows.push(coeffs);
    }

    if needs_phase_one {
        t.optimize(&phase_one_cost);
        let infeasibility: Rational = (n + m..ncols).map(|a| t.value[a].clone()).sum();
        if infeasibility.is_positive() {
            return None;
        }
    }
    for a in n + m..ncols {
        t.upper[a] = Some(Rational::zero());
    }

    let mut objective = Rational::zero();
    if let Some(obj) = &prob.objective {
        let mut cost = vec![Rational::zero(); ncols];
        for (j, c) in obj.coefficients.iter().enumerate() {
            cost[j] = match obj.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            };
        }
        t.optimize(&cost);
        objective = obj.value(&t.value[..n]);
    }
    let mut values = t.value;
    values.truncate(n);
    Some(Solution { values, objective })
}

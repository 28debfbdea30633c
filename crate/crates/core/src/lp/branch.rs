//! Integer search: LP relaxation, rounding repair, then depth-first
//! branch-and-bound on the most fractional variable.

use num::{BigInt, One, Signed, Zero};

use super::simplex::{self, Solution};
use super::{LinearProgram, LpError, LpOutcome, LpStatus, Row, Sense};
use crate::rational::{ceil_int, floor_int, rational_gcd, ratio, Rational};

pub const DEFAULT_MAX_NODES: u64 = 100_000;

/// Cap on the number of relaxations solved by [`solve_ilp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        Self { max_nodes }
    }
}

struct Node {
    lower: Vec<Rational>,
    upper: Vec<Rational>,
}

struct Incumbent {
    /// Objective in minimization sense.
    score: Rational,
    values: Vec<Rational>,
}

/// Solves `prob` with integrality enforced on flagged variables.
///
/// `Infeasible` is only returned when the search completed; exhausting the
/// budget yields `FeasibleRelaxationOnly`.
pub fn solve_ilp(prob: &LinearProgram, budget: SearchBudget) -> Result<LpOutcome, LpError> {
    if budget.max_nodes == 0 {
        return Err(LpError::ZeroBudget);
    }
    let integral: Vec<usize> = prob
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integral)
        .map(|(j, _)| j)
        .collect();

    let mut root = Node {
        lower: prob.variables.iter().map(|v| v.lower.clone()).collect(),
        upper: prob.variables.iter().map(|v| v.upper.clone()).collect(),
    };
    for &j in &integral {
        root.lower[j] = Rational::from_integer(ceil_int(&root.lower[j]));
        root.upper[j] = Rational::from_integer(floor_int(&root.upper[j]));
        if root.lower[j] > root.upper[j] {
            return Ok(LpOutcome::infeasible(0));
        }
    }

    let sign = match prob.objective.as_ref().map(|o| o.sense) {
        Some(Sense::Maximize) => -Rational::one(),
        _ => Rational::one(),
    };
    let step = lattice_step(prob);
    let has_objective = prob.objective.is_some();

    let mut stack = vec![root];
    let mut incumbent: Option<Incumbent> = None;
    let mut relaxation_value = None;
    let mut nodes = 0u64;
    let mut exhausted = false;

    while let Some(node) = stack.pop() {
        if nodes >= budget.max_nodes {
            exhausted = true;
            break;
        }
        nodes += 1;
        let Some(sol) = simplex::solve(prob, &node.lower, &node.upper) else {
            continue;
        };
        if nodes == 1 {
            relaxation_value = Some(sol.objective.clone());
        }
        let bound = &sign * &sol.objective;
        if incumbent.as_ref().is_some_and(|inc| !can_improve(&bound, &inc.score, step.as_ref())) {
            continue;
        }

        let Some(branch_var) = most_fractional(&sol.values, &integral) else {
            offer(&mut incumbent, bound, sol.values);
            if !has_objective {
                break;
            }
            continue;
        };

        if let Some(values) = round_and_repair(prob, &sol, &node, &integral) {
            let score = prob
                .objective
                .as_ref()
                .map(|o| &sign * o.value(&values))
                .unwrap_or_default();
            offer(&mut incumbent, score, values);
            if !has_objective {
                break;
            }
            let inc = incumbent.as_ref().expect("just offered");
            if !can_improve(&bound, &inc.score, step.as_ref()) {
                continue;
            }
        }

        let v = &sol.values[branch_var];
        let down = Rational::from_integer(floor_int(v));
        let up = &down + Rational::one();
        let mut left = Node {
            lower: node.lower.clone(),
            upper: node.upper.clone(),
        };
        left.upper[branch_var] = down.clone();
        let mut right = node;
        right.lower[branch_var] = up;
        // explore the nearer side first
        if v - &down <= ratio(1, 2) {
            stack.push(right);
            stack.push(left);
        } else {
            stack.push(left);
            stack.push(right);
        }
    }

    let finished = !exhausted;
    Ok(match incumbent {
        Some(inc) if finished || !has_objective => {
            debug_assert_eq!(prob.check_assignment(&inc.values, true), Ok(()));
            LpOutcome {
                status: LpStatus::Optimal,
                value: Some(&sign * &inc.score),
                assignment: Some(inc.values),
                relaxation_value,
                nodes,
            }
        }
        Some(inc) => LpOutcome {
            status: LpStatus::FeasibleRelaxationOnly,
            value: Some(&sign * &inc.score),
            assignment: Some(inc.values),
            relaxation_value,
            nodes,
        },
        None if finished => LpOutcome {
            relaxation_value,
            ..LpOutcome::infeasible(nodes)
        },
        None => LpOutcome {
            status: LpStatus::FeasibleRelaxationOnly,
            value: None,
            assignment: None,
            relaxation_value,
            nodes,
        },
    })
}

fn offer(incumbent: &mut Option<Incumbent>, score: Rational, values: Vec<Rational>) {
    if incumbent.as_ref().is_none_or(|inc| score < inc.score) {
        *incumbent = Some(Incumbent { score, values });
    }
}

/// Whether a node with relaxation bound `bound` may still hold an integer
/// point strictly better than `best` (both in minimization sense).
fn can_improve(bound: &Rational, best: &Rational, step: Option<&Rational>) -> bool {
    match step {
        // objective values live on the lattice step * Z
        Some(g) => bound <= &(best - g),
        None => bound < best,
    }
}

/// Spacing of attainable objective values when only integral variables carry
/// objective weight.
fn lattice_step(prob: &LinearProgram) -> Option<Rational> {
    let obj = prob.objective.as_ref()?;
    let mut g = Rational::zero();
    for (c, v) in obj.coefficients.iter().zip(&prob.variables) {
        if c.is_zero() {
            continue;
        }
        if !v.integral {
            return None;
        }
        g = rational_gcd(&g, c);
    }
    (!g.is_zero()).then_some(g)
}

fn most_fractional(values: &[Rational], integral: &[usize]) -> Option<usize> {
    let half = ratio(1, 2);
    let mut best: Option<(Rational, usize)> = None;
    for &j in integral {
        let v = &values[j];
        if v.is_integer() {
            continue;
        }
        let frac = v - v.floor();
        let distance = (&frac - &half).abs();
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, j));
        }
    }
    best.map(|(_, j)| j)
}

/// Rounds the relaxation optimum (nearest, all-down, all-up) and greedily
/// repairs violated rows with unit moves of integral variables. Falls back to
/// rounding the optimum of a relaxation with shrunken rows.
fn round_and_repair(
    prob: &LinearProgram,
    sol: &Solution,
    node: &Node,
    integral: &[usize],
) -> Option<Vec<Rational>> {
    type Rounder = fn(&Rational) -> BigInt;
    let strategies: [Rounder; 3] = [nearest, floor_int, ceil_int];
    for round in strategies {
        let mut x = sol.values.clone();
        for &j in integral {
            let r = Rational::from_integer(round(&x[j]));
            x[j] = r.max(node.lower[j].clone()).min(node.upper[j].clone());
        }
        if repair(&prob.rows, &mut x, node, integral) {
            return Some(x);
        }
    }
    round_shrunken(prob, node, integral)
}

fn nearest(v: &Rational) -> BigInt {
    (v + ratio(1, 2)).floor().to_integer()
}

/// A vertex has at most one fractional basic variable per row, so rounding
/// the optimum of rows shrunk by `rows * max|c| / 2` stays inside the
/// original rows.
fn round_shrunken(prob: &LinearProgram, node: &Node, integral: &[usize]) -> Option<Vec<Rational>> {
    if integral.len() != prob.variables.len() || prob.rows.is_empty() {
        return None;
    }
    let count = Rational::from_integer(BigInt::from(prob.rows.len()));
    let mut shrunk = prob.clone();
    for row in &mut shrunk.rows {
        let widest = row.coefficients.iter().map(|c| c.abs()).max().unwrap_or_default();
        let margin = &count * widest / Rational::from_integer(2.into());
        if let Some(lo) = &mut row.lower {
            *lo += &margin;
        }
        if let Some(hi) = &mut row.upper {
            *hi -= &margin;
        }
        if let (Some(lo), Some(hi)) = (&row.lower, &row.upper) {
            if lo > hi {
                return None;
            }
        }
    }
    let sol = simplex::solve(&shrunk, &node.lower, &node.upper)?;
    let mut x = sol.values;
    for &j in integral {
        x[j] = Rational::from_integer(nearest(&x[j])).max(node.lower[j].clone()).min(node.upper[j].clone());
    }
    prob.rows.iter().all(|r| r.admits(&r.activity(&x))).then_some(x)
}

fn violation(row: &Row, activity: &Rational) -> Rational {
    if let Some(lo) = &row.lower {
        if activity < lo {
            return lo - activity;
        }
    }
    if let Some(hi) = &row.upper {
        if activity > hi {
            return activity - hi;
        }
    }
    Rational::zero()
}

/// Total violation after applying `moves` to the current activities.
fn moved_violation(rows: &[Row], activity: &[Rational], moves: &[(usize, &Rational)]) -> Rational {
    rows.iter()
        .zip(activity)
        .map(|(r, a)| {
            let mut a = a.clone();
            for &(j, delta) in moves {
                let c = &r.coefficients[j];
                if !c.is_zero() {
                    a += c * delta;
                }
            }
            violation(r, &a)
        })
        .sum()
}

fn repair(rows: &[Row], x: &mut [Rational], node: &Node, integral: &[usize]) -> bool {
    let mut activity: Vec<Rational> = rows.iter().map(|r| r.activity(x)).collect();
    let mut total: Rational = rows.iter().zip(&activity).map(|(r, a)| violation(r, a)).sum();
    let max_steps = 32 + 4 * integral.len();
    let deltas = [Rational::one(), -Rational::one()];
    for _ in 0..max_steps {
        if total.is_zero() {
            return true;
        }
        let moves: Vec<(usize, &Rational)> = integral
            .iter()
            .flat_map(|&j| deltas.iter().map(move |d| (j, d)))
            .filter(|&(j, d)| {
                let moved = &x[j] + d;
                moved >= node.lower[j] && moved <= node.upper[j]
            })
            .collect();
        let mut best: Option<(Rational, Vec<(usize, &Rational)>)> = None;
        for &mv in &moves {
            let candidate = moved_violation(rows, &activity, &[mv]);
            if candidate < total && best.as_ref().is_none_or(|(b, _)| candidate < *b) {
                best = Some((candidate, vec![mv]));
            }
        }
        let Some((candidate, chosen)) = best else {
            return false;
        };
        for (j, delta) in chosen {
            for (r, a) in rows.iter().zip(activity.iter_mut()) {
                let c = &r.coefficients[j];
                if !c.is_zero() {
                    *a += c * delta;
                }
            }
            x[j] += delta;
        }
        total = candidate;
    }
    total.is_zero()
}

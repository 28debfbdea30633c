//! Exact rational linear and integer programming.
//!
//! Every problem in this crate is boxed: each variable carries finite lower
//! and upper bounds, rows are two-sided ranges. That keeps the relaxation
//! bounded, so [`solve_lp`] never reports an unbounded program.

mod branch;
mod simplex;
mod text;

use num::Zero;

use crate::rational::{format_exact, Rational};

pub use branch::{solve_ilp, SearchBudget, DEFAULT_MAX_NODES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("objective has {got} coefficients, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
    #[error("variable {var} has empty bounds [{lower}, {upper}]")]
    EmptyBounds {
        var: usize,
        lower: String,
        upper: String,
    },
    #[error("search budget must allow at least one node")]
    ZeroBudget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub lower: Rational,
    pub upper: Rational,
    pub integral: bool,
}

impl Variable {
    pub fn continuous(lower: Rational, upper: Rational) -> Self {
        Self {
            lower,
            upper,
            integral: false,
        }
    }

    pub fn integer(lower: Rational, upper: Rational) -> Self {
        Self {
            lower,
            upper,
            integral: true,
        }
    }
}

/// `lower <= coefficients . x <= upper`, either side optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coefficients: Vec<Rational>,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Row {
    pub fn new(coefficients: Vec<Rational>, lower: Option<Rational>, upper: Option<Rational>) -> Self {
        Self {
            coefficients,
            lower,
            upper,
        }
    }

    pub fn activity(&self, x: &[Rational]) -> Rational {
        self.coefficients
            .iter()
            .zip(x)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, v)| a * v)
            .sum()
    }

    pub fn admits(&self, activity: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|lo| activity >= lo)
            && self.upper.as_ref().is_none_or(|hi| activity <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub coefficients: Vec<Rational>,
    pub sense: Sense,
}

impl Objective {
    pub fn value(&self, x: &[Rational]) -> Rational {
        self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// A boxed LP/ILP instance. Construct with [`LinearProgram::new`], which
/// checks dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    variables: Vec<Variable>,
    rows: Vec<Row>,
    objective: Option<Objective>,
}

impl LinearProgram {
    pub fn new(
        variables: Vec<Variable>,
        rows: Vec<Row>,
        objective: Option<Objective>,
    ) -> Result<Self, LpError> {
        let expected = variables.len();
        for (i, v) in variables.iter().enumerate() {
            if v.lower > v.upper {
                return Err(LpError::EmptyBounds {
                    var: i,
                    lower: format_exact(&v.lower),
                    upper: format_exact(&v.upper),
                });
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.coefficients.len() != expected {
                return Err(LpError::RowLength {
                    row: i,
                    got: r.coefficients.len(),
                    expected,
                });
            }
        }
        if let Some(obj) = &objective {
            if obj.coefficients.len() != expected {
                return Err(LpError::ObjectiveLength {
                    got: obj.coefficients.len(),
                    expected,
                });
            }
        }
        Ok(Self {
            variables,
            rows,
            objective,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, objective: Option<Objective>) -> Result<Self, LpError> {
        Self::new(self.variables.clone(), self.rows.clone(), objective)
    }

    /// Same problem with the integrality flags cleared.
    pub fn relaxed(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.variables {
            v.integral = false;
        }
        out
    }

    /// Checks bounds and rows by substitution; with `integer` also checks
    /// that integral variables hold integers.
    pub fn check_assignment(&self, x: &[Rational], integer: bool) -> Result<(), String> {
        if x.len() != self.variables.len() {
            return Err(format!(
                "assignment has {} entries for {} variables",
                x.len(),
                self.variables.len()
            ));
        }
        for (j, (v, value)) in self.variables.iter().zip(x).enumerate() {
            if value < &v.lower || value > &v.upper {
                return Err(format!("x{j}={} outside its bounds", format_exact(value)));
            }
            if integer && v.integral && !value.is_integer() {
                return Err(format!("x{j}={} is not integral", format_exact(value)));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let act = r.activity(x);
            if !r.admits(&act) {
                return Err(format!("row {i} activity {} out of range", format_exact(&act)));
            }
        }
        Ok(())
    }

    /// Plain-text dump in an LP-file dialect; see [`LinearProgram::to_lp_text`].
    pub fn to_lp_text(&self) -> String {
        text::write_lp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Infeasible,
    Optimal,
    /// The relaxation is feasible but the search budget ran out before
    /// integrality (or optimality) was decided.
    FeasibleRelaxationOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value at `assignment` (zero for pure feasibility problems).
    pub value: Option<Rational>,
    /// Optimizer when `Optimal`; the best integer point found, if any, when
    /// `FeasibleRelaxationOnly`.
    pub assignment: Option<Vec<Rational>>,
    /// Optimum of the root relaxation, when it is feasible.
    pub relaxation_value: Option<Rational>,
    /// Relaxations solved.
    pub nodes: u64,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status != LpStatus::Infeasible
    }

    pub(crate) fn infeasible(nodes: u64) -> Self {
        Self {
            status: LpStatus::Infeasible,
            value: None,
            assignment: None,
            relaxation_value: None,
            nodes,
        }
    }
}

/// Solves the continuous relaxation exactly. Integrality flags are ignored.
pub fn solve_lp(prob: &LinearProgram) -> LpOutcome {
    let lower: Vec<Rational> = prob.variables.iter().map(|v| v.lower.clone()).collect();
    let upper: Vec<Rational> = prob.variables.iter().map(|v| v.upper.clone()).collect();
    match simplex::solve(prob, &lower, &upper) {
        None => LpOutcome::infeasible(1),
        Some(sol) => {
            debug_assert_eq!(prob.check_assignment(&sol.values, false), Ok(()));
            LpOutcome {
                status: LpStatus::Optimal,
                value: Some(sol.objective.clone()),
                assignment: Some(sol.values),
                relaxation_value: Some(sol.objective),
                nodes: 1,
            }
        }
    }
}

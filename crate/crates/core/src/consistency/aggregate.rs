use num::{Signed, Zero};

use super::{ConditionId, ConsistencyVerdict, Witness};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Row, SearchBudget, Variable};
use crate::rational::{self, uint, Rational};
use crate::score::{validate_reported, HypothesisTag, ImageCounts, RoundingMode, Scores, Uncertainty};

/// Mean scores over a set of test images, as printed by the authors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggregatedTriplet {
    pub scores: Scores,
    pub digits: u32,
    pub rounding: RoundingMode,
}

impl AggregatedTriplet {
    pub fn new(scores: Scores, digits: u32, rounding: RoundingMode) -> Result<Self> {
        if digits == 0 {
            return Err(Error::InvalidScore("mean scores need at least one decimal".into()));
        }
        validate_reported(&scores, digits)?;
        Ok(Self {
            scores,
            digits,
            rounding,
        })
    }

    pub fn parse(acc: &str, sens: &str, spec: &str, digits: u32, rounding: RoundingMode) -> Result<Self> {
        let scores = Scores::new(
            rational::parse_decimal(acc)?.0,
            rational::parse_decimal(sens)?.0,
            rational::parse_decimal(spec)?.0,
        );
        Self::new(scores, digits, rounding)
    }

    pub fn uncertainty(&self) -> Uncertainty {
        Uncertainty::for_digits(self.digits, self.rounding)
    }
}

const SENS_ROW: usize = 0;
const SPEC_ROW: usize = 1;
const ACC_ROW: usize = 2;

/// Integer program over `tp_i in [0, p_i]`, `tn_i in [0, n_i]` (variables
/// `2i` and `2i + 1`) whose three rows pin the macro-averaged sensitivity,
/// specificity and accuracy to the reported means within `eps`.
pub fn build_feasibility_problem(t: &Scores, counts: &[ImageCounts], u: &Uncertainty) -> Result<LinearProgram> {
    if counts.is_empty() {
        return Err(Error::InvalidCounts("the aggregated test needs at least one image".into()));
    }
    let m = uint(counts.len() as u64);
    let mut variables = Vec::with_capacity(2 * counts.len());
    let width = 2 * counts.len();
    let mut sens = vec![Rational::zero(); width];
    let mut spec = vec![Rational::zero(); width];
    let mut acc = vec![Rational::zero(); width];
    for (i, c) in counts.iter().enumerate() {
        variables.push(Variable::integer(Rational::zero(), uint(c.p)));
        variables.push(Variable::integer(Rational::zero(), uint(c.n)));
        let total = uint(c.total());
        sens[2 * i] = (&m * uint(c.p)).recip();
        spec[2 * i + 1] = (&m * uint(c.n)).recip();
        let weight = (&m * &total).recip();
        acc[2 * i] = weight.clone();
        acc[2 * i + 1] = weight;
    }
    let eps = u.eps();
    let band = |target: &Rational, coefficients| {
        Row::new(coefficients, Some(target - eps), Some(target + eps))
    };
    let mut rows = vec![None, None, None];
    rows[SENS_ROW] = Some(band(&t.sens, sens));
    rows[SPEC_ROW] = Some(band(&t.spec, spec));
    rows[ACC_ROW] = Some(band(&t.acc, acc));
    Ok(LinearProgram::new(variables, rows.into_iter().flatten().collect(), None)?)
}

/// Decides whether the mean triplet is attainable by integer per-image
/// counts.
pub fn aggregated_test(
    t: &Scores,
    counts: &[ImageCounts],
    u: &Uncertainty,
    budget: SearchBudget,
) -> Result<ConsistencyVerdict> {
    let prob = build_feasibility_problem(t, counts, u)?;
    let outcome = lp::solve_ilp(&prob, budget)?;
    let eps = u.eps().clone();
    let two_eps = Rational::from_integer(2.into()) * &eps;
    let degenerate_regime = counts
        .iter()
        .any(|c| &two_eps * uint(c.p) < Rational::from_integer(1.into()) || &two_eps * uint(c.n) < Rational::from_integer(1.into()));
    let mut verdict = ConsistencyVerdict {
        passed: false,
        failed_conditions: Vec::new(),
        hypothesis: HypothesisTag::Custom,
        eps,
        degenerate_regime,
        inconclusive: false,
        witness: None,
    };
    match outcome.status {
        LpStatus::Optimal => {
            let x = outcome.assignment.expect("optimal outcomes carry an assignment");
            let witness: Vec<Witness> = x
                .chunks(2)
                .map(|pair| Witness {
                    tp: to_u64(&pair[0]),
                    tn: to_u64(&pair[1]),
                })
                .collect();
            debug_assert!(check_mean_witness(t, counts, u, &witness));
            verdict.passed = true;
            verdict.witness = Some(witness);
        }
        LpStatus::FeasibleRelaxationOnly => {
            verdict.passed = true;
            verdict.inconclusive = true;
        }
        LpStatus::Infeasible => {
            verdict.failed_conditions = diagnose(&prob, outcome.relaxation_value.is_some())?;
        }
    }
    Ok(verdict)
}

fn to_u64(x: &Rational) -> u64 {
    x.to_integer().try_into().expect("counts are non-negative and bounded")
}

fn diagnose(prob: &LinearProgram, relaxation_feasible: bool) -> Result<Vec<ConditionId>> {
    if relaxation_feasible {
        return Ok(vec![ConditionId::Integrality]);
    }
    let ids = [ConditionId::MeanSens, ConditionId::MeanSpec, ConditionId::MeanAcc];
    let mut blamed = Vec::new();
    for (skip, id) in ids.iter().enumerate() {
        let rows: Vec<Row> = prob
            .rows()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, r)| r.clone())
            .collect();
        let reduced = LinearProgram::new(prob.variables().to_vec(), rows, None)?;
        if lp::solve_lp(&reduced).is_feasible() {
            blamed.push(*id);
        }
    }
    if blamed.is_empty() {
        blamed.push(ConditionId::Joint);
    }
    Ok(blamed)
}

/// Substitutes integer per-image counts into the averaged conditions.
pub fn check_mean_witness(t: &Scores, counts: &[ImageCounts], u: &Uncertainty, witness: &[Witness]) -> bool {
    if witness.len() != counts.len() || counts.is_empty() {
        return false;
    }
    let m = uint(counts.len() as u64);
    let mut sens = Rational::zero();
    let mut spec = Rational::zero();
    let mut acc = Rational::zero();
    for (c, w) in counts.iter().zip(witness) {
        if w.tp > c.p || w.tn > c.n {
            return false;
        }
        sens += Rational::new(w.tp.into(), c.p.into());
        spec += Rational::new(w.tn.into(), c.n.into());
        acc += Rational::new((w.tp + w.tn).into(), c.total().into());
    }
    let eps = u.eps();
    [(sens, &t.sens), (spec, &t.spec), (acc, &t.acc)]
        .into_iter()
        .all(|(sum, target)| (sum / &m - target).abs() <= *eps)
}

/// Exact integer answer for a single image, for cross-checking the m = 1
/// reduction.
#[cfg(test)]
pub(crate) fn single_image_integer_verdict(t: &Scores, c: ImageCounts, u: &Uncertainty) -> bool {
    super::image_witness(t, c, u).is_some()
}

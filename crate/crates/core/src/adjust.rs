//! Maps scores computed on all pixels into the FoV evaluation domain.
//!
//! Each image contributes four integer unknowns, `tp_F`, `tn_F`, `tp_d` and
//! `tn_d`, where the `_d` counts live in the region outside the FoV. The
//! reported all-pixels bands constrain their sums; minimizing and maximizing
//! each FoV score over the feasible set brackets the score the authors would
//! have obtained under the FoV mask.

use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::consistency::image_level_test;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Objective, Row, SearchBudget, Sense, Variable};
use crate::rational::{self, ratio, uint, Rational};
use crate::score::{ImageCounts, Scores, Uncertainty};

/// Per-image pixel counts inside the FoV and in the difference region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SplitCounts {
    pub p_f: u64,
    pub n_f: u64,
    pub p_d: u64,
    pub n_d: u64,
}

impl SplitCounts {
    pub fn new(p_f: u64, n_f: u64, p_d: u64, n_d: u64) -> Result<Self> {
        if p_f == 0 || n_f == 0 {
            return Err(Error::InvalidCounts(format!(
                "FoV region needs positives and negatives (p_F={p_f}, n_F={n_f})"
            )));
        }
        Ok(Self { p_f, n_f, p_d, n_d })
    }

    /// Splits all-pixels totals given the FoV totals.
    pub fn from_regions(fov: ImageCounts, all: ImageCounts) -> Result<Self> {
        if fov.p > all.p || fov.n > all.n {
            return Err(Error::InvalidCounts(format!(
                "FoV counts ({}, {}) exceed all-pixels counts ({}, {})",
                fov.p, fov.n, all.p, all.n
            )));
        }
        Self::new(fov.p, fov.n, all.p - fov.p, all.n - fov.n)
    }

    pub fn fov(&self) -> ImageCounts {
        ImageCounts {
            p: self.p_f,
            n: self.n_f,
        }
    }

    pub fn all(&self) -> ImageCounts {
        ImageCounts {
            p: self.p_f + self.p_d,
            n: self.n_f + self.n_d,
        }
    }
}

/// Interval `[lower, upper]` for one FoV score with its midpoint and
/// half-width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjustedScore {
    #[serde(with = "rational::serde_rational")]
    pub lower: Rational,
    #[serde(with = "rational::serde_rational")]
    pub upper: Rational,
    #[serde(with = "rational::serde_rational")]
    pub value: Rational,
    #[serde(with = "rational::serde_rational")]
    pub half_width: Rational,
}

impl AdjustedScore {
    pub fn from_interval(lower: Rational, upper: Rational) -> Self {
        debug_assert!(lower <= upper);
        let two = Rational::from_integer(2.into());
        let value = (&lower + &upper) / &two;
        let half_width = (&upper - &lower) / two;
        Self {
            lower,
            upper,
            value,
            half_width,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lower <= *x && *x <= self.upper
    }

    /// Mean of several intervals: bounds, midpoint and half-width all
    /// average linearly.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a AdjustedScore>) -> Option<Self> {
        let mut count = 0u64;
        let (mut lo, mut hi) = (Rational::zero(), Rational::zero());
        for s in items {
            lo += &s.lower;
            hi += &s.upper;
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let m = uint(count);
        Some(Self::from_interval(lo / &m, hi / m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMethod {
    ImageLevel,
    Aggregated,
}

impl std::fmt::Display for AdjustMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdjustMethod::ImageLevel => "image_level",
            AdjustMethod::Aggregated => "aggregated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjustedTriplet {
    pub acc: AdjustedScore,
    pub sens: AdjustedScore,
    pub spec: AdjustedScore,
    pub method: AdjustMethod,
    /// Every endpoint is an integer optimum rather than a relaxation bound.
    pub exact: bool,
}

impl AdjustedTriplet {
    pub fn midpoints(&self) -> Scores {
        Scores::new(self.acc.value.clone(), self.sens.value.clone(), self.spec.value.clone())
    }

    pub fn contains(&self, s: &Scores) -> bool {
        self.acc.contains(&s.acc) && self.sens.contains(&s.sens) && self.spec.contains(&s.spec)
    }

    pub fn max_half_width(&self) -> Rational {
        [&self.acc.half_width, &self.sens.half_width, &self.spec.half_width]
            .into_iter()
            .max()
            .cloned()
            .expect("three scores")
    }
}

#[derive(Debug, Clone)]
pub struct AdjustOptions {
    /// Outside-FoV false positives allowed per image, as a fraction of the
    /// FoV vessel count.
    pub leak_fraction: Rational,
    /// Solve each endpoint to integer optimality instead of using the
    /// relaxation bound.
    pub exact_ilp: bool,
    pub budget: SearchBudget,
    /// Skip the all-pixels consistency precheck.
    pub force: bool,
}

impl Default for AdjustOptions {
    fn default() -> Self {
        Self {
            leak_fraction: ratio(1, 100),
            exact_ilp: false,
            budget: SearchBudget::default(),
            force: false,
        }
    }
}

/// Score whose FoV value an endpoint problem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Acc,
    Sens,
    Spec,
}

/// Feasible set of the `4m` unknowns. Variable `4i + j` is `tp_F`, `tn_F`,
/// `tp_d`, `tn_d` of image `i` for `j = 0..4`.
pub fn build_adjustment_problem(
    t: &Scores,
    splits: &[SplitCounts],
    u: &Uncertainty,
    leak_fraction: &Rational,
) -> Result<LinearProgram> {
    if splits.is_empty() {
        return Err(Error::InvalidCounts("adjustment needs at least one image".into()));
    }
    if *leak_fraction < Rational::zero() {
        return Err(Error::InvalidCounts("leak fraction must be non-negative".into()));
    }
    let m = uint(splits.len() as u64);
    let width = 4 * splits.len();
    let mut variables = Vec::with_capacity(width);
    let mut sens = vec![Rational::zero(); width];
    let mut spec = vec![Rational::zero(); width];
    let mut acc = vec![Rational::zero(); width];
    for (i, s) in splits.iter().enumerate() {
        let tn_d_floor = uint(s.n_d) - leak_fraction * uint(s.p_f);
        variables.push(Variable::integer(Rational::zero(), uint(s.p_f)));
        variables.push(Variable::integer(Rational::zero(), uint(s.n_f)));
        variables.push(Variable::integer(Rational::zero(), uint(s.p_d)));
        variables.push(Variable::integer(tn_d_floor.max(Rational::zero()), uint(s.n_d)));
        let all = s.all();
        let ws = (&m * uint(all.p)).recip();
        let wn = (&m * uint(all.n)).recip();
        let wa = (&m * uint(all.total())).recip();
        for j in [0, 2] {
            sens[4 * i + j] = ws.clone();
        }
        for j in [1, 3] {
            spec[4 * i + j] = wn.clone();
        }
        for j in 0..4 {
            acc[4 * i + j] = wa.clone();
        }
    }
    let eps = u.eps();
    let band = |target: &Rational, coefficients| Row::new(coefficients, Some(target - eps), Some(target + eps));
    let rows = vec![band(&t.sens, sens), band(&t.spec, spec), band(&t.acc, acc)];
    Ok(LinearProgram::new(variables, rows, None)?)
}

/// Mean FoV score of `target` as a linear objective over the unknowns of
/// [`build_adjustment_problem`].
pub fn endpoint_objective(splits: &[SplitCounts], target: Target, sense: Sense) -> Objective {
    let m = uint(splits.len() as u64);
    let mut coefficients = vec![Rational::zero(); 4 * splits.len()];
    for (i, s) in splits.iter().enumerate() {
        match target {
            Target::Sens => coefficients[4 * i] = (&m * uint(s.p_f)).recip(),
            Target::Spec => coefficients[4 * i + 1] = (&m * uint(s.n_f)).recip(),
            Target::Acc => {
                let w = (&m * uint(s.p_f + s.n_f)).recip();
                coefficients[4 * i] = w.clone();
                coefficients[4 * i + 1] = w;
            }
        }
    }
    Objective { coefficients, sense }
}

/// One endpoint, and whether it is an integer optimum.
fn endpoint(prob: &LinearProgram, obj: Objective, options: &AdjustOptions) -> Result<Option<(Rational, bool)>> {
    let prob = prob.with_objective(Some(obj))?;
    if !options.exact_ilp {
        let outcome = lp::solve_lp(&prob);
        if let Some(x) = &outcome.assignment {
            debug_assert_eq!(prob.check_assignment(x, false), Ok(()));
        }
        return Ok(outcome.value.map(|v| (v, false)));
    }
    let outcome = lp::solve_ilp(&prob, options.budget)?;
    Ok(match outcome.status {
        LpStatus::Optimal => Some((outcome.value.expect("optimal value"), true)),
        // the relaxation bound is still an outer bound
        LpStatus::FeasibleRelaxationOnly => outcome.relaxation_value.map(|v| (v, false)),
        LpStatus::Infeasible => None,
    })
}

fn adjust(t: &Scores, splits: &[SplitCounts], u: &Uncertainty, options: &AdjustOptions, method: AdjustMethod) -> Result<AdjustedTriplet> {
    let prob = build_adjustment_problem(t, splits, u, &options.leak_fraction)?;
    let jobs: Vec<(Target, Sense)> = [Target::Acc, Target::Sens, Target::Spec]
        .into_iter()
        .flat_map(|target| [(target, Sense::Minimize), (target, Sense::Maximize)])
        .collect();
    let ends = jobs
        .par_iter()
        .map(|&(target, sense)| endpoint(&prob, endpoint_objective(splits, target, sense), options))
        .collect::<Result<Vec<_>>>()?;
    let mut exact = true;
    let mut scores = Vec::with_capacity(3);
    for pair in ends.chunks(2) {
        let (Some((lo, lo_exact)), Some((hi, hi_exact))) = (&pair[0], &pair[1]) else {
            return Err(not_adjustable(method, "the all-pixels bands admit no counts under the leak bound"));
        };
        exact &= lo_exact & hi_exact;
        scores.push(AdjustedScore::from_interval(
            lo.clone().max(Rational::zero()),
            hi.clone().min(Rational::one()),
        ));
    }
    let spec = scores.pop().expect("three scores");
    let sens = scores.pop().expect("three scores");
    let acc = scores.pop().expect("three scores");
    Ok(AdjustedTriplet {
        acc,
        sens,
        spec,
        method,
        exact,
    })
}

fn not_adjustable(method: AdjustMethod, why: &str) -> Error {
    Error::NotAdjustable(format!("{method} adjustment impossible under the all-pixels hypothesis: {why}"))
}

/// Adjusts one image's all-pixels triplet into the FoV domain.
pub fn adjust_image_level(t: &Scores, split: &SplitCounts, u: &Uncertainty, options: &AdjustOptions) -> Result<AdjustedTriplet> {
    if !options.force {
        let verdict = image_level_test(t, split.all(), u);
        if !verdict.passed {
            let failed: Vec<String> = verdict.failed_conditions.iter().map(|c| c.to_string()).collect();
            return Err(not_adjustable(
                AdjustMethod::ImageLevel,
                &format!("triplet fails the all-pixels test ({})", failed.join(", ")),
            ));
        }
    }
    adjust(t, std::slice::from_ref(split), u, options, AdjustMethod::ImageLevel)
}

/// Adjusts a mean all-pixels triplet over `splits.len()` images.
pub fn adjust_aggregated(t: &Scores, splits: &[SplitCounts], u: &Uncertainty, options: &AdjustOptions) -> Result<AdjustedTriplet> {
    adjust(t, splits, u, options, AdjustMethod::Aggregated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_decimal;
    use crate::score::{scores_from_counts, ConfusionCounts, RoundingMode};
    use proptest::prelude::*;

    fn split() -> SplitCounts {
        SplitCounts::new(1400, 5500, 8, 3100).unwrap()
    }

    /// All-pixels and FoV scores of a segmentation with the given counts.
    fn scenario(s: &SplitCounts, tp_f: u64, tn_f: u64, tp_d: u64, tn_d: u64) -> (Scores, Scores) {
        let fov = ConfusionCounts::new(tp_f, tn_f, s.n_f - tn_f, s.p_f - tp_f);
        let diff = ConfusionCounts::new(tp_d, tn_d, s.n_d - tn_d, s.p_d - tp_d);
        (
            scores_from_counts(&(fov + diff)).unwrap(),
            scores_from_counts(&fov).unwrap(),
        )
    }

    fn width(a: &AdjustedScore) -> Rational {
        &a.upper - &a.lower
    }

    #[test]
    fn interval_midpoint_and_half_width() {
        let a = AdjustedScore::from_interval(ratio(1, 4), ratio(3, 4));
        assert_eq!(a.value, ratio(1, 2));
        assert_eq!(a.half_width, ratio(1, 4));
        let b = AdjustedScore::from_interval(ratio(1, 2), ratio(1, 2));
        let mean = AdjustedScore::mean([&a, &b]).unwrap();
        assert_eq!(mean.lower, ratio(3, 8));
        assert_eq!(mean.half_width, ratio(1, 8));
    }

    #[test]
    fn true_fov_scores_lie_inside_intervals() {
        let s = split();
        let (all, fov) = scenario(&s, 1100, 5300, 3, 3095);
        let u = Uncertainty::for_digits(4, RoundingMode::Round);
        let reported = all.rounded(4, RoundingMode::Round);
        let adj = adjust_image_level(&reported, &s, &u, &AdjustOptions::default()).unwrap();
        assert!(adj.contains(&fov), "{adj:?} {fov:?}");
        assert!(!adj.exact);
        let exact = adjust_image_level(
            &reported,
            &s,
            &u,
            &AdjustOptions {
                exact_ilp: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(exact.exact);
        assert!(exact.contains(&fov));
        for (e, r) in [(&exact.acc, &adj.acc), (&exact.sens, &adj.sens), (&exact.spec, &adj.spec)] {
            assert!(r.lower <= e.lower && e.upper <= r.upper);
        }
    }

    #[test]
    fn narrower_leak_never_widens() {
        let s = split();
        let (all, _) = scenario(&s, 1100, 5300, 3, 3098);
        let u = Uncertainty::for_digits(4, RoundingMode::Round);
        let reported = all.rounded(4, RoundingMode::Round);
        let mut previous: Option<AdjustedTriplet> = None;
        for f in [ratio(1, 10), ratio(1, 20), ratio(1, 100), ratio(1, 1000), Rational::zero()] {
            let adj = adjust_image_level(
                &reported,
                &s,
                &u,
                &AdjustOptions {
                    leak_fraction: f,
                    ..Default::default()
                },
            )
            .unwrap();
            if let Some(prev) = &previous {
                for (a, b) in [(&prev.acc, &adj.acc), (&prev.sens, &adj.sens), (&prev.spec, &adj.spec)] {
                    assert!(width(b) <= width(a));
                    assert!(a.lower <= b.lower && b.upper <= a.upper);
                }
            }
            previous = Some(adj);
        }
    }

    #[test]
    fn zero_leak_sensitivity_width_comes_from_outside_positives() {
        let s = split();
        let (all, _) = scenario(&s, 1100, 5300, 3, 3100);
        let u = Uncertainty::for_digits(4, RoundingMode::Round);
        let reported = all.rounded(4, RoundingMode::Round);
        let options = AdjustOptions {
            leak_fraction: Rational::zero(),
            exact_ilp: true,
            ..Default::default()
        };
        let adj = adjust_image_level(&reported, &s, &u, &options).unwrap();
        // tp_d ranges over at most p_d + 1 values plus the rounding slack on tp_a
        let p_all = uint(s.p_f + s.p_d);
        let slack = (uint(s.p_d) + Rational::from_integer(2.into()) * u.eps() * &p_all) / uint(s.p_f);
        assert!(width(&adj.sens) <= slack, "{:?}", adj.sens);
        let mut wider = options.clone();
        wider.leak_fraction = ratio(1, 100);
        let loose = adjust_image_level(&reported, &s, &u, &wider).unwrap();
        assert!(width(&adj.spec) <= width(&loose.spec));
    }

    #[test]
    fn inconsistent_triplet_is_not_adjustable() {
        let s = split();
        let t = Scores::new(
            parse_decimal("0.5").unwrap().0,
            parse_decimal("0.99").unwrap().0,
            parse_decimal("0.2").unwrap().0,
        );
        let u = Uncertainty::for_digits(4, RoundingMode::Round);
        let err = adjust_image_level(&t, &s, &u, &AdjustOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotAdjustable(_)));
        let forced = AdjustOptions {
            force: true,
            ..Default::default()
        };
        assert!(matches!(adjust_image_level(&t, &s, &u, &forced), Err(Error::NotAdjustable(_))));
        assert!(matches!(adjust_aggregated(&t, &[s, s], &u, &forced), Err(Error::NotAdjustable(_))));
    }

    #[test]
    fn leak_bound_can_make_a_consistent_triplet_unadjustable() {
        // fewer correct negatives overall than the leak bound forces outside
        let s = split();
        let (all, _) = scenario(&s, 1100, 1000, 3, 0);
        let u = Uncertainty::for_digits(4, RoundingMode::Round);
        let reported = all.rounded(4, RoundingMode::Round);
        assert!(matches!(
            adjust_image_level(&reported, &s, &u, &AdjustOptions::default()),
            Err(Error::NotAdjustable(_))
        ));
    }

    #[test]
    fn single_image_aggregated_matches_image_level() {
        let s = split();
        let (all, _) = scenario(&s, 1200, 5400, 5, 3099);
        let u = Uncertainty::for_digits(3, RoundingMode::Round);
        let reported = all.rounded(3, RoundingMode::Round);
        let a = adjust_image_level(&reported, &s, &u, &AdjustOptions::default()).unwrap();
        let b = adjust_aggregated(&reported, &[s], &u, &AdjustOptions::default()).unwrap();
        assert_eq!((a.acc, a.sens, a.spec), (b.acc, b.sens, b.spec));
        assert_eq!(b.method, AdjustMethod::Aggregated);
    }

    /// Brute-force bounds on the FoV accuracy over every integer assignment.
    fn enumerate_acc(t: &Scores, s: &SplitCounts, u: &Uncertainty, f: &Rational) -> Option<(Rational, Rational)> {
        let all = s.all();
        let eps = u.eps();
        let band = |x: Rational, target: &Rational| (x - target).abs() <= *eps;
        let mut best: Option<(Rational, Rational)> = None;
        for tp_f in 0..=s.p_f {
            for tp_d in 0..=s.p_d {
                if !band(Rational::new((tp_f + tp_d).into(), all.p.into()), &t.sens) {
                    continue;
                }
                for tn_f in 0..=s.n_f {
                    for tn_d in 0..=s.n_d {
                        if uint(tn_d) < uint(s.n_d) - f * uint(s.p_f) {
                            continue;
                        }
                        if band(Rational::new((tn_f + tn_d).into(), all.n.into()), &t.spec)
                            && band(Rational::new((tp_f + tp_d + tn_f + tn_d).into(), all.total().into()), &t.acc)
                        {
                            let v = Rational::new((tp_f + tn_f).into(), (s.p_f + s.n_f).into());
                            best = Some(match best {
                                None => (v.clone(), v),
                                Some((lo, hi)) => (lo.min(v.clone()), hi.max(v)),
                            });
                        }
                    }
                }
            }
        }
        best
    }

    use num::Signed;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn exact_endpoints_match_enumeration(
            p_f in 2u64..8, n_f in 4u64..16, p_d in 0u64..3, n_d in 1u64..8,
            seeds in (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000),
            leak in 0i64..40,
        ) {
            let s = SplitCounts::new(p_f, n_f, p_d, n_d).unwrap();
            let (tp_f, tn_f, tp_d, tn_d) = (seeds.0 % (p_f + 1), seeds.1 % (n_f + 1), seeds.2 % (p_d + 1), seeds.3 % (n_d + 1));
            let (all, _) = scenario(&s, tp_f, tn_f, tp_d, tn_d);
            let u = Uncertainty::for_digits(2, RoundingMode::Round);
            let reported = all.rounded(2, RoundingMode::Round);
            let f = ratio(leak, 100);
            let options = AdjustOptions { leak_fraction: f.clone(), exact_ilp: true, force: true, ..Default::default() };
            let expected = enumerate_acc(&reported, &s, &u, &f);
            match adjust_image_level(&reported, &s, &u, &options) {
                Ok(adj) => {
                    let (lo, hi) = expected.expect("enumeration finds the optimum");
                    prop_assert!(adj.exact);
                    prop_assert_eq!(adj.acc.lower, lo);
                    prop_assert_eq!(adj.acc.upper, hi);
                }
                Err(Error::NotAdjustable(_)) => prop_assert!(expected.is_none()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn widening_eps_never_shrinks(tp_f in 900u64..1400, tn_f in 5000u64..5500, extra in 1u32..4) {
            let s = split();
            let (all, _) = scenario(&s, tp_f, tn_f, 4, 3098);
            let reported = all.rounded(4, RoundingMode::Round);
            let u = Uncertainty::for_digits(4, RoundingMode::Round);
            let wide = Uncertainty::new(u.eps() * Rational::from_integer(extra.into())).unwrap();
            let a = adjust_image_level(&reported, &s, &u, &AdjustOptions::default()).unwrap();
            let b = adjust_image_level(&reported, &s, &wide, &AdjustOptions::default()).unwrap();
            for (x, y) in [(&a.acc, &b.acc), (&a.sens, &b.sens), (&a.spec, &b.spec)] {
                prop_assert!(y.lower <= x.lower && x.upper <= y.upper);
            }
        }
    }
}

use num::{BigInt, Signed};

use super::{ConditionId, ConsistencyVerdict, Witness};
use crate::error::{Error, Result};
use crate::rational::{ceil_int, floor_int, uint, Rational};
use crate::score::{HypothesisTag, ImageCounts, Scores, Uncertainty};

/// Decides whether `t` can stem from an image with `c.p` positives and
/// `c.n` negatives, up to `u` in every score.
///
/// The decision is exact over the reals: it evaluates the eliminated
/// inequalities rather than searching counts. The integer witness is
/// computed separately and reported alongside.
pub fn image_level_test(t: &Scores, c: ImageCounts, u: &Uncertainty) -> ConsistencyVerdict {
    let eps = u.eps();
    let p = uint(c.p);
    let n = uint(c.n);
    let total = &p + &n;
    let one = Rational::from_integer(1.into());
    let residual = &n * (&t.acc - &t.spec) + &p * (&t.acc - &t.sens);
    let band = Rational::from_integer(2.into()) * eps * &total;
    let acc_hi = &total * (&t.acc + eps);
    let acc_lo = &total * (&t.acc - eps);

    let checks = [
        (ConditionId::C1, !(&residual - &band).is_positive()),
        (ConditionId::C2, !(&residual + &band).is_negative()),
        (ConditionId::C3, !(&p * (&t.sens - eps - &one)).is_positive()),
        (ConditionId::C4, !(&p * (&t.sens + eps)).is_negative()),
        (ConditionId::C5, !(&n * (&t.spec - eps - &one)).is_positive()),
        (ConditionId::C6, !(&n * (&t.spec + eps)).is_negative()),
        (ConditionId::B1, &p * (&t.sens - eps) <= acc_hi),
        (ConditionId::B2, &n * (&t.spec - eps) <= acc_hi),
        (ConditionId::B3, acc_lo <= &p + &n * (&t.spec + eps)),
        (ConditionId::B4, acc_lo <= &p * (&t.sens + eps) + &n),
        (ConditionId::A1, !acc_hi.is_negative()),
        (ConditionId::A2, acc_lo <= total),
    ];
    let failed_conditions: Vec<ConditionId> =
        checks.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    let passed = failed_conditions.is_empty();
    let two_eps = Rational::from_integer(2.into()) * eps;
    let degenerate_regime = &two_eps * &p < one || &two_eps * &n < one;
    let witness = if passed {
        image_witness(t, c, u).map(|w| vec![w])
    } else {
        None
    };
    ConsistencyVerdict {
        passed,
        failed_conditions,
        hypothesis: HypothesisTag::Custom,
        eps: eps.clone(),
        degenerate_regime,
        inconclusive: false,
        witness,
    }
}

/// Tests one triplet against both the field-of-view and the all-pixels
/// counts of the same image.
pub fn image_level_test_both(
    t: &Scores,
    fov: ImageCounts,
    all: ImageCounts,
    u: &Uncertainty,
) -> Result<(ConsistencyVerdict, ConsistencyVerdict)> {
    if fov.total() >= all.total() {
        return Err(Error::InvalidCounts(format!(
            "field of view ({} pixels) must be smaller than the image ({} pixels)",
            fov.total(),
            all.total()
        )));
    }
    Ok((
        image_level_test(t, fov, u).with_hypothesis(HypothesisTag::FovOnly),
        image_level_test(t, all, u).with_hypothesis(HypothesisTag::AllPixels),
    ))
}

/// Integer `(tp, tn)` reproducing `t` within `u`, if one exists.
pub fn image_witness(t: &Scores, c: ImageCounts, u: &Uncertainty) -> Option<Witness> {
    let eps = u.eps();
    let p = uint(c.p);
    let n = uint(c.n);
    let total = &p + &n;
    let zero = BigInt::from(0);
    let tp_lo = ceil_int(&(&p * (&t.sens - eps))).max(zero.clone());
    let tp_hi = floor_int(&(&p * (&t.sens + eps))).min(BigInt::from(c.p));
    let tn_lo = ceil_int(&(&n * (&t.spec - eps))).max(zero);
    let tn_hi = floor_int(&(&n * (&t.spec + eps))).min(BigInt::from(c.n));
    if tp_lo > tp_hi || tn_lo > tn_hi {
        return None;
    }
    let sum_lo = ceil_int(&(&total * (&t.acc - eps))).max(&tp_lo + &tn_lo);
    let sum_hi = floor_int(&(&total * (&t.acc + eps))).min(&tp_hi + &tn_hi);
    if sum_lo > sum_hi {
        return None;
    }
    let tp = tp_lo.max(&sum_lo - &tn_hi);
    let tn = &sum_lo - &tp;
    Some(Witness {
        tp: tp.try_into().ok()?,
        tn: tn.try_into().ok()?,
    })
}

//! Confusion counts, score computation and the rounding-uncertainty model.

use std::fmt;
use std::str::FromStr;

use num::{Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow10, ratio, uint, Rational};

/// Pixel-level confusion counts of a binary segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    /// Total positives, `tp + fn`.
    pub fn p(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Total negatives, `tn + fp`.
    pub fn n(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.p() + self.n()
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + rhs.tp,
            tn: self.tn + rhs.tn,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

/// An exact (accuracy, sensitivity, specificity) triplet with no reporting
/// metadata attached.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Scores {
    #[serde(with = "rational::serde_rational")]
    pub acc: Rational,
    #[serde(with = "rational::serde_rational")]
    pub sens: Rational,
    #[serde(with = "rational::serde_rational")]
    pub spec: Rational,
}

impl Scores {
    pub fn new(acc: Rational, sens: Rational, spec: Rational) -> Self {
        Self { acc, sens, spec }
    }

    /// Each score rounded independently.
    pub fn rounded(&self, digits: u32, mode: RoundingMode) -> Scores {
        Scores {
            acc: round_score(&self.acc, digits, mode).to_rational(),
            sens: round_score(&self.sens, digits, mode).to_rational(),
            spec: round_score(&self.spec, digits, mode).to_rational(),
        }
    }

    /// Component-wise arithmetic mean.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Scores>) -> Option<Scores> {
        let mut sum = Scores::new(Rational::zero(), Rational::zero(), Rational::zero());
        let mut count = 0u64;
        for s in items {
            sum.acc += &s.acc;
            sum.sens += &s.sens;
            sum.spec += &s.spec;
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let m = uint(count);
        Some(Scores::new(sum.acc / &m, sum.sens / &m, sum.spec / m))
    }

    fn in_unit_interval(&self) -> bool {
        [&self.acc, &self.sens, &self.spec]
            .iter()
            .all(|x| !x.is_negative() && **x <= Rational::one())
    }
}

/// Exact `(acc, sens, spec)` of a confusion matrix.
pub fn scores_from_counts(c: &ConfusionCounts) -> Result<Scores> {
    let (p, n) = (c.p(), c.n());
    if p == 0 || n == 0 {
        return Err(Error::Degenerate(format!(
            "scores need at least one positive and one negative pixel (p={p}, n={n})"
        )));
    }
    Ok(Scores {
        acc: Rational::new((c.tp + c.tn).into(), (p + n).into()),
        sens: Rational::new(c.tp.into(), p.into()),
        spec: Rational::new(c.tn.into(), n.into()),
    })
}

/// Dice coefficient `2tp / (2tp + fp + fn)`.
pub fn dice_from_counts(c: &ConfusionCounts) -> Result<Rational> {
    let den = 2 * c.tp + c.fp + c.fn_;
    if den == 0 {
        return Err(Error::Degenerate(
            "dice is undefined when tp, fp and fn are all zero".into(),
        ));
    }
    Ok(Rational::new((2 * c.tp).into(), den.into()))
}

/// How the authors turned an exact ratio into the printed decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundingMode {
    /// Nearest, ties half away from zero.
    #[default]
    Round,
    /// Nearest, ties to the even neighbour.
    RoundHalfEven,
    Truncate,
    Ceil,
}

impl fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingMode::Round => "round",
            RoundingMode::RoundHalfEven => "round_half_even",
            RoundingMode::Truncate => "truncate",
            RoundingMode::Ceil => "ceil",
        })
    }
}

impl FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "round" => Ok(RoundingMode::Round),
            "round_half_even" | "half_even" => Ok(RoundingMode::RoundHalfEven),
            "truncate" | "trunc" | "floor" => Ok(RoundingMode::Truncate),
            "ceil" | "ceiling" => Ok(RoundingMode::Ceil),
            other => Err(Error::Schema(format!(
                "unknown rounding mode `{other}` (expected round, truncate or ceil)"
            ))),
        }
    }
}

/// A score printed with a fixed number of decimals: `scaled / 10^digits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecimalScore {
    pub scaled: i64,
    pub digits: u32,
}

impl DecimalScore {
    pub fn to_rational(&self) -> Rational {
        Rational::new(self.scaled.into(), pow10(self.digits))
    }
}

impl fmt::Display for DecimalScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&rational::format_decimal(&self.to_rational(), self.digits))
    }
}

/// Rounds `x` to `k` decimals the way a report author would.
pub fn round_score(x: &Rational, k: u32, mode: RoundingMode) -> DecimalScore {
    let scaled = x * Rational::from_integer(pow10(k));
    let units = match mode {
        RoundingMode::Round => {
            let half = ratio(1, 2);
            if scaled.is_negative() {
                -((-scaled + half).floor())
            } else {
                (scaled + half).floor()
            }
        }
        RoundingMode::RoundHalfEven => {
            let floor = scaled.floor();
            let frac = &scaled - &floor;
            let half = ratio(1, 2);
            if frac > half || (frac == half && floor.to_integer().is_odd()) {
                floor + Rational::one()
            } else {
                floor
            }
        }
        RoundingMode::Truncate => scaled.trunc(),
        RoundingMode::Ceil => scaled.ceil(),
    };
    let scaled = i64::try_from(units.to_integer()).expect("score magnitude fits in i64");
    DecimalScore { scaled, digits: k }
}

/// Numerical uncertainty `eps` of a reported decimal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Uncertainty {
    #[serde(with = "rational::serde_rational")]
    eps: Rational,
}

impl Uncertainty {
    pub fn new(eps: Rational) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::InvalidScore(format!(
                "uncertainty must be positive, got {}",
                rational::format_exact(&eps)
            )));
        }
        Ok(Self { eps })
    }

    /// Half a unit in the last place for rounding, a full unit for
    /// truncation and ceiling.
    pub fn for_digits(k: u32, mode: RoundingMode) -> Self {
        let unit = rational::ulp(k);
        let eps = match mode {
            RoundingMode::Round | RoundingMode::RoundHalfEven => unit / uint(2),
            RoundingMode::Truncate | RoundingMode::Ceil => unit,
        };
        Self { eps }
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }
}

/// A reported image-level triplet together with its reporting precision.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoreTriplet {
    pub scores: Scores,
    pub digits: u32,
    pub rounding: RoundingMode,
}

/// Reports with fewer decimals are too coarse for the tests to separate the
/// evaluation regions.
pub const MIN_REPORTED_DIGITS: u32 = 3;

impl ScoreTriplet {
    pub fn new(scores: Scores, digits: u32, rounding: RoundingMode) -> Result<Self> {
        if digits < MIN_REPORTED_DIGITS {
            return Err(Error::InvalidScore(format!(
                "scores must be reported to at least {MIN_REPORTED_DIGITS} decimals, got {digits}"
            )));
        }
        validate_reported(&scores, digits)?;
        Ok(Self {
            scores,
            digits,
            rounding,
        })
    }

    /// Builds a triplet from decimal literals such as `"0.9473"`.
    pub fn parse(
        acc: &str,
        sens: &str,
        spec: &str,
        digits: u32,
        rounding: RoundingMode,
    ) -> Result<Self> {
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

pub(crate) fn validate_reported(scores: &Scores, digits: u32) -> Result<()> {
    if !scores.in_unit_interval() {
        return Err(Error::InvalidScore(format!(
            "scores must lie in [0, 1]: acc={}, sens={}, spec={}",
            rational::format_exact(&scores.acc),
            rational::format_exact(&scores.sens),
            rational::format_exact(&scores.spec)
        )));
    }
    for (name, x) in [("acc", &scores.acc), ("sens", &scores.sens), ("spec", &scores.spec)] {
        if !rational::is_representable(x, digits) {
            return Err(Error::InvalidScore(format!(
                "{name}={} has more than {digits} decimals",
                rational::format_exact(x)
            )));
        }
    }
    Ok(())
}

/// Positive and negative pixel totals of one image under one region
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageCounts {
    pub p: u64,
    pub n: u64,
}

impl ImageCounts {
    pub fn new(p: u64, n: u64) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::InvalidCounts(format!(
                "an image needs p >= 1 and n >= 1 (p={p}, n={n})"
            )));
        }
        Ok(Self { p, n })
    }

    pub fn total(&self) -> u64 {
        self.p + self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisTag {
    FovOnly,
    AllPixels,
    Custom,
}

impl fmt::Display for HypothesisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisTag::FovOnly => "fov",
            HypothesisTag::AllPixels => "all",
            HypothesisTag::Custom => "custom",
        })
    }
}

impl FromStr for HypothesisTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fov" | "fov_only" | "f" => Ok(HypothesisTag::FovOnly),
            "all" | "all_pixels" | "a" => Ok(HypothesisTag::AllPixels),
            "custom" => Ok(HypothesisTag::Custom),
            other => Err(Error::Schema(format!(
                "unknown hypothesis `{other}` (expected fov or all)"
            ))),
        }
    }
}

/// Per-image counts assumed by one evaluation-region hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionHypothesis {
    pub tag: HypothesisTag,
    pub counts: Vec<ImageCounts>,
}

impl RegionHypothesis {
    pub fn new(tag: HypothesisTag, counts: Vec<ImageCounts>) -> Self {
        Self { tag, counts }
    }
}

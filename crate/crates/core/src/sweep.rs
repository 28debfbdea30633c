//! Region-growing sweep measuring how sharply the consistency tests
//! separate the two region hypotheses.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::consistency::{aggregated_test, image_level_test};
use crate::dataset::{evaluate_segmentation, BinaryImage, DatasetEntry};
use crate::error::{Error, Result};
use crate::lp::SearchBudget;
use crate::rational::{format_decimal, uint, Rational};
use crate::score::{scores_from_counts, HypothesisTag, ImageCounts, RoundingMode, Scores, Uncertainty};

/// Neighbourhood added by one dilation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuringElement {
    /// 3x3 square, 8-connected.
    #[default]
    Square3,
    /// Plus-shaped, 4-connected.
    Cross3,
}

impl fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructuringElement::Square3 => "square3",
            StructuringElement::Cross3 => "cross3",
        })
    }
}

impl FromStr for StructuringElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square3" | "square" => Ok(Self::Square3),
            "cross3" | "cross" => Ok(Self::Cross3),
            other => Err(Error::Schema(format!("unknown structuring element {other:?}"))),
        }
    }
}

fn dilate_once(mask: &BinaryImage, element: StructuringElement) -> BinaryImage {
    let (w, h) = (mask.width(), mask.height());
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    if element == StructuringElement::Cross3 && nx != x && ny != y {
                        continue;
                    }
                    out.set(nx, ny, true);
                }
            }
        }
    }
    out
}

/// Applies `steps` dilations with `element`.
pub fn dilate_with(mask: &BinaryImage, steps: u32, element: StructuringElement) -> BinaryImage {
    let mut out = mask.clone();
    for _ in 0..steps {
        if out.is_full() {
            break;
        }
        out = dilate_once(&out, element);
    }
    out
}

/// Dilation with the default 3x3 square.
pub fn dilate(mask: &BinaryImage, steps: u32) -> BinaryImage {
    dilate_with(mask, steps, StructuringElement::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ImageLevel,
    Aggregated,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::ImageLevel => "image_level",
            TestKind::Aggregated => "aggregated",
        })
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image_level" | "image" => Ok(Self::ImageLevel),
            "aggregated" | "aggregate" => Ok(Self::Aggregated),
            other => Err(Error::Schema(format!("unknown test kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPoint {
    pub steps: u32,
    pub region_fraction: Rational,
    pub pass_rate_fov: Rational,
    pub pass_rate_all: Rational,
    /// Mean unrounded accuracy in the grown region.
    pub mean_acc: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitivityCurve {
    pub digits: u32,
    pub test_kind: TestKind,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub element: StructuringElement,
    pub rounding: RoundingMode,
    pub budget: SearchBudget,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            element: StructuringElement::default(),
            rounding: RoundingMode::Round,
            budget: SearchBudget::default(),
        }
    }
}

/// Exact per-image scores of annotation 2 against annotation 1 inside each
/// region of one dilation level.
struct Level {
    steps: u32,
    fraction: Rational,
    scores: Vec<Scores>,
}

fn fraction(region: &BinaryImage) -> Rational {
    Rational::new(region.count_ones().into(), (region.len() as u64).into())
}

/// Grows every FoV mask one step at a time until all images are covered and
/// tests the rounded scores of each level against both fixed hypotheses.
pub fn run_sweep(
    entries: &[DatasetEntry],
    digits_list: &[u32],
    kind: TestKind,
    options: &SweepOptions,
) -> Result<Vec<SensitivityCurve>> {
    if entries.is_empty() {
        return Err(Error::Missing("the sweep needs at least one image".into()));
    }
    let mut segs = Vec::with_capacity(entries.len());
    for e in entries {
        let seg = e.second_annotation.as_ref().ok_or_else(|| {
            Error::Missing(format!("image {} has no second annotation to use as segmentation", e.image_id))
        })?;
        segs.push(seg);
    }
    let fov_counts: Vec<ImageCounts> = entries.iter().map(|e| e.counts(HypothesisTag::FovOnly)).collect::<Result<_>>()?;
    let all_counts: Vec<ImageCounts> = entries.iter().map(|e| e.counts(HypothesisTag::AllPixels)).collect::<Result<_>>()?;

    let mut regions: Vec<BinaryImage> = entries.iter().map(|e| e.fov_mask.clone()).collect();
    let mut levels = Vec::new();
    let m = uint(entries.len() as u64);
    for steps in 0.. {
        let scores = entries
            .par_iter()
            .zip(&segs)
            .zip(&regions)
            .map(|((e, seg), region)| scores_from_counts(&evaluate_segmentation(&e.ground_truth, seg, region)?))
            .collect::<Result<Vec<_>>>()?;
        let total: Rational = regions.iter().map(fraction).sum();
        levels.push(Level {
            steps,
            fraction: total / &m,
            scores,
        });
        if regions.iter().all(BinaryImage::is_full) {
            break;
        }
        regions = regions.par_iter().map(|r| dilate_with(r, 1, options.element)).collect();
    }

    digits_list
        .iter()
        .map(|&digits| {
            let u = Uncertainty::for_digits(digits, options.rounding);
            let points = levels
                .par_iter()
                .map(|level| evaluate_level(level, digits, kind, &u, &fov_counts, &all_counts, options))
                .collect::<Result<Vec<_>>>()?;
            Ok(SensitivityCurve {
                digits,
                test_kind: kind,
                points,
            })
        })
        .collect()
}

fn evaluate_level(
    level: &Level,
    digits: u32,
    kind: TestKind,
    u: &Uncertainty,
    fov_counts: &[ImageCounts],
    all_counts: &[ImageCounts],
    options: &SweepOptions,
) -> Result<SweepPoint> {
    let mean = Scores::mean(&level.scores).expect("non-empty");
    let (pass_rate_fov, pass_rate_all) = match kind {
        TestKind::ImageLevel => {
            let rate = |counts: &[ImageCounts]| {
                let passed = level
                    .scores
                    .iter()
                    .zip(counts)
                    .filter(|(s, c)| image_level_test(&s.rounded(digits, options.rounding), **c, u).passed)
                    .count();
                Rational::new((passed as u64).into(), (counts.len() as u64).into())
            };
            (rate(fov_counts), rate(all_counts))
        }
        TestKind::Aggregated => {
            let reported = mean.rounded(digits, options.rounding);
            let rate = |counts: &[ImageCounts]| -> Result<Rational> {
                let v = aggregated_test(&reported, counts, u, options.budget)?;
                Ok(if v.passed { Rational::one() } else { Rational::zero() })
            };
            (rate(fov_counts)?, rate(all_counts)?)
        }
    };
    Ok(SweepPoint {
        steps: level.steps,
        region_fraction: level.fraction.clone(),
        pass_rate_fov,
        pass_rate_all,
        mean_acc: mean.acc,
    })
}

const CSV_DIGITS: u32 = 8;

/// Writes curves as `region_fraction,pass_rate_fov,pass_rate_all,mean_acc,digits,test_kind`.
pub fn write_curves_csv<W: Write>(out: W, curves: &[SensitivityCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Schema(format!("writing sweep csv: {e}"));
    w.write_record(["region_fraction", "pass_rate_fov", "pass_rate_all", "mean_acc", "digits", "test_kind"])
        .map_err(io)?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                format_decimal(&p.region_fraction, CSV_DIGITS),
                format_decimal(&p.pass_rate_fov, CSV_DIGITS),
                format_decimal(&p.pass_rate_all, CSV_DIGITS),
                format_decimal(&p.mean_acc, CSV_DIGITS),
                curve.digits.to_string(),
                curve.test_kind.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Schema(format!("writing sweep csv: {e}")))?;
    Ok(())
}

/// Settings that shaped a sweep, stored next to its CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub structuring_element: StructuringElement,
    pub step: u32,
    pub rounding: RoundingMode,
    pub images: usize,
    pub levels: usize,
    pub digits: Vec<u32>,
    pub test_kind: TestKind,
}

//! Synthetic corpora with known evaluation regions, for testing the
//! pipeline end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ClaimedRegion, CorpusRow, Principle, Scope};
use crate::dataset::{evaluate_segmentation, BinaryImage, DatasetEntry};
use crate::error::Result;
use crate::rational::{ratio, Rational};
use crate::score::{scores_from_counts, RoundingMode, Scores};
use crate::synth::synth_segmentation;

/// Region the synthetic authors actually evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthRegion {
    Fov,
    AllPixels,
    /// FoV figures with a shifted accuracy, consistent with neither region.
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperPlan {
    pub key: String,
    pub truth: TruthRegion,
    pub scope: Scope,
    pub digits: u32,
    pub rounding: RoundingMode,
    /// Aggregate rows, each from its own segmentation run.
    pub aggregate_rows: usize,
    pub claimed_region: Option<ClaimedRegion>,
    pub year: Option<i32>,
    pub principle: Option<Principle>,
}

#[derive(Debug, Clone)]
pub struct SyntheticPaper {
    pub plan: PaperPlan,
    pub rows: Vec<CorpusRow>,
    /// Exact mean FoV scores of the run behind each aggregate row, or of the
    /// image rows.
    pub true_fov: Vec<Scores>,
}

/// Accuracy offset that makes a row inconsistent with both regions.
pub fn outlier_shift() -> Rational {
    ratio(1, 100)
}

pub fn random_plans(rng: &mut ChaCha8Rng, n: usize) -> Vec<PaperPlan> {
    let principles = [Principle::Deep, Principle::Classical, Principle::Supervised, Principle::Other];
    (0..n)
        .map(|i| {
            let truth = [TruthRegion::Fov, TruthRegion::AllPixels, TruthRegion::Outlier][i % 3];
            let scope = if rng.random_bool(0.4) { Scope::Image } else { Scope::Aggregate };
            let claimed_region = match (truth, rng.random_range(0..3)) {
                (TruthRegion::Fov, 0) => Some(ClaimedRegion::F),
                (TruthRegion::AllPixels, 0) => Some(ClaimedRegion::A),
                _ => None,
            };
            PaperPlan {
                key: format!("paper{:03}", i + 1),
                truth,
                scope,
                digits: rng.random_range(3..=4),
                rounding: if rng.random_bool(0.8) { RoundingMode::Round } else { RoundingMode::Truncate },
                aggregate_rows: if rng.random_bool(0.25) { 2 } else { 1 },
                claimed_region,
                year: Some(rng.random_range(2005..=2022)),
                principle: Some(principles[rng.random_range(0..principles.len())]),
            }
        })
        .collect()
}

fn region_scores(entry: &DatasetEntry, seg: &BinaryImage, truth: TruthRegion) -> Result<(Scores, Scores)> {
    let fov = scores_from_counts(&evaluate_segmentation(&entry.ground_truth, seg, &entry.fov_mask)?)?;
    let reported = match truth {
        TruthRegion::Fov => fov.clone(),
        TruthRegion::AllPixels => {
            let full = BinaryImage::filled(entry.fov_mask.width(), entry.fov_mask.height(), true)?;
            scores_from_counts(&evaluate_segmentation(&entry.ground_truth, seg, &full)?)?
        }
        TruthRegion::Outlier => {
            let mut s = fov.clone();
            s.acc = (s.acc - outlier_shift()).max(Rational::from_integer(0.into()));
            s
        }
    };
    Ok((reported, fov))
}

/// Segments every entry once and reports figures per the plan.
pub fn synth_paper(rng: &mut ChaCha8Rng, entries: &[DatasetEntry], plan: &PaperPlan) -> Result<SyntheticPaper> {
    let leak = ratio(1, 100);
    let row = |scope: Scope, image_id: Option<String>, s: &Scores| CorpusRow {
        paper_key: plan.key.clone(),
        scope,
        image_id,
        scores: s.rounded(plan.digits, plan.rounding),
        digits: plan.digits,
        rounding: plan.rounding,
        claimed_region: plan.claimed_region,
        year: plan.year,
        principle: plan.principle,
    };
    let run = |rng: &mut ChaCha8Rng| -> Result<Vec<(Scores, Scores)>> {
        entries
            .iter()
            .map(|e| {
                let seg = synth_segmentation(rng, e, &leak)?;
                region_scores(e, &seg, plan.truth)
            })
            .collect()
    };
    let mut rows = Vec::new();
    let mut true_fov = Vec::new();
    match plan.scope {
        Scope::Image => {
            let per_image = run(rng)?;
            for (e, (reported, _)) in entries.iter().zip(&per_image) {
                rows.push(row(Scope::Image, Some(e.image_id.clone()), reported));
            }
            true_fov.push(Scores::mean(per_image.iter().map(|p| &p.1)).expect("entries"));
        }
        Scope::Aggregate => {
            for _ in 0..plan.aggregate_rows.max(1) {
                let per_image = run(rng)?;
                let reported = Scores::mean(per_image.iter().map(|p| &p.0)).expect("entries");
                rows.push(row(Scope::Aggregate, None, &reported));
                true_fov.push(Scores::mean(per_image.iter().map(|p| &p.1)).expect("entries"));
            }
        }
    }
    Ok(SyntheticPaper {
        plan: plan.clone(),
        rows,
        true_fov,
    })
}

/// `n` papers cycling through FoV, all-pixels and outlier authors.
pub fn synth_corpus(seed: u64, entries: &[DatasetEntry], n: usize) -> Result<Vec<SyntheticPaper>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans = random_plans(&mut rng, n);
    plans.iter().map(|p| synth_paper(&mut rng, entries, p)).collect()
}

pub fn corpus_rows(papers: &[SyntheticPaper]) -> Vec<CorpusRow> {
    papers.iter().flat_map(|p| p.rows.iter().cloned()).collect()
}

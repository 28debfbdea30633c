//! Corpus pipeline: methodology categorization of published figures,
//! adjustment of all-pixels figures, rankings and summary statistics.

mod corpus;
mod report;
mod stats;
pub mod synthetic;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::adjust::{adjust_aggregated, adjust_image_level, AdjustMethod, AdjustOptions, AdjustedScore, AdjustedTriplet};
use crate::consistency::{aggregated_test, image_level_test};
use crate::dataset::{DatasetCounts, DatasetSplits};
use crate::error::{Error, Result};
use crate::lp::SearchBudget;
use crate::rational::{to_f64, Rational};
use crate::score::{HypothesisTag, Scores};

pub use corpus::{
    group_papers, load_corpus, parse_corpus, write_corpus_csv, ClaimedRegion, CorpusRow, PaperRecord, Principle,
    Scope, CORPUS_COLUMNS,
};
pub use report::{render_categories_csv, render_ranking_csv, render_report_md, render_scatter_csv, write_bundle, BUNDLE_FILES};
pub use stats::{binomial_test, rank_correlation, two_sample_t_test, CorrelationKind, TTest, TTestKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Category {
    #[serde(rename = "FoV")]
    Fov,
    AllPixels,
    Outlier,
    IndeterminateBoth,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Fov => "FoV",
            Category::AllPixels => "AllPixels",
            Category::Outlier => "Outlier",
            Category::IndeterminateBoth => "IndeterminateBoth",
        })
    }
}

/// Outcome of the majority rule for one paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Categorization {
    pub category: Category,
    /// Rows the decision was based on: image rows when present.
    pub source: Scope,
    pub rows: usize,
    pub passed_fov: usize,
    pub passed_all: usize,
    /// Per decisive row: passes under FoV and under all pixels.
    pub row_verdicts: Vec<(bool, bool)>,
    pub inconclusive_rows: usize,
}

fn majority(category_rows: usize, passed: usize) -> bool {
    2 * passed > category_rows
}

/// Applies the strict-majority rule to the paper's image rows, or to its
/// aggregate rows when it reports no image rows.
pub fn categorize(rec: &PaperRecord, counts: &DatasetCounts, budget: SearchBudget) -> Result<Categorization> {
    let mut row_verdicts = Vec::new();
    let mut inconclusive_rows = 0;
    let source = if !rec.image_rows.is_empty() {
        for (id, t) in &rec.image_rows {
            let record = counts
                .get(id)
                .ok_or_else(|| Error::Missing(format!("paper {}: no counts for image {id}", rec.key)))?;
            let u = t.uncertainty();
            row_verdicts.push((
                image_level_test(&t.scores, record.fov(), &u).passed,
                image_level_test(&t.scores, record.all(), &u).passed,
            ));
        }
        Scope::Image
    } else if !rec.aggregate_rows.is_empty() {
        if counts.records.is_empty() {
            return Err(Error::Missing("aggregated rows need a non-empty counts file".into()));
        }
        let fov = counts.counts(HypothesisTag::FovOnly)?;
        let all = counts.counts(HypothesisTag::AllPixels)?;
        for t in &rec.aggregate_rows {
            let u = t.uncertainty();
            let f = aggregated_test(&t.scores, &fov, &u, budget)?;
            let a = aggregated_test(&t.scores, &all, &u, budget)?;
            inconclusive_rows += usize::from(f.inconclusive || a.inconclusive);
            row_verdicts.push((f.passed, a.passed));
        }
        Scope::Aggregate
    } else {
        return Err(Error::Schema(format!("paper {} has no rows", rec.key)));
    };
    let rows = row_verdicts.len();
    let passed_fov = row_verdicts.iter().filter(|v| v.0).count();
    let passed_all = row_verdicts.iter().filter(|v| v.1).count();
    let category = match (majority(rows, passed_fov), majority(rows, passed_all)) {
        (true, false) => Category::Fov,
        (false, true) => Category::AllPixels,
        (true, true) => Category::IndeterminateBoth,
        (false, false) => Category::Outlier,
    };
    Ok(Categorization {
        category,
        source,
        rows,
        passed_fov,
        passed_all,
        row_verdicts,
        inconclusive_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    Passthrough,
    ImageLevel,
    Aggregated,
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMethod::Passthrough => "passthrough",
            RankMethod::ImageLevel => "image_level",
            RankMethod::Aggregated => "aggregated",
        })
    }
}

impl From<AdjustMethod> for RankMethod {
    fn from(m: AdjustMethod) -> Self {
        match m {
            AdjustMethod::ImageLevel => RankMethod::ImageLevel,
            AdjustMethod::Aggregated => RankMethod::Aggregated,
        }
    }
}

/// FoV-domain figures used to rank a paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedScores {
    pub acc: AdjustedScore,
    pub sens: AdjustedScore,
    pub spec: AdjustedScore,
    pub method: RankMethod,
    /// Rows that entered the figures.
    pub rows_used: usize,
}

impl RankedScores {
    fn passthrough(s: &Scores, rows_used: usize) -> Self {
        let point = |x: &Rational| AdjustedScore::from_interval(x.clone(), x.clone());
        Self {
            acc: point(&s.acc),
            sens: point(&s.sens),
            spec: point(&s.spec),
            method: RankMethod::Passthrough,
            rows_used,
        }
    }

    fn adjusted(t: AdjustedTriplet, rows_used: usize) -> Self {
        Self {
            method: t.method.into(),
            acc: t.acc,
            sens: t.sens,
            spec: t.spec,
            rows_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperResult {
    pub key: String,
    /// Final category, after any downgrade for failed adjustment.
    pub category: Category,
    pub categorization: Categorization,
    /// Published headline figures: the best aggregate row, else the mean of
    /// the image rows.
    pub reported: Scores,
    /// Hypothesis the ranked figures assume, if the paper is ranked.
    pub treated_as: Option<Category>,
    pub ranked: Option<RankedScores>,
    pub claimed_region: Option<ClaimedRegion>,
    pub year: Option<i32>,
    pub principle: Option<Principle>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingEntry {
    pub rank: usize,
    pub key: String,
}

/// A statistic, or why it is undefined for this corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat<T> {
    Value(T),
    Undefined(String),
}

impl<T> Stat<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Stat::Value(v) => Some(v),
            Stat::Undefined(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyStats {
    pub fov_papers: u64,
    pub all_pixels_papers: u64,
    /// One-sided binomial p-value of the FoV count among FoV and all-pixels
    /// papers.
    pub binomial_p: Stat<f64>,
    pub ttest: Stat<TTest>,
    pub ttest_kind: TTestKind,
    pub rank_correlation: Stat<f64>,
    pub correlation_kind: CorrelationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyReport {
    /// Input order.
    pub papers: Vec<PaperResult>,
    /// Ranked papers, best first, by FoV-domain accuracy.
    pub ranking: Vec<RankingEntry>,
    /// The same papers ordered by published accuracy.
    pub original_ranking: Vec<String>,
    pub stats: SurveyStats,
}

impl SurveyReport {
    pub fn paper(&self, key: &str) -> Option<&PaperResult> {
        self.papers.iter().find(|p| p.key == key)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SurveyOptions {
    pub adjust: AdjustOptions,
    pub ttest: TTestKind,
    pub correlation: CorrelationKind,
}

fn headline(rec: &PaperRecord) -> Scores {
    if let Some(best) = rec
        .aggregate_rows
        .iter()
        .reduce(|best, t| if t.scores.acc > best.scores.acc { t } else { best })
    {
        return best.scores.clone();
    }
    Scores::mean(rec.image_rows.iter().map(|(_, t)| &t.scores)).expect("papers have rows")
}

/// Which region the ranked figures assume, by category and claim.
fn treatment(category: Category, claim: Option<ClaimedRegion>) -> Option<Category> {
    match (category, claim) {
        (Category::Fov, _) | (Category::IndeterminateBoth, Some(ClaimedRegion::F)) => Some(Category::Fov),
        (Category::AllPixels, _) | (Category::IndeterminateBoth, Some(ClaimedRegion::A)) => Some(Category::AllPixels),
        _ => None,
    }
}

fn rank_paper(
    rec: &PaperRecord,
    cat: &Categorization,
    treated: Category,
    counts: &DatasetCounts,
    splits: &DatasetSplits,
    options: &SurveyOptions,
    diagnostics: &mut Vec<String>,
) -> Result<RankedScores> {
    let usable: Vec<usize> = cat
        .row_verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| if treated == Category::Fov { v.0 } else { v.1 })
        .map(|(i, _)| i)
        .collect();
    match (cat.source, treated) {
        (Scope::Image, Category::Fov) => {
            let rows: Vec<&Scores> = usable.iter().map(|&i| &rec.image_rows[i].1.scores).collect();
            Ok(RankedScores::passthrough(&Scores::mean(rows).expect("majority rows"), usable.len()))
        }
        (Scope::Aggregate, Category::Fov) => {
            let best = best_row(rec, &usable);
            Ok(RankedScores::passthrough(&best.scores, 1))
        }
        (Scope::Image, _) => {
            let mut adjusted = Vec::new();
            for &i in &usable {
                let (id, t) = &rec.image_rows[i];
                let split = splits
                    .get(id)
                    .ok_or_else(|| Error::Missing(format!("paper {}: no split counts for image {id}", rec.key)))?;
                match adjust_image_level(&t.scores, &split, &t.uncertainty(), &options.adjust) {
                    Ok(a) => adjusted.push(a),
                    Err(Error::NotAdjustable(why)) => diagnostics.push(format!("image {id}: {why}")),
                    Err(e) => return Err(e),
                }
            }
            if adjusted.is_empty() {
                return Err(Error::NotAdjustable("no image row could be adjusted".into()));
            }
            let mean = |f: fn(&AdjustedTriplet) -> &AdjustedScore| {
                AdjustedScore::mean(adjusted.iter().map(f)).expect("non-empty")
            };
            let rows_used = adjusted.len();
            Ok(RankedScores {
                acc: mean(|a| &a.acc),
                sens: mean(|a| &a.sens),
                spec: mean(|a| &a.spec),
                method: RankMethod::ImageLevel,
                rows_used,
            })
        }
        (Scope::Aggregate, _) => {
            let best = best_row(rec, &usable);
            if counts.records.is_empty() {
                return Err(Error::Missing("aggregated adjustment needs counts".into()));
            }
            let t = adjust_aggregated(&best.scores, &splits.splits(), &best.uncertainty(), &options.adjust)?;
            Ok(RankedScores::adjusted(t, 1))
        }
    }
}

fn best_row<'a>(rec: &'a PaperRecord, usable: &[usize]) -> &'a crate::consistency::AggregatedTriplet {
    usable
        .iter()
        .map(|&i| &rec.aggregate_rows[i])
        .reduce(|best, t| if t.scores.acc > best.scores.acc { t } else { best })
        .expect("majority rows")
}

fn analyze_paper(rec: &PaperRecord, counts: &DatasetCounts, splits: &DatasetSplits, options: &SurveyOptions) -> Result<PaperResult> {
    let categorization = categorize(rec, counts, options.adjust.budget)?;
    let mut diagnostics = Vec::new();
    if categorization.inconclusive_rows > 0 {
        diagnostics.push(format!(
            "{} row(s) passed only on the relaxation after the node budget ran out",
            categorization.inconclusive_rows
        ));
    }
    let mut category = categorization.category;
    let mut treated_as = treatment(category, rec.claimed_region);
    if category == Category::IndeterminateBoth && treated_as.is_none() {
        diagnostics.push("consistent with both regions and no claim in the text; not ranked".into());
    }
    let mut ranked = None;
    if let Some(treated) = treated_as {
        match rank_paper(rec, &categorization, treated, counts, splits, options, &mut diagnostics) {
            Ok(r) => ranked = Some(r),
            Err(Error::NotAdjustable(why)) => {
                diagnostics.push(format!("downgraded to Outlier: {why}"));
                category = Category::Outlier;
                treated_as = None;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PaperResult {
        key: rec.key.clone(),
        category,
        categorization,
        reported: headline(rec),
        treated_as,
        ranked,
        claimed_region: rec.claimed_region,
        year: rec.year,
        principle: rec.principle,
        diagnostics,
    })
}

/// Categorizes every paper, ranks the non-outliers in the FoV domain and
/// computes the summary statistics.
pub fn analyze(
    corpus: &[PaperRecord],
    counts: &DatasetCounts,
    splits: Option<&DatasetSplits>,
    options: &SurveyOptions,
) -> Result<SurveyReport> {
    if corpus.is_empty() {
        return Err(Error::Schema("empty corpus".into()));
    }
    let derived;
    let splits = match splits {
        Some(s) => {
            s.check_against(counts)?;
            s
        }
        None => {
            derived = DatasetSplits::from_counts(counts);
            &derived
        }
    };
    let papers = corpus
        .par_iter()
        .map(|rec| analyze_paper(rec, counts, splits, options))
        .collect::<Result<Vec<_>>>()?;

    let mut ranked: Vec<&PaperResult> = papers.iter().filter(|p| p.ranked.is_some()).collect();
    let by_scores = |a: &Scores, b: &Scores| b.acc.cmp(&a.acc).then_with(|| b.spec.cmp(&a.spec));
    ranked.sort_by(|a, b| {
        let (ra, rb) = (a.ranked.as_ref().unwrap(), b.ranked.as_ref().unwrap());
        rb.acc
            .value
            .cmp(&ra.acc.value)
            .then_with(|| rb.spec.value.cmp(&ra.spec.value))
            .then_with(|| a.key.cmp(&b.key))
    });
    let ranking: Vec<RankingEntry> = ranked
        .iter()
        .enumerate()
        .map(|(i, p)| RankingEntry {
            rank: i + 1,
            key: p.key.clone(),
        })
        .collect();
    let mut original = ranked.clone();
    original.sort_by(|a, b| by_scores(&a.reported, &b.reported).then_with(|| a.key.cmp(&b.key)));
    let original_ranking: Vec<String> = original.iter().map(|p| p.key.clone()).collect();

    let stats = summary_stats(&papers, &ranking, &original_ranking, options)?;
    Ok(SurveyReport {
        papers,
        ranking,
        original_ranking,
        stats,
    })
}

fn summary_stats(papers: &[PaperResult], ranking: &[RankingEntry], original: &[String], options: &SurveyOptions) -> Result<SurveyStats> {
    let count = |c: Category| papers.iter().filter(|p| p.category == c).count() as u64;
    let (fov_papers, all_pixels_papers) = (count(Category::Fov), count(Category::AllPixels));
    let binomial_p = if fov_papers + all_pixels_papers == 0 {
        Stat::Undefined("no paper categorized as FoV or AllPixels".into())
    } else {
        Stat::Value(to_f64(&binomial_test(fov_papers, fov_papers + all_pixels_papers)?))
    };
    let group = |c: Category| -> Vec<f64> {
        papers
            .iter()
            .filter(|p| p.category == c)
            .filter_map(|p| p.ranked.as_ref())
            .map(|r| to_f64(&r.acc.value))
            .collect()
    };
    let ttest = match two_sample_t_test(&group(Category::Fov), &group(Category::AllPixels), options.ttest) {
        Ok(t) => Stat::Value(t),
        Err(Error::Degenerate(why)) => Stat::Undefined(why),
        Err(e) => return Err(e),
    };
    let adjusted: Vec<String> = ranking.iter().map(|r| r.key.clone()).collect();
    let rank_correlation = match rank_correlation(original, &adjusted, options.correlation) {
        Ok(r) => Stat::Value(r),
        Err(Error::Degenerate(why)) => Stat::Undefined(why),
        Err(e) => return Err(e),
    };
    Ok(SurveyStats {
        fov_papers,
        all_pixels_papers,
        binomial_p,
        ttest,
        ttest_kind: options.ttest,
        rank_correlation,
        correlation_kind: options.correlation,
    })
}

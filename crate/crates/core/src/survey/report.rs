use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Category, PaperResult, Scope, Stat, SurveyReport};
use crate::error::{Error, Result};
use crate::rational::{format_decimal, Rational};

pub const BUNDLE_FILES: [&str; 4] = ["report.md", "categories.csv", "ranking.csv", "scatter.csv"];

const TABLE_DIGITS: u32 = 4;
const CSV_DIGITS: u32 = 6;

fn dec(x: &Rational, k: u32) -> String {
    format_decimal(x, k)
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn p_value(p: f64) -> String {
    if p == 0.0 || p >= 1e-3 {
        format!("{p:.4}")
    } else {
        format!("{p:.3e}")
    }
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Schema(format!("writing csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Schema(format!("writing csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_categories_csv(report: &SurveyReport) -> Result<String> {
    let mut rows = vec![[
        "paper_key",
        "category",
        "source",
        "rows",
        "passed_fov",
        "passed_all",
        "treated_as",
        "claimed_region",
        "year",
        "principle",
        "diagnostics",
    ]
    .map(String::from)
    .to_vec()];
    for p in &report.papers {
        let c = &p.categorization;
        rows.push(vec![
            p.key.clone(),
            p.category.to_string(),
            c.source.to_string(),
            c.rows.to_string(),
            c.passed_fov.to_string(),
            c.passed_all.to_string(),
            opt(&p.treated_as),
            opt(&p.claimed_region),
            opt(&p.year),
            opt(&p.principle),
            p.diagnostics.join("; "),
        ]);
    }
    csv_text(rows)
}

pub fn render_ranking_csv(report: &SurveyReport) -> Result<String> {
    let mut rows = vec![[
        "rank",
        "paper_key",
        "category",
        "method",
        "acc",
        "acc_half_width",
        "sens",
        "sens_half_width",
        "spec",
        "spec_half_width",
        "reported_acc",
        "original_rank",
        "year",
        "principle",
    ]
    .map(String::from)
    .to_vec()];
    for entry in &report.ranking {
        let p = report.paper(&entry.key).expect("ranked papers exist");
        let r = p.ranked.as_ref().expect("ranked papers carry scores");
        let original = report.original_ranking.iter().position(|k| *k == entry.key).expect("same key set") + 1;
        rows.push(vec![
            entry.rank.to_string(),
            p.key.clone(),
            p.category.to_string(),
            r.method.to_string(),
            dec(&r.acc.value, CSV_DIGITS),
            dec(&r.acc.half_width, CSV_DIGITS),
            dec(&r.sens.value, CSV_DIGITS),
            dec(&r.sens.half_width, CSV_DIGITS),
            dec(&r.spec.value, CSV_DIGITS),
            dec(&r.spec.half_width, CSV_DIGITS),
            dec(&p.reported.acc, CSV_DIGITS),
            original.to_string(),
            opt(&p.year),
            opt(&p.principle),
        ]);
    }
    csv_text(rows)
}

/// FoV-domain accuracy and specificity of every paper: the ranked figures
/// where available, the published ones otherwise.
pub fn render_scatter_csv(report: &SurveyReport) -> Result<String> {
    let mut rows = vec![["paper_key", "category", "principle", "adj_acc", "adj_spec"].map(String::from).to_vec()];
    for p in &report.papers {
        let (acc, spec) = match &p.ranked {
            Some(r) => (&r.acc.value, &r.spec.value),
            None => (&p.reported.acc, &p.reported.spec),
        };
        rows.push(vec![
            p.key.clone(),
            p.category.to_string(),
            opt(&p.principle),
            dec(acc, CSV_DIGITS),
            dec(spec, CSV_DIGITS),
        ]);
    }
    csv_text(rows)
}

fn category_table(out: &mut String, papers: &[PaperResult]) {
    out.push_str("| Category | From image rows | From aggregate rows | Total |\n|---|---:|---:|---:|\n");
    for c in [Category::Fov, Category::AllPixels, Category::Outlier, Category::IndeterminateBoth] {
        let n = |s: Scope| papers.iter().filter(|p| p.category == c && p.categorization.source == s).count();
        let (i, a) = (n(Scope::Image), n(Scope::Aggregate));
        writeln!(out, "| {c} | {i} | {a} | {} |", i + a).unwrap();
    }
}

pub fn render_report_md(report: &SurveyReport) -> String {
    let mut out = String::new();
    out.push_str("# Survey report\n\n");
    writeln!(out, "Papers analysed: {}. Ranked: {}.\n", report.papers.len(), report.ranking.len()).unwrap();

    out.push_str("## Categories\n\n");
    category_table(&mut out, &report.papers);

    out.push_str("\n## Papers\n\n");
    out.push_str("| Key | Category | Source | Rows | Pass FoV | Pass all | Claimed | acc | sens | spec | Notes |\n");
    out.push_str("|---|---|---|---:|---:|---:|---|---:|---:|---:|---|\n");
    for p in &report.papers {
        let c = &p.categorization;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            p.key,
            p.category,
            c.source,
            c.rows,
            c.passed_fov,
            c.passed_all,
            opt(&p.claimed_region),
            dec(&p.reported.acc, TABLE_DIGITS),
            dec(&p.reported.sens, TABLE_DIGITS),
            dec(&p.reported.spec, TABLE_DIGITS),
            p.diagnostics.join("; ").replace('|', "/"),
        )
        .unwrap();
    }

    out.push_str("\n## Ranking in the FoV domain (outliers excluded)\n\n");
    out.push_str("| Rank | Key | Category | Method | acc | ± | sens | ± | spec | ± | Published acc | Published rank |\n");
    out.push_str("|---:|---|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for entry in &report.ranking {
        let p = report.paper(&entry.key).expect("ranked");
        let r = p.ranked.as_ref().expect("ranked");
        let original = report.original_ranking.iter().position(|k| *k == entry.key).expect("same keys") + 1;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            entry.rank,
            p.key,
            p.category,
            r.method,
            dec(&r.acc.value, TABLE_DIGITS),
            dec(&r.acc.half_width, TABLE_DIGITS),
            dec(&r.sens.value, TABLE_DIGITS),
            dec(&r.sens.half_width, TABLE_DIGITS),
            dec(&r.spec.value, TABLE_DIGITS),
            dec(&r.spec.half_width, TABLE_DIGITS),
            dec(&p.reported.acc, TABLE_DIGITS),
            original,
        )
        .unwrap();
    }

    let s = &report.stats;
    out.push_str("\n## Statistics\n\n");
    writeln!(out, "- FoV papers: {}; all-pixels papers: {}.", s.fov_papers, s.all_pixels_papers).unwrap();
    match &s.binomial_p {
        Stat::Value(p) => writeln!(
            out,
            "- Binomial test, one-sided P(X >= max(k, n-k)) with X ~ Bin(n, 1/2), k = {}, n = {}: p = {}.",
            s.fov_papers,
            s.fov_papers + s.all_pixels_papers,
            p_value(*p)
        ),
        Stat::Undefined(why) => writeln!(out, "- Binomial test: undefined ({why})."),
    }
    .unwrap();
    let kind = match s.ttest_kind {
        super::TTestKind::Welch => "Welch",
        super::TTestKind::Student => "Student (pooled)",
    };
    match &s.ttest {
        Stat::Value(t) => writeln!(
            out,
            "- {kind} t-test on ranked accuracy, FoV vs all-pixels papers: t = {:.4}, df = {:.2}, two-sided p = {}.",
            t.statistic,
            t.df,
            p_value(t.p_value)
        ),
        Stat::Undefined(why) => writeln!(out, "- {kind} t-test: undefined ({why})."),
    }
    .unwrap();
    let corr = match s.correlation_kind {
        super::CorrelationKind::Spearman => "Spearman",
        super::CorrelationKind::PearsonOnRanks => "Pearson (on ranks)",
    };
    match &s.rank_correlation {
        Stat::Value(r) => writeln!(out, "- {corr} correlation of published and FoV-domain rankings: {r:.4}."),
        Stat::Undefined(why) => writeln!(out, "- {corr} correlation: undefined ({why})."),
    }
    .unwrap();
    out
}

/// Writes the four report files into `dir`, creating it if needed.
pub fn write_bundle(report: &SurveyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let contents = [
        render_report_md(report),
        render_categories_csv(report)?,
        render_ranking_csv(report)?,
        render_scatter_csv(report)?,
    ];
    for (name, text) in BUNDLE_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

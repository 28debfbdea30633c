//! Reported-scores CSV: `image_id,acc,sens,spec,digits,rounding`.
//!
//! An empty `image_id` marks a mean over all images of the counts file.
//! Empty `digits` are inferred from the longest literal; empty `rounding`
//! means `round`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use scoregate_core::consistency::AggregatedTriplet;
use scoregate_core::rational::parse_decimal;
use scoregate_core::score::{RoundingMode, ScoreTriplet, Scores};
use serde::Deserialize;

pub const SCORE_COLUMNS: [&str; 6] = ["image_id", "acc", "sens", "spec", "digits", "rounding"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    image_id: Option<String>,
    acc: String,
    sens: String,
    spec: String,
    digits: Option<u32>,
    rounding: Option<String>,
}

#[derive(Debug, Clone)]
pub enum ScoreRow {
    Image { image_id: String, triplet: ScoreTriplet },
    Mean(AggregatedTriplet),
}

#[derive(Debug, Clone)]
pub struct ReportedRow {
    pub line: u64,
    pub row: ScoreRow,
}

impl ReportedRow {
    pub fn image_id(&self) -> Option<&str> {
        match &self.row {
            ScoreRow::Image { image_id, .. } => Some(image_id),
            ScoreRow::Mean(_) => None,
        }
    }

    pub fn scores(&self) -> &Scores {
        match &self.row {
            ScoreRow::Image { triplet, .. } => &triplet.scores,
            ScoreRow::Mean(t) => &t.scores,
        }
    }

    pub fn digits(&self) -> u32 {
        match &self.row {
            ScoreRow::Image { triplet, .. } => triplet.digits,
            ScoreRow::Mean(t) => t.digits,
        }
    }

    pub fn rounding(&self) -> RoundingMode {
        match &self.row {
            ScoreRow::Image { triplet, .. } => triplet.rounding,
            ScoreRow::Mean(t) => t.rounding,
        }
    }
}

fn parse_row(raw: RawRow) -> Result<ScoreRow> {
    let mut digits = 0;
    let mut values = Vec::with_capacity(3);
    for (name, text) in [("acc", &raw.acc), ("sens", &raw.sens), ("spec", &raw.spec)] {
        let (x, places) = parse_decimal(text).map_err(|e| anyhow!("field {name}: {e}"))?;
        digits = digits.max(places);
        values.push(x);
    }
    let digits = raw.digits.unwrap_or(digits);
    let rounding: RoundingMode = raw
        .rounding
        .as_deref()
        .unwrap_or("")
        .parse()
        .map_err(|e| anyhow!("field rounding: {e}"))?;
    let spec = values.pop().expect("three values");
    let sens = values.pop().expect("three values");
    let acc = values.pop().expect("three values");
    let scores = Scores::new(acc, sens, spec);
    match raw.image_id.map(|s| s.trim().to_string()).filter(|s| !s.is_empty()) {
        Some(image_id) => Ok(ScoreRow::Image {
            image_id,
            triplet: ScoreTriplet::new(scores, digits, rounding)?,
        }),
        None => Ok(ScoreRow::Mean(AggregatedTriplet::new(scores, digits, rounding)?)),
    }
}

pub fn parse_scores(text: &str) -> Result<Vec<ReportedRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().context("scores header")?.clone();
    for h in &headers {
        if !SCORE_COLUMNS.contains(&h) {
            bail!("scores header: unknown column `{h}`");
        }
    }
    for required in ["acc", "sens", "spec"] {
        if !headers.iter().any(|h| h == required) {
            bail!("scores header: missing column `{required}`");
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.context("scores")?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw: RawRow = record
            .deserialize(Some(&headers))
            .map_err(|e| anyhow!("scores line {line}: {e}"))?;
        let row = parse_row(raw).map_err(|e| anyhow!("scores line {line}: {e}"))?;
        rows.push(ReportedRow { line, row });
    }
    if rows.is_empty() {
        bail!("scores: no rows");
    }
    Ok(rows)
}

pub fn load_scores(path: &Path) -> Result<Vec<ReportedRow>> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    parse_scores(&text).with_context(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_and_mean_rows() {
        let rows = parse_scores("image_id,acc,sens,spec,digits,rounding\n01,0.9473,0.7760,0.9725,4,round\n,0.95,0.78,0.97,,truncate\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].image_id(), Some("01"));
        assert_eq!(rows[0].digits(), 4);
        assert_eq!(rows[1].image_id(), None);
        assert_eq!(rows[1].digits(), 2);
        assert_eq!(rows[1].rounding(), RoundingMode::Truncate);
        assert_eq!(rows[1].line, 3);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = parse_scores("image_id,acc,sens,spec\n01,0.9473,0.7x,0.9725\n").unwrap_err();
        assert_eq!(format!("{e:#}").lines().count(), 1);
        assert!(format!("{e:#}").contains("line 2"), "{e:#}");
        assert!(format!("{e:#}").contains("sens"), "{e:#}");
        assert!(parse_scores("image_id,acc,sens,spec,extra\n").is_err());
        assert!(parse_scores("image_id,acc,sens\n").is_err());
    }
}

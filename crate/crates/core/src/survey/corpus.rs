use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consistency::AggregatedTriplet;
use crate::error::{Error, Result};
use crate::rational::{format_decimal, parse_decimal};
use crate::score::{RoundingMode, ScoreTriplet, Scores, MIN_REPORTED_DIGITS};

pub const CORPUS_COLUMNS: [&str; 11] = [
    "paper_key",
    "scope",
    "image_id",
    "acc",
    "sens",
    "spec",
    "digits",
    "rounding",
    "claimed_region",
    "year",
    "principle",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Image,
    Aggregate,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Image => "image",
            Scope::Aggregate => "aggregate",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(Self::Image),
            "aggregate" => Ok(Self::Aggregate),
            other => Err(Error::Schema(format!("scope must be image or aggregate, got {other:?}"))),
        }
    }
}

/// Region of evaluation the authors state in the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ClaimedRegion {
    F,
    A,
}

impl fmt::Display for ClaimedRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClaimedRegion::F => "F",
            ClaimedRegion::A => "A",
        })
    }
}

impl FromStr for ClaimedRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F" | "f" | "fov" => Ok(Self::F),
            "A" | "a" | "all" => Ok(Self::A),
            other => Err(Error::Schema(format!("claimed_region must be F or A, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    Deep,
    Classical,
    Supervised,
    Other,
}

impl fmt::Display for Principle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Principle::Deep => "deep",
            Principle::Classical => "classical",
            Principle::Supervised => "supervised",
            Principle::Other => "other",
        })
    }
}

impl FromStr for Principle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep" => Ok(Self::Deep),
            "classical" => Ok(Self::Classical),
            "supervised" => Ok(Self::Supervised),
            "other" => Ok(Self::Other),
            other => Err(Error::Schema(format!(
                "principle must be deep, classical, supervised or other, got {other:?}"
            ))),
        }
    }
}

/// One line of the corpus file, before grouping by paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRow {
    pub paper_key: String,
    pub scope: Scope,
    pub image_id: Option<String>,
    pub scores: Scores,
    pub digits: u32,
    pub rounding: RoundingMode,
    pub claimed_region: Option<ClaimedRegion>,
    pub year: Option<i32>,
    pub principle: Option<Principle>,
}

/// Reported figures of one publication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub key: String,
    pub image_rows: Vec<(String, ScoreTriplet)>,
    pub aggregate_rows: Vec<AggregatedTriplet>,
    /// Fewest decimal places among the rows.
    pub digits: u32,
    pub claimed_region: Option<ClaimedRegion>,
    pub year: Option<i32>,
    pub principle: Option<Principle>,
}

impl PaperRecord {
    pub fn row_count(&self) -> usize {
        self.image_rows.len() + self.aggregate_rows.len()
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    paper_key: String,
    scope: String,
    image_id: String,
    acc: String,
    sens: String,
    spec: String,
    digits: String,
    rounding: String,
    claimed_region: String,
    year: String,
    principle: String,
}

fn optional<T: FromStr<Err = Error>>(text: &str) -> Result<Option<T>> {
    let t = text.trim();
    if t.is_empty() {
        Ok(None)
    } else {
        t.parse().map(Some)
    }
}

fn parse_row(raw: RawRow) -> std::result::Result<CorpusRow, (String, String)> {
    fn field(name: &'static str) -> impl Fn(Error) -> (String, String) {
        move |e| (name.to_string(), e.to_string())
    }
    let key = raw.paper_key.trim().to_string();
    if key.is_empty() {
        return Err(("paper_key".into(), "empty".into()));
    }
    let scope: Scope = raw.scope.trim().parse().map_err(field("scope"))?;
    let image_id = Some(raw.image_id.trim().to_string()).filter(|s| !s.is_empty());
    match (scope, &image_id) {
        (Scope::Image, None) => return Err(("image_id".into(), "required for image rows".into())),
        (Scope::Aggregate, Some(_)) => return Err(("image_id".into(), "must be empty for aggregate rows".into())),
        _ => {}
    }
    let (acc, acc_places) = parse_decimal(raw.acc.trim()).map_err(field("acc"))?;
    let (sens, sens_places) = parse_decimal(raw.sens.trim()).map_err(field("sens"))?;
    let (spec, spec_places) = parse_decimal(raw.spec.trim()).map_err(field("spec"))?;
    let digits = match raw.digits.trim() {
        "" => acc_places.max(sens_places).max(spec_places),
        d => d.parse().map_err(|e| ("digits".to_string(), format!("{e}")))?,
    };
    if digits < MIN_REPORTED_DIGITS {
        return Err(("digits".into(), format!("at least {MIN_REPORTED_DIGITS} decimal places required, got {digits}")));
    }
    let rounding = match raw.rounding.trim() {
        "" => RoundingMode::default(),
        r => r.parse().map_err(field("rounding"))?,
    };
    let year = match raw.year.trim() {
        "" => None,
        y => Some(y.parse().map_err(|e| ("year".to_string(), format!("{e}")))?),
    };
    Ok(CorpusRow {
        paper_key: key,
        scope,
        image_id,
        scores: Scores::new(acc, sens, spec),
        digits,
        rounding,
        claimed_region: optional(&raw.claimed_region).map_err(field("claimed_region"))?,
        year,
        principle: optional(&raw.principle).map_err(field("principle"))?,
    })
}

/// Parses corpus CSV text. Diagnostics name the 1-based line and field.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Schema(format!("corpus header: {e}")))?.clone();
    for col in CORPUS_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Schema(format!("corpus header: missing column {col}")));
        }
    }
    if let Some(extra) = headers.iter().find(|h| !CORPUS_COLUMNS.contains(h)) {
        return Err(Error::Schema(format!("corpus header: unknown column {extra}")));
    }
    let mut rows = Vec::new();
    for record in reader.deserialize::<RawRow>() {
        let raw = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Schema(format!("corpus line {line}: {e}"))
        })?;
        let line = rows.len() + 2;
        let row = parse_row(raw).map_err(|(f, why)| Error::Schema(format!("corpus line {line}, field {f}: {why}")))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Schema("corpus has no rows".into()));
    }
    Ok(rows)
}

fn merge<T: PartialEq + Copy + fmt::Debug>(slot: &mut Option<T>, value: Option<T>, key: &str, what: &str) -> Result<()> {
    match (*slot, value) {
        (_, None) => Ok(()),
        (None, v) => {
            *slot = v;
            Ok(())
        }
        (Some(a), Some(b)) if a == b => Ok(()),
        (Some(a), Some(b)) => Err(Error::Schema(format!("paper {key}: conflicting {what} {a:?} and {b:?}"))),
    }
}

/// Groups rows into papers in order of first appearance.
pub fn group_papers(rows: &[CorpusRow]) -> Result<Vec<PaperRecord>> {
    let mut order: Vec<String> = Vec::new();
    let mut papers: BTreeMap<String, PaperRecord> = BTreeMap::new();
    for row in rows {
        let paper = papers.entry(row.paper_key.clone()).or_insert_with(|| {
            order.push(row.paper_key.clone());
            PaperRecord {
                key: row.paper_key.clone(),
                image_rows: Vec::new(),
                aggregate_rows: Vec::new(),
                digits: row.digits,
                claimed_region: None,
                year: None,
                principle: None,
            }
        });
        paper.digits = paper.digits.min(row.digits);
        merge(&mut paper.claimed_region, row.claimed_region, &row.paper_key, "claimed_region")?;
        merge(&mut paper.year, row.year, &row.paper_key, "year")?;
        merge(&mut paper.principle, row.principle, &row.paper_key, "principle")?;
        let context = |e: Error| Error::Schema(format!("paper {}: {e}", row.paper_key));
        match row.scope {
            Scope::Image => {
                let id = row.image_id.clone().expect("validated");
                if paper.image_rows.iter().any(|(i, _)| *i == id) {
                    return Err(Error::Schema(format!("paper {}: duplicate image row {id}", row.paper_key)));
                }
                let t = ScoreTriplet::new(row.scores.clone(), row.digits, row.rounding).map_err(context)?;
                paper.image_rows.push((id, t));
            }
            Scope::Aggregate => {
                let t = AggregatedTriplet::new(row.scores.clone(), row.digits, row.rounding).map_err(context)?;
                paper.aggregate_rows.push(t);
            }
        }
    }
    Ok(order.into_iter().map(|k| papers.remove(&k).expect("inserted")).collect())
}

pub fn load_corpus(path: &Path) -> Result<Vec<PaperRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    group_papers(&parse_corpus(&text)?).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_corpus_csv<W: Write>(out: W, rows: &[CorpusRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Schema(format!("writing corpus: {e}"));
    w.write_record(CORPUS_COLUMNS).map_err(err)?;
    for r in rows {
        let show = |x: Option<String>| x.unwrap_or_default();
        w.write_record([
            r.paper_key.clone(),
            r.scope.to_string(),
            show(r.image_id.clone()),
            format_decimal(&r.scores.acc, r.digits),
            format_decimal(&r.scores.sens, r.digits),
            format_decimal(&r.scores.spec, r.digits),
            r.digits.to_string(),
            r.rounding.to_string(),
            show(r.claimed_region.map(|c| c.to_string())),
            show(r.year.map(|y| y.to_string())),
            show(r.principle.map(|p| p.to_string())),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Schema(format!("writing corpus: {e}")))
}

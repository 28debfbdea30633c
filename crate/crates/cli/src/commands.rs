use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use scoregate_core::adjust::{adjust_aggregated, adjust_image_level, AdjustOptions, AdjustedScore, AdjustedTriplet};
use scoregate_core::consistency::{aggregated_test, build_feasibility_problem, image_level_test, ConsistencyVerdict};
use scoregate_core::dataset::{
    load_dataset_dir, load_dataset_dirs, save_binary_image, DatasetCounts, DatasetSplits, FIRST_MANUAL_DIR, MASK_DIR,
    SECOND_MANUAL_DIR,
};
use scoregate_core::lp::SearchBudget;
use scoregate_core::rational::{format_decimal, parse_decimal, to_f64, Rational};
use scoregate_core::score::{ImageCounts, ScoreTriplet, Scores};
use scoregate_core::survey::synthetic::{corpus_rows, synth_corpus};
use scoregate_core::survey::{analyze, load_corpus, write_bundle, write_corpus_csv, SurveyOptions, SurveyReport};
use scoregate_core::sweep::{run_sweep, write_curves_csv, SweepMetadata, SweepOptions};
use scoregate_core::synth::{synth_dataset, SynthConfig};
use serde_json::{json, Value};

use crate::input::{load_scores, ReportedRow, ScoreRow};
use crate::{
    AdjustArgs, AdjustmentArgs, CheckAggregateArgs, CheckImageArgs, CountsArgs, Outcome, SolverArgs, SurveyArgs,
    SweepArgs, SynthArgs,
};

/// Decimals of interval endpoints in CSV output.
const CSV_DIGITS: u32 = 6;

impl SolverArgs {
    fn budget(&self) -> Result<SearchBudget> {
        if self.max_nodes == 0 {
            bail!("--max-nodes must be positive");
        }
        Ok(SearchBudget::nodes(self.max_nodes))
    }
}

impl AdjustmentArgs {
    fn options(&self, budget: SearchBudget, force: bool) -> Result<AdjustOptions> {
        let (leak_fraction, _) = parse_decimal(&self.leak_fraction).map_err(|e| anyhow!("--leak-fraction: {e}"))?;
        if leak_fraction < Rational::from_integer(0.into()) {
            bail!("--leak-fraction must be non-negative");
        }
        Ok(AdjustOptions {
            leak_fraction,
            exact_ilp: self.exact_ilp,
            budget,
            force,
        })
    }
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn scores_json(s: &Scores, digits: u32) -> Value {
    json!({
        "acc": format_decimal(&s.acc, digits),
        "sens": format_decimal(&s.sens, digits),
        "spec": format_decimal(&s.spec, digits),
    })
}

fn verdict_json(v: &ConsistencyVerdict) -> Result<Value> {
    let mut value = serde_json::to_value(v)?;
    value["eps_value"] = json!(to_f64(&v.eps));
    Ok(value)
}

pub fn check_image(a: CheckImageArgs) -> Result<Outcome> {
    let t = ScoreTriplet::parse(&a.acc, &a.sens, &a.spec, a.digits, a.rounding)?;
    let c = ImageCounts::new(a.p, a.n)?;
    let verdict = image_level_test(&t.scores, c, &t.uncertainty());
    let mut value = scores_json(&t.scores, t.digits);
    value["digits"] = json!(t.digits);
    value["rounding"] = json!(t.rounding.to_string());
    value["counts"] = json!({ "p": c.p, "n": c.n });
    if let (Value::Object(out), Value::Object(v)) = (&mut value, verdict_json(&verdict)?) {
        out.extend(v);
    }
    print_json(&value)?;
    Ok(Outcome::Completed)
}

fn row_json(row: &ReportedRow) -> Value {
    let mut value = scores_json(row.scores(), row.digits());
    value["line"] = json!(row.line);
    value["image_id"] = json!(row.image_id());
    value["digits"] = json!(row.digits());
    value["rounding"] = json!(row.rounding().to_string());
    value
}

fn image_counts(counts: &DatasetCounts, id: &str, tag: scoregate_core::score::HypothesisTag) -> Result<ImageCounts> {
    let record = counts
        .get(id)
        .ok_or_else(|| anyhow!("image {id} is not in the counts file"))?;
    Ok(record.counts(tag)?)
}

pub fn check_aggregate(a: CheckAggregateArgs) -> Result<Outcome> {
    let rows = load_scores(&a.scores)?;
    let counts = DatasetCounts::import(&a.counts)?;
    let all_counts = counts.counts(a.hypothesis)?;
    let budget = a.solver.budget()?;
    let mut lp_dump = String::new();
    let mut results = Vec::with_capacity(rows.len());
    let mut outcome = Outcome::Completed;
    for row in &rows {
        let verdict = match &row.row {
            ScoreRow::Image { image_id, triplet } => {
                let c = image_counts(&counts, image_id, a.hypothesis)?;
                image_level_test(&triplet.scores, c, &triplet.uncertainty())
            }
            ScoreRow::Mean(t) => {
                let u = t.uncertainty();
                if a.dump_lp.is_some() {
                    let prob = build_feasibility_problem(&t.scores, &all_counts, &u)?;
                    lp_dump.push_str(&format!("\\ scores line {}\n", row.line));
                    lp_dump.push_str(&prob.to_lp_text());
                }
                aggregated_test(&t.scores, &all_counts, &u, budget)?
            }
        }
        .with_hypothesis(a.hypothesis);
        if verdict.inconclusive {
            outcome = Outcome::Inconclusive;
        }
        let mut value = row_json(row);
        value["verdict"] = verdict_json(&verdict)?;
        results.push(value);
    }
    if let Some(path) = &a.dump_lp {
        fs::write(path, lp_dump).with_context(|| path.display().to_string())?;
    }
    print_json(&json!({
        "hypothesis": a.hypothesis,
        "images": all_counts.len(),
        "rows": results,
    }))?;
    Ok(outcome)
}

pub const ADJUST_COLUMNS: [&str; 17] = [
    "line",
    "image_id",
    "method",
    "status",
    "exact",
    "acc",
    "acc_lower",
    "acc_upper",
    "acc_half_width",
    "sens",
    "sens_lower",
    "sens_upper",
    "sens_half_width",
    "spec",
    "spec_lower",
    "spec_upper",
    "spec_half_width",
];

fn interval_fields(s: &AdjustedScore) -> [String; 4] {
    [&s.value, &s.lower, &s.upper, &s.half_width].map(|x| format_decimal(x, CSV_DIGITS))
}

pub fn adjust(a: AdjustArgs) -> Result<Outcome> {
    let rows = load_scores(&a.scores)?;
    let counts = DatasetCounts::import(&a.counts)?;
    let splits = DatasetSplits::from_counts(&counts);
    let options = a.adjustment.options(a.solver.budget()?, a.force)?;
    let all_splits = splits.splits();
    let sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| path.display().to_string())?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(ADJUST_COLUMNS)?;
    let mut outcome = Outcome::Completed;
    for row in &rows {
        let (method, result): (&str, scoregate_core::Result<AdjustedTriplet>) = match &row.row {
            ScoreRow::Image { image_id, triplet } => {
                let split = splits
                    .get(image_id)
                    .ok_or_else(|| anyhow!("scores line {}: image {image_id} is not in the counts file", row.line))?;
                ("image_level", adjust_image_level(&triplet.scores, &split, &triplet.uncertainty(), &options))
            }
            ScoreRow::Mean(t) => ("aggregated", adjust_aggregated(&t.scores, &all_splits, &t.uncertainty(), &options)),
        };
        let mut record = vec![row.line.to_string(), row.image_id().unwrap_or("").to_string(), method.to_string()];
        match result {
            Ok(adj) => {
                if options.exact_ilp && !adj.exact {
                    outcome = Outcome::Inconclusive;
                }
                record.push("ok".into());
                record.push(adj.exact.to_string());
                for s in [&adj.acc, &adj.sens, &adj.spec] {
                    record.extend(interval_fields(s));
                }
            }
            Err(e @ scoregate_core::Error::NotAdjustable(_)) => {
                eprintln!("scores line {}: {e}", row.line);
                record.push("not_adjustable".into());
                record.extend(std::iter::repeat_n(String::new(), 13));
            }
            Err(e) => return Err(anyhow!("scores line {}: {e}", row.line)),
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(outcome)
}

pub fn counts(a: CountsArgs) -> Result<Outcome> {
    let entries = load_dataset_dirs(&a.masks, &a.annotations, None)?;
    let counts = DatasetCounts::from_entries(&entries)?;
    counts.export(&a.out)?;
    info!("wrote counts of {} images to {}", counts.records.len(), a.out.display());
    if let Some(path) = &a.splits_out {
        DatasetSplits::from_counts(&counts).export(path)?;
    }
    Ok(Outcome::Completed)
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn sweep(a: SweepArgs) -> Result<Outcome> {
    if a.digits.is_empty() {
        bail!("--digits needs at least one precision");
    }
    let entries = load_dataset_dir(&a.dataset)?;
    let options = SweepOptions {
        element: a.element,
        rounding: a.rounding,
        budget: a.solver.budget()?,
    };
    let curves = run_sweep(&entries, &a.digits, a.kind, &options)?;
    let file = File::create(&a.out).with_context(|| a.out.display().to_string())?;
    write_curves_csv(BufWriter::new(file), &curves)?;
    let meta = SweepMetadata {
        structuring_element: a.element,
        step: 1,
        rounding: a.rounding,
        images: entries.len(),
        levels: curves.first().map_or(0, |c| c.points.len()),
        digits: a.digits.clone(),
        test_kind: a.kind,
    };
    let meta_path = sidecar(&a.out, ".meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").with_context(|| meta_path.display().to_string())?;
    Ok(Outcome::Completed)
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_log(path: &Path, report: &SurveyReport, started: u64, elapsed: f64, args: &SurveyArgs) -> Result<()> {
    let mut log = String::new();
    log.push_str(&format!("started_unix={started}\n"));
    log.push_str(&format!("corpus={}\ncounts={}\n", args.corpus.display(), args.counts.display()));
    for p in &report.papers {
        log.push_str(&format!("paper {} category={} rows={}", p.key, p.category, p.categorization.rows));
        for d in &p.diagnostics {
            log.push_str(&format!(" note=\"{d}\""));
        }
        log.push('\n');
    }
    log.push_str(&format!("finished_unix={} elapsed_s={elapsed:.3}\n", unix_seconds()));
    fs::write(path, log).with_context(|| path.display().to_string())
}

pub fn survey(a: SurveyArgs) -> Result<Outcome> {
    let started = unix_seconds();
    let clock = Instant::now();
    let corpus = load_corpus(&a.corpus)?;
    let counts = DatasetCounts::import(&a.counts)?;
    let splits = a.splits.as_deref().map(DatasetSplits::import).transpose()?;
    let options = SurveyOptions {
        adjust: a.adjustment.options(a.solver.budget()?, false)?,
        ttest: a.ttest.into(),
        correlation: a.correlation.into(),
    };
    let report = analyze(&corpus, &counts, splits.as_ref(), &options)?;
    write_bundle(&report, &a.out)?;
    if let Some(path) = &a.log {
        write_log(path, &report, started, clock.elapsed().as_secs_f64(), &a)?;
    }
    let inconclusive = report.papers.iter().any(|p| p.categorization.inconclusive_rows > 0);
    Ok(if inconclusive { Outcome::Inconclusive } else { Outcome::Completed })
}

pub fn synth(a: SynthArgs) -> Result<Outcome> {
    if a.images == 0 {
        bail!("--images must be positive");
    }
    let entries = synth_dataset(a.seed, &SynthConfig::default(), a.images)?;
    let dataset = a.out.join("dataset");
    for dir in [MASK_DIR, FIRST_MANUAL_DIR, SECOND_MANUAL_DIR] {
        fs::create_dir_all(dataset.join(dir)).with_context(|| dataset.join(dir).display().to_string())?;
    }
    for e in &entries {
        save_binary_image(&dataset.join(MASK_DIR).join(format!("{}_mask.png", e.image_id)), &e.fov_mask)?;
        save_binary_image(&dataset.join(FIRST_MANUAL_DIR).join(format!("{}_manual1.png", e.image_id)), &e.ground_truth)?;
        if let Some(second) = &e.second_annotation {
            save_binary_image(&dataset.join(SECOND_MANUAL_DIR).join(format!("{}_manual2.png", e.image_id)), second)?;
        }
    }
    let counts = DatasetCounts::from_entries(&entries)?;
    counts.export(&a.out.join("counts.json"))?;
    DatasetSplits::from_counts(&counts).export(&a.out.join("splits.json"))?;
    if a.papers > 0 {
        let papers = synth_corpus(a.seed, &entries, a.papers)?;
        let path = a.out.join("corpus.csv");
        write_corpus_csv(File::create(&path).with_context(|| path.display().to_string())?, &corpus_rows(&papers))?;
        let mut truth = String::from("paper,truth\n");
        for p in &papers {
            truth.push_str(&format!("{},{}\n", p.plan.key, serde_json::to_value(p.plan.truth)?.as_str().unwrap_or("")));
        }
        fs::write(a.out.join("truth.csv"), truth).with_context(|| a.out.join("truth.csv").display().to_string())?;
    }
    Ok(Outcome::Completed)
}

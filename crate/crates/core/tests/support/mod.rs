//! Independent oracles and experiment drivers shared by the integration
//! tests of this crate and the workspace acceptance suite.
#![allow(dead_code)]

use num::{BigInt, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scoregate_core::adjust::{adjust_image_level, AdjustOptions};
use scoregate_core::consistency::{aggregated_test, check_mean_witness, image_level_test, ConsistencyVerdict};
use scoregate_core::dataset::{evaluate_segmentation, BinaryImage, DatasetEntry};
use scoregate_core::lp::SearchBudget;
use scoregate_core::rational::{pow10, ratio, to_f64, Rational};
use scoregate_core::score::{
    round_score, scores_from_counts, ConfusionCounts, ImageCounts, RoundingMode, Scores, Uncertainty,
};
use scoregate_core::synth::{synth_entry, synth_segmentation, SynthConfig};

/// Reported values as integers scaled by 10^k.
#[derive(Clone, Copy, Debug)]
pub struct Scaled {
    pub acc: i128,
    pub sens: i128,
    pub spec: i128,
}

impl Scaled {
    pub fn to_scores(self, k: u32) -> Scores {
        let d = pow10(k);
        Scores::new(
            Rational::new(self.acc.into(), d.clone()),
            Rational::new(self.sens.into(), d.clone()),
            Rational::new(self.spec.into(), d),
        )
    }
}

/// `(x1/q1 + x2/q2) / 2` lies within half a unit of `target / 10^k`.
pub fn mean_in_band(x1: i128, q1: i128, x2: i128, q2: i128, target: i128, k: u32) -> bool {
    let d = 2 * 10i128.pow(k);
    let lhs = d * (x1 * q2 + x2 * q1);
    let q = 2 * q1 * q2;
    lhs >= q * (2 * target - 1) && lhs <= q * (2 * target + 1)
}

/// Exhaustive search over all `(tp1, tn1, tp2, tn2)`.
pub fn brute_force_pair(t: Scaled, c: [(i128, i128); 2], k: u32) -> bool {
    let [(p1, n1), (p2, n2)] = c;
    let (t1, t2) = (p1 + n1, p2 + n2);
    let mut tn_pairs = vec![false; ((n1 + 1) * (n2 + 1)) as usize];
    let mut any_tn = false;
    for a in 0..=n1 {
        for b in 0..=n2 {
            if mean_in_band(a, n1, b, n2, t.spec, k) {
                tn_pairs[(a * (n2 + 1) + b) as usize] = true;
                any_tn = true;
            }
        }
    }
    if !any_tn {
        return false;
    }
    let mut sums = vec![false; ((t1 + 1) * (t2 + 1)) as usize];
    for a in 0..=p1 {
        for b in 0..=p2 {
            if !mean_in_band(a, p1, b, p2, t.sens, k) {
                continue;
            }
            for x in 0..=n1 {
                for y in 0..=n2 {
                    if tn_pairs[(x * (n2 + 1) + y) as usize] {
                        sums[((a + x) * (t2 + 1) + b + y) as usize] = true;
                    }
                }
            }
        }
    }
    (0..=t1).any(|s1| (0..=t2).any(|s2| sums[(s1 * (t2 + 1) + s2) as usize] && mean_in_band(s1, t1, s2, t2, t.acc, k)))
}

pub fn perturbed_triplet(rng: &mut ChaCha8Rng, c: &[(u64, u64)], k: u32) -> Scaled {
    let mut sums = (Rational::zero(), Rational::zero(), Rational::zero());
    for &(p, n) in c {
        let tp = rng.random_range(0..=p);
        let tn = rng.random_range(0..=n);
        sums.0 += Rational::new((tp + tn).into(), (p + n).into());
        sums.1 += Rational::new(tp.into(), p.into());
        sums.2 += Rational::new(tn.into(), n.into());
    }
    let m = Rational::from_integer(BigInt::from(c.len()));
    let top = 10i128.pow(k);
    let mut jitter = |x: Rational| {
        let base = round_score(&(x / &m), k, RoundingMode::Round).scaled as i128;
        let shift = if rng.random_bool(0.5) { 0 } else { rng.random_range(-3..=3) };
        (base + shift).clamp(0, top)
    };
    Scaled {
        acc: jitter(sums.0),
        sens: jitter(sums.1),
        spec: jitter(sums.2),
    }
}

pub type Point = (Rational, Rational);

/// Keeps the part of a convex polygon where `a*x + b*y <= c`.
pub fn clip(poly: &[Point], a: &Rational, b: &Rational, c: &Rational) -> Vec<Point> {
    let f = |p: &Point| a * &p.0 + b * &p.1 - c;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let cur = &poly[i];
        let next = &poly[(i + 1) % poly.len()];
        let (fc, fnx) = (f(cur), f(next));
        if fc <= Rational::zero() {
            out.push(cur.clone());
        }
        if (fc < Rational::zero() && fnx > Rational::zero()) || (fc > Rational::zero() && fnx < Rational::zero()) {
            let s = &fc / (&fc - &fnx);
            out.push((&cur.0 + &s * (&next.0 - &cur.0), &cur.1 + &s * (&next.1 - &cur.1)));
        }
    }
    out
}

/// Real feasibility of one image via exact polygon clipping of the count box.
pub fn polygon_feasible(t: &Scores, p: u64, n: u64, eps: &Rational) -> bool {
    let (pr, nr) = (Rational::from_integer(p.into()), Rational::from_integer(n.into()));
    let zero = Rational::zero();
    let one = Rational::from_integer(1.into());
    let minus = -one.clone();
    let mut poly = vec![
        (zero.clone(), zero.clone()),
        (pr.clone(), zero.clone()),
        (pr.clone(), nr.clone()),
        (zero.clone(), nr.clone()),
    ];
    let total = &pr + &nr;
    let cuts = [
        (one.clone(), zero.clone(), &pr * (&t.sens + eps)),
        (minus.clone(), zero.clone(), -(&pr * (&t.sens - eps))),
        (zero.clone(), one.clone(), &nr * (&t.spec + eps)),
        (zero.clone(), minus.clone(), -(&nr * (&t.spec - eps))),
        (one.clone(), one.clone(), &total * (&t.acc + eps)),
        (minus.clone(), minus.clone(), -(&total * (&t.acc - eps))),
    ];
    for (a, b, c) in &cuts {
        poly = clip(&poly, a, b, c);
        if poly.is_empty() {
            return false;
        }
    }
    true
}

/// Counts attaining a passing verdict, re-checked by substitution.
#[derive(Debug, Default, Clone, Copy)]
pub struct WitnessAudit {
    pub checked: u64,
    pub violations: u64,
}

impl WitnessAudit {
    pub fn record(&mut self, t: &Scores, counts: &[ImageCounts], u: &Uncertainty, v: &ConsistencyVerdict) {
        if !v.passed || v.inconclusive {
            return;
        }
        self.checked += 1;
        match &v.witness {
            Some(w) if check_mean_witness(t, counts, u, w) => {}
            _ => self.violations += 1,
        }
    }

    pub fn merge(&mut self, other: WitnessAudit) {
        self.checked += other.checked;
        self.violations += other.violations;
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AggregatedOracleRun {
    pub trials: u64,
    pub disagreements: u64,
    pub inconclusive: u64,
    pub passed: u64,
    pub failed: u64,
    pub audit: WitnessAudit,
}

/// Two images with `p <= 20`, `n <= 40` at alternating `k = 2, 3`.
pub fn aggregated_oracle_run(seed: u64, trials: u64) -> AggregatedOracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = AggregatedOracleRun {
        trials,
        ..Default::default()
    };
    for trial in 0..trials {
        let k = if trial % 2 == 0 { 2 } else { 3 };
        let c: Vec<(u64, u64)> = (0..2).map(|_| (rng.random_range(1..=20), rng.random_range(1..=40))).collect();
        let t = perturbed_triplet(&mut rng, &c, k);
        let counts: Vec<ImageCounts> = c.iter().map(|&(p, n)| ImageCounts::new(p, n).unwrap()).collect();
        let u = Uncertainty::for_digits(k, RoundingMode::Round);
        let scores = t.to_scores(k);
        let verdict = aggregated_test(&scores, &counts, &u, SearchBudget::default()).unwrap();
        if verdict.inconclusive {
            run.inconclusive += 1;
        }
        let expected = brute_force_pair(t, [(c[0].0 as i128, c[0].1 as i128), (c[1].0 as i128, c[1].1 as i128)], k);
        if verdict.passed != expected {
            run.disagreements += 1;
        }
        if verdict.passed {
            run.passed += 1;
        } else {
            run.failed += 1;
        }
        run.audit.record(&scores, &counts, &u, &verdict);
    }
    run
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PolygonOracleRun {
    pub cases: u64,
    pub disagreements: u64,
    /// Disagreements on images with `2 eps p >= 1` and `2 eps n >= 1`.
    pub disagreements_outside_degenerate: u64,
    pub passes: u64,
    pub audit: WitnessAudit,
}

/// 20 random `(p, n)` with `p <= 60`, `n <= 200`, 500 two-decimal triplets
/// each, compared against exact real feasibility.
pub fn polygon_oracle_run(seed: u64) -> PolygonOracleRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 2;
    let u = Uncertainty::for_digits(k, RoundingMode::Round);
    let mut run = PolygonOracleRun::default();
    for _ in 0..20 {
        let p = rng.random_range(1..=60);
        let n = rng.random_range(1..=200);
        let c = ImageCounts::new(p, n).unwrap();
        for _ in 0..500 {
            // bias towards the consistent region so both outcomes appear
            let sens = rng.random_range(0..=100i128);
            let spec = rng.random_range(0..=100i128);
            let mix = (sens * p as i128 + spec * n as i128) / (p + n) as i128;
            let acc = if rng.random_bool(0.5) { (mix + rng.random_range(-3..=3)).clamp(0, 100) } else { rng.random_range(0..=100) };
            let t = Scaled { acc, sens, spec }.to_scores(k);
            let verdict = image_level_test(&t, c, &u);
            let expected = polygon_feasible(&t, p, n, u.eps());
            run.cases += 1;
            if verdict.passed != expected {
                run.disagreements += 1;
                if !verdict.degenerate_regime {
                    run.disagreements_outside_degenerate += 1;
                }
            }
            if expected {
                run.passes += 1;
            }
            if verdict.witness.is_some() {
                run.audit.record(&t, &[c], &u, &verdict);
            }
        }
    }
    run
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GeneratedTripletRun {
    pub pairs: u64,
    pub checked: u64,
    pub failures: u64,
    pub audit: WitnessAudit,
}

/// Rounds the scores of every `(tp, tn)` of 20 `(p, n)` pairs to three
/// decimals; each must pass.
pub fn generated_triplet_run(seed: u64) -> GeneratedTripletRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(u64, u64)> = vec![(1, 1), (60, 200)];
    pairs.extend((0..18).map(|_| (rng.random_range(1..=60), rng.random_range(1..=200))));
    let mut run = GeneratedTripletRun {
        pairs: pairs.len() as u64,
        ..Default::default()
    };
    for mode in [RoundingMode::Round, RoundingMode::Truncate] {
        let u = Uncertainty::for_digits(3, mode);
        for &(p, n) in &pairs {
            let c = ImageCounts::new(p, n).unwrap();
            for tp in 0..=p {
                for tn in 0..=n {
                    let s = scores_from_counts(&ConfusionCounts::new(tp, tn, n - tn, p - tp)).unwrap();
                    let t = s.rounded(3, mode);
                    let verdict = image_level_test(&t, c, &u);
                    run.checked += 1;
                    if !verdict.passed {
                        run.failures += 1;
                    }
                    if verdict.witness.is_some() {
                        run.audit.record(&t, &[c], &u, &verdict);
                    }
                }
            }
        }
    }
    run
}

pub fn all_and_fov(entry: &DatasetEntry, seg: &BinaryImage) -> (Scores, Scores) {
    let full = BinaryImage::filled(seg.width(), seg.height(), true).unwrap();
    (
        scores_from_counts(&evaluate_segmentation(&entry.ground_truth, seg, &full).unwrap()).unwrap(),
        scores_from_counts(&evaluate_segmentation(&entry.ground_truth, seg, &entry.fov_mask).unwrap()).unwrap(),
    )
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AdjustmentRun {
    pub trials: u64,
    pub violations: u64,
    pub errors: u64,
    /// Over all trials and all three scores.
    pub mean_half_width: f64,
    pub max_half_width: f64,
}

/// Synthetic 100x100 frames with segmentations obeying the 1% leak bound,
/// all-pixels scores reported to four decimals.
pub fn adjustment_run(seed: u64, trials: u64) -> AdjustmentRun {
    let cfg = SynthConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uncertainty::for_digits(4, RoundingMode::Round);
    let options = AdjustOptions::default();
    let mut run = AdjustmentRun {
        trials,
        ..Default::default()
    };
    let mut total = 0.0;
    for trial in 0..trials {
        let entry = synth_entry(&mut rng, &cfg, &format!("{trial}")).unwrap();
        let seg = synth_segmentation(&mut rng, &entry, &ratio(1, 100)).unwrap();
        let (all, fov) = all_and_fov(&entry, &seg);
        let split = entry.record().unwrap().split().unwrap();
        let Ok(adj) = adjust_image_level(&all.rounded(4, RoundingMode::Round), &split, &u, &options) else {
            run.errors += 1;
            continue;
        };
        if !adj.contains(&fov) {
            run.violations += 1;
        }
        for s in [&adj.acc, &adj.sens, &adj.spec] {
            let hw = to_f64(&s.half_width);
            total += hw;
            run.max_half_width = run.max_half_width.max(hw);
        }
    }
    run.mean_half_width = total / (3 * trials) as f64;
    run
}

//! Procedural retina-like test data with known ground truth.
//!
//! Frames hold a centred disc as FoV, random-walk vessels that may poke a
//! few pixels past the disc edge, a second annotation that disagrees with
//! the first only inside the FoV, and segmentations whose outside-FoV false
//! positives respect a leak bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{BinaryImage, DatasetEntry};
use crate::error::Result;
use crate::rational::{floor_int, Rational};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    /// Share of the frame covered by the FoV disc.
    pub fov_fraction: f64,
    /// Random-walk vessels per image.
    pub vessels: usize,
    /// Steps of each walk.
    pub vessel_length: usize,
    /// How far a walk may stray past the disc edge, in pixels.
    pub overshoot: f64,
    /// Chance that the second annotator drops an edge vessel pixel.
    pub miss_rate: f64,
    /// Chance that the second annotator marks a pixel next to a vessel.
    pub spill_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 100,
            height: 100,
            fov_fraction: 0.69,
            vessels: 9,
            vessel_length: 70,
            overshoot: 0.5,
            miss_rate: 0.3,
            spill_rate: 0.06,
        }
    }
}

impl SynthConfig {
    fn radius(&self) -> f64 {
        (self.fov_fraction * (self.width * self.height) as f64 / std::f64::consts::PI).sqrt()
    }

    fn centre(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        let (cx, cy) = self.centre();
        ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
    }
}

pub fn fov_disc(cfg: &SynthConfig) -> Result<BinaryImage> {
    let r = cfg.radius();
    BinaryImage::from_fn(cfg.width, cfg.height, |x, y| cfg.distance(x as f64 + 0.5, y as f64 + 0.5) <= r)
}

fn vessels(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Result<BinaryImage> {
    let mut img = BinaryImage::filled(cfg.width, cfg.height, false)?;
    let limit = cfg.radius() + cfg.overshoot;
    let (cx, cy) = cfg.centre();
    for _ in 0..cfg.vessels {
        let start_r = cfg.radius() * rng.random_range(0.0..0.5);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let (mut x, mut y) = (cx + start_r * phi.cos(), cy + start_r * phi.sin());
        let mut heading = phi + rng.random_range(-0.6..0.6);
        let thick = rng.random_bool(0.5);
        for _ in 0..cfg.vessel_length {
            heading += rng.random_range(-0.35..0.35);
            let (nx, ny) = (x + heading.cos(), y + heading.sin());
            if cfg.distance(nx, ny) > limit {
                break;
            }
            (x, y) = (nx, ny);
            let (px, py) = (x.floor() as isize, y.floor() as isize);
            let offsets: &[(isize, isize)] = if thick { &[(0, 0), (1, 0), (0, 1)] } else { &[(0, 0)] };
            for &(dx, dy) in offsets {
                let (qx, qy) = (px + dx, py + dy);
                if qx >= 0
                    && qy >= 0
                    && (qx as usize) < cfg.width
                    && (qy as usize) < cfg.height
                    && cfg.distance(qx as f64 + 0.5, qy as f64 + 0.5) <= limit
                {
                    img.set(qx as usize, qy as usize, true);
                }
            }
        }
    }
    Ok(img)
}

fn has_neighbour(img: &BinaryImage, x: usize, y: usize, value: bool) -> bool {
    let (w, h) = (img.width() as isize, img.height() as isize);
    [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        nx >= 0 && ny >= 0 && nx < w && ny < h && img.get(nx as usize, ny as usize) == value
    })
}

/// Edge-level disagreement with `gt` confined to `region`.
fn perturb(rng: &mut ChaCha8Rng, gt: &BinaryImage, region: &BinaryImage, miss: f64, spill: f64) -> BinaryImage {
    let mut out = gt.clone();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !region.get(x, y) {
                continue;
            }
            if gt.get(x, y) {
                if has_neighbour(gt, x, y, false) && rng.random_bool(miss) {
                    out.set(x, y, false);
                }
            } else if has_neighbour(gt, x, y, true) && rng.random_bool(spill) {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// One synthetic image; the entry id is `id`.
pub fn synth_entry(rng: &mut ChaCha8Rng, cfg: &SynthConfig, id: &str) -> Result<DatasetEntry> {
    let fov = fov_disc(cfg)?;
    let gt = vessels(rng, cfg)?;
    let second = perturb(rng, &gt, &fov, cfg.miss_rate, cfg.spill_rate);
    DatasetEntry::new(id, fov, gt, Some(second))
}

/// `m` images with ids `01`, `02`, ...
pub fn synth_dataset(seed: u64, cfg: &SynthConfig, m: usize) -> Result<Vec<DatasetEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=m).map(|i| synth_entry(&mut rng, cfg, &format!("{i:02}"))).collect()
}

/// A segmentation of `entry` with random FoV errors (accuracy roughly
/// 0.93 to 0.97 inside the FoV) and at most
/// `floor(leak_fraction * p_F)` false positives outside the FoV.
pub fn synth_segmentation(rng: &mut ChaCha8Rng, entry: &DatasetEntry, leak_fraction: &Rational) -> Result<BinaryImage> {
    let gt = &entry.ground_truth;
    let fov = &entry.fov_mask;
    let miss = rng.random_range(0.15..0.6);
    let spill = rng.random_range(0.05..0.3);
    let noise = rng.random_range(0.0..0.02);
    let mut seg = perturb(rng, gt, fov, miss, spill);
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if fov.get(x, y) && !gt.get(x, y) && rng.random_bool(noise) {
                seg.set(x, y, true);
            }
        }
    }
    let p_f = gt.bits().iter().zip(fov.bits()).filter(|(g, f)| **g && **f).count() as u64;
    let cap: u64 = floor_int(&(leak_fraction * Rational::from_integer(p_f.into()))).try_into().unwrap_or(0);
    let keep_outside = rng.random_range(0.0..=1.0);
    let mut outside_negatives = Vec::new();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if fov.get(x, y) {
                continue;
            }
            if gt.get(x, y) {
                seg.set(x, y, rng.random_bool(keep_outside));
            } else {
                outside_negatives.push((x, y));
            }
        }
    }
    let leaks = rng.random_range(0..=cap).min(outside_negatives.len() as u64) as usize;
    for i in 0..leaks {
        let j = rng.random_range(i..outside_negatives.len());
        outside_negatives.swap(i, j);
        let (x, y) = outside_negatives[i];
        seg.set(x, y, true);
    }
    Ok(seg)
}

//! Binary rasters, per-image region counts and the counts file format.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageReader, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::SplitCounts;
use crate::error::{Error, Result};
use crate::score::{ConfusionCounts, HypothesisTag, ImageCounts};

/// Row-major foreground bitmap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!("empty raster {width}x{height}")));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {width}x{height} raster",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn same_shape(&self, other: &BinaryImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn require_shape(&self, other: &BinaryImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

/// Reads a PNG or PNM raster. A pixel is foreground when any colour
/// channel of the decoded image is nonzero, so bright pixels are
/// foreground in every format (in a PBM that means the 0 bits).
pub fn load_binary_image(path: &Path) -> Result<BinaryImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = decoded.to_rgb16();
    let (w, h) = rgb.dimensions();
    let bits = rgb.pixels().map(|px| px.0.iter().any(|&c| c > 0)).collect();
    BinaryImage::new(w as usize, h as usize, bits).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes foreground as 255 and background as 0; the format follows the
/// extension (`.png`, `.pgm`, `.pbm`).
pub fn save_binary_image(path: &Path, img: &BinaryImage) -> Result<()> {
    let gray = GrayImage::from_fn(img.width as u32, img.height as u32, |x, y| {
        Luma([if img.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    gray.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// One test image with its FoV mask and annotations.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub image_id: String,
    pub fov_mask: BinaryImage,
    pub ground_truth: BinaryImage,
    pub second_annotation: Option<BinaryImage>,
}

impl DatasetEntry {
    pub fn new(
        image_id: impl Into<String>,
        fov_mask: BinaryImage,
        ground_truth: BinaryImage,
        second_annotation: Option<BinaryImage>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        ground_truth.require_shape(&fov_mask, &format!("{image_id} annotation vs mask"))?;
        if let Some(second) = &second_annotation {
            second.require_shape(&fov_mask, &format!("{image_id} second annotation vs mask"))?;
        }
        Ok(Self {
            image_id,
            fov_mask,
            ground_truth,
            second_annotation,
        })
    }

    pub fn counts(&self, tag: HypothesisTag) -> Result<ImageCounts> {
        counts_for_hypothesis(&self.ground_truth, &self.fov_mask, tag)
    }

    pub fn record(&self) -> Result<CountsRecord> {
        let fov = self.counts(HypothesisTag::FovOnly)?;
        let all = self.counts(HypothesisTag::AllPixels)?;
        Ok(CountsRecord {
            image_id: self.image_id.clone(),
            p_fov: fov.p,
            n_fov: fov.n,
            p_all: all.p,
            n_all: all.n,
        })
    }
}

pub const MASK_DIR: &str = "mask";
pub const FIRST_MANUAL_DIR: &str = "1st_manual";
pub const SECOND_MANUAL_DIR: &str = "2nd_manual";

fn is_raster(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "pbm" | "pgm" | "ppm" | "pnm")
    )
}

/// Image id of a raster: its file name up to the first `_` or `.`.
fn image_id(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let id = name.split(['_', '.']).next()?;
    (!id.is_empty()).then(|| id.to_string())
}

fn index_dir(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !is_raster(&path) {
            continue;
        }
        if let Some(id) = image_id(&path) {
            if let Some(previous) = out.insert(id.clone(), path.clone()) {
                return Err(Error::Schema(format!(
                    "two rasters for image {id}: {} and {}",
                    previous.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(out)
}

/// Loads a converted dataset laid out as `mask/`, `1st_manual/` and an
/// optional `2nd_manual/`, pairing files by image id. Entries are sorted by
/// id.
pub fn load_dataset_dir(root: &Path) -> Result<Vec<DatasetEntry>> {
    let second_dir = root.join(SECOND_MANUAL_DIR);
    load_dataset_dirs(
        &root.join(MASK_DIR),
        &root.join(FIRST_MANUAL_DIR),
        second_dir.is_dir().then_some(second_dir.as_path()),
    )
}

/// Pairs FoV masks with annotations from separate directories by image id.
pub fn load_dataset_dirs(mask_dir: &Path, first_dir: &Path, second_dir: Option<&Path>) -> Result<Vec<DatasetEntry>> {
    let masks = index_dir(mask_dir)?;
    let firsts = index_dir(first_dir)?;
    let seconds = match second_dir {
        Some(dir) => index_dir(dir)?,
        None => BTreeMap::new(),
    };
    if masks.is_empty() {
        return Err(Error::Missing(format!("no rasters under {}", mask_dir.display())));
    }
    let jobs: Vec<(String, PathBuf, PathBuf, Option<PathBuf>)> = masks
        .into_iter()
        .map(|(id, mask)| {
            let first = firsts
                .get(&id)
                .cloned()
                .ok_or_else(|| Error::Missing(format!("no annotation for image {id} under {}", first_dir.display())))?;
            let second = seconds.get(&id).cloned();
            Ok((id, mask, first, second))
        })
        .collect::<Result<_>>()?;
    jobs.into_par_iter()
        .map(|(id, mask, first, second)| {
            let second = second.map(|p| load_binary_image(&p)).transpose()?;
            DatasetEntry::new(id, load_binary_image(&mask)?, load_binary_image(&first)?, second)
        })
        .collect()
}

/// Positives and negatives of `gt` inside `region`.
pub fn counts_in_region(gt: &BinaryImage, region: &BinaryImage) -> Result<ImageCounts> {
    gt.require_shape(region, "annotation vs region")?;
    let (mut p, mut n) = (0u64, 0u64);
    for (&g, &r) in gt.bits.iter().zip(&region.bits) {
        if r {
            if g {
                p += 1;
            } else {
                n += 1;
            }
        }
    }
    ImageCounts::new(p, n)
}

/// Counts of `gt` under a fixed region hypothesis.
pub fn counts_for_hypothesis(gt: &BinaryImage, fov: &BinaryImage, tag: HypothesisTag) -> Result<ImageCounts> {
    gt.require_shape(fov, "annotation vs mask")?;
    match tag {
        HypothesisTag::FovOnly => counts_in_region(gt, fov),
        HypothesisTag::AllPixels => {
            let p = gt.count_ones();
            ImageCounts::new(p, gt.len() as u64 - p)
        }
        HypothesisTag::Custom => Err(Error::InvalidCounts(
            "custom hypotheses carry their own counts; nothing to derive from a mask".into(),
        )),
    }
}

/// Confusion counts of `seg` against `gt` over the foreground of `region`.
pub fn evaluate_segmentation(gt: &BinaryImage, seg: &BinaryImage, region: &BinaryImage) -> Result<ConfusionCounts> {
    gt.require_shape(seg, "annotation vs segmentation")?;
    gt.require_shape(region, "annotation vs region")?;
    let mut c = ConfusionCounts::new(0, 0, 0, 0);
    for ((&g, &s), &r) in gt.bits.iter().zip(&seg.bits).zip(&region.bits) {
        if !r {
            continue;
        }
        match (g, s) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Per-image totals under both region hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsRecord {
    pub image_id: String,
    pub p_fov: u64,
    pub n_fov: u64,
    pub p_all: u64,
    pub n_all: u64,
}

impl CountsRecord {
    pub fn fov(&self) -> ImageCounts {
        ImageCounts {
            p: self.p_fov,
            n: self.n_fov,
        }
    }

    pub fn all(&self) -> ImageCounts {
        ImageCounts {
            p: self.p_all,
            n: self.n_all,
        }
    }

    pub fn counts(&self, tag: HypothesisTag) -> Result<ImageCounts> {
        match tag {
            HypothesisTag::FovOnly => Ok(self.fov()),
            HypothesisTag::AllPixels => Ok(self.all()),
            HypothesisTag::Custom => Err(Error::InvalidCounts("counts records hold fov and all only".into())),
        }
    }

    pub fn split(&self) -> Result<SplitCounts> {
        SplitCounts::from_regions(self.fov(), self.all())
    }

    fn validate(&self, index: usize) -> Result<()> {
        let at = |field: &str, why: String| Error::Schema(format!("record {index} ({}), field {field}: {why}", self.image_id));
        if self.image_id.is_empty() {
            return Err(Error::Schema(format!("record {index}, field image_id: empty")));
        }
        for (field, v) in [("p_fov", self.p_fov), ("n_fov", self.n_fov)] {
            if v == 0 {
                return Err(at(field, "must be at least 1".into()));
            }
        }
        if self.p_fov > self.p_all {
            return Err(at("p_fov", format!("{} exceeds p_all = {}", self.p_fov, self.p_all)));
        }
        if self.n_fov > self.n_all {
            return Err(at("n_fov", format!("{} exceeds n_all = {}", self.n_fov, self.n_all)));
        }
        Ok(())
    }
}

/// Ordered set of per-image count records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetCounts {
    pub records: Vec<CountsRecord>,
}

impl DatasetCounts {
    pub fn new(records: Vec<CountsRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            r.validate(i)?;
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::Schema(format!("record {i}, field image_id: duplicate id {}", r.image_id)));
            }
        }
        Ok(Self { records })
    }

    pub fn from_entries(entries: &[DatasetEntry]) -> Result<Self> {
        Self::new(entries.iter().map(DatasetEntry::record).collect::<Result<_>>()?)
    }

    pub fn counts(&self, tag: HypothesisTag) -> Result<Vec<ImageCounts>> {
        self.records.iter().map(|r| r.counts(tag)).collect()
    }

    pub fn splits(&self) -> Result<Vec<SplitCounts>> {
        self.records.iter().map(CountsRecord::split).collect()
    }

    pub fn get(&self, image_id: &str) -> Option<&CountsRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.records).expect("records serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<CountsRecord> =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("counts file: {e}")))?;
        Self::new(records)
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Per-image FoV counts and the differences to the all-pixels totals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub image_id: String,
    pub p_f: u64,
    pub n_f: u64,
    pub p_d: u64,
    pub n_d: u64,
}

impl SplitRecord {
    pub fn split(&self) -> SplitCounts {
        SplitCounts {
            p_f: self.p_f,
            n_f: self.n_f,
            p_d: self.p_d,
            n_d: self.n_d,
        }
    }
}

/// Splits keyed by image id, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetSplits {
    pub records: Vec<SplitRecord>,
}

impl DatasetSplits {
    pub fn new(records: Vec<SplitRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.image_id.is_empty() {
                return Err(Error::Schema(format!("split record {i}, field image_id: empty")));
            }
            if r.p_f == 0 || r.n_f == 0 {
                let field = if r.p_f == 0 { "p_f" } else { "n_f" };
                return Err(Error::Schema(format!("split record {i} ({}), field {field}: must be at least 1", r.image_id)));
            }
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::Schema(format!("split record {i}, field image_id: duplicate id {}", r.image_id)));
            }
        }
        Ok(Self { records })
    }

    pub fn from_counts(counts: &DatasetCounts) -> Self {
        Self {
            records: counts
                .records
                .iter()
                .map(|r| SplitRecord {
                    image_id: r.image_id.clone(),
                    p_f: r.p_fov,
                    n_f: r.n_fov,
                    p_d: r.p_all - r.p_fov,
                    n_d: r.n_all - r.n_fov,
                })
                .collect(),
        }
    }

    /// Checks that both files describe the same images with the same totals.
    pub fn check_against(&self, counts: &DatasetCounts) -> Result<()> {
        if self.records.len() != counts.records.len() {
            return Err(Error::Schema(format!(
                "splits cover {} images but counts cover {}",
                self.records.len(),
                counts.records.len()
            )));
        }
        for (s, c) in self.records.iter().zip(&counts.records) {
            if s.image_id != c.image_id {
                return Err(Error::Schema(format!("splits list image {} where counts list {}", s.image_id, c.image_id)));
            }
            if s.p_f != c.p_fov || s.n_f != c.n_fov || s.p_f + s.p_d != c.p_all || s.n_f + s.n_d != c.n_all {
                return Err(Error::Schema(format!("splits and counts disagree for image {}", s.image_id)));
            }
        }
        Ok(())
    }

    pub fn get(&self, image_id: &str) -> Option<SplitCounts> {
        self.records.iter().find(|r| r.image_id == image_id).map(SplitRecord::split)
    }

    pub fn splits(&self) -> Vec<SplitCounts> {
        self.records.iter().map(SplitRecord::split).collect()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.records).expect("records serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<SplitRecord> =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("splits file: {e}")))?;
        Self::new(records)
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(w: usize, h: usize) -> BinaryImage {
        let (cx, cy, r) = (w as f64 / 2.0, h as f64 / 2.0, w.min(h) as f64 * 0.47);
        BinaryImage::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            dx * dx + dy * dy <= r * r
        })
        .unwrap()
    }

    #[test]
    fn loads_png_and_pnm_rasters() {
        let dir = tempfile::tempdir().unwrap();
        let checker = BinaryImage::from_fn(2, 2, |x, y| (x + y) % 2 == 0).unwrap();
        for ext in ["png", "pgm", "pbm"] {
            let path = dir.path().join(format!("c.{ext}"));
            save_binary_image(&path, &checker).unwrap();
            let back = load_binary_image(&path).unwrap();
            assert_eq!(back, checker, "{ext}");
            assert_eq!(back.count_ones(), 2);
        }
        let black = dir.path().join("black.png");
        save_binary_image(&black, &BinaryImage::filled(5, 3, false).unwrap()).unwrap();
        assert_eq!(load_binary_image(&black).unwrap().count_ones(), 0);
    }

    #[test]
    fn any_nonzero_channel_is_foreground() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.ppm");
        fs::write(&path, "P3\n3 1\n255\n0 0 0  0 0 1  200 0 0\n").unwrap();
        assert_eq!(load_binary_image(&path).unwrap().bits(), &[false, true, true]);
        let pbm = dir.path().join("ink.pbm");
        fs::write(&pbm, "P1\n2 1\n1 0\n").unwrap();
        assert_eq!(load_binary_image(&pbm).unwrap().bits(), &[false, true]);
    }

    #[test]
    fn unreadable_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_binary_image(&dir.path().join("missing.png")), Err(Error::Io { .. })));
        let junk = dir.path().join("junk.png");
        fs::write(&junk, b"not an image").unwrap();
        assert!(matches!(load_binary_image(&junk), Err(Error::Image { .. })));
        assert!(BinaryImage::new(0, 4, vec![]).is_err());
    }

    #[test]
    fn hypothesis_counts() {
        let fov = disc(40, 30);
        let gt = BinaryImage::from_fn(40, 30, |x, y| x == 20 && (5..25).contains(&y)).unwrap();
        let f = counts_for_hypothesis(&gt, &fov, HypothesisTag::FovOnly).unwrap();
        let a = counts_for_hypothesis(&gt, &fov, HypothesisTag::AllPixels).unwrap();
        assert_eq!(f.p, a.p);
        assert_eq!(a.n - f.n, 1200 - fov.count_ones());
        assert_eq!(a.total(), 1200);
        assert!(counts_for_hypothesis(&gt, &fov, HypothesisTag::Custom).is_err());
        assert!(counts_for_hypothesis(&gt, &disc(30, 40), HypothesisTag::FovOnly).is_err());
    }

    #[test]
    fn segmentation_extremes() {
        let region = disc(20, 20);
        let gt = BinaryImage::from_fn(20, 20, |x, y| (x * 7 + y * 3) % 5 == 0).unwrap();
        let same = evaluate_segmentation(&gt, &gt, &region).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        assert_eq!(same.total(), region.count_ones());
        let inverted = evaluate_segmentation(&gt, &gt.complement(), &region).unwrap();
        assert_eq!((inverted.tp, inverted.tn), (0, 0));
        assert!(evaluate_segmentation(&gt, &disc(10, 20), &region).is_err());
    }

    #[test]
    fn counts_round_trip_and_validation() {
        let counts = DatasetCounts::new(vec![
            CountsRecord {
                image_id: "01".into(),
                p_fov: 29412,
                n_fov: 194965,
                p_all: 29440,
                n_all: 300520,
            },
            CountsRecord {
                image_id: "02".into(),
                p_fov: 12,
                n_fov: 30,
                p_all: 12,
                n_all: 38,
            },
        ])
        .unwrap();
        assert_eq!(DatasetCounts::from_json(&counts.to_json()).unwrap(), counts);
        assert_eq!(counts.splits().unwrap()[0], SplitCounts::new(29412, 194965, 28, 105555).unwrap());

        let bad = r#"[{"image_id": "x", "p_fov": 5, "n_fov": 3, "p_all": 4, "n_all": 9}]"#;
        let msg = DatasetCounts::from_json(bad).unwrap_err().to_string();
        assert!(msg.contains("record 0") && msg.contains("p_fov"), "{msg}");
        let unknown = r#"[{"image_id": "x", "p_fov": 1, "n_fov": 3, "p_all": 4, "n_all": 9, "q": 1}]"#;
        assert!(DatasetCounts::from_json(unknown).unwrap_err().to_string().contains("line 1"));
        let missing = "[\n{\"image_id\": \"x\", \"p_fov\": 1}\n]";
        assert!(DatasetCounts::from_json(missing).unwrap_err().to_string().contains("n_fov"));
        let dup = r#"[{"image_id": "x", "p_fov": 1, "n_fov": 3, "p_all": 4, "n_all": 9},
                       {"image_id": "x", "p_fov": 1, "n_fov": 3, "p_all": 4, "n_all": 9}]"#;
        assert!(DatasetCounts::from_json(dup).unwrap_err().to_string().contains("duplicate"));

        let splits = DatasetSplits::from_counts(&counts);
        assert_eq!(DatasetSplits::from_json(&splits.to_json()).unwrap(), splits);
        splits.check_against(&counts).unwrap();
        assert_eq!(splits.get("02").unwrap(), SplitCounts::new(12, 30, 0, 8).unwrap());
        let mut off = splits.clone();
        off.records[1].n_d += 1;
        assert!(off.check_against(&counts).is_err());
    }

    #[test]
    fn loads_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        for sub in [MASK_DIR, FIRST_MANUAL_DIR, SECOND_MANUAL_DIR] {
            fs::create_dir(dir.path().join(sub)).unwrap();
        }
        let fov = disc(16, 16);
        let gt = BinaryImage::from_fn(16, 16, |x, _| x == 8).unwrap();
        for id in ["02", "01"] {
            save_binary_image(&dir.path().join(MASK_DIR).join(format!("{id}_test_mask.png")), &fov).unwrap();
            save_binary_image(&dir.path().join(FIRST_MANUAL_DIR).join(format!("{id}_manual1.pgm")), &gt).unwrap();
        }
        save_binary_image(&dir.path().join(SECOND_MANUAL_DIR).join("01_manual2.png"), &gt).unwrap();
        let entries = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(entries.iter().map(|e| e.image_id.as_str()).collect::<Vec<_>>(), ["01", "02"]);
        assert!(entries[0].second_annotation.is_some());
        assert!(entries[1].second_annotation.is_none());
        let record = entries[0].record().unwrap();
        assert_eq!(record.p_all, 16);
        assert_eq!(record.n_all, 240);
        fs::remove_file(dir.path().join(FIRST_MANUAL_DIR).join("02_manual1.pgm")).unwrap();
        assert!(matches!(load_dataset_dir(dir.path()), Err(Error::Missing(_))));
    }
}

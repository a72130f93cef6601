//! Training: labeled pages to `.tr` feature records, then to the
//! unicharset, the normalization prototypes (`normproto`) and the
//! micro-feature templates (`inttemp` + `pffmtable`).

mod cluster;
mod features;
mod files;

pub use features::{cn_features, extract_features, micro_features, normalize_frame, sector_distance, FRAME};
pub use files::{
    microfeat_log, parse_inttemp, parse_normproto, parse_pffmtable, parse_tr, parse_unicharset, write_inttemp,
    write_normproto, write_pffmtable, write_tr, write_unicharset, FormatError,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::boxfile::BoxFile;
use crate::imaging::{binarize, extract_components, BinaryImage, Bitmap, PageImage};
use cluster::{kmeans, ClusterPoint};

/// Dimensionality of the normalization feature vector.
pub const CN_DIM: usize = 4;

/// Template coordinates are stored on a 1/64 grid.
pub const TEMPLATE_GRID: f64 = 64.0;

#[derive(Debug, thiserror::Error)]
pub enum TrainingError {
    #[error("glyph mask has no ink")]
    EmptyGlyph,
    #[error("no labeled samples to train on")]
    NoSamples,
}

/// One outline run of a glyph in its normalized 1x1 frame (y up).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MicroFeature {
    pub x: f64,
    pub y: f64,
    /// Direction sector 0..8, counter-clockwise from east in 45 degree steps.
    pub dir: u8,
    /// Run length relative to the frame diagonal.
    pub len: f64,
}

impl MicroFeature {
    /// Snaps position and length onto the template grid.
    pub fn quantized(&self) -> MicroFeature {
        let q = |v: f64| ((v * TEMPLATE_GRID).round() / TEMPLATE_GRID).clamp(0.0, 1.0);
        MicroFeature { x: q(self.x), y: q(self.y), dir: self.dir % 8, len: q(self.len) }
    }

    fn sort_key(&self) -> (f64, f64, u8, f64) {
        (self.x, self.y, self.dir, self.len)
    }
}

/// Weight of one direction sector in micro-feature clustering distance.
const SECTOR_WEIGHT: f64 = 0.25;

impl ClusterPoint for MicroFeature {
    fn dist2(&self, other: &Self) -> f64 {
        let ds = sector_distance(self.dir, other.dir) as f64 * SECTOR_WEIGHT;
        (self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.len - other.len).powi(2) + ds * ds
    }

    fn centroid(members: &[&Self]) -> Self {
        let n = members.len() as f64;
        let (mut x, mut y, mut len, mut vx, mut vy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for m in members {
            x += m.x;
            y += m.y;
            len += m.len;
            let a = m.dir as f64 * std::f64::consts::FRAC_PI_4;
            vx += a.cos();
            vy += a.sin();
        }
        let dir = if vx.abs() < 1e-9 && vy.abs() < 1e-9 {
            members[0].dir
        } else {
            (vy.atan2(vx) / std::f64::consts::FRAC_PI_4).round().rem_euclid(8.0) as u8
        };
        MicroFeature { x: x / n, y: y / n, dir, len: len / n }
    }
}

/// Feature record of one training character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrCharFeatures {
    pub glyph: Option<char>,
    pub cn: [f64; CN_DIM],
    pub micro: Vec<MicroFeature>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrFeatureSet {
    pub page_id: String,
    pub records: Vec<TrCharFeatures>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnicharEntry {
    pub glyph: char,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unicharset {
    pub entries: Vec<UnicharEntry>,
}

impl Unicharset {
    pub fn contains(&self, glyph: char) -> bool {
        self.entries.iter().any(|e| e.glyph == glyph)
    }

    pub fn count(&self, glyph: char) -> Option<u64> {
        self.entries.iter().find(|e| e.glyph == glyph).map(|e| e.count)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }
}

/// One cluster of normalization features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub mean: [f64; CN_DIM],
    pub var: [f64; CN_DIM],
    /// Fraction of the class's samples in this cluster.
    pub weight: f64,
}

/// Per-class normalization prototypes (the `normproto` file).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrototypeModel {
    pub classes: BTreeMap<char, Vec<Prototype>>,
}

impl PrototypeModel {
    pub fn dim(&self) -> usize {
        CN_DIM
    }
}

/// Per-class quantized micro-feature prototypes (`inttemp`) and expected
/// feature counts (`pffmtable`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MicroProtoModel {
    pub classes: BTreeMap<char, Vec<MicroFeature>>,
    pub expected_count: BTreeMap<char, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub max_protos: usize,
    pub max_mf_protos: usize,
    pub variance_floor: f64,
    pub max_iterations: usize,
    /// Ink specks smaller than this are ignored when cropping training boxes.
    pub noise_floor: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { max_protos: 4, max_mf_protos: 16, variance_floor: 1e-4, max_iterations: 100, noise_floor: 4 }
    }
}

/// A box that produced no feature record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedBox {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmitOutcome {
    pub features: TrFeatureSet,
    pub skipped: Vec<SkippedBox>,
}

/// Crops the ink inside `[left, right) x [bottom, top)` of a binarized page,
/// dropping specks below `noise_floor`. `None` when nothing remains.
pub fn crop_glyph(bin: &BinaryImage, bbox: &crate::geometry::BBox, noise_floor: usize) -> Option<Bitmap> {
    let (w, h) = (bin.width() as i32, bin.height() as i32);
    let left = bbox.left.clamp(0, w);
    let right = bbox.right.clamp(0, w);
    let bottom = bbox.bottom.clamp(0, h);
    let top = bbox.top.clamp(0, h);
    if left >= right || bottom >= top {
        return None;
    }
    let (cw, ch) = ((right - left) as u32, (top - bottom) as u32);
    let top_row = (h - top) as u32;
    let mut crop = Bitmap::blank(cw, ch).ok()?;
    for r in 0..ch {
        for c in 0..cw {
            if bin.get(left as u32 + c, top_row + r) {
                crop.set(c, r, true);
            }
        }
    }
    let comps = extract_components(&BinaryImage { id: String::new(), mask: crop }, noise_floor);
    if comps.is_empty() {
        return None;
    }
    let mut cleaned = Bitmap::blank(cw, ch).ok()?;
    for comp in &comps {
        for &(c, r) in &comp.pixels {
            cleaned.set(c, r, true);
        }
    }
    // Tighten to the remaining ink.
    let (mut c0, mut r0, mut c1, mut r1) = (u32::MAX, u32::MAX, 0, 0);
    for comp in &comps {
        for &(c, r) in &comp.pixels {
            c0 = c0.min(c);
            c1 = c1.max(c);
            r0 = r0.min(r);
            r1 = r1.max(r);
        }
    }
    let mut tight = Bitmap::blank(c1 - c0 + 1, r1 - r0 + 1).ok()?;
    for r in r0..=r1 {
        for c in c0..=c1 {
            if cleaned.get(c, r) {
                tight.set(c - c0, r - r0, true);
            }
        }
    }
    Some(tight)
}

/// Feature records for every labeled box of a training page, in box order.
pub fn emit_tr(page: &PageImage, boxes: &BoxFile, cfg: &TrainingConfig) -> EmitOutcome {
    let bin = binarize(page);
    let mut out = EmitOutcome { features: TrFeatureSet { page_id: page.id().to_string(), records: Vec::new() }, skipped: Vec::new() };
    for (index, entry) in boxes.entries.iter().enumerate() {
        match crop_glyph(&bin, &entry.bbox, cfg.noise_floor) {
            Some(mask) => {
                let mut rec = extract_features(&mask).expect("cropped masks carry ink");
                rec.glyph = Some(entry.glyph);
                out.features.records.push(rec);
            }
            None => out.skipped.push(SkippedBox {
                index,
                reason: format!("box {} for {:?} contains no ink", entry.bbox, entry.glyph),
            }),
        }
    }
    out
}

/// Distinct labels across box files with their total counts, in order of
/// first appearance.
pub fn extract_unicharset(boxfiles: &[BoxFile]) -> Unicharset {
    let mut entries: Vec<UnicharEntry> = Vec::new();
    for e in boxfiles.iter().flat_map(|bf| bf.entries.iter()) {
        match entries.iter_mut().find(|u| u.glyph == e.glyph) {
            Some(u) => u.count += 1,
            None => entries.push(UnicharEntry { glyph: e.glyph, count: 1 }),
        }
    }
    Unicharset { entries }
}

fn labeled_records(trs: &[TrFeatureSet]) -> BTreeMap<char, Vec<&TrCharFeatures>> {
    let mut by_class: BTreeMap<char, Vec<&TrCharFeatures>> = BTreeMap::new();
    for rec in trs.iter().flat_map(|t| t.records.iter()) {
        if let Some(g) = rec.glyph {
            by_class.entry(g).or_default().push(rec);
        }
    }
    by_class
}

/// Clusters each class's normalization vectors into at most
/// `cfg.max_protos` prototypes (and at most half the sample count).
pub fn cn_training(trs: &[TrFeatureSet], cfg: &TrainingConfig) -> Result<PrototypeModel, TrainingError> {
    let by_class = labeled_records(trs);
    if by_class.is_empty() {
        return Err(TrainingError::NoSamples);
    }
    let mut classes = BTreeMap::new();
    for (glyph, recs) in by_class {
        let mut samples: Vec<[f64; CN_DIM]> = recs.iter().map(|r| r.cn).collect();
        samples.sort_by(|a, b| a.partial_cmp(b).expect("features are finite"));
        let k = cfg.max_protos.min(samples.len() / 2).max(1);
        let n = samples.len() as f64;
        let protos = kmeans(&samples, k, cfg.max_iterations)
            .into_iter()
            .map(|c| {
                let mut var = [0.0; CN_DIM];
                for &i in &c.members {
                    for (d, v) in var.iter_mut().enumerate() {
                        *v += (samples[i][d] - c.center[d]).powi(2);
                    }
                }
                let var = var.map(|v| (v / c.members.len() as f64).max(cfg.variance_floor));
                Prototype { mean: c.center, var, weight: c.members.len() as f64 / n }
            })
            .collect();
        classes.insert(glyph, protos);
    }
    Ok(PrototypeModel { classes })
}

/// Clusters each class's pooled micro-features into at most
/// `cfg.max_mf_protos` quantized prototypes and records the mean number of
/// features per sample.
pub fn mf_training(trs: &[TrFeatureSet], cfg: &TrainingConfig) -> Result<MicroProtoModel, TrainingError> {
    let by_class = labeled_records(trs);
    if by_class.is_empty() {
        return Err(TrainingError::NoSamples);
    }
    let mut model = MicroProtoModel::default();
    for (glyph, recs) in by_class {
        let mut pooled: Vec<MicroFeature> = recs.iter().flat_map(|r| r.micro.iter().copied()).collect();
        pooled.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).expect("features are finite"));
        let k = cfg.max_mf_protos.min(pooled.len()).max(1);
        let mut protos: Vec<MicroFeature> = kmeans(&pooled, k, cfg.max_iterations)
            .into_iter()
            .map(|c| c.center.quantized())
            .collect();
        protos.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
        protos.dedup();
        let expected = (pooled.len() as f64 / recs.len() as f64).round().max(1.0) as u32;
        model.classes.insert(glyph, protos);
        model.expected_count.insert(glyph, expected);
    }
    Ok(model)
}

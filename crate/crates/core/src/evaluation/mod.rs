//! Scoring recognition output against ground-truth boxes.
//!
//! Every true character ends up in exactly one bucket: correctly classified
//! (`ct`), misclassified or split (`cm`), merged with neighbours (`cs`), or
//! rejected. Accuracy is taken over the first three only.

mod align;
mod report;

pub use align::{align, AlignOp, Alignment, OpKind};
pub use report::{render_frequency, render_manifest, render_report, report_records, ReportRecord};

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::boxfile::{BoxEntry, BoxFile};
use crate::geometry::BBox;
use crate::recognizer::RecognitionResult;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("word sidecar line {line}: {message}")]
pub struct SidecarError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub chars: Vec<BoxEntry>,
    /// Index of the first character of each word, ascending, starting at 0.
    pub word_starts: Vec<usize>,
}

impl GroundTruth {
    /// Treats the page as a single word until a sidecar says otherwise.
    pub fn from_boxes(bf: &BoxFile) -> Self {
        GroundTruth { chars: bf.entries.clone(), word_starts: if bf.entries.is_empty() { vec![] } else { vec![0] } }
    }

    pub fn with_words(mut self, word_starts: Vec<usize>) -> Self {
        self.word_starts = word_starts;
        self
    }

    pub fn word_count(&self) -> usize {
        self.word_starts.len()
    }
}

/// Reads a word-boundary sidecar: one start index per line, strictly
/// increasing and below `n_chars`.
pub fn parse_word_sidecar(text: &str, n_chars: usize) -> Result<Vec<usize>, SidecarError> {
    let mut out: Vec<usize> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SidecarError { line: i + 1, message };
        let v: usize = line.parse().map_err(|_| err(format!("{line:?} is not an index")))?;
        if v >= n_chars {
            return Err(err(format!("index {v} is past the last character ({n_chars} in total)")));
        }
        if out.last().is_some_and(|&p| p >= v) {
            return Err(err(format!("index {v} does not increase")));
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutSegment {
    pub glyph: char,
    pub bbox: BBox,
    pub rejected: bool,
}

/// What the recognizer produced for a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Segments(Vec<OutSegment>),
    Text(String),
}

impl Prediction {
    /// Every segmented character; those in rejected words count as rejected.
    pub fn from_result(r: &RecognitionResult) -> Self {
        Prediction::Segments(
            r.chars()
                .map(|(w, c)| OutSegment { glyph: c.best.glyph, bbox: c.bbox, rejected: w.rejected || c.rejected })
                .collect(),
        )
    }
}

/// Which collection sheet a page came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dataset {
    /// Isolated characters.
    #[serde(rename = "dataset-1")]
    Isolated,
    /// Free-flow text.
    #[serde(rename = "dataset-2")]
    FreeFlow,
}

impl Dataset {
    pub fn label(self) -> &'static str {
        match self {
            Dataset::Isolated => "Dataset-1",
            Dataset::FreeFlow => "Dataset-2",
        }
    }
}

/// Additive character counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub ct: u64,
    pub cm: u64,
    pub cs: u64,
    pub rejected: u64,
}

impl Counts {
    pub fn new(ct: u64, cm: u64, cs: u64, rejected: u64) -> Self {
        Counts { ct, cm, cs, rejected }
    }

    pub fn total(&self) -> u64 {
        self.ct + self.cm + self.cs + self.rejected
    }

    /// Characters that were neither rejected nor dropped.
    pub fn scored(&self) -> u64 {
        self.ct + self.cm + self.cs
    }

    fn pct(part: u64, whole: u64) -> Option<f64> {
        (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
    }

    /// `100 * ct / (ct + cm + cs)`; `None` when nothing was scored.
    pub fn accuracy(&self) -> Option<f64> {
        Self::pct(self.ct, self.scored())
    }

    pub fn misclassification(&self) -> Option<f64> {
        Self::pct(self.cm, self.scored())
    }

    pub fn segmentation_failure(&self) -> Option<f64> {
        Self::pct(self.cs, self.scored())
    }

    /// Rejected share of all ground-truth characters.
    pub fn rejection(&self) -> Option<f64> {
        Self::pct(self.rejected, self.total())
    }
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts { ct: self.ct + o.ct, cm: self.cm + o.cm, cs: self.cs + o.cs, rejected: self.rejected + o.rejected }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Outcome tally of one character class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharTally {
    pub success: u64,
    pub misclassified: u64,
    pub unsegmented: u64,
    pub rejected: u64,
}

impl AddAssign for CharTally {
    fn add_assign(&mut self, o: CharTally) {
        self.success += o.success;
        self.misclassified += o.misclassified;
        self.unsegmented += o.unsegmented;
        self.rejected += o.rejected;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: Counts,
    pub by_dataset: BTreeMap<Dataset, Counts>,
    pub per_char: BTreeMap<char, CharTally>,
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        self.counts.accuracy()
    }

    /// Adds another report's counts; reports over disjoint pages sum.
    pub fn absorb(&mut self, other: &EvalReport) {
        self.counts += other.counts;
        for (d, c) in &other.by_dataset {
            *self.by_dataset.entry(*d).or_default() += *c;
        }
        for (g, t) in &other.per_char {
            *self.per_char.entry(*g).or_default() += *t;
        }
    }
}

/// Turns an alignment into counts. A split charges one misclassification;
/// a merge charges every character it swallowed to segmentation failure.
pub fn compute_metrics(a: &Alignment, dataset: Dataset) -> EvalReport {
    let mut counts = Counts::default();
    let mut per_char: BTreeMap<char, CharTally> = BTreeMap::new();
    for op in &a.ops {
        for &i in &op.gt {
            let t = per_char.entry(a.gt_glyphs[i]).or_default();
            match op.kind {
                OpKind::Match => t.success += 1,
                OpKind::Substitute | OpKind::Split { .. } => t.misclassified += 1,
                OpKind::Merge { .. } => t.unsegmented += 1,
                OpKind::Reject => t.rejected += 1,
                OpKind::Spurious => {}
            }
        }
        match op.kind {
            OpKind::Match => counts.ct += 1,
            OpKind::Substitute | OpKind::Split { .. } => counts.cm += 1,
            OpKind::Merge { k } => counts.cs += k as u64,
            OpKind::Reject => counts.rejected += op.gt.len() as u64,
            OpKind::Spurious => {}
        }
    }
    EvalReport { counts, by_dataset: BTreeMap::from([(dataset, counts)]), per_char }
}

/// Number of boxes per glyph across all files.
pub fn char_frequency(boxfiles: &[BoxFile]) -> BTreeMap<char, u64> {
    let mut out = BTreeMap::new();
    for bf in boxfiles {
        for e in &bf.entries {
            *out.entry(e.glyph).or_insert(0) += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPage {
    pub image: String,
    pub boxes: String,
    pub dataset: Option<Dataset>,
}

/// Sample counts of one user's train or test split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitCounts {
    pub pages: Vec<ManifestPage>,
    pub isolated_chars: u64,
    pub free_flow_chars: u64,
    pub free_flow_words: u64,
}

impl SplitCounts {
    pub fn total_chars(&self) -> u64 {
        self.isolated_chars + self.free_flow_chars
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestUser {
    pub user: String,
    #[serde(default)]
    pub train: SplitCounts,
    #[serde(default)]
    pub test: SplitCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub users: Vec<ManifestUser>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gt_of(labels: &str) -> GroundTruth {
        let chars = labels
            .chars()
            .enumerate()
            .map(|(i, glyph)| BoxEntry { glyph, bbox: BBox::new(i as i32 * 10, 0, i as i32 * 10 + 8, 12).unwrap() })
            .collect();
        GroundTruth { chars, word_starts: vec![0] }
    }

    fn out_same_boxes(gt: &GroundTruth, labels: &str) -> Prediction {
        Prediction::Segments(
            gt.chars.iter().zip(labels.chars()).map(|(e, glyph)| OutSegment { glyph, bbox: e.bbox, rejected: false }).collect(),
        )
    }

    fn kinds(a: &Alignment) -> Vec<OpKind> {
        a.ops.iter().map(|o| o.kind).collect()
    }

    #[test]
    fn reference_count_triples() {
        let a = Counts::new(8792, 1152, 56, 0);
        assert!((a.accuracy().unwrap() - 87.92).abs() < 0.005);
        assert!((a.misclassification().unwrap() - 11.52).abs() < 0.005);
        assert!((a.segmentation_failure().unwrap() - 0.56).abs() < 0.005);
        let b = Counts::new(7839, 1065, 1096, 0);
        assert!((b.accuracy().unwrap() - 78.39).abs() < 0.005);
        assert_eq!(Counts::default().accuracy(), None);
    }

    #[test]
    fn identical_boxes_all_match() {
        let gt = gt_of("cat");
        let a = align(&gt, &out_same_boxes(&gt, "cat"));
        assert_eq!(kinds(&a), vec![OpKind::Match; 3]);
        let r = compute_metrics(&a, Dataset::Isolated);
        assert_eq!(r.accuracy(), Some(100.0));
        assert_eq!((r.counts.cm, r.counts.cs), (0, 0));
    }

    #[test]
    fn substitution_in_place() {
        let gt = gt_of("cat");
        let a = align(&gt, &out_same_boxes(&gt, "cot"));
        assert_eq!(kinds(&a), vec![OpKind::Match, OpKind::Substitute, OpKind::Match]);
    }

    #[test]
    fn one_segment_over_two_chars_is_a_merge() {
        let gt = gt_of("in");
        let whole = gt.chars[0].bbox.union(&gt.chars[1].bbox);
        let a = align(&gt, &Prediction::Segments(vec![OutSegment { glyph: 'm', bbox: whole, rejected: false }]));
        assert_eq!(kinds(&a), vec![OpKind::Merge { k: 2 }]);
        assert_eq!(compute_metrics(&a, Dataset::FreeFlow).counts, Counts::new(0, 0, 2, 0));
    }

    #[test]
    fn dot_and_stem_split_charges_one_misclassification() {
        let gt = gt_of("i");
        let b = gt.chars[0].bbox;
        let stem = BBox::new(b.left, b.bottom, b.right, b.bottom + 8).unwrap();
        let dot = BBox::new(b.left, b.bottom + 10, b.right, b.top).unwrap();
        let out = Prediction::Segments(vec![
            OutSegment { glyph: 'l', bbox: stem, rejected: false },
            OutSegment { glyph: '.', bbox: dot, rejected: false },
        ]);
        let a = align(&gt, &out);
        assert_eq!(kinds(&a), vec![OpKind::Split { k: 2 }]);
        assert_eq!(compute_metrics(&a, Dataset::Isolated).counts, Counts::new(0, 1, 0, 0));
    }

    #[test]
    fn rejected_and_missing_output_count_as_rejections() {
        let gt = gt_of("abc");
        let Prediction::Segments(mut segs) = out_same_boxes(&gt, "abc") else { unreachable!() };
        segs[1].rejected = true;
        segs.remove(2);
        let r = compute_metrics(&align(&gt, &Prediction::Segments(segs)), Dataset::Isolated);
        assert_eq!(r.counts, Counts::new(1, 0, 0, 2));
        assert_eq!(r.per_char[&'c'].rejected, 1);
    }

    #[test]
    fn spurious_output_is_not_scored() {
        let gt = gt_of("a");
        let out = Prediction::Segments(vec![
            OutSegment { glyph: 'a', bbox: gt.chars[0].bbox, rejected: false },
            OutSegment { glyph: 'x', bbox: BBox::new(500, 500, 510, 510).unwrap(), rejected: false },
        ]);
        let a = align(&gt, &out);
        assert_eq!(kinds(&a), vec![OpKind::Match, OpKind::Spurious]);
        assert_eq!(compute_metrics(&a, Dataset::Isolated).counts, Counts::new(1, 0, 0, 0));
    }

    #[test]
    fn text_fallback() {
        let gt = gt_of("cat");
        assert_eq!(kinds(&align(&gt, &Prediction::Text("cat\n".into()))), vec![OpKind::Match; 3]);
        assert_eq!(
            kinds(&align(&gt, &Prediction::Text("ct\n".into()))),
            vec![OpKind::Match, OpKind::Reject, OpKind::Match]
        );
        let doubled = kinds(&align(&gt, &Prediction::Text("caat".into())));
        assert_eq!(doubled.iter().filter(|k| **k == OpKind::Match).count(), 2);
        assert!(doubled.contains(&OpKind::Split { k: 2 }));
        assert_eq!(kinds(&align(&gt_of(""), &Prediction::Text("xy".into()))), vec![OpKind::Spurious]);
    }

    #[test]
    fn sidecar_parsing() {
        assert_eq!(parse_word_sidecar("0\n3\n5\n", 7).unwrap(), vec![0, 3, 5]);
        assert_eq!(parse_word_sidecar("0\n3\n3\n", 7).unwrap_err().line, 3);
        assert_eq!(parse_word_sidecar("0\n9\n", 7).unwrap_err().line, 2);
        assert_eq!(parse_word_sidecar("x\n", 7).unwrap_err().line, 1);
    }

    #[test]
    fn frequency_counts_boxes() {
        assert!(char_frequency(&[]).is_empty());
        let bf = BoxFile { page_id: "p".into(), entries: gt_of("abca").chars };
        let h = char_frequency(&[bf.clone(), bf]);
        assert_eq!(h[&'a'], 4);
        assert_eq!(h.values().sum::<u64>(), 8);
    }

    fn assert_partitions(a: &Alignment, n_gt: usize) {
        let mut gt: Vec<usize> = a.ops.iter().flat_map(|o| o.gt.iter().copied()).collect();
        gt.sort_unstable();
        assert_eq!(gt, (0..n_gt).collect::<Vec<_>>());
        let mut out: Vec<usize> = a.ops.iter().flat_map(|o| o.out.iter().copied()).collect();
        out.sort_unstable();
        assert_eq!(out, (0..a.out_len).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn one_to_one_matches_hamming(pairs in proptest::collection::vec((0u8..4, 0u8..4), 0..=10)) {
            let truth: String = pairs.iter().map(|p| (b'a' + p.0) as char).collect();
            let guess: String = pairs.iter().map(|p| (b'a' + p.1) as char).collect();
            let gt = gt_of(&truth);
            let a = align(&gt, &out_same_boxes(&gt, &guess));
            let c = compute_metrics(&a, Dataset::Isolated).counts;
            let hamming = pairs.iter().filter(|p| p.0 != p.1).count() as u64;
            prop_assert_eq!(c.cm, hamming);
            prop_assert_eq!(c.ct, pairs.len() as u64 - hamming);
        }

        #[test]
        fn conservation_and_partition(
            gt_boxes in proptest::collection::vec((0i32..60, 0i32..20, 1i32..12, 1i32..12), 0..12),
            out_boxes in proptest::collection::vec((0i32..60, 0i32..20, 1i32..12, 1i32..12, any::<bool>(), 0u8..3), 0..12),
            text in "[abc ]{0,12}",
        ) {
            let chars: Vec<BoxEntry> = gt_boxes.iter().enumerate()
                .map(|(i, &(x, y, w, h))| BoxEntry { glyph: (b'a' + (i % 3) as u8) as char, bbox: BBox::new(x, y, x + w, y + h).unwrap() })
                .collect();
            let gt = GroundTruth { chars, word_starts: vec![] };
            let segs: Vec<OutSegment> = out_boxes.iter()
                .map(|&(x, y, w, h, rejected, g)| OutSegment { glyph: (b'a' + g) as char, bbox: BBox::new(x, y, x + w, y + h).unwrap(), rejected })
                .collect();
            for pred in [Prediction::Segments(segs), Prediction::Text(text)] {
                let a = align(&gt, &pred);
                assert_partitions(&a, gt.chars.len());
                let c = compute_metrics(&a, Dataset::FreeFlow).counts;
                prop_assert_eq!(c.total(), gt.chars.len() as u64);
            }
        }

        #[test]
        fn percentages_close_to_hundred(ct in 0u64..100_000, cm in 0u64..100_000, cs in 0u64..100_000) {
            let c = Counts::new(ct, cm, cs, 0);
            if let Some(acc) = c.accuracy() {
                prop_assert!((acc - 100.0 * ct as f64 / (ct + cm + cs) as f64).abs() < 1e-9);
                let round2 = |v: f64| (v * 100.0).round() / 100.0;
                let sum = round2(acc) + round2(c.misclassification().unwrap()) + round2(c.segmentation_failure().unwrap());
                prop_assert!((sum - 100.0).abs() <= 0.02 + 1e-9);
            } else {
                prop_assert_eq!(ct + cm + cs, 0);
            }
        }
    }
}

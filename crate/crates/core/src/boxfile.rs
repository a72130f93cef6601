//! Box files: one labeled character per line as
//! `<glyph> <left> <bottom> <right> <top>\n`, coordinates measured from the
//! bottom-left corner of the page.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;
use crate::imaging::{PageImage, PageSegmentation};
use crate::langpack::LanguagePack;
use crate::recognizer::{classify_glyph, RecognizerConfig};

/// Label given to boxes nobody has classified yet.
pub const PLACEHOLDER: char = '*';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxEntry {
    pub glyph: char,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxFile {
    pub page_id: String,
    pub entries: Vec<BoxEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct BoxParseError {
    /// 1-based line number.
    pub line: usize,
    pub kind: BoxParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoxParseErrorKind {
    #[error("text is not valid UTF-8")]
    InvalidUtf8,
    #[error("expected 5 space-separated fields, found {0}")]
    FieldCount(usize),
    #[error("{field} coordinate {value:?} is not a non-negative integer")]
    BadCoordinate { field: &'static str, value: String },
    #[error("glyph {0:?} is not exactly one character")]
    MultiCharGlyph(String),
    #[error("degenerate box: left {left} >= right {right}")]
    EmptyWidth { left: i32, right: i32 },
    #[error("degenerate box: bottom {bottom} >= top {top}")]
    EmptyHeight { bottom: i32, top: i32 },
}

const COORD_NAMES: [&str; 4] = ["left", "bottom", "right", "top"];

fn parse_coord(field: &'static str, raw: &str) -> Result<i32, BoxParseErrorKind> {
    let bad = || BoxParseErrorKind::BadCoordinate { field, value: raw.to_string() };
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    raw.parse::<i32>().map_err(|_| bad())
}

fn parse_line(line: &str) -> Result<BoxEntry, BoxParseErrorKind> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 5 {
        return Err(BoxParseErrorKind::FieldCount(fields.len()));
    }
    let mut chars = fields[0].chars();
    let glyph = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(BoxParseErrorKind::MultiCharGlyph(fields[0].to_string())),
    };
    let mut coords = [0i32; 4];
    for (i, name) in COORD_NAMES.iter().enumerate() {
        coords[i] = parse_coord(name, fields[i + 1])?;
    }
    let [left, bottom, right, top] = coords;
    if left >= right {
        return Err(BoxParseErrorKind::EmptyWidth { left, right });
    }
    if bottom >= top {
        return Err(BoxParseErrorKind::EmptyHeight { bottom, top });
    }
    Ok(BoxEntry { glyph, bbox: BBox { left, bottom, right, top } })
}

/// Parses box-file text. Empty lines are skipped.
pub fn parse_boxfile(page_id: &str, text: &[u8]) -> Result<BoxFile, BoxParseError> {
    let text = std::str::from_utf8(text).map_err(|e| {
        let line = text[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        BoxParseError { line, kind: BoxParseErrorKind::InvalidUtf8 }
    })?;
    let mut entries = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let entry = parse_line(line).map_err(|kind| BoxParseError { line: i + 1, kind })?;
        entries.push(entry);
    }
    Ok(BoxFile { page_id: page_id.to_string(), entries })
}

pub fn serialize_boxfile(bf: &BoxFile) -> Vec<u8> {
    let mut out = String::with_capacity(bf.entries.len() * 16);
    for e in &bf.entries {
        let b = e.bbox;
        writeln!(out, "{} {} {} {} {}", e.glyph, b.left, b.bottom, b.right, b.top).unwrap();
    }
    out.into_bytes()
}

/// Candidate boxes for a segmented page, one per glyph in reading order.
///
/// With a language pack each box carries the classifier's best guess;
/// otherwise every box gets [`PLACEHOLDER`].
pub fn make_boxes(page_id: &str, seg: &PageSegmentation, pack: Option<&LanguagePack>) -> BoxFile {
    let cfg = RecognizerConfig::default();
    let entries = seg
        .glyphs()
        .map(|g| {
            let glyph = pack
                .and_then(|p| classify_glyph(p, g, &cfg).ok())
                .and_then(|labels| labels.first().map(|l| l.glyph))
                .unwrap_or(PLACEHOLDER);
            BoxEntry { glyph, bbox: g.bbox }
        })
        .collect();
    BoxFile { page_id: page_id.to_string(), entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IssueKind {
    OutOfBounds,
    Overlap { other: usize, iou: f64 },
    Label,
}

/// A finding about one box-file entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub index: usize,
    #[serde(flatten)]
    pub kind: IssueKind,
    pub message: String,
}

impl Issue {
    /// Hard issues make a box file unusable for training.
    pub fn is_hard(&self) -> bool {
        matches!(self.kind, IssueKind::OutOfBounds)
    }
}

/// Boxes overlapping more than this IoU are flagged.
pub const OVERLAP_IOU: f64 = 0.8;

pub fn validate_boxes(bf: &BoxFile, page: &PageImage) -> Vec<Issue> {
    validate_boxes_in(bf, page.width(), page.height())
}

/// [`validate_boxes`] against bare page dimensions.
pub fn validate_boxes_in(bf: &BoxFile, width: u32, height: u32) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (i, e) in bf.entries.iter().enumerate() {
        if !e.bbox.within(width, height) {
            issues.push(Issue {
                index: i,
                kind: IssueKind::OutOfBounds,
                message: format!("box {} of {:?} leaves the {}x{} page", e.bbox, e.glyph, width, height),
            });
        }
        if !e.glyph.is_ascii_lowercase() {
            issues.push(Issue {
                index: i,
                kind: IssueKind::Label,
                message: format!("label {:?} is not a lowercase letter a-z", e.glyph),
            });
        }
    }
    for i in 0..bf.entries.len() {
        for j in i + 1..bf.entries.len() {
            let iou = bf.entries[i].bbox.iou(&bf.entries[j].bbox);
            if iou > OVERLAP_IOU {
                issues.push(Issue {
                    index: j,
                    kind: IssueKind::Overlap { other: i, iou },
                    message: format!("box {j} overlaps box {i} (IoU {iou:.2})"),
                });
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(glyph: char, l: i32, b: i32, r: i32, t: i32) -> BoxEntry {
        BoxEntry { glyph, bbox: BBox::new(l, b, r, t).unwrap() }
    }

    #[test]
    fn empty_text_has_no_entries() {
        assert!(parse_boxfile("p", b"").unwrap().entries.is_empty());
        assert!(serialize_boxfile(&BoxFile::default()).is_empty());
    }

    #[test]
    fn single_line() {
        let bf = parse_boxfile("p", b"a 10 20 30 45\n").unwrap();
        assert_eq!(bf.entries, vec![entry('a', 10, 20, 30, 45)]);
    }

    #[test]
    fn serialize_single_entry() {
        let bf = BoxFile { page_id: "p".into(), entries: vec![entry('b', 0, 0, 5, 9)] };
        assert_eq!(serialize_boxfile(&bf), b"b 0 0 5 9\n");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases: &[(&[u8], usize)] = &[
            (b"a 1 2 3\n", 1),
            (b"a 1 2 3 4\nb 1 2 3 x\n", 2),
            (b"a 1 2 3 4\n\nab 1 2 3 4\n", 3),
            (b"a 5 2 3 4\n", 1),
            (b"a 1 4 3 4\n", 1),
            (b"a 1 2 3 4\r\n", 1),
        ];
        for (text, line) in cases {
            let err = parse_boxfile("p", text).unwrap_err();
            assert_eq!(err.line, *line, "{err}");
        }
    }

    #[test]
    fn placeholder_when_no_pack() {
        use crate::imaging::{segment_page, BinaryImage, Bitmap, SegConfig};
        let mask = Bitmap::from_ascii(&[
            "..........",
            ".##.##.##.",
            ".##.##.##.",
            ".##.##.##.",
            "..........",
        ])
        .unwrap();
        let seg = segment_page(&BinaryImage { id: "p".into(), mask }, &SegConfig { noise_floor: 1, ..Default::default() });
        let bf = make_boxes("p", &seg, None);
        assert_eq!(bf.entries.len(), 3);
        assert!(bf.entries.iter().all(|e| e.glyph == PLACEHOLDER));
        assert!(make_boxes("p", &PageSegmentation::default(), None).entries.is_empty());
    }

    #[test]
    fn validation_findings() {
        let clean = BoxFile { page_id: "p".into(), entries: vec![entry('a', 0, 0, 5, 5), entry('b', 6, 0, 10, 5)] };
        assert!(validate_boxes_in(&clean, 10, 10).is_empty());

        let oob = BoxFile { page_id: "p".into(), entries: vec![entry('a', 0, 0, 11, 5)] };
        let issues = validate_boxes_in(&oob, 10, 10);
        assert_eq!(issues.len(), 1);
        assert!(issues[0].is_hard());

        let dup = BoxFile { page_id: "p".into(), entries: vec![entry('a', 0, 0, 5, 5), entry('a', 0, 0, 5, 5)] };
        let issues = validate_boxes_in(&dup, 10, 10);
        assert_eq!(issues.len(), 1);
        assert!(matches!(issues[0].kind, IssueKind::Overlap { other: 0, .. }));

        let label = BoxFile { page_id: "p".into(), entries: vec![entry('*', 0, 0, 5, 5)] };
        assert_eq!(validate_boxes_in(&label, 10, 10)[0].kind, IssueKind::Label);
    }
}

use serde::{Deserialize, Serialize};

use super::components::{extract_components, Component};
use super::{BinaryImage, Bitmap};
use crate::geometry::BBox;

/// Knobs for the line, word and glyph finder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegConfig {
    /// Components with fewer pixels are treated as speckle.
    pub noise_floor: usize,
    /// A gap wider than this multiple of the page's median glyph gap starts a new word.
    pub word_gap_factor: f64,
    /// Minimum shared horizontal extent, as a fraction of the narrower span,
    /// for a mark to merge into the stroke below it.
    pub diacritic_overlap: f64,
    /// Largest vertical gap between mark and host, as a fraction of host height.
    pub diacritic_max_gap: f64,
    /// Largest mark size, as a fraction of the host's pixel count.
    pub diacritic_max_area: f64,
    /// Minimum vertical overlap, as a fraction of the shorter extent, for a
    /// glyph to join an existing line.
    pub line_overlap: f64,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            noise_floor: 4,
            word_gap_factor: 2.5,
            diacritic_overlap: 0.5,
            diacritic_max_gap: 0.5,
            diacritic_max_area: 0.5,
            line_overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlyphSample {
    pub bbox: BBox,
    /// Ink of the glyph's own components, cropped to `bbox`, top row first.
    pub mask: Bitmap,
    pub source_page: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub bbox: BBox,
    pub glyphs: Vec<GlyphSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    /// Vertical extent `(y_low, y_high)` of everything on the line.
    pub band: (i32, i32),
    pub words: Vec<Word>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSegmentation {
    pub lines: Vec<Line>,
}

impl PageSegmentation {
    pub fn glyphs(&self) -> impl Iterator<Item = &GlyphSample> {
        self.lines.iter().flat_map(|l| l.words.iter().flat_map(|w| w.glyphs.iter()))
    }

    pub fn glyph_count(&self) -> usize {
        self.glyphs().count()
    }

    pub fn word_count(&self) -> usize {
        self.lines.iter().map(|l| l.words.len()).sum()
    }
}

/// Splits a binarized page into lines, words and glyphs in reading order.
pub fn segment_page(bin: &BinaryImage, cfg: &SegConfig) -> PageSegmentation {
    let comps = extract_components(bin, cfg.noise_floor);
    if comps.is_empty() {
        return PageSegmentation::default();
    }
    let groups = merge_diacritics(&comps, cfg);
    let glyphs: Vec<GlyphSample> = groups
        .iter()
        .map(|members| build_glyph(&comps, members, bin))
        .collect();

    let lines: Vec<Vec<&GlyphSample>> = cluster_lines(&glyphs, cfg)
        .into_iter()
        .map(|members| {
            let mut members: Vec<&GlyphSample> = members.into_iter().map(|i| &glyphs[i]).collect();
            members.sort_by_key(|g| (g.bbox.left, g.bbox.bottom, g.bbox.right, g.bbox.top));
            members
        })
        .collect();
    // One reference gap for the whole page: a line of short words has too
    // few letter gaps to give its own median.
    let mut gaps: Vec<i32> = lines.iter().flat_map(|m| line_gaps(m)).collect();
    let threshold = if gaps.is_empty() {
        f64::INFINITY
    } else {
        gaps.sort_unstable();
        let mid = gaps.len() / 2;
        let median = if gaps.len() % 2 == 0 {
            (gaps[mid - 1] + gaps[mid]) as f64 / 2.0
        } else {
            gaps[mid] as f64
        };
        cfg.word_gap_factor * median.max(1.0)
    };
    let lines = lines
        .into_iter()
        .map(|members| {
            let band = members.iter().fold((i32::MAX, i32::MIN), |(lo, hi), g| {
                (lo.min(g.bbox.bottom), hi.max(g.bbox.top))
            });
            Line { band, words: split_words(&members, threshold) }
        })
        .collect();
    PageSegmentation { lines }
}

/// Groups component indices into glyphs, attaching small marks (the dot of
/// an `i` or `j`) to the stroke directly below them.
fn merge_diacritics(comps: &[Component], cfg: &SegConfig) -> Vec<Vec<usize>> {
    let n = comps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for (d, mark) in comps.iter().enumerate() {
        let mut best: Option<(i32, i32, usize)> = None;
        for (h, host) in comps.iter().enumerate() {
            if h == d || mark.pixel_count as f64 > cfg.diacritic_max_area * host.pixel_count as f64 {
                continue;
            }
            let gap = mark.bbox.bottom - host.bbox.top;
            if gap < 0 || gap as f64 > cfg.diacritic_max_gap * host.bbox.height() as f64 {
                continue;
            }
            let overlap = mark.bbox.horizontal_overlap(&host.bbox);
            let narrower = mark.bbox.width().min(host.bbox.width());
            if (overlap as f64) < cfg.diacritic_overlap * narrower as f64 && !on_stroke_axis(mark, host) {
                continue;
            }
            let key = (gap, -overlap, h);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        if let Some((_, _, h)) = best {
            let (rd, rh) = (find(&mut parent, d), find(&mut parent, h));
            if rd != rh {
                parent[rd] = rh;
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Whether the mark sits on the upward extension of the host's top stroke,
/// which is how a dot lands over a slanted stem.
fn on_stroke_axis(mark: &Component, host: &Component) -> bool {
    let top = host.pixels.iter().map(|p| p.1).min().unwrap_or(0) as f64;
    let band = (host.bbox.height() as f64 / 4.0).max(2.0);
    let (mut upper, mut lower) = ((0.0, 0.0, 0usize, u32::MAX, 0u32), (0.0, 0.0, 0usize));
    for &(c, r) in &host.pixels {
        let depth = r as f64 - top;
        if depth < band {
            upper = (upper.0 + c as f64, upper.1 + r as f64, upper.2 + 1, upper.3.min(c), upper.4.max(c));
        } else if depth < 2.0 * band {
            lower = (lower.0 + c as f64, lower.1 + r as f64, lower.2 + 1);
        }
    }
    if upper.2 == 0 || lower.2 == 0 {
        return false;
    }
    let (ux, uy) = (upper.0 / upper.2 as f64, upper.1 / upper.2 as f64);
    let (lx, ly) = (lower.0 / lower.2 as f64, lower.1 / lower.2 as f64);
    let slope = (ux - lx) / (uy - ly);
    let n = mark.pixels.len() as f64;
    let mx = mark.pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = mark.pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let predicted = ux + slope * (my - uy);
    let stroke_width = (upper.4 - upper.3 + 1) as f64;
    (mx - predicted).abs() <= 0.5 * stroke_width.max(mark.bbox.width() as f64)
}

fn build_glyph(comps: &[Component], members: &[usize], bin: &BinaryImage) -> GlyphSample {
    let bbox = members
        .iter()
        .map(|&i| comps[i].bbox)
        .reduce(|a, b| a.union(&b))
        .expect("glyph groups are non-empty");
    let top_row = bbox.raster_top_row(bin.height()) as u32;
    let left = bbox.left as u32;
    let mut mask = Bitmap::blank(bbox.width() as u32, bbox.height() as u32).expect("valid bbox");
    for &i in members {
        for &(c, r) in &comps[i].pixels {
            mask.set(c - left, r - top_row, true);
        }
    }
    GlyphSample { bbox, mask, source_page: bin.id.clone() }
}

/// Greedy top-down clustering of glyph boxes into lines by vertical overlap.
/// Returns member indices per line, top line first.
fn cluster_lines(glyphs: &[GlyphSample], cfg: &SegConfig) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..glyphs.len()).collect();
    order.sort_by_key(|&i| {
        let b = glyphs[i].bbox;
        (-b.top, -b.bottom, b.left, b.right)
    });

    // (bottom, top, members)
    let mut lines: Vec<(i32, i32, Vec<usize>)> = Vec::new();
    for i in order {
        let b = glyphs[i].bbox;
        let mut best: Option<(f64, usize)> = None;
        for (li, (lo, hi, _)) in lines.iter().enumerate() {
            let overlap = b.top.min(*hi) - b.bottom.max(*lo);
            if overlap <= 0 {
                continue;
            }
            let frac = overlap as f64 / b.height().min(hi - lo) as f64;
            if frac >= cfg.line_overlap && best.is_none_or(|(f, _)| frac > f) {
                best = Some((frac, li));
            }
        }
        match best {
            Some((_, li)) => {
                let line = &mut lines[li];
                line.0 = line.0.min(b.bottom);
                line.1 = line.1.max(b.top);
                line.2.push(i);
            }
            None => lines.push((b.bottom, b.top, vec![i])),
        }
    }
    lines.sort_by_key(|(lo, hi, _)| (-hi, -lo));
    lines.into_iter().map(|(_, _, m)| m).collect()
}

fn line_gaps(glyphs: &[&GlyphSample]) -> Vec<i32> {
    glyphs.windows(2).map(|w| w[1].bbox.left - w[0].bbox.right).collect()
}

fn split_words(glyphs: &[&GlyphSample], threshold: f64) -> Vec<Word> {
    let gaps = line_gaps(glyphs);

    let mut words = Vec::new();
    let mut current: Vec<GlyphSample> = vec![glyphs[0].clone()];
    for (i, g) in glyphs.iter().enumerate().skip(1) {
        if gaps[i - 1] as f64 > threshold {
            words.push(finish_word(std::mem::take(&mut current)));
        }
        current.push((*g).clone());
    }
    words.push(finish_word(current));
    words
}

fn finish_word(glyphs: Vec<GlyphSample>) -> Word {
    let bbox = glyphs.iter().map(|g| g.bbox).reduce(|a, b| a.union(&b)).expect("non-empty word");
    Word { bbox, glyphs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(w: u32, h: u32, stamps: &[(u32, u32, u32, u32)]) -> BinaryImage {
        // stamps are raster rectangles (col, row, width, height)
        let mut mask = Bitmap::blank(w, h).unwrap();
        for &(c, r, sw, sh) in stamps {
            for rr in r..r + sh {
                for cc in c..c + sw {
                    mask.set(cc, rr, true);
                }
            }
        }
        BinaryImage { id: "page".into(), mask }
    }

    #[test]
    fn empty_page_segments_to_nothing() {
        let seg = segment_page(&page(20, 20, &[]), &SegConfig::default());
        assert!(seg.lines.is_empty());
    }

    #[test]
    fn single_glyph_page() {
        let seg = segment_page(&page(20, 20, &[(5, 5, 4, 6)]), &SegConfig::default());
        assert_eq!(seg.lines.len(), 1);
        assert_eq!(seg.lines[0].words.len(), 1);
        assert_eq!(seg.glyph_count(), 1);
        let g = seg.glyphs().next().unwrap();
        assert_eq!(g.bbox, BBox::new(5, 9, 9, 15).unwrap());
        assert_eq!(g.mask.ink_count(), 24);
        assert_eq!(g.source_page, "page");
    }

    #[test]
    fn uniform_grid_is_one_word_per_line() {
        let mut stamps = Vec::new();
        for r in 0..5 {
            for c in 0..10 {
                stamps.push((5 + c * 12, 5 + r * 20, 6, 10));
            }
        }
        let seg = segment_page(&page(130, 110, &stamps), &SegConfig::default());
        assert_eq!(seg.lines.len(), 5);
        for line in &seg.lines {
            assert_eq!(line.words.len(), 1);
            assert_eq!(line.words[0].glyphs.len(), 10);
        }
        for pair in seg.lines.windows(2) {
            assert!(pair[0].band.1 >= pair[1].band.1);
        }
    }

    #[test]
    fn wide_gap_starts_new_word() {
        let stamps = [(2, 2, 4, 8), (9, 2, 4, 8), (16, 2, 4, 8), (40, 2, 4, 8), (47, 2, 4, 8)];
        let seg = segment_page(&page(60, 12, &stamps), &SegConfig::default());
        assert_eq!(seg.lines.len(), 1);
        let sizes: Vec<usize> = seg.lines[0].words.iter().map(|w| w.glyphs.len()).collect();
        assert_eq!(sizes, vec![3, 2]);
    }

    #[test]
    fn dot_above_stem_merges() {
        // Dot 5 wide at cols 10..15, stem 5 wide at cols 12..17: 3 of 5 columns shared (60%).
        let stamps = [(10, 4, 5, 4), (12, 11, 5, 14)];
        let seg = segment_page(&page(30, 30, &stamps), &SegConfig::default());
        assert_eq!(seg.glyph_count(), 1);
        let g = seg.glyphs().next().unwrap();
        assert_eq!(g.mask.ink_count(), 20 + 70);
        assert_eq!(g.bbox.width(), 7);
    }

    #[test]
    fn dot_with_little_overlap_stays_separate() {
        let stamps = [(10, 4, 5, 4), (14, 11, 5, 14)];
        let seg = segment_page(&page(30, 30, &stamps), &SegConfig::default());
        assert_eq!(seg.glyph_count(), 2);
    }

    #[test]
    fn dot_over_slanted_stem_merges() {
        // Stem leaning right as it rises; the dot continues that line but
        // barely overlaps the stem's box.
        let mut stamps: Vec<_> = (10..30).map(|r| (10 + (30 - r) / 4, r, 3, 1)).collect();
        stamps.push((17, 5, 4, 3));
        let seg = segment_page(&page(40, 40, &stamps), &SegConfig::default());
        assert_eq!(seg.glyph_count(), 1);
    }

    #[test]
    fn glyph_boxes_nest_in_words_and_bands() {
        let stamps = [(2, 2, 4, 8), (9, 4, 4, 6), (30, 3, 4, 12), (3, 30, 6, 6)];
        let seg = segment_page(&page(50, 40, &stamps), &SegConfig::default());
        for line in &seg.lines {
            for word in &line.words {
                assert!(word.bbox.bottom >= line.band.0 && word.bbox.top <= line.band.1);
                for g in &word.glyphs {
                    assert!(word.bbox.contains(&g.bbox));
                }
            }
        }
    }

    #[test]
    fn segmentation_is_deterministic() {
        let stamps = [(2, 2, 4, 8), (9, 4, 4, 6), (30, 3, 4, 12), (3, 30, 6, 6), (20, 28, 3, 3)];
        let b = page(50, 40, &stamps);
        let cfg = SegConfig::default();
        assert_eq!(segment_page(&b, &cfg), segment_page(&b, &cfg));
    }
}

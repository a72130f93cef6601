//! Synthetic "writers": a stroke font rendered in distinct styles with
//! per-sample jitter, laid out on pages with exact ground-truth boxes.
//!
//! Stands in for private handwriting samples in tests, benchmarks and the
//! `synth` command.

mod font;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxfile::{BoxEntry, BoxFile};
use crate::geometry::BBox;
use crate::imaging::{Bitmap, PageImage};

/// How one synthetic writer forms letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub name: String,
    /// Pixels per x-height.
    pub x_height: f64,
    /// Horizontal stretch of the skeleton.
    pub width: f64,
    /// Forward slant, as x offset per unit of height.
    pub shear: f64,
    /// Pen radius in pixels.
    pub stroke: f64,
    /// Largest arc step in degrees; coarse steps give angular letters.
    pub arc_step: f64,
}

/// The three built-in writers: upright and thin, condensed and angular,
/// slanted and heavy.
pub fn writer_styles() -> [Style; 3] {
    [
        Style { name: "upright".into(), x_height: 22.0, width: 1.0, shear: 0.0, stroke: 1.3, arc_step: 12.0 },
        Style { name: "angular".into(), x_height: 24.0, width: 0.8, shear: -0.08, stroke: 1.8, arc_step: 60.0 },
        Style { name: "slanted".into(), x_height: 20.0, width: 1.3, shear: 0.2, stroke: 2.0, arc_step: 20.0 },
    ]
}

/// Per-sample variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub max_rotation_deg: f64,
    /// Relative size variation, uniform in `1 +- scale`.
    pub scale: f64,
    /// Control-point wobble in x-height units.
    pub point: f64,
    /// Pen radius variation in pixels.
    pub stroke: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter { max_rotation_deg: 3.0, scale: 0.06, point: 0.025, stroke: 0.2 }
    }
}

impl Jitter {
    pub fn none() -> Self {
        Jitter { max_rotation_deg: 0.0, scale: 0.0, point: 0.0, stroke: 0.0 }
    }
}

/// A rendered letter, cropped to its ink.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedGlyph {
    pub mask: Bitmap,
    /// Row of the baseline counted from the mask's top row; may lie outside.
    pub baseline: i32,
}

fn symmetric(rng: &mut impl Rng, amp: f64) -> f64 {
    if amp == 0.0 {
        0.0
    } else {
        rng.random_range(-amp..=amp)
    }
}

fn segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    qx * qx + qy * qy
}

/// Renders one jittered sample of `ch`, or `None` outside `a`-`z`.
pub fn render_glyph(style: &Style, ch: char, jitter: &Jitter, rng: &mut impl Rng) -> Option<RenderedGlyph> {
    let pieces = font::skeleton(ch)?;
    let angle = symmetric(rng, jitter.max_rotation_deg).to_radians();
    let size = style.x_height * (1.0 + symmetric(rng, jitter.scale));
    let radius = (style.stroke + symmetric(rng, jitter.stroke)).max(0.8);
    let (sin, cos) = angle.sin_cos();

    // Skeleton units to pixels: x right, y down, origin on the baseline.
    let to_px = |(x, y): (f64, f64)| {
        let (x, y) = (x * style.width + style.shear * y, y);
        let (cx, cy) = (x - 0.3 * style.width, y - 0.5);
        let (rx, ry) = (cx * cos - cy * sin, cx * sin + cy * cos);
        ((rx + 0.3 * style.width) * size, -(ry + 0.5) * size)
    };
    let mut polylines: Vec<Vec<(f64, f64)>> = Vec::with_capacity(pieces.len());
    for p in pieces {
        let pts = font::flatten(p, style.arc_step)
            .into_iter()
            .map(|(x, y)| to_px((x + symmetric(rng, jitter.point), y + symmetric(rng, jitter.point))))
            .collect();
        polylines.push(pts);
    }

    let pad = radius + 1.0;
    let pts = polylines.iter().flatten();
    let min_x = pts.clone().map(|p| p.0).fold(f64::INFINITY, f64::min) - pad;
    let min_y = pts.clone().map(|p| p.1).fold(f64::INFINITY, f64::min) - pad;
    let max_x = pts.clone().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + pad;
    let max_y = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + pad;
    let (x0, y0) = (min_x.floor() as i32, min_y.floor() as i32);
    let w = (max_x.ceil() as i32 - x0 + 1) as u32;
    let h = (max_y.ceil() as i32 - y0 + 1) as u32;
    let mut mask = Bitmap::blank(w, h).expect("non-empty canvas");

    let r2 = radius * radius;
    for line in &polylines {
        let segs: Vec<((f64, f64), (f64, f64))> = if line.len() == 1 {
            vec![(line[0], line[0])]
        } else {
            line.windows(2).map(|s| (s[0], s[1])).collect()
        };
        for (a, b) in segs {
            let c0 = ((a.0.min(b.0) - radius).floor() as i32 - x0).max(0);
            let c1 = ((a.0.max(b.0) + radius).ceil() as i32 - x0).min(w as i32 - 1);
            let r0 = ((a.1.min(b.1) - radius).floor() as i32 - y0).max(0);
            let r1 = ((a.1.max(b.1) + radius).ceil() as i32 - y0).min(h as i32 - 1);
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let p = ((col + x0) as f64 + 0.5, (row + y0) as f64 + 0.5);
                    if segment_dist2(p, a, b) <= r2 {
                        mask.set(col as u32, row as u32, true);
                    }
                }
            }
        }
    }
    let (mask, top) = crop(&mask);
    Some(RenderedGlyph { mask, baseline: -(y0 + top) })
}

/// Crops to the ink and returns the number of rows removed from the top.
fn crop(m: &Bitmap) -> (Bitmap, i32) {
    let (w, h) = (m.width(), m.height());
    let (mut c0, mut r0, mut c1, mut r1) = (w, h, 0, 0);
    for r in 0..h {
        for c in 0..w {
            if m.get(c, r) {
                c0 = c0.min(c);
                c1 = c1.max(c);
                r0 = r0.min(r);
                r1 = r1.max(r);
            }
        }
    }
    if c0 > c1 {
        return (Bitmap::blank(1, 1).expect("1x1"), 0);
    }
    let mut out = Bitmap::blank(c1 - c0 + 1, r1 - r0 + 1).expect("non-empty crop");
    for r in r0..=r1 {
        for c in c0..=c1 {
            out.set(c - c0, r - r0, m.get(c, r));
        }
    }
    (out, r0 as i32)
}

/// A rendered page with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPage {
    pub page: PageImage,
    pub truth: BoxFile,
    /// Index of the first box of each word.
    pub word_starts: Vec<usize>,
    pub line_count: usize,
}

struct Canvas {
    width: u32,
    height: u32,
    ink: Vec<bool>,
    boxes: Vec<BoxEntry>,
}

impl Canvas {
    fn new(width: u32, height: u32) -> Self {
        Canvas { width, height, ink: vec![false; (width * height) as usize], boxes: Vec::new() }
    }

    /// Blits `g` with its top-left corner at `(col, row)`.
    fn place(&mut self, ch: char, g: &RenderedGlyph, col: u32, row: u32) {
        for r in 0..g.mask.height() {
            for c in 0..g.mask.width() {
                if g.mask.get(c, r) {
                    self.ink[((row + r) * self.width + col + c) as usize] = true;
                }
            }
        }
        let bbox = BBox::from_raster(col, row, col + g.mask.width() - 1, row + g.mask.height() - 1, self.height);
        self.boxes.push(BoxEntry { glyph: ch, bbox });
    }

    /// Gray page: noisy dark ink on noisy light paper, plus isolated specks
    /// well clear of any ink.
    fn finish(self, id: &str, rng: &mut impl Rng) -> (PageImage, Vec<BoxEntry>) {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut px: Vec<u8> =
            self.ink.iter().map(|&i| if i { rng.random_range(10..=60) } else { rng.random_range(200..=250) }).collect();
        let specks = (w * h / 4000) as usize;
        for _ in 0..specks {
            let (c, r) = (rng.random_range(2..w - 2), rng.random_range(2..h - 2));
            let clear = (-2..=2).all(|dr| (-2..=2).all(|dc| !self.ink[((r + dr) * w + c + dc) as usize]));
            if clear {
                px[(r * w + c) as usize] = rng.random_range(10..=60);
            }
        }
        (PageImage::new(id, self.width, self.height, px).expect("canvas size"), self.boxes)
    }
}

/// Lays out one jittered sample per entry of `glyphs` on a grid,
/// `columns` per row.
pub fn isolated_page(id: &str, style: &Style, glyphs: &[char], columns: usize, jitter: &Jitter, seed: u64) -> SynthPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xh = style.x_height * (1.0 + jitter.scale);
    let cell_w = ((style.width + style.shear.abs() * 2.2 + 0.7) * xh).ceil() as u32;
    let cell_h = (2.9 * xh).ceil() as u32;
    let margin = (2.0 * xh) as u32;
    let columns = columns.max(1);
    let rows = glyphs.len().div_ceil(columns).max(1);
    let cols_used = columns.min(glyphs.len()).max(1);
    let mut canvas = Canvas::new(2 * margin + cell_w * cols_used as u32, 2 * margin + cell_h * rows as u32);
    let baseline_in_cell = (1.9 * xh) as i32;
    for (i, &ch) in glyphs.iter().enumerate() {
        let g = render_glyph(style, ch, jitter, &mut rng).expect("glyph in a-z");
        let (r, c) = (i / columns, i % columns);
        let col = margin + c as u32 * cell_w + (0.2 * xh) as u32;
        let row = (margin + r as u32 * cell_h) as i32 + baseline_in_cell - g.baseline;
        canvas.place(ch, &g, col, row.max(0) as u32);
    }
    let (page, entries) = canvas.finish(id, &mut rng);
    let word_starts = (0..rows).map(|r| r * columns).filter(|&s| s < glyphs.len()).collect();
    SynthPage { page, truth: BoxFile { page_id: id.to_string(), entries }, word_starts, line_count: if glyphs.is_empty() { 0 } else { rows } }
}

/// Lays out running text. Letters in a word sit a fixed small gap apart and
/// words are separated by a much wider one, so word boundaries are exact.
pub fn text_page(id: &str, style: &Style, lines: &[Vec<String>], jitter: &Jitter, seed: u64) -> SynthPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xh = style.x_height * (1.0 + jitter.scale);
    let letter_gap = (0.25 * xh).round().max(3.0) as u32;
    let word_gap = (1.6 * xh).round() as u32;
    let margin = (2.0 * xh) as u32;
    let line_pitch = (2.9 * xh).ceil() as u32;

    let rendered: Vec<Vec<Vec<(char, RenderedGlyph)>>> = lines
        .iter()
        .map(|words| {
            words
                .iter()
                .map(|w| w.chars().map(|ch| (ch, render_glyph(style, ch, jitter, &mut rng).expect("glyph in a-z"))).collect())
                .collect()
        })
        .collect();
    let line_width = |words: &Vec<Vec<(char, RenderedGlyph)>>| -> u32 {
        let glyphs: u32 = words.iter().flatten().map(|(_, g)| g.mask.width()).sum();
        let letters: usize = words.iter().map(|w| w.len().saturating_sub(1)).sum();
        glyphs + letters as u32 * letter_gap + words.len().saturating_sub(1) as u32 * word_gap
    };
    let width = rendered.iter().map(line_width).max().unwrap_or(0) + 2 * margin;
    let height = line_pitch * lines.len() as u32 + 2 * margin;
    let mut canvas = Canvas::new(width.max(1), height.max(1));
    let mut word_starts = Vec::new();
    let baseline_in_line = (1.9 * xh) as i32;
    for (li, words) in rendered.iter().enumerate() {
        let mut col = margin;
        for (wi, word) in words.iter().enumerate() {
            if wi > 0 {
                col += word_gap - letter_gap;
            }
            if !word.is_empty() {
                word_starts.push(canvas.boxes.len());
            }
            for (ch, g) in word {
                let row = (margin + li as u32 * line_pitch) as i32 + baseline_in_line - g.baseline;
                canvas.place(*ch, g, col, row.max(0) as u32);
                col += g.mask.width() + letter_gap;
            }
        }
    }
    let (page, entries) = canvas.finish(id, &mut rng);
    let line_count = rendered.iter().filter(|l| l.iter().any(|w| !w.is_empty())).count();
    SynthPage { page, truth: BoxFile { page_id: id.to_string(), entries }, word_starts, line_count }
}

/// Shape of a per-writer corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub samples_per_class: usize,
    pub train_pages: usize,
    pub test_per_class: usize,
    pub columns: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { samples_per_class: 70, train_pages: 3, test_per_class: 17, columns: 26, seed: 2010 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserCorpus {
    pub style: Style,
    pub train: Vec<SynthPage>,
    pub test: Vec<SynthPage>,
}

/// Shuffled isolated-character training pages and one held-out test page
/// for writer `user` (an index into [`writer_styles`]).
pub fn user_corpus(user: usize, cfg: &CorpusConfig) -> UserCorpus {
    let style = writer_styles()[user % 3].clone();
    let jitter = Jitter::default();
    let base = cfg.seed.wrapping_mul(1_000_003).wrapping_add(user as u64 * 7919);
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    let mut pool: Vec<char> = ('a'..='z').flat_map(|c| std::iter::repeat_n(c, cfg.samples_per_class)).collect();
    pool.shuffle(&mut rng);
    let pages = cfg.train_pages.max(1);
    let per_page = pool.len().div_ceil(pages);
    let train = pool
        .chunks(per_page.max(1))
        .enumerate()
        .map(|(i, chunk)| isolated_page(&format!("u{}train{}", user + 1, i + 1), &style, chunk, cfg.columns, &jitter, base + 1 + i as u64))
        .collect();
    let mut test_glyphs: Vec<char> = ('a'..='z').flat_map(|c| std::iter::repeat_n(c, cfg.test_per_class)).collect();
    test_glyphs.shuffle(&mut rng);
    let test = vec![isolated_page(&format!("u{}test1", user + 1), &style, &test_glyphs, cfg.columns, &jitter, base + 1000)];
    UserCorpus { style, train, test }
}

/// Random lowercase words for free-flow layouts.
pub fn random_lines(rng: &mut impl Rng, lines: usize, words_per_line: std::ops::RangeInclusive<usize>, word_len: std::ops::RangeInclusive<usize>) -> Vec<Vec<String>> {
    (0..lines)
        .map(|_| {
            let n = rng.random_range(words_per_line.clone());
            (0..n)
                .map(|_| {
                    let len = rng.random_range(word_len.clone());
                    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
                })
                .collect()
        })
        .collect()
}

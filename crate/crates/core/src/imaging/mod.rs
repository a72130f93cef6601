//! Page rasters, binarization and the line/word/glyph finder.

mod binarize;
mod components;
mod io;
mod segment;

pub use binarize::{binarize, otsu_threshold};
pub use components::{extract_components, Component};
pub use io::{load_page, page_to_png, save_page_png, ImageLoadError};
pub use segment::{segment_page, GlyphSample, Line, PageSegmentation, SegConfig, Word};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    PixelCount { expected: usize, actual: usize },
}

/// An 8-bit grayscale page, row-major from the top row, 0 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageImage {
    id: String,
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl PageImage {
    pub fn new(id: impl Into<String>, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::PixelCount { expected, actual: pixels.len() });
        }
        Ok(PageImage { id: id.into(), width, height, pixels })
    }

    /// A page filled with a single gray level.
    pub fn filled(id: impl Into<String>, width: u32, height: u32, value: u8) -> Result<Self, ImageError> {
        Self::new(id, width, height, vec![value; width as usize * height as usize])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.pixels[row as usize * self.width as usize + col as usize]
    }
}

/// Row-major foreground mask, top row first; `true` is ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bitmap {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(ImageError::PixelCount { expected, actual: bits.len() });
        }
        Ok(Bitmap { width, height, bits })
    }

    pub fn blank(width: u32, height: u32) -> Result<Self, ImageError> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    /// Parses rows of `#` (ink) and `.` (paper). Handy for fixtures.
    pub fn from_ascii(rows: &[&str]) -> Result<Self, ImageError> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.chars().count()) as u32;
        let bits = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    /// Like [`get`](Self::get) but false outside the raster.
    pub fn get_signed(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as u64) < self.width as u64
            && (row as u64) < self.height as u64
            && self.get(col as u32, row as u32)
    }

    pub fn set(&mut self, col: u32, row: u32, value: bool) {
        let w = self.width as usize;
        self.bits[row as usize * w + col as usize] = value;
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Scales every pixel into a `factor` x `factor` block.
    pub fn upscale(&self, factor: u32) -> Bitmap {
        let (w, h) = (self.width * factor, self.height * factor);
        let mut bits = Vec::with_capacity(w as usize * h as usize);
        for row in 0..h {
            for col in 0..w {
                bits.push(self.get(col / factor, row / factor));
            }
        }
        Bitmap { width: w, height: h, bits }
    }
}

/// Binarized page. Carries the source page id so glyphs can name their page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub id: String,
    pub mask: Bitmap,
}

impl BinaryImage {
    pub fn width(&self) -> u32 {
        self.mask.width()
    }

    pub fn height(&self) -> u32 {
        self.mask.height()
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        self.mask.get(col, row)
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.ink_count()
    }
}

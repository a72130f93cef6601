//! Bounding boxes in page coordinates.
//!
//! Boxes use the box-file convention: the origin is the bottom-left corner
//! of the page and y grows upward. Boxes are half-open, so a box covers the
//! pixel columns `left..right` and the rows whose y range lies in
//! `bottom..top`. A single pixel at column 3 on the bottom row of the page is
//! the box `(3, 0, 4, 1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BBox {
    pub left: i32,
    pub bottom: i32,
    pub right: i32,
    pub top: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("degenerate box ({left}, {bottom}, {right}, {top}): need left < right and bottom < top")]
pub struct InvalidBox {
    pub left: i32,
    pub bottom: i32,
    pub right: i32,
    pub top: i32,
}

impl BBox {
    pub fn new(left: i32, bottom: i32, right: i32, top: i32) -> Result<Self, InvalidBox> {
        if left < right && bottom < top {
            Ok(BBox { left, bottom, right, top })
        } else {
            Err(InvalidBox { left, bottom, right, top })
        }
    }

    /// Box covering raster pixels `min_col..=max_col`, `min_row..=max_row`
    /// (rows counted from the top) of an image `height` pixels tall.
    pub fn from_raster(min_col: u32, min_row: u32, max_col: u32, max_row: u32, height: u32) -> Self {
        debug_assert!(min_col <= max_col && min_row <= max_row && max_row < height);
        BBox {
            left: min_col as i32,
            right: max_col as i32 + 1,
            bottom: (height - 1 - max_row) as i32,
            top: (height - min_row) as i32,
        }
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.top - self.bottom
    }

    pub fn area(&self) -> i64 {
        self.width() as i64 * self.height() as i64
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            left: self.left.min(other.left),
            bottom: self.bottom.min(other.bottom),
            right: self.right.max(other.right),
            top: self.top.max(other.top),
        }
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        BBox::new(
            self.left.max(other.left),
            self.bottom.max(other.bottom),
            self.right.min(other.right),
            self.top.min(other.top),
        )
        .ok()
    }

    pub fn intersection_area(&self, other: &BBox) -> i64 {
        self.intersection(other).map_or(0, |b| b.area())
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0 {
            return 0.0;
        }
        inter as f64 / (self.area() + other.area() - inter) as f64
    }

    /// Length of the shared horizontal extent; negative when the spans are apart.
    pub fn horizontal_overlap(&self, other: &BBox) -> i32 {
        self.right.min(other.right) - self.left.max(other.left)
    }

    pub fn vertical_overlap(&self, other: &BBox) -> i32 {
        self.top.min(other.top) - self.bottom.max(other.bottom)
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.left <= other.left
            && self.bottom <= other.bottom
            && self.right >= other.right
            && self.top >= other.top
    }

    /// True when the box lies inside a `width` x `height` page.
    pub fn within(&self, width: u32, height: u32) -> bool {
        self.left >= 0 && self.bottom >= 0 && self.right <= width as i32 && self.top <= height as i32
    }

    /// First raster row (from the top) covered by the box on a page `height` tall.
    pub fn raster_top_row(&self, height: u32) -> i64 {
        height as i64 - self.top as i64
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.left, self.bottom, self.right, self.top)
    }
}

use std::collections::VecDeque;

use super::BinaryImage;
use crate::geometry::BBox;

/// An 8-connected blob of ink.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub bbox: BBox,
    pub pixel_count: usize,
    /// Pixel-center centroid in page coordinates (bottom-left origin).
    pub centroid: (f64, f64),
    /// Member pixels as raster `(col, row)`, row 0 at the top.
    pub pixels: Vec<(u32, u32)>,
}

/// 8-connected components of the foreground in raster scan order of their
/// first pixel. Components smaller than `noise_floor` pixels are dropped.
pub fn extract_components(bin: &BinaryImage, noise_floor: usize) -> Vec<Component> {
    let (w, h) = (bin.width(), bin.height());
    let mut seen = vec![false; w as usize * h as usize];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();

    for row in 0..h {
        for col in 0..w {
            let idx = row as usize * w as usize + col as usize;
            if seen[idx] || !bin.get(col, row) {
                continue;
            }
            seen[idx] = true;
            queue.push_back((col, row));
            let mut pixels = Vec::new();
            while let Some((c, r)) = queue.pop_front() {
                pixels.push((c, r));
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                        if nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                            continue;
                        }
                        let nidx = nr as usize * w as usize + nc as usize;
                        if !seen[nidx] && bin.get(nc as u32, nr as u32) {
                            seen[nidx] = true;
                            queue.push_back((nc as u32, nr as u32));
                        }
                    }
                }
            }
            if pixels.len() >= noise_floor.max(1) {
                out.push(component_from_pixels(pixels, h));
            }
        }
    }
    out
}

pub(crate) fn component_from_pixels(mut pixels: Vec<(u32, u32)>, page_height: u32) -> Component {
    pixels.sort_unstable_by_key(|&(c, r)| (r, c));
    let (mut min_c, mut min_r, mut max_c, mut max_r) = (u32::MAX, u32::MAX, 0, 0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(c, r) in &pixels {
        min_c = min_c.min(c);
        max_c = max_c.max(c);
        min_r = min_r.min(r);
        max_r = max_r.max(r);
        sx += c as f64 + 0.5;
        sy += page_height as f64 - r as f64 - 0.5;
    }
    let n = pixels.len() as f64;
    Component {
        bbox: BBox::from_raster(min_c, min_r, max_c, max_r, page_height),
        pixel_count: pixels.len(),
        centroid: (sx / n, sy / n),
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Bitmap;

    fn bin(rows: &[&str]) -> BinaryImage {
        BinaryImage { id: "t".into(), mask: Bitmap::from_ascii(rows).unwrap() }
    }

    /// Recursive 8-neighbour flood fill used as an independent labelling oracle.
    fn flood_labels(b: &BinaryImage) -> Vec<Option<usize>> {
        let (w, h) = (b.width() as i64, b.height() as i64);
        let mut labels = vec![None; (w * h) as usize];
        fn fill(b: &BinaryImage, labels: &mut [Option<usize>], c: i64, r: i64, w: i64, h: i64, id: usize) {
            if c < 0 || r < 0 || c >= w || r >= h {
                return;
            }
            let i = (r * w + c) as usize;
            if labels[i].is_some() || !b.get(c as u32, r as u32) {
                return;
            }
            labels[i] = Some(id);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    fill(b, labels, c + dc, r + dr, w, h, id);
                }
            }
        }
        let mut next = 0;
        for r in 0..h {
            for c in 0..w {
                if labels[(r * w + c) as usize].is_none() && b.get(c as u32, r as u32) {
                    fill(b, &mut labels, c, r, w, h, next);
                    next += 1;
                }
            }
        }
        labels
    }

    #[test]
    fn empty_mask_has_no_components() {
        let b = bin(&["....", "...."]);
        assert!(extract_components(&b, 1).is_empty());
    }

    #[test]
    fn two_squares_give_exact_boxes() {
        let b = bin(&[
            "###....",
            "###..##",
            "###..##",
            ".....##",
        ]);
        let comps = extract_components(&b, 4);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].bbox, BBox::new(0, 1, 3, 4).unwrap());
        assert_eq!(comps[1].bbox, BBox::new(5, 0, 7, 3).unwrap());
        assert_eq!(comps[1].pixel_count, 6);
    }

    #[test]
    fn plus_sign_is_one_component() {
        let rows = [".#.", "###", ".#."];
        let b = bin(&rows);
        let oracle = flood_labels(&b);
        let distinct: std::collections::BTreeSet<_> = oracle.iter().flatten().collect();
        assert_eq!(distinct.len(), 1);
        assert_eq!(extract_components(&b, 1).len(), 1);
    }

    #[test]
    fn diagonal_touch_is_connected() {
        let b = bin(&["##..", "##..", "..##", "..##"]);
        assert_eq!(extract_components(&b, 1).len(), 1);
    }

    #[test]
    fn noise_floor_drops_specks() {
        let b = bin(&["#....", ".....", "..###", "..#.."]);
        assert_eq!(extract_components(&b, 4).len(), 1);
        assert_eq!(extract_components(&b, 1).len(), 2);
    }

    #[test]
    fn matches_flood_fill_on_pseudo_random_masks() {
        let mut state = 12345u64;
        for _ in 0..50 {
            let rows: Vec<String> = (0..12)
                .map(|_| {
                    (0..15)
                        .map(|_| {
                            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                            if (state >> 33) % 3 == 0 { '#' } else { '.' }
                        })
                        .collect()
                })
                .collect();
            let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
            let b = bin(&refs);
            let oracle = flood_labels(&b);
            let comps = extract_components(&b, 1);
            let n_oracle = oracle.iter().flatten().max().map_or(0, |m| m + 1);
            assert_eq!(comps.len(), n_oracle);
            for comp in &comps {
                let label = oracle[(comp.pixels[0].1 * 15 + comp.pixels[0].0) as usize];
                for &(c, r) in &comp.pixels {
                    assert_eq!(oracle[(r * 15 + c) as usize], label);
                }
            }
        }
    }
}

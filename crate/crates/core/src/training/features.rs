//! Per-glyph features.
//!
//! Two families are extracted from a glyph mask:
//!
//! * a 4-vector of normalization features (`cn`): aspect ratio mapped as
//!   `r / (1 + r)`, ink density, and the ink centroid as a fraction of the
//!   box in x and y;
//! * outline micro-features: the mask is resampled into a fixed square frame,
//!   its crack contours are traced, approximated by straight runs, and split
//!   wherever the direction drifts more than 45 degrees from the start of
//!   the run. Each run becomes `(mid-x, mid-y, direction sector, length)`.
//!
//! Resampling uses exact integer arithmetic, so a mask scaled by an integer
//! factor lands on the same frame pixels and yields identical features.

use std::collections::HashMap;

use super::{MicroFeature, TrCharFeatures, TrainingError};
use crate::imaging::Bitmap;

/// Side of the square frame glyphs are resampled into.
pub const FRAME: u32 = 32;

/// Douglas-Peucker tolerance in frame pixels.
const FIT_TOLERANCE: f64 = 1.0;

/// Direction change that ends a run, in degrees.
const CORNER_ANGLE: f64 = 45.0;

pub(crate) fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Features of a glyph mask, label unset.
pub fn extract_features(mask: &Bitmap) -> Result<TrCharFeatures, TrainingError> {
    let ink = mask.ink_count();
    if ink == 0 {
        return Err(TrainingError::EmptyGlyph);
    }
    Ok(TrCharFeatures { glyph: None, cn: cn_features(mask), micro: micro_features(mask) })
}

pub fn cn_features(mask: &Bitmap) -> [f64; 4] {
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    for row in 0..mask.height() {
        for col in 0..mask.width() {
            if mask.get(col, row) {
                n += 1;
                sx += col as f64 + 0.5;
                sy += h - row as f64 - 0.5;
            }
        }
    }
    let r = w / h;
    let n_f = n.max(1) as f64;
    [
        round6(r / (1.0 + r)),
        round6(n as f64 / (w * h)),
        round6(sx / n_f / w),
        round6(sy / n_f / h),
    ]
}

pub fn micro_features(mask: &Bitmap) -> Vec<MicroFeature> {
    if mask.ink_count() <= 1 {
        return vec![MicroFeature { x: 0.5, y: 0.5, dir: 0, len: 0.0 }];
    }
    let frame = normalize_frame(mask);
    let mut out = Vec::new();
    for contour in trace_contours(&frame) {
        out.extend(contour_features(&contour));
    }
    if out.is_empty() {
        out.push(MicroFeature { x: 0.5, y: 0.5, dir: 0, len: 0.0 });
    }
    out
}

/// Resamples the mask into a `FRAME` x `FRAME` square, preserving aspect
/// ratio and centering the shorter side.
pub fn normalize_frame(mask: &Bitmap) -> Bitmap {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let side = w.max(h);
    let n = FRAME as i64;
    let mut out = Bitmap::blank(FRAME, FRAME).expect("frame is non-empty");
    // Source coordinate of frame cell i is ((2i+1)*side - (side-w)*n) / (2n).
    let src = |i: i64, extent: i64| -> Option<i64> {
        let num = (2 * i + 1) * side - (side - extent) * n;
        let p = num.div_euclid(2 * n);
        (0..extent).contains(&p).then_some(p)
    };
    for row in 0..n {
        let Some(sr) = src(row, h) else { continue };
        for col in 0..n {
            if let Some(sc) = src(col, w) {
                if mask.get(sc as u32, sr as u32) {
                    out.set(col as u32, row as u32, true);
                }
            }
        }
    }
    out
}

type Pt = (i64, i64);

/// Closed crack contours with ink on the right-hand side (raster y down).
/// Diagonal contacts are followed as connected.
fn trace_contours(mask: &Bitmap) -> Vec<Vec<Pt>> {
    let ink = |c: i64, r: i64| mask.get_signed(c, r);
    // Directed unit edges keyed by start vertex.
    let mut edges: Vec<(Pt, Pt)> = Vec::new();
    for r in 0..mask.height() as i64 {
        for c in 0..mask.width() as i64 {
            if !ink(c, r) {
                continue;
            }
            if !ink(c, r - 1) {
                edges.push(((c, r), (c + 1, r)));
            }
            if !ink(c + 1, r) {
                edges.push(((c + 1, r), (c + 1, r + 1)));
            }
            if !ink(c, r + 1) {
                edges.push(((c + 1, r + 1), (c, r + 1)));
            }
            if !ink(c - 1, r) {
                edges.push(((c, r + 1), (c, r)));
            }
        }
    }
    edges.sort_unstable_by_key(|&((x, y), _)| (y, x));
    let mut outgoing: HashMap<Pt, Vec<usize>> = HashMap::new();
    for (i, (from, _)) in edges.iter().enumerate() {
        outgoing.entry(*from).or_default().push(i);
    }
    let mut used = vec![false; edges.len()];
    let mut contours = Vec::new();

    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut pts = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let (from, to) = edges[cur];
            pts.push(from);
            let dir = (to.0 - from.0, to.1 - from.1);
            let candidates: Vec<usize> = outgoing[&to].iter().copied().filter(|&e| !used[e]).collect();
            let next = match candidates.len() {
                0 => None,
                1 => Some(candidates[0]),
                _ => {
                    // Prefer the left turn so diagonal neighbours stay on one contour.
                    let left = (dir.1, -dir.0);
                    candidates
                        .iter()
                        .copied()
                        .find(|&e| {
                            let (a, b) = edges[e];
                            (b.0 - a.0, b.1 - a.1) == left
                        })
                        .or(Some(candidates[0]))
                }
            };
            match next {
                Some(e) => cur = e,
                None => break,
            }
        }
        contours.push(pts);
    }
    contours
}

fn perpendicular_distance(p: Pt, a: Pt, b: Pt) -> f64 {
    let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return (((p.0 - a.0) as f64).powi(2) + ((p.1 - a.1) as f64).powi(2)).sqrt();
    }
    ((p.0 - a.0) as f64 * dy - (p.1 - a.1) as f64 * dx).abs() / len
}

/// Douglas-Peucker over `pts[lo..=hi]`, pushing kept interior indices.
fn simplify(pts: &[Pt], lo: usize, hi: usize, keep: &mut Vec<usize>) {
    if hi <= lo + 1 {
        return;
    }
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = perpendicular_distance(pts[i], pts[lo], pts[hi]);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    if best_d > FIT_TOLERANCE {
        simplify(pts, lo, best, keep);
        keep.push(best);
        simplify(pts, best, hi, keep);
    }
}

/// Angle in degrees of the vector a -> b in y-up coordinates.
fn heading(a: Pt, b: Pt) -> f64 {
    let (dx, dy) = ((b.0 - a.0) as f64, -((b.1 - a.1) as f64));
    dy.atan2(dx).to_degrees()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn contour_features(contour: &[Pt]) -> Vec<MicroFeature> {
    let m = contour.len();
    if m < 4 {
        return Vec::new();
    }
    // Split the closed loop at its first point and the point farthest from it.
    let far = (1..m)
        .max_by(|&i, &j| {
            let d = |k: usize| (contour[k].0 - contour[0].0).pow(2) + (contour[k].1 - contour[0].1).pow(2);
            d(i).cmp(&d(j)).then(j.cmp(&i))
        })
        .unwrap();
    let mut closed: Vec<Pt> = contour.to_vec();
    closed.push(contour[0]);
    let mut keep = vec![0];
    simplify(&closed, 0, far, &mut keep);
    keep.push(far);
    simplify(&closed, far, m, &mut keep);
    let vertices: Vec<Pt> = keep.iter().map(|&i| closed[i]).collect();

    let q = vertices.len();
    let edge = |i: usize| (vertices[i % q], vertices[(i + 1) % q]);
    let headings: Vec<f64> = (0..q).map(|i| heading(edge(i).0, edge(i).1)).collect();

    // Begin at the sharpest corner so no run straddles the starting point.
    let start = (0..q)
        .max_by(|&i, &j| {
            let t = |k: usize| angle_diff(headings[k], headings[(k + q - 1) % q]);
            t(i).partial_cmp(&t(j)).unwrap().then(j.cmp(&i))
        })
        .unwrap();

    let mut runs: Vec<(Pt, Pt)> = Vec::new();
    let mut run_start = start;
    let mut run_end = start;
    for step in 1..q {
        let i = (start + step) % q;
        let first = headings[run_start];
        let prev = headings[run_end];
        if angle_diff(headings[i], first) <= CORNER_ANGLE && angle_diff(headings[i], prev) <= CORNER_ANGLE {
            run_end = i;
        } else {
            runs.push((edge(run_start).0, edge(run_end).1));
            run_start = i;
            run_end = i;
        }
    }
    runs.push((edge(run_start).0, edge(run_end).1));

    let n = FRAME as f64;
    runs.into_iter()
        .map(|(a, b)| {
            let (mx, my) = ((a.0 + b.0) as f64 / 2.0, (a.1 + b.1) as f64 / 2.0);
            let len = (((b.0 - a.0) as f64).powi(2) + ((b.1 - a.1) as f64).powi(2)).sqrt();
            let sector = (heading(a, b) / 45.0).round().rem_euclid(8.0) as u8;
            MicroFeature {
                x: round6((mx / n).clamp(0.0, 1.0)),
                y: round6((1.0 - my / n).clamp(0.0, 1.0)),
                dir: sector,
                len: round6((len / (n * 2f64.sqrt())).clamp(0.0, 1.0)),
            }
        })
        .collect()
}

/// Circular distance between two direction sectors, 0..=4.
pub fn sector_distance(a: u8, b: u8) -> u8 {
    let d = (a as i16 - b as i16).rem_euclid(8) as u8;
    d.min(8 - d)
}

//! A single-stroke skeleton font for lowercase `a`-`z`.
//!
//! Coordinates are in x-height units: the baseline is `y = 0`, the x-height
//! `y = 1`, ascenders reach 1.6 and descenders -0.6. Curves are stored as
//! elliptical arcs so a style can decide how finely to flatten them.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Piece {
    Line(&'static [(f64, f64)]),
    /// Center, radii, start and end angle in degrees (counter-clockwise positive).
    Arc { c: (f64, f64), r: (f64, f64), from: f64, to: f64 },
}

use Piece::{Arc, Line};

const BOWL: Piece = Arc { c: (0.3, 0.5), r: (0.3, 0.5), from: 0.0, to: 360.0 };

/// Strokes of `ch`, or `None` outside `a`-`z`.
pub(crate) fn skeleton(ch: char) -> Option<&'static [Piece]> {
    let s: &'static [Piece] = match ch {
        'a' => &[BOWL, Line(&[(0.6, 1.0), (0.6, 0.0)])],
        'b' => &[Line(&[(0.0, 1.6), (0.0, 0.0)]), BOWL],
        'c' => &[Arc { c: (0.3, 0.5), r: (0.3, 0.5), from: 45.0, to: 315.0 }],
        'd' => &[BOWL, Line(&[(0.6, 1.6), (0.6, 0.0)])],
        'e' => &[Line(&[(0.0, 0.5), (0.6, 0.5)]), Arc { c: (0.3, 0.5), r: (0.3, 0.5), from: 0.0, to: 320.0 }],
        'f' => &[
            Line(&[(0.2, 0.0), (0.2, 1.3)]),
            Arc { c: (0.4, 1.3), r: (0.2, 0.3), from: 180.0, to: 20.0 },
            Line(&[(0.0, 1.0), (0.45, 1.0)]),
        ],
        'g' => &[
            BOWL,
            Line(&[(0.6, 1.0), (0.6, -0.3)]),
            Arc { c: (0.3, -0.3), r: (0.3, 0.3), from: 0.0, to: -160.0 },
        ],
        'h' => &[
            Line(&[(0.0, 1.6), (0.0, 0.0)]),
            Arc { c: (0.3, 0.6), r: (0.3, 0.4), from: 180.0, to: 0.0 },
            Line(&[(0.6, 0.6), (0.6, 0.0)]),
        ],
        'i' => &[Line(&[(0.1, 0.0), (0.1, 1.0)]), Line(&[(0.1, 1.3), (0.1, 1.4)])],
        'j' => &[
            Line(&[(0.4, 1.0), (0.4, -0.3)]),
            Arc { c: (0.2, -0.3), r: (0.2, 0.3), from: 0.0, to: -170.0 },
            Line(&[(0.4, 1.3), (0.4, 1.4)]),
        ],
        'k' => &[Line(&[(0.0, 1.6), (0.0, 0.0)]), Line(&[(0.55, 1.0), (0.0, 0.35)]), Line(&[(0.2, 0.6), (0.6, 0.0)])],
        'l' => &[Line(&[(0.1, 1.6), (0.1, 0.0)])],
        'm' => &[
            Line(&[(0.0, 1.0), (0.0, 0.0)]),
            Arc { c: (0.2, 0.6), r: (0.2, 0.4), from: 180.0, to: 0.0 },
            Line(&[(0.4, 0.6), (0.4, 0.0)]),
            Arc { c: (0.6, 0.6), r: (0.2, 0.4), from: 180.0, to: 0.0 },
            Line(&[(0.8, 0.6), (0.8, 0.0)]),
        ],
        'n' => &[
            Line(&[(0.0, 1.0), (0.0, 0.0)]),
            Arc { c: (0.3, 0.6), r: (0.3, 0.4), from: 180.0, to: 0.0 },
            Line(&[(0.6, 0.6), (0.6, 0.0)]),
        ],
        'o' => &[BOWL],
        'p' => &[Line(&[(0.0, 1.0), (0.0, -0.6)]), BOWL],
        'q' => &[BOWL, Line(&[(0.6, 1.0), (0.6, -0.6)])],
        'r' => &[Line(&[(0.0, 1.0), (0.0, 0.0)]), Arc { c: (0.3, 0.6), r: (0.3, 0.4), from: 180.0, to: 45.0 }],
        's' => &[
            Arc { c: (0.3, 0.75), r: (0.28, 0.25), from: 20.0, to: 270.0 },
            Arc { c: (0.3, 0.25), r: (0.28, 0.25), from: 90.0, to: -160.0 },
        ],
        't' => &[
            Line(&[(0.2, 1.4), (0.2, 0.2)]),
            Arc { c: (0.4, 0.2), r: (0.2, 0.2), from: 180.0, to: 300.0 },
            Line(&[(0.0, 1.0), (0.5, 1.0)]),
        ],
        'u' => &[
            Line(&[(0.0, 1.0), (0.0, 0.4)]),
            Arc { c: (0.3, 0.4), r: (0.3, 0.4), from: 180.0, to: 360.0 },
            Line(&[(0.6, 1.0), (0.6, 0.0)]),
        ],
        'v' => &[Line(&[(0.0, 1.0), (0.3, 0.0), (0.6, 1.0)])],
        'w' => &[Line(&[(0.0, 1.0), (0.2, 0.0), (0.4, 0.7), (0.6, 0.0), (0.8, 1.0)])],
        'x' => &[Line(&[(0.0, 1.0), (0.6, 0.0)]), Line(&[(0.0, 0.0), (0.6, 1.0)])],
        'y' => &[Line(&[(0.0, 1.0), (0.3, 0.0)]), Line(&[(0.6, 1.0), (0.1, -0.6)])],
        'z' => &[Line(&[(0.0, 1.0), (0.6, 1.0), (0.0, 0.0), (0.6, 0.0)])],
        _ => return None,
    };
    Some(s)
}

/// Flattens a piece into a polyline, stepping arcs by at most `step` degrees.
pub(crate) fn flatten(p: &Piece, step: f64) -> Vec<(f64, f64)> {
    match *p {
        Line(pts) => pts.to_vec(),
        Arc { c, r, from, to } => {
            let n = ((to - from).abs() / step).ceil().max(1.0) as usize;
            (0..=n)
                .map(|i| {
                    let a = (from + (to - from) * i as f64 / n as f64).to_radians();
                    (c.0 + r.0 * a.cos(), c.1 + r.1 * a.sin())
                })
                .collect()
        }
    }
}

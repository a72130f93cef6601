use super::{BinaryImage, Bitmap, PageImage};

/// Otsu's global threshold over the grayscale histogram.
///
/// Pixels `<= threshold` are ink. Returns `None` for a single-valued image,
/// which has no between-class variance to maximize. When several adjacent
/// thresholds tie (empty histogram bins between the modes) the middle of the
/// tied run is chosen.
pub fn otsu_threshold(page: &PageImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in page.pixels() {
        hist[p as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();

    let mut best = 0.0f64;
    let mut run: Option<(usize, usize)> = None;
    let mut w0 = 0u64;
    let mut s0 = 0.0f64;
    for t in 0..255usize {
        w0 += hist[t];
        s0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = s0 / w0 as f64;
        let m1 = (total_sum - s0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            run = Some((t, t));
        } else if between == best {
            if let Some((start, end)) = run {
                if end + 1 == t {
                    run = Some((start, t));
                }
            }
        }
    }
    run.map(|(start, end)| ((start + end) / 2) as u8)
}

/// Global Otsu binarization.
///
/// A uniform page has no threshold; it becomes all ink when its gray level
/// is dark (below 128) and an empty mask otherwise.
pub fn binarize(page: &PageImage) -> BinaryImage {
    let bits = match otsu_threshold(page) {
        Some(t) => page.pixels().iter().map(|&p| p <= t).collect(),
        None => {
            let dark = page.pixels()[0] < 128;
            vec![dark; page.pixels().len()]
        }
    };
    BinaryImage {
        id: page.id().to_string(),
        mask: Bitmap::new(page.width(), page.height(), bits).expect("dimensions come from a valid page"),
    }
}

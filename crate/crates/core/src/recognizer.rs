//! Static character classification against a language pack, rejection, and
//! optional dictionary tie-breaking.

use serde::{Deserialize, Serialize};

use crate::boxfile::PLACEHOLDER;
use crate::geometry::BBox;
use crate::imaging::{binarize, segment_page, GlyphSample, PageImage, PageSegmentation, SegConfig};
use crate::langpack::LanguagePack;
use crate::lexicon::AmbigTable;
use crate::training::{extract_features, sector_distance, MicroFeature, Prototype, CN_DIM};

/// Rendering of a rejected character in the debug text.
pub const REJECT_MARK: char = '~';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    pub w_cn: f64,
    pub w_mf: f64,
    pub reject_threshold: f64,
    /// Alternatives kept per character.
    pub top_n: usize,
    pub use_dict: bool,
    /// Relative tolerance of the class pruner on expected feature counts.
    pub prune_tolerance: f64,
    /// Cells of the matching lattice per unit of the normalized frame.
    pub match_lattice: f64,
    /// Largest lattice distance at which a feature counts as matched.
    pub match_distance: i32,
    /// Mean per-character rating slack within which dictionary words win.
    pub dict_slack: f64,
    pub seg: SegConfig,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            w_cn: 0.4,
            w_mf: 0.6,
            reject_threshold: 0.35,
            top_n: 5,
            use_dict: false,
            prune_tolerance: 0.5,
            match_lattice: 32.0,
            match_distance: 2,
            dict_slack: 0.05,
            seg: SegConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecognizeError {
    #[error("language pack has no trained classes")]
    UntrainedPack,
    #[error("glyph has no ink")]
    EmptyGlyph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub glyph: char,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharResult {
    pub bbox: BBox,
    pub best: ScoredLabel,
    /// Top candidates, best first.
    pub alternatives: Vec<ScoredLabel>,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordResult {
    pub bbox: BBox,
    pub chars: Vec<CharResult>,
    /// Set when most of the word's characters were rejected; the whole word
    /// is then left out of the text.
    pub rejected: bool,
}

impl WordResult {
    /// Characters that reach the plain-text output.
    pub fn accepted_chars(&self) -> impl Iterator<Item = &CharResult> {
        let rejected = self.rejected;
        self.chars.iter().filter(move |c| !rejected && !c.rejected)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineResult {
    pub words: Vec<WordResult>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecognitionResult {
    pub page_id: String,
    pub lines: Vec<LineResult>,
}

impl RecognitionResult {
    pub fn chars(&self) -> impl Iterator<Item = (&WordResult, &CharResult)> {
        self.lines.iter().flat_map(|l| l.words.iter()).flat_map(|w| w.chars.iter().map(move |c| (w, c)))
    }

    /// Accepted characters only: words separated by one space, lines by LF,
    /// with a trailing LF when anything was output.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            let words: Vec<String> = line
                .words
                .iter()
                .map(|w| w.accepted_chars().map(|c| c.best.glyph).collect::<String>())
                .filter(|w| !w.is_empty())
                .collect();
            if !words.is_empty() {
                out.push_str(&words.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// Every segmented character, with rejections shown as [`REJECT_MARK`].
    pub fn debug_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            let words: Vec<String> = line
                .words
                .iter()
                .map(|w| {
                    w.chars
                        .iter()
                        .map(|c| if w.rejected || c.rejected { REJECT_MARK } else { c.best.glyph })
                        .collect()
                })
                .collect();
            out.push_str(&words.join(" "));
            out.push('\n');
        }
        out
    }
}

fn lattice(v: f64, cells: f64) -> i32 {
    (v * cells).round() as i32
}

fn mf_distance(a: &MicroFeature, b: &MicroFeature, cells: f64) -> i32 {
    let d = |x: f64, y: f64| (lattice(x, cells) - lattice(y, cells)).abs();
    d(a.x, b.x).max(d(a.y, b.y)).max(d(a.len, b.len)).max(2 * sector_distance(a.dir, b.dir) as i32)
}

fn cn_score(cn: &[f64; CN_DIM], protos: &[Prototype]) -> f64 {
    protos
        .iter()
        .map(|p| {
            let m2: f64 = (0..CN_DIM).map(|i| (cn[i] - p.mean[i]).powi(2) / p.var[i]).sum();
            (-m2 / 2.0).exp()
        })
        .fold(0.0, f64::max)
}

fn mf_score(features: &[MicroFeature], protos: &[MicroFeature], cfg: &RecognizerConfig) -> f64 {
    if features.is_empty() {
        return 0.0;
    }
    let matched = features
        .iter()
        .filter(|f| protos.iter().any(|p| mf_distance(f, p, cfg.match_lattice) <= cfg.match_distance))
        .count();
    matched as f64 / features.len() as f64
}

/// Scores every class that survives the feature-count pruner, best first.
/// Ties are broken by glyph so the order is total.
pub fn classify_glyph(pack: &LanguagePack, g: &GlyphSample, cfg: &RecognizerConfig) -> Result<Vec<ScoredLabel>, RecognizeError> {
    if pack.micro.classes.is_empty() || pack.prototypes.classes.is_empty() {
        return Err(RecognizeError::UntrainedPack);
    }
    let feats = extract_features(&g.mask).map_err(|_| RecognizeError::EmptyGlyph)?;
    let n = feats.micro.len() as f64;
    let mut out: Vec<ScoredLabel> = pack
        .micro
        .classes
        .iter()
        .filter_map(|(&glyph, mf_protos)| {
            let expected = *pack.micro.expected_count.get(&glyph)? as f64;
            if (n - expected).abs() > cfg.prune_tolerance * expected {
                return None;
            }
            let s_cn = pack.prototypes.classes.get(&glyph).map_or(0.0, |p| cn_score(&feats.cn, p));
            let s_mf = mf_score(&feats.micro, mf_protos, cfg);
            let rating = (cfg.w_cn * s_cn + cfg.w_mf * s_mf).clamp(0.0, 1.0);
            Some(ScoredLabel { glyph, rating })
        })
        .collect();
    out.sort_by(|a, b| b.rating.total_cmp(&a.rating).then(a.glyph.cmp(&b.glyph)));
    Ok(out)
}

fn char_result(pack: &LanguagePack, g: &GlyphSample, cfg: &RecognizerConfig) -> Result<CharResult, RecognizeError> {
    let mut labels = classify_glyph(pack, g, cfg)?;
    labels.truncate(cfg.top_n.max(1));
    let best = labels.first().copied().unwrap_or(ScoredLabel { glyph: PLACEHOLDER, rating: 0.0 });
    Ok(CharResult { bbox: g.bbox, best, alternatives: labels, rejected: best.rating < cfg.reject_threshold })
}

/// Upper bound on candidate strings explored per word by the tie-breaker.
const MAX_CANDIDATES: usize = 4096;

/// Returns, per character, the alternative index of the lowest-deficit
/// dictionary word reachable within the slack, or `None`.
fn dictionary_choice(pack: &LanguagePack, chars: &[CharResult], slack: f64) -> Option<Vec<usize>> {
    let budget = slack * chars.len() as f64 + 1e-12;
    let mut best: Option<(f64, String, Vec<usize>)> = None;
    let mut picks = Vec::with_capacity(chars.len());
    let mut explored = 0usize;

    #[allow(clippy::too_many_arguments)]
    fn walk(
        pack: &LanguagePack,
        chars: &[CharResult],
        budget: f64,
        spent: f64,
        picks: &mut Vec<usize>,
        explored: &mut usize,
        best: &mut Option<(f64, String, Vec<usize>)>,
    ) {
        if *explored >= MAX_CANDIDATES {
            return;
        }
        let i = picks.len();
        if i == chars.len() {
            *explored += 1;
            let word: String = picks.iter().zip(chars).map(|(&k, c)| c.alternatives[k].glyph).collect();
            let better = match best {
                None => true,
                Some((d, w, _)) => spent < *d - 1e-12 || ((spent - *d).abs() <= 1e-12 && word < *w),
            };
            if better && pack.in_dictionary(&word) {
                *best = Some((spent, word, picks.clone()));
            }
            return;
        }
        let c = &chars[i];
        if c.rejected || c.alternatives.is_empty() {
            // Rejected characters are not candidates for substitution.
            return;
        }
        for (k, alt) in c.alternatives.iter().enumerate() {
            let deficit = c.best.rating - alt.rating;
            if spent + deficit > budget {
                break;
            }
            picks.push(k);
            walk(pack, chars, budget, spent + deficit, picks, explored, best);
            picks.pop();
        }
    }

    walk(pack, chars, budget, 0.0, &mut picks, &mut explored, &mut best);
    best.map(|(_, _, p)| p)
}

fn finish_word(pack: &LanguagePack, bbox: BBox, mut chars: Vec<CharResult>, cfg: &RecognizerConfig) -> WordResult {
    let dictionaries = !(pack.word_dawg.is_empty() && pack.freq_dawg.is_empty() && pack.user_words.is_empty());
    if cfg.use_dict && dictionaries && !chars.is_empty() {
        if let Some(picks) = dictionary_choice(pack, &chars, cfg.dict_slack) {
            for (c, k) in chars.iter_mut().zip(picks) {
                c.best = c.alternatives[k];
            }
        }
    }
    let rejected_chars = chars.iter().filter(|c| c.rejected).count();
    let rejected = rejected_chars * 2 > chars.len();
    WordResult { bbox, chars, rejected }
}

/// Classifies an already segmented page.
pub fn recognize_segmentation(
    pack: &LanguagePack,
    page_id: &str,
    seg: &PageSegmentation,
    cfg: &RecognizerConfig,
) -> Result<RecognitionResult, RecognizeError> {
    if pack.micro.classes.is_empty() || pack.prototypes.classes.is_empty() {
        return Err(RecognizeError::UntrainedPack);
    }
    let mut lines = Vec::with_capacity(seg.lines.len());
    for line in &seg.lines {
        let mut words = Vec::with_capacity(line.words.len());
        for w in &line.words {
            let chars = w.glyphs.iter().map(|g| char_result(pack, g, cfg)).collect::<Result<Vec<_>, _>>()?;
            words.push(finish_word(pack, w.bbox, chars, cfg));
        }
        lines.push(LineResult { words });
    }
    Ok(RecognitionResult { page_id: page_id.to_string(), lines })
}

/// Binarizes, segments and classifies a page. A blank page gives an empty
/// result.
pub fn recognize_page(pack: &LanguagePack, page: &PageImage, cfg: &RecognizerConfig) -> Result<RecognitionResult, RecognizeError> {
    let seg = segment_page(&binarize(page), &cfg.seg);
    recognize_segmentation(pack, page.id(), &seg, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbigWarning {
    /// Character offset of the match in [`RecognitionResult::text`].
    pub offset: usize,
    pub wrong: String,
    pub right: String,
}

/// Reports every occurrence, overlapping ones included, of each rule's
/// `wrong` side in the rendered text. The text itself is never changed.
pub fn flag_ambiguities(result: &RecognitionResult, ambigs: &AmbigTable) -> Vec<AmbigWarning> {
    let text: Vec<char> = result.text().chars().collect();
    let mut out = Vec::new();
    for rule in &ambigs.rules {
        let wrong: Vec<char> = rule.wrong.chars().collect();
        if wrong.is_empty() || wrong.len() > text.len() {
            continue;
        }
        for (offset, window) in text.windows(wrong.len()).enumerate() {
            if window == wrong.as_slice() {
                out.push(AmbigWarning { offset, wrong: rule.wrong.clone(), right: rule.right.clone() });
            }
        }
    }
    out.sort_by(|a, b| a.offset.cmp(&b.offset).then_with(|| a.wrong.cmp(&b.wrong)));
    out
}

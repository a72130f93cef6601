use serde::{Deserialize, Serialize};

use super::{GroundTruth, OutSegment, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OpKind {
    Match,
    Substitute,
    /// One output segment spanning `k` true characters.
    Merge { k: usize },
    /// `k` output segments for one true character.
    Split { k: usize },
    Reject,
    /// Output with no ground truth underneath. Not scored.
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignOp {
    pub kind: OpKind,
    /// Ground-truth indices, ascending.
    pub gt: Vec<usize>,
    /// Output indices, ascending.
    pub out: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    /// Labels of the ground-truth characters, for per-character tallies.
    pub gt_glyphs: Vec<char>,
    pub out_len: usize,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Index of the candidate with the largest positive overlap, lowest index on ties.
fn best_overlap(iou: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in iou.enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Pairs every output segment with its best-overlapping true character and
/// vice versa, then scores each connected group of the resulting graph as
/// one operation.
fn align_boxes(gt: &GroundTruth, out: &[OutSegment]) -> Vec<AlignOp> {
    let n = gt.chars.len();
    let mut uf = UnionFind((0..n + out.len()).collect());
    for (j, o) in out.iter().enumerate() {
        if let Some(i) = best_overlap(gt.chars.iter().map(|g| g.bbox.iou(&o.bbox))) {
            uf.union(i, n + j);
        }
    }
    for (i, g) in gt.chars.iter().enumerate() {
        if let Some(j) = best_overlap(out.iter().map(|o| o.bbox.iou(&g.bbox))) {
            uf.union(i, n + j);
        }
    }

    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for i in 0..n {
        let r = uf.find(i);
        groups.entry(r).or_default().0.push(i);
    }
    for j in 0..out.len() {
        let r = uf.find(n + j);
        groups.entry(r).or_default().1.push(j);
    }

    let mut ops = Vec::new();
    for (_, (g, o)) in groups {
        let all_rejected = !o.is_empty() && o.iter().all(|&j| out[j].rejected);
        match (g.len(), o.len()) {
            (0, _) => ops.push(AlignOp { kind: OpKind::Spurious, gt: g, out: o }),
            (_, 0) => {
                for i in g {
                    ops.push(AlignOp { kind: OpKind::Reject, gt: vec![i], out: Vec::new() });
                }
            }
            _ if all_rejected => ops.push(AlignOp { kind: OpKind::Reject, gt: g, out: o }),
            (1, 1) => {
                let kind = if gt.chars[g[0]].glyph == out[o[0]].glyph { OpKind::Match } else { OpKind::Substitute };
                ops.push(AlignOp { kind, gt: g, out: o });
            }
            (1, m) => ops.push(AlignOp { kind: OpKind::Split { k: m }, gt: g, out: o }),
            (k, _) => ops.push(AlignOp { kind: OpKind::Merge { k }, gt: g, out: o }),
        }
    }
    sort_ops(&mut ops);
    ops
}

fn sort_ops(ops: &mut [AlignOp]) {
    let key = |op: &AlignOp| (op.gt.first().copied().unwrap_or(usize::MAX), op.out.first().copied().unwrap_or(usize::MAX));
    ops.sort_by_key(key);
}

enum Step {
    Diag(usize, usize),
    Del(usize),
    Ins(usize),
}

/// Levenshtein alignment for outputs that carry no boxes. Dropped true
/// characters become rejections; extra output characters fold into the
/// nearest aligned character as a split.
fn align_text(gt: &[char], out: &[char]) -> Vec<AlignOp> {
    let (n, m) = (gt.len(), out.len());
    let w = m + 1;
    let mut d = vec![0u32; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i as u32;
    }
    for j in 0..=m {
        d[j] = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + (gt[i - 1] != out[j - 1]) as u32;
            d[i * w + j] = sub.min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1);
        }
    }
    let mut steps = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 && here == d[(i - 1) * w + j - 1] + (gt[i - 1] != out[j - 1]) as u32 {
            steps.push(Step::Diag(i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if i > 0 && here == d[(i - 1) * w + j] + 1 {
            steps.push(Step::Del(i - 1));
            i -= 1;
        } else {
            steps.push(Step::Ins(j - 1));
            j -= 1;
        }
    }
    steps.reverse();

    let mut ops: Vec<AlignOp> = Vec::new();
    let mut last_aligned: Option<usize> = None;
    let mut pending: Vec<usize> = Vec::new();
    for step in steps {
        match step {
            Step::Diag(i, j) => {
                let kind = if gt[i] == out[j] { OpKind::Match } else { OpKind::Substitute };
                let mut o = std::mem::take(&mut pending);
                o.push(j);
                let kind = if o.len() > 1 { OpKind::Split { k: o.len() } } else { kind };
                ops.push(AlignOp { kind, gt: vec![i], out: o });
                last_aligned = Some(ops.len() - 1);
            }
            Step::Del(i) => ops.push(AlignOp { kind: OpKind::Reject, gt: vec![i], out: Vec::new() }),
            Step::Ins(j) => match last_aligned {
                Some(k) => {
                    let op = &mut ops[k];
                    op.out.push(j);
                    op.kind = OpKind::Split { k: op.out.len() };
                }
                None => pending.push(j),
            },
        }
    }
    if !pending.is_empty() {
        ops.push(AlignOp { kind: OpKind::Spurious, gt: Vec::new(), out: pending });
    }
    sort_ops(&mut ops);
    ops
}

/// Aligns output to ground truth by box overlap, or by edit distance when
/// the output is plain text.
pub fn align(gt: &GroundTruth, pred: &Prediction) -> Alignment {
    let gt_glyphs: Vec<char> = gt.chars.iter().map(|c| c.glyph).collect();
    match pred {
        Prediction::Segments(out) => Alignment { ops: align_boxes(gt, out), gt_glyphs, out_len: out.len() },
        Prediction::Text(text) => {
            let out: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
            Alignment { ops: align_text(&gt_glyphs, &out), gt_glyphs, out_len: out.len() }
        }
    }
}

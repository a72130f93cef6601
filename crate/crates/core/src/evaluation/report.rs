use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Counts, Dataset, DatasetManifest, EvalReport};

/// One machine-readable row per user per dataset column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub user: String,
    /// `dataset-1`, `dataset-2` or `overall`.
    pub dataset: String,
    pub ct: u64,
    pub cm: u64,
    pub cs: u64,
    pub rejected: u64,
    pub accuracy: Option<f64>,
}

fn columns(r: &EvalReport) -> Vec<(&'static str, &'static str, Counts)> {
    let mut cols: Vec<(&'static str, &'static str, Counts)> = r
        .by_dataset
        .iter()
        .map(|(d, c)| {
            let key = match d {
                Dataset::Isolated => "dataset-1",
                Dataset::FreeFlow => "dataset-2",
            };
            (d.label(), key, *c)
        })
        .collect();
    if cols.len() != 1 {
        cols.push(("Overall", "overall", r.counts));
    }
    cols
}

pub fn report_records(users: &[(String, EvalReport)]) -> Vec<ReportRecord> {
    users
        .iter()
        .flat_map(|(user, r)| {
            columns(r).into_iter().map(move |(_, key, c)| ReportRecord {
                user: user.clone(),
                dataset: key.to_string(),
                ct: c.ct,
                cm: c.cm,
                cs: c.cs,
                rejected: c.rejected,
                accuracy: c.accuracy(),
            })
        })
        .collect()
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

/// Per-user performance tables. Columns appear only for datasets that were
/// evaluated, plus an overall column when there are two.
pub fn render_report(users: &[(String, EvalReport)]) -> String {
    let mut out = String::from("Rejection is a percentage of all ground-truth characters; the other rows exclude rejections.\n");
    type Row = (&'static str, fn(&Counts) -> Option<f64>);
    let rows: [Row; 4] = [
        ("Successful Recognition", Counts::accuracy),
        ("Misclassification", Counts::misclassification),
        ("Segmentation Failure", Counts::segmentation_failure),
        ("Rejection", Counts::rejection),
    ];
    for (user, r) in users {
        let cols = columns(r);
        let _ = writeln!(out, "\n{user}");
        let _ = write!(out, "{:<24}", "");
        for (label, _, _) in &cols {
            let _ = write!(out, "{label:>12}");
        }
        out.push('\n');
        for (name, f) in rows {
            let _ = write!(out, "{name:<24}");
            for (_, _, c) in &cols {
                let _ = write!(out, "{:>12}", pct(f(c)));
            }
            out.push('\n');
        }
    }
    out
}

/// Train/test sample distribution, one row per user split.
pub fn render_manifest(m: &DatasetManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28}{:>12}{:>12}{:>8}{:>8}", "", "Isolated", "Free-flow", "Words", "Total");
    for u in &m.users {
        for (split, c) in [("Train", &u.train), ("Test", &u.test)] {
            let _ = writeln!(
                out,
                "{:<28}{:>12}{:>12}{:>8}{:>8}",
                format!("{split} set for {}", u.user),
                c.isolated_chars,
                c.free_flow_chars,
                c.free_flow_words,
                c.total_chars()
            );
        }
    }
    out
}

/// Glyph counts, one `glyph<TAB>count` line each, followed by the total.
pub fn render_frequency(hist: &BTreeMap<char, u64>) -> String {
    let mut out = String::new();
    for (g, n) in hist {
        let _ = writeln!(out, "{g}\t{n}");
    }
    let _ = writeln!(out, "total\t{}", hist.values().sum::<u64>());
    out
}

//! Text encodings of the training artifacts.
//!
//! | file        | layout                                                              |
//! |-------------|---------------------------------------------------------------------|
//! | `.tr`       | `char <g> <n>`, n x `mf <x> <y> <dir> <len>`, `cn <v1> <v2> <v3> <v4>` |
//! | unicharset  | entry count, then `<g> <count>` per line                             |
//! | normproto   | dim, then `class <g> <k>` and k x `proto <weight> <mean..> <var..>`  |
//! | pffmtable   | `<g> <expected-count>` per line                                      |
//! | inttemp     | `class <g> <p>` then p x `mfp <x> <y> <dir> <len>`                   |
//!
//! `.tr` and inttemp reals are written with six decimals; normproto reals
//! use the shortest representation that reads back to the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    MicroFeature, MicroProtoModel, Prototype, PrototypeModel, TrCharFeatures, TrFeatureSet, UnicharEntry, Unicharset,
    CN_DIM,
};
use crate::boxfile::PLACEHOLDER;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

/// Non-empty lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty())
}

fn parse_glyph(line: usize, raw: &str) -> Result<char, FormatError> {
    let mut chars = raw.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(err(line, format!("glyph {raw:?} is not a single character"))),
    }
}

fn parse_f64(line: usize, raw: &str) -> Result<f64, FormatError> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("{raw:?} is not a finite number")))
}

fn parse_unit(line: usize, raw: &str) -> Result<f64, FormatError> {
    let v = parse_f64(line, raw)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(err(line, format!("{raw} is outside [0, 1]")))
    }
}

fn parse_uint<T: std::str::FromStr>(line: usize, raw: &str) -> Result<T, FormatError> {
    raw.parse::<T>().map_err(|_| err(line, format!("{raw:?} is not a non-negative integer")))
}

fn parse_dir(line: usize, raw: &str) -> Result<u8, FormatError> {
    let d: u8 = parse_uint(line, raw)?;
    if d < 8 {
        Ok(d)
    } else {
        Err(err(line, format!("direction {d} is not a sector 0-7")))
    }
}

fn fields<'a>(line: usize, text: &'a str, keyword: &str, count: usize) -> Result<Vec<&'a str>, FormatError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.first() != Some(&keyword) {
        return Err(err(line, format!("expected `{keyword}` record, found {text:?}")));
    }
    if parts.len() != count + 1 {
        return Err(err(line, format!("`{keyword}` record needs {count} fields, found {}", parts.len() - 1)));
    }
    Ok(parts[1..].to_vec())
}

pub fn write_tr(set: &TrFeatureSet) -> String {
    let mut out = String::new();
    for rec in &set.records {
        writeln!(out, "char {} {}", rec.glyph.unwrap_or(PLACEHOLDER), rec.micro.len()).unwrap();
        for m in &rec.micro {
            writeln!(out, "mf {:.6} {:.6} {} {:.6}", m.x, m.y, m.dir, m.len).unwrap();
        }
        let [a, b, c, d] = rec.cn;
        writeln!(out, "cn {a:.6} {b:.6} {c:.6} {d:.6}").unwrap();
    }
    out
}

pub fn parse_tr(page_id: &str, text: &str) -> Result<TrFeatureSet, FormatError> {
    let mut it = lines(text);
    let mut records = Vec::new();
    while let Some((ln, l)) = it.next() {
        let head = fields(ln, l, "char", 2)?;
        let glyph = parse_glyph(ln, head[0])?;
        let count: usize = parse_uint(ln, head[1])?;
        let mut micro = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = it.next().ok_or_else(|| err(ln, "record ends before its micro-features"))?;
            let f = fields(ln, l, "mf", 4)?;
            micro.push(MicroFeature {
                x: parse_unit(ln, f[0])?,
                y: parse_unit(ln, f[1])?,
                dir: parse_dir(ln, f[2])?,
                len: parse_unit(ln, f[3])?,
            });
        }
        let (ln, l) = it.next().ok_or_else(|| err(ln, "record has no `cn` line"))?;
        let f = fields(ln, l, "cn", CN_DIM)?;
        let mut cn = [0.0; CN_DIM];
        for (slot, raw) in cn.iter_mut().zip(&f) {
            *slot = parse_unit(ln, raw)?;
        }
        records.push(TrCharFeatures { glyph: Some(glyph), cn, micro });
    }
    Ok(TrFeatureSet { page_id: page_id.to_string(), records })
}

pub fn write_unicharset(u: &Unicharset) -> String {
    let mut out = format!("{}\n", u.entries.len());
    for e in &u.entries {
        writeln!(out, "{} {}", e.glyph, e.count).unwrap();
    }
    out
}

pub fn parse_unicharset(text: &str) -> Result<Unicharset, FormatError> {
    let mut it = lines(text);
    let Some((ln, first)) = it.next() else {
        return Err(err(1, "missing entry count"));
    };
    let n: usize = parse_uint(ln, first.trim())?;
    let mut entries: Vec<UnicharEntry> = Vec::with_capacity(n);
    for (ln, l) in it {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(err(ln, "expected `<glyph> <count>`"));
        }
        let glyph = parse_glyph(ln, parts[0])?;
        let count: u64 = parse_uint(ln, parts[1])?;
        if count == 0 {
            return Err(err(ln, "count must be at least 1"));
        }
        if entries.iter().any(|e| e.glyph == glyph) {
            return Err(err(ln, format!("duplicate glyph {glyph:?}")));
        }
        entries.push(UnicharEntry { glyph, count });
    }
    if entries.len() != n {
        return Err(err(ln, format!("header announces {n} entries, found {}", entries.len())));
    }
    Ok(Unicharset { entries })
}

pub fn write_normproto(model: &PrototypeModel) -> String {
    let mut out = format!("{}\n", model.dim());
    for (glyph, protos) in &model.classes {
        writeln!(out, "class {} {}", glyph, protos.len()).unwrap();
        for p in protos {
            write!(out, "proto {}", p.weight).unwrap();
            for v in p.mean.iter().chain(p.var.iter()) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_normproto(text: &str) -> Result<PrototypeModel, FormatError> {
    let mut it = lines(text);
    let Some((ln, first)) = it.next() else {
        return Err(err(1, "missing dimension line"));
    };
    let dim: usize = parse_uint(ln, first.trim())?;
    if dim != CN_DIM {
        return Err(err(ln, format!("dimension {dim} is not {CN_DIM}")));
    }
    let mut classes = BTreeMap::new();
    while let Some((ln, l)) = it.next() {
        let head = fields(ln, l, "class", 2)?;
        let glyph = parse_glyph(ln, head[0])?;
        let k: usize = parse_uint(ln, head[1])?;
        if k == 0 {
            return Err(err(ln, format!("class {glyph:?} has no prototypes")));
        }
        let mut protos = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, l) = it.next().ok_or_else(|| err(ln, "class ends before its prototypes"))?;
            let f = fields(ln, l, "proto", 1 + 2 * CN_DIM)?;
            let weight = parse_unit(ln, f[0])?;
            let mut mean = [0.0; CN_DIM];
            let mut var = [0.0; CN_DIM];
            for d in 0..CN_DIM {
                mean[d] = parse_f64(ln, f[1 + d])?;
                var[d] = parse_f64(ln, f[1 + CN_DIM + d])?;
                if var[d] <= 0.0 {
                    return Err(err(ln, "variance must be positive"));
                }
            }
            protos.push(Prototype { mean, var, weight });
        }
        let total: f64 = protos.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(err(ln, format!("weights of class {glyph:?} sum to {total}")));
        }
        if classes.insert(glyph, protos).is_some() {
            return Err(err(ln, format!("duplicate class {glyph:?}")));
        }
    }
    Ok(PrototypeModel { classes })
}

pub fn write_pffmtable(model: &MicroProtoModel) -> String {
    let mut out = String::new();
    for (glyph, n) in &model.expected_count {
        writeln!(out, "{glyph} {n}").unwrap();
    }
    out
}

pub fn parse_pffmtable(text: &str) -> Result<BTreeMap<char, u32>, FormatError> {
    let mut table = BTreeMap::new();
    for (ln, l) in lines(text) {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(err(ln, "expected `<glyph> <expected-count>`"));
        }
        let glyph = parse_glyph(ln, parts[0])?;
        let n: u32 = parse_uint(ln, parts[1])?;
        if n == 0 {
            return Err(err(ln, "expected count must be at least 1"));
        }
        if table.insert(glyph, n).is_some() {
            return Err(err(ln, format!("duplicate glyph {glyph:?}")));
        }
    }
    Ok(table)
}

pub fn write_inttemp(model: &MicroProtoModel) -> String {
    let mut out = String::new();
    for (glyph, protos) in &model.classes {
        writeln!(out, "class {} {}", glyph, protos.len()).unwrap();
        for m in protos {
            writeln!(out, "mfp {:.6} {:.6} {} {:.6}", m.x, m.y, m.dir, m.len).unwrap();
        }
    }
    out
}

pub fn parse_inttemp(text: &str) -> Result<BTreeMap<char, Vec<MicroFeature>>, FormatError> {
    let mut it = lines(text);
    let mut classes = BTreeMap::new();
    while let Some((ln, l)) = it.next() {
        let head = fields(ln, l, "class", 2)?;
        let glyph = parse_glyph(ln, head[0])?;
        let p: usize = parse_uint(ln, head[1])?;
        let mut protos = Vec::with_capacity(p);
        for _ in 0..p {
            let (ln, l) = it.next().ok_or_else(|| err(ln, "class ends before its templates"))?;
            let f = fields(ln, l, "mfp", 4)?;
            let m = MicroFeature {
                x: parse_unit(ln, f[0])?,
                y: parse_unit(ln, f[1])?,
                dir: parse_dir(ln, f[2])?,
                len: parse_unit(ln, f[3])?,
            };
            if m.quantized() != m {
                return Err(err(ln, "template is not on the 1/64 grid"));
            }
            protos.push(m);
        }
        if classes.insert(glyph, protos).is_some() {
            return Err(err(ln, format!("duplicate class {glyph:?}")));
        }
    }
    Ok(classes)
}

/// Human-readable summary of micro-feature clustering. Nothing reads it back.
pub fn microfeat_log(model: &MicroProtoModel) -> String {
    let mut out = String::from("# micro-feature clustering\n");
    for (glyph, protos) in &model.classes {
        let expected = model.expected_count.get(glyph).copied().unwrap_or(0);
        writeln!(out, "class {glyph}: {} prototypes, {expected} features per sample", protos.len()).unwrap();
        for m in protos {
            writeln!(out, "  x={:.4} y={:.4} dir={} len={:.4}", m.x, m.y, m.dir, m.len).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn six(v: u32) -> f64 {
        v as f64 / 1e6
    }

    fn arb_micro() -> impl Strategy<Value = MicroFeature> {
        (0..=1_000_000u32, 0..=1_000_000u32, 0..8u8, 0..=1_000_000u32)
            .prop_map(|(x, y, dir, len)| MicroFeature { x: six(x), y: six(y), dir, len: six(len) })
    }

    fn arb_record() -> impl Strategy<Value = TrCharFeatures> {
        (
            proptest::char::range('a', 'z'),
            proptest::array::uniform4(0..=1_000_000u32),
            proptest::collection::vec(arb_micro(), 1..12),
        )
            .prop_map(|(g, cn, micro)| TrCharFeatures { glyph: Some(g), cn: cn.map(six), micro })
    }

    proptest! {
        #[test]
        fn tr_round_trips(records in proptest::collection::vec(arb_record(), 0..8)) {
            let set = TrFeatureSet { page_id: "p".into(), records };
            let text = write_tr(&set);
            prop_assert_eq!(parse_tr("p", &text).unwrap(), set);
        }

        #[test]
        fn normproto_round_trips(
            raw in proptest::collection::btree_map(
                proptest::char::range('a', 'z'),
                proptest::collection::vec((proptest::array::uniform4(0.0..1.0f64), proptest::array::uniform4(1e-4..1.0f64), 1u32..50), 1..5),
                0..6,
            )
        ) {
            let classes = raw
                .into_iter()
                .map(|(g, ps)| {
                    let total: u32 = ps.iter().map(|p| p.2).sum();
                    let protos = ps.into_iter().map(|(mean, var, n)| Prototype { mean, var, weight: n as f64 / total as f64 }).collect();
                    (g, protos)
                })
                .collect();
            let model = PrototypeModel { classes };
            prop_assert_eq!(parse_normproto(&write_normproto(&model)).unwrap(), model);
        }
    }

    #[test]
    fn tr_layout() {
        let set = TrFeatureSet {
            page_id: "p".into(),
            records: vec![TrCharFeatures {
                glyph: Some('e'),
                cn: [0.5, 0.25, 0.5, 0.125],
                micro: vec![MicroFeature { x: 0.1, y: 0.2, dir: 3, len: 0.4 }],
            }],
        };
        assert_eq!(
            write_tr(&set),
            "char e 1\nmf 0.100000 0.200000 3 0.400000\ncn 0.500000 0.250000 0.500000 0.125000\n"
        );
    }

    #[test]
    fn tr_errors_point_at_lines() {
        let e = parse_tr("p", "char a 2\nmf 0.1 0.1 0 0.1\ncn 0.1 0.1 0.1 0.1\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_tr("p", "char a 1\nmf 0.1 0.1 9 0.1\ncn 0.1 0.1 0.1 0.1\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn unicharset_layout_and_checks() {
        let u = Unicharset { entries: vec![UnicharEntry { glyph: 'a', count: 2 }, UnicharEntry { glyph: 'b', count: 1 }] };
        let text = write_unicharset(&u);
        assert_eq!(text, "2\na 2\nb 1\n");
        assert_eq!(parse_unicharset(&text).unwrap(), u);
        assert!(parse_unicharset("3\na 2\nb 1\n").is_err());
        assert!(parse_unicharset("2\na 2\na 1\n").is_err());
    }

    #[test]
    fn templates_must_be_on_grid() {
        assert!(parse_inttemp("class a 1\nmfp 0.015625 0.5 2 0.25\n").is_ok());
        assert_eq!(parse_inttemp("class a 1\nmfp 0.01 0.5 2 0.25\n").unwrap_err().line, 2);
    }

    #[test]
    fn pffmtable_round_trip() {
        let mut model = MicroProtoModel::default();
        model.expected_count.insert('a', 7);
        model.expected_count.insert('k', 12);
        let text = write_pffmtable(&model);
        assert_eq!(text, "a 7\nk 12\n");
        assert_eq!(parse_pffmtable(&text).unwrap(), model.expected_count);
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use handtess_core::boxfile::{parse_boxfile, serialize_boxfile, BoxFile};
use handtess_core::imaging::save_page_png;
use handtess_core::synth::SynthPage;

pub fn handtess(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handtess")).args(args).current_dir(cwd).output().expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = handtess(args, cwd);
    assert!(out.status.success(), "handtess {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Saves `<id>.png` and `<id>.truth` (the true boxes, kept apart from
/// anything the pipeline writes) and returns the image path.
pub fn save_synth(dir: &Path, p: &SynthPage) -> PathBuf {
    let id = &p.truth.page_id;
    let img = dir.join(format!("{id}.png"));
    save_page_png(&p.page, &img).unwrap();
    std::fs::write(dir.join(format!("{id}.truth")), serialize_boxfile(&p.truth)).unwrap();
    img
}

/// Stand-in for the manual correction pass: a candidate box that clearly
/// matches a true glyph keeps its geometry and takes that label; missed or
/// badly cut glyphs are redrawn from the truth; stray candidates are dropped.
pub fn correct(candidates: &BoxFile, truth: &BoxFile) -> BoxFile {
    let mut used = vec![false; candidates.entries.len()];
    let mut out = truth.clone();
    for e in &mut out.entries {
        let best = candidates
            .entries
            .iter()
            .enumerate()
            .filter(|(i, c)| !used[*i] && c.bbox.iou(&e.bbox) >= 0.5)
            .max_by(|a, b| a.1.bbox.iou(&e.bbox).total_cmp(&b.1.bbox.iou(&e.bbox)));
        if let Some((i, c)) = best {
            used[i] = true;
            e.bbox = c.bbox;
        }
    }
    out
}

/// makebox, correct, train: returns the `.tr` path of one training page.
pub fn label_and_train(dir: &Path, id: &str) -> PathBuf {
    ok(&["makebox", &format!("{id}.png"), id, "batch.nochop"], dir);
    let made = parse_boxfile(id, &std::fs::read(dir.join(format!("{id}.box"))).unwrap()).unwrap();
    let truth = parse_boxfile(id, &std::fs::read(dir.join(format!("{id}.truth"))).unwrap()).unwrap();
    std::fs::write(dir.join(format!("{id}.box")), serialize_boxfile(&correct(&made, &truth))).unwrap();
    ok(&["train", &format!("{id}.png"), &format!("{id}.box")], dir);
    dir.join(format!("{id}.tr"))
}

/// Full training pipeline for one writer's pages in `dir`, installing the
/// pack `lang` under `dir/tessdata`.
pub fn train_pack(dir: &Path, ids: &[String], lang: &str, max_mf_protos: usize) {
    let trs: Vec<String> = ids.iter().map(|id| label_and_train(dir, id).to_string_lossy().into_owned()).collect();
    let boxes: Vec<String> = ids.iter().map(|id| format!("{id}.box")).collect();
    let out = format!("{lang}-parts");
    let protos = max_mf_protos.to_string();
    let mut args = vec!["mftraining", "-D", &out, "--max-protos", &protos];
    args.extend(trs.iter().map(String::as_str));
    ok(&args, dir);
    let mut args = vec!["cntraining", "-D", &out];
    args.extend(trs.iter().map(String::as_str));
    ok(&args, dir);
    let mut args = vec!["unicharset-extract", "-D", &out];
    args.extend(boxes.iter().map(String::as_str));
    ok(&args, dir);
    let parts: Vec<String> =
        ["unicharset", "normproto", "inttemp", "pffmtable"].iter().map(|p| format!("{out}/{p}")).collect();
    let mut args = vec!["pack", "-l", lang, "-d", "tessdata"];
    args.extend(parts.iter().map(String::as_str));
    ok(&args, dir);
}

//! One function per subcommand. Each reads inputs, calls the matching core
//! operation and writes its output with [`write_atomic`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use handtess_core::boxfile::{make_boxes, parse_boxfile, serialize_boxfile, validate_boxes, BoxFile};
use handtess_core::evaluation::{
    align, char_frequency, compute_metrics, parse_word_sidecar, render_frequency, render_report, report_records,
    Dataset, EvalReport, GroundTruth, Prediction,
};
use handtess_core::fsutil::write_atomic;
use handtess_core::imaging::{binarize, load_page, save_page_png, segment_page, SegConfig};
use handtess_core::langpack::{
    assemble_pack, load_pack, validate_pack, PackParts, DANG_AMBIGS, FREQ_DAWG, INTTEMP, NORMPROTO, PACK_FILES,
    PFFMTABLE, UNICHARSET, USER_WORDS, WORD_DAWG,
};
use handtess_core::lexicon::{build_dawg, deserialize_dawg, parse_ambigs, serialize_dawg, WordList};
use handtess_core::recognizer::{flag_ambiguities, recognize_page, RecognitionResult, RecognizerConfig};
use handtess_core::synth::{user_corpus, CorpusConfig};
use handtess_core::training::{
    cn_training, emit_tr, extract_unicharset, mf_training, microfeat_log, parse_inttemp, parse_normproto,
    parse_pffmtable, parse_tr, parse_unicharset, write_inttemp, write_normproto, write_pffmtable, write_tr,
    write_unicharset, TrFeatureSet, TrainingConfig,
};

use crate::Command;

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Makebox { image, base, lang, tessdata } => makebox(&image, &base, lang.as_deref(), &tessdata),
        Command::Train { image, boxes } => {
            let boxes = boxes.unwrap_or_else(|| image.with_extension("box"));
            train(&image, &boxes).map(|_| ())
        }
        Command::Mftraining { tr, output_dir, max_protos } => mftraining(&tr, &output_dir, max_protos),
        Command::Cntraining { tr, output_dir, max_protos } => cntraining(&tr, &output_dir, max_protos),
        Command::UnicharsetExtract { boxes, output_dir } => unicharset_extract(&boxes, &output_dir),
        Command::Wordlist2dawg { list, out } => wordlist2dawg(&list, &out),
        Command::Pack { lang, tessdata, parts } => pack(&lang, &tessdata, &parts),
        Command::Recognize { image, out, lang, tessdata, use_dict, json, reject_threshold, word_gap } => {
            let mut cfg = RecognizerConfig { use_dict, ..Default::default() };
            if let Some(t) = reject_threshold {
                cfg.reject_threshold = t;
            }
            if let Some(g) = word_gap {
                cfg.seg.word_gap_factor = g;
            }
            recognize(&image, &out, &lang, &tessdata, &cfg, json).map(|_| ())
        }
        Command::Eval { gt, pred, words, dataset, user, json } => {
            let report = evaluate(&gt, &pred, &words, dataset.into())?;
            let users = [(user, report)];
            if json {
                for rec in report_records(&users) {
                    println!("{}", serde_json::to_string(&rec)?);
                }
            } else {
                print!("{}", render_report(&users));
            }
            Ok(())
        }
        Command::Freq { boxes } => {
            let files = boxes.iter().map(|p| read_boxfile(p)).collect::<Result<Vec<_>>>()?;
            print!("{}", render_frequency(&char_frequency(&files)));
            Ok(())
        }
        Command::ServeLabeler { port, root, host, assets } => crate::labeler::serve_blocking(&host, port, root, assets),
        Command::Synth { output_dir, users, samples_per_class, test_per_class, seed } => {
            let cfg = CorpusConfig { samples_per_class, test_per_class, seed, ..Default::default() };
            synth(&output_dir, users, &cfg)
        }
    }
}

/// `base` with `.ext` appended, keeping any dots already in the name.
pub fn append_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s: OsString = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).with_context(|| format!("{}: not valid UTF-8", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    write_atomic(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Box file whose page id is the file stem.
pub fn read_boxfile(path: &Path) -> Result<BoxFile> {
    parse_boxfile(&stem(path), &read_bytes(path)?).with_context(|| path.display().to_string())
}

fn read_trs(paths: &[PathBuf]) -> Result<Vec<TrFeatureSet>> {
    paths
        .iter()
        .map(|p| parse_tr(&stem(p), &read_text(p)?).with_context(|| p.display().to_string()))
        .collect()
}

pub fn makebox(image: &Path, base: &Path, lang: Option<&str>, tessdata: &Path) -> Result<()> {
    let page = load_page(image)?;
    let pack = lang.map(|l| load_pack(tessdata, l)).transpose()?;
    let seg = segment_page(&binarize(&page), &SegConfig::default());
    let bf = make_boxes(page.id(), &seg, pack.as_ref());
    write(&append_ext(base, "box"), &serialize_boxfile(&bf))
}

/// Writes `<box path minus .box>.tr` and returns its path.
pub fn train(image: &Path, boxes: &Path) -> Result<PathBuf> {
    let page = load_page(image)?;
    let bf = read_boxfile(boxes)?;
    if let Some(issue) = validate_boxes(&bf, &page).into_iter().find(|i| i.is_hard()) {
        bail!("{}: line {}: {}", boxes.display(), issue.index + 1, issue.message);
    }
    let outcome = emit_tr(&page, &bf, &TrainingConfig::default());
    for s in &outcome.skipped {
        eprintln!("note: {}: line {}: skipped, {}", boxes.display(), s.index + 1, s.reason);
    }
    let out = boxes.with_extension("tr");
    write(&out, write_tr(&outcome.features).as_bytes())?;
    Ok(out)
}

fn training_config(max_protos: Option<usize>, micro: bool) -> TrainingConfig {
    let mut cfg = TrainingConfig::default();
    if let Some(n) = max_protos {
        if micro {
            cfg.max_mf_protos = n;
        } else {
            cfg.max_protos = n;
        }
    }
    cfg
}

pub fn mftraining(tr: &[PathBuf], out_dir: &Path, max_protos: Option<usize>) -> Result<()> {
    let model = mf_training(&read_trs(tr)?, &training_config(max_protos, true))?;
    write(&out_dir.join(INTTEMP), write_inttemp(&model).as_bytes())?;
    write(&out_dir.join(PFFMTABLE), write_pffmtable(&model).as_bytes())?;
    write(&out_dir.join("Microfeat"), microfeat_log(&model).as_bytes())
}

pub fn cntraining(tr: &[PathBuf], out_dir: &Path, max_protos: Option<usize>) -> Result<()> {
    let model = cn_training(&read_trs(tr)?, &training_config(max_protos, false))?;
    write(&out_dir.join(NORMPROTO), write_normproto(&model).as_bytes())
}

pub fn unicharset_extract(boxes: &[PathBuf], out_dir: &Path) -> Result<()> {
    let files = boxes.iter().map(|p| read_boxfile(p)).collect::<Result<Vec<_>>>()?;
    write(&out_dir.join(UNICHARSET), write_unicharset(&extract_unicharset(&files)).as_bytes())
}

pub fn wordlist2dawg(list: &Path, out: &Path) -> Result<()> {
    let wl = WordList::parse(&read_text(list)?);
    let dawg = build_dawg(&wl).with_context(|| list.display().to_string())?;
    write(out, &serialize_dawg(&dawg))
}

/// Which of the eight pack files `path` holds, judged by its name.
fn part_name(path: &Path) -> Option<&'static str> {
    let name = path.file_name()?.to_str()?;
    PACK_FILES.into_iter().find(|p| name == *p || name.ends_with(&format!(".{p}")))
}

pub fn pack(lang: &str, tessdata: &Path, parts: &[PathBuf]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    let mut pp = PackParts::default();
    let (mut classes, mut counts) = (None, None);
    for path in parts {
        let Some(name) = part_name(path) else {
            bail!("{}: not a pack file (expected one of {})", path.display(), PACK_FILES.join(", "));
        };
        if seen.contains(&name) {
            bail!("{}: a second {name} part", path.display());
        }
        seen.push(name);
        let ctx = || path.display().to_string();
        match name {
            UNICHARSET => pp.unicharset = Some(parse_unicharset(&read_text(path)?).with_context(ctx)?),
            NORMPROTO => pp.prototypes = Some(parse_normproto(&read_text(path)?).with_context(ctx)?),
            INTTEMP => classes = Some(parse_inttemp(&read_text(path)?).with_context(ctx)?),
            PFFMTABLE => counts = Some(parse_pffmtable(&read_text(path)?).with_context(ctx)?),
            FREQ_DAWG | WORD_DAWG => {
                let bytes = read_bytes(path)?;
                let dawg = if bytes.is_empty() { Default::default() } else { deserialize_dawg(&bytes).with_context(ctx)? };
                if name == FREQ_DAWG {
                    pp.freq_dawg = Some(dawg);
                } else {
                    pp.word_dawg = Some(dawg);
                }
            }
            USER_WORDS => pp.user_words = Some(WordList::parse(&read_text(path)?)),
            DANG_AMBIGS => pp.ambigs = Some(parse_ambigs(&read_text(path)?).with_context(ctx)?),
            _ => unreachable!("PACK_FILES is exhaustive"),
        }
    }
    pp.micro = match (classes, counts) {
        (Some(classes), Some(expected_count)) => {
            Some(handtess_core::training::MicroProtoModel { classes, expected_count })
        }
        (None, None) => None,
        (Some(_), None) => bail!("{PFFMTABLE} is required alongside {INTTEMP}"),
        (None, Some(_)) => bail!("{INTTEMP} is required alongside {PFFMTABLE}"),
    };
    let pack = assemble_pack(tessdata, lang, pp)?;
    for issue in validate_pack(&pack) {
        eprintln!("{issue}");
    }
    Ok(())
}

/// Writes `<out>.txt` (and `<out>.json` when asked) and returns the result.
pub fn recognize(
    image: &Path,
    out: &Path,
    lang: &str,
    tessdata: &Path,
    cfg: &RecognizerConfig,
    json: bool,
) -> Result<RecognitionResult> {
    let pack = load_pack(tessdata, lang)?;
    let page = load_page(image)?;
    let result = recognize_page(&pack, &page, cfg).with_context(|| format!("pack {lang} in {}", tessdata.display()))?;
    for w in flag_ambiguities(&result, &pack.ambigs) {
        eprintln!("note: {}: possible confusion at character {}: {:?} may be {:?}", image.display(), w.offset, w.wrong, w.right);
    }
    write(&append_ext(out, "txt"), result.text().as_bytes())?;
    if json {
        write(&append_ext(out, "json"), serde_json::to_string_pretty(&result)?.as_bytes())?;
    }
    Ok(result)
}

fn read_prediction(path: &Path) -> Result<Prediction> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let r: RecognitionResult = serde_json::from_str(&text).with_context(|| path.display().to_string())?;
        Ok(Prediction::from_result(&r))
    } else {
        Ok(Prediction::Text(text))
    }
}

/// Sums the reports of each ground-truth/prediction pair.
pub fn evaluate(gt: &[PathBuf], pred: &[PathBuf], words: &[PathBuf], dataset: Dataset) -> Result<EvalReport> {
    if gt.len() != pred.len() {
        bail!("{} ground-truth files but {} predictions", gt.len(), pred.len());
    }
    if !words.is_empty() && words.len() != gt.len() {
        bail!("{} word sidecars for {} ground-truth files", words.len(), gt.len());
    }
    let mut total = EvalReport::default();
    for (i, (g, p)) in gt.iter().zip(pred).enumerate() {
        let bf = read_boxfile(g)?;
        let mut truth = GroundTruth::from_boxes(&bf);
        if let Some(w) = words.get(i) {
            let starts = parse_word_sidecar(&read_text(w)?, bf.entries.len()).with_context(|| w.display().to_string())?;
            truth = truth.with_words(starts);
        }
        total.absorb(&compute_metrics(&align(&truth, &read_prediction(p)?), dataset));
    }
    Ok(total)
}

/// Writes `<id>.png` and `<id>.box` for every page of `users` writers.
pub fn synth(out_dir: &Path, users: usize, cfg: &CorpusConfig) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    for u in 0..users {
        let corpus = user_corpus(u, cfg);
        for p in corpus.train.iter().chain(&corpus.test) {
            let id = &p.truth.page_id;
            save_page_png(&p.page, &out_dir.join(format!("{id}.png")))?;
            write(&out_dir.join(format!("{id}.box")), &serialize_boxfile(&p.truth))?;
        }
    }
    Ok(())
}

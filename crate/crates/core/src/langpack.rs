//! The eight-file language pack, stored as `<dir>/<lang>.<name>`.
//!
//! One pack per writer: each user's model is just another language code.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fsutil::write_atomic;
use crate::lexicon::{deserialize_dawg, parse_ambigs, serialize_dawg, AmbigTable, Dawg, WordList};
use crate::training::{
    parse_inttemp, parse_normproto, parse_pffmtable, parse_unicharset, write_inttemp, write_normproto, write_pffmtable,
    write_unicharset, MicroProtoModel, PrototypeModel, Unicharset,
};

pub const FREQ_DAWG: &str = "freq-dawg";
pub const WORD_DAWG: &str = "word-dawg";
pub const USER_WORDS: &str = "user-words";
pub const INTTEMP: &str = "inttemp";
pub const NORMPROTO: &str = "normproto";
pub const PFFMTABLE: &str = "pffmtable";
pub const UNICHARSET: &str = "unicharset";
pub const DANG_AMBIGS: &str = "DangAmbigs";

/// File suffixes of a pack, in the canonical tessdata order.
pub const PACK_FILES: [&str; 8] = [FREQ_DAWG, WORD_DAWG, USER_WORDS, INTTEMP, NORMPROTO, PFFMTABLE, UNICHARSET, DANG_AMBIGS];

/// The four linguistic files that may be left blank.
pub const DICTIONARY_FILES: [&str; 4] = [FREQ_DAWG, WORD_DAWG, USER_WORDS, DANG_AMBIGS];

#[derive(Debug, thiserror::Error)]
pub enum PackError {
    #[error("language code {0:?} must be three lowercase letters")]
    BadLang(String),
    #[error("missing mandatory part: {0}")]
    MissingPart(&'static str),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangCode(String);

impl LangCode {
    pub fn new(code: &str) -> Result<Self, PackError> {
        if code.len() == 3 && code.bytes().all(|b| b.is_ascii_lowercase()) {
            Ok(LangCode(code.to_string()))
        } else {
            Err(PackError::BadLang(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LangCode {
    type Error = PackError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        LangCode::new(&s)
    }
}

impl From<LangCode> for String {
    fn from(l: LangCode) -> String {
        l.0
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn pack_file(dir: &Path, lang: &LangCode, name: &str) -> PathBuf {
    dir.join(format!("{lang}.{name}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguagePack {
    pub lang: LangCode,
    pub unicharset: Unicharset,
    pub prototypes: PrototypeModel,
    pub micro: MicroProtoModel,
    pub freq_dawg: Dawg,
    pub word_dawg: Dawg,
    pub user_words: WordList,
    pub ambigs: AmbigTable,
}

impl LanguagePack {
    /// True when no dictionary or ambiguity data is present.
    pub fn dictionaries_blank(&self) -> bool {
        self.freq_dawg.is_empty() && self.word_dawg.is_empty() && self.user_words.is_empty() && self.ambigs.is_empty()
    }

    /// True when `word` is in any of the three dictionaries.
    pub fn in_dictionary(&self, word: &str) -> bool {
        self.word_dawg.contains(word) || self.freq_dawg.contains(word) || self.user_words.contains(word)
    }
}

/// Inputs to [`assemble_pack`]. The unicharset and both models are required.
#[derive(Debug, Clone, Default)]
pub struct PackParts {
    pub unicharset: Option<Unicharset>,
    pub prototypes: Option<PrototypeModel>,
    pub micro: Option<MicroProtoModel>,
    pub freq_dawg: Option<Dawg>,
    pub word_dawg: Option<Dawg>,
    pub user_words: Option<WordList>,
    pub ambigs: Option<AmbigTable>,
}

/// Cross-file consistency: every model class is in the unicharset, and the
/// template and expected-count tables cover the same classes.
fn check_consistency(pack: &LanguagePack, dir: &Path) -> Result<(), PackError> {
    let path = |name: &str| pack_file(dir, &pack.lang, name);
    if pack.unicharset.is_empty() {
        return Err(PackError::Invalid { path: path(UNICHARSET), message: "unicharset is empty".into() });
    }
    let checks: [(&str, Vec<char>); 3] = [
        (NORMPROTO, pack.prototypes.classes.keys().copied().collect()),
        (INTTEMP, pack.micro.classes.keys().copied().collect()),
        (PFFMTABLE, pack.micro.expected_count.keys().copied().collect()),
    ];
    for (name, classes) in checks {
        if let Some(g) = classes.into_iter().find(|&g| !pack.unicharset.contains(g)) {
            return Err(PackError::Invalid {
                path: path(name),
                message: format!("class {g:?} is not in the unicharset"),
            });
        }
    }
    if let Some(g) = pack.micro.classes.keys().find(|g| !pack.micro.expected_count.contains_key(g)) {
        return Err(PackError::Invalid { path: path(PFFMTABLE), message: format!("no expected count for class {g:?}") });
    }
    if let Some(g) = pack.micro.expected_count.keys().find(|g| !pack.micro.classes.contains_key(g)) {
        return Err(PackError::Invalid { path: path(INTTEMP), message: format!("no templates for class {g:?}") });
    }
    Ok(())
}

/// Writes the eight pack files into `dir` and returns the in-memory pack.
/// Absent dictionaries are written blank: empty-automaton dawgs and
/// zero-length word and ambiguity files.
pub fn assemble_pack(dir: &Path, lang: &str, parts: PackParts) -> Result<LanguagePack, PackError> {
    let lang = LangCode::new(lang)?;
    let pack = LanguagePack {
        lang,
        unicharset: parts.unicharset.ok_or(PackError::MissingPart(UNICHARSET))?,
        prototypes: parts.prototypes.ok_or(PackError::MissingPart(NORMPROTO))?,
        micro: parts.micro.ok_or(PackError::MissingPart(INTTEMP))?,
        freq_dawg: parts.freq_dawg.unwrap_or_default(),
        word_dawg: parts.word_dawg.unwrap_or_default(),
        user_words: parts.user_words.unwrap_or_default(),
        ambigs: parts.ambigs.unwrap_or_default(),
    };
    check_consistency(&pack, dir)?;
    store_pack(dir, &pack)?;
    Ok(pack)
}

/// Writes an already-built pack.
pub fn store_pack(dir: &Path, pack: &LanguagePack) -> Result<(), PackError> {
    std::fs::create_dir_all(dir).map_err(|source| PackError::Io { path: dir.to_path_buf(), source })?;
    let contents: [(&str, Vec<u8>); 8] = [
        (FREQ_DAWG, serialize_dawg(&pack.freq_dawg)),
        (WORD_DAWG, serialize_dawg(&pack.word_dawg)),
        (USER_WORDS, pack.user_words.serialize().into_bytes()),
        (INTTEMP, write_inttemp(&pack.micro).into_bytes()),
        (NORMPROTO, write_normproto(&pack.prototypes).into_bytes()),
        (PFFMTABLE, write_pffmtable(&pack.micro).into_bytes()),
        (UNICHARSET, write_unicharset(&pack.unicharset).into_bytes()),
        (DANG_AMBIGS, pack.ambigs.serialize().into_bytes()),
    ];
    for (name, bytes) in contents {
        let path = pack_file(dir, &pack.lang, name);
        write_atomic(&path, &bytes).map_err(|source| PackError::Io { path, source })?;
    }
    Ok(())
}

fn read(path: PathBuf) -> Result<(PathBuf, Vec<u8>), PackError> {
    match std::fs::read(&path) {
        Ok(bytes) => Ok((path, bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(PackError::MissingFile(path)),
        Err(source) => Err(PackError::Io { path, source }),
    }
}

fn read_text(path: PathBuf) -> Result<(PathBuf, String), PackError> {
    let (path, bytes) = read(path)?;
    match String::from_utf8(bytes) {
        Ok(s) => Ok((path, s)),
        Err(_) => Err(PackError::Invalid { path, message: "not valid UTF-8".into() }),
    }
}

fn invalid(path: &Path, e: impl fmt::Display) -> PackError {
    PackError::Invalid { path: path.to_path_buf(), message: e.to_string() }
}

fn load_dawg(path: PathBuf) -> Result<Dawg, PackError> {
    let (path, bytes) = read(path)?;
    if bytes.is_empty() {
        return Ok(Dawg::empty());
    }
    deserialize_dawg(&bytes).map_err(|e| invalid(&path, e))
}

/// Loads and cross-validates the pack `lang` from `dir`. The four
/// linguistic files may be zero-length.
pub fn load_pack(dir: &Path, lang: &str) -> Result<LanguagePack, PackError> {
    let lang = LangCode::new(lang)?;
    let file = |name: &str| pack_file(dir, &lang, name);

    let (p, text) = read_text(file(UNICHARSET))?;
    let unicharset = parse_unicharset(&text).map_err(|e| invalid(&p, e))?;
    let (p, text) = read_text(file(NORMPROTO))?;
    let prototypes = parse_normproto(&text).map_err(|e| invalid(&p, e))?;
    let (p, text) = read_text(file(INTTEMP))?;
    let classes = parse_inttemp(&text).map_err(|e| invalid(&p, e))?;
    let (p, text) = read_text(file(PFFMTABLE))?;
    let expected_count = parse_pffmtable(&text).map_err(|e| invalid(&p, e))?;
    let freq_dawg = load_dawg(file(FREQ_DAWG))?;
    let word_dawg = load_dawg(file(WORD_DAWG))?;
    let (_, text) = read_text(file(USER_WORDS))?;
    let user_words = WordList::parse(&text);
    let (p, text) = read_text(file(DANG_AMBIGS))?;
    let ambigs = parse_ambigs(&text).map_err(|e| invalid(&p, e))?;

    let pack = LanguagePack {
        lang,
        unicharset,
        prototypes,
        micro: MicroProtoModel { classes, expected_count },
        freq_dawg,
        word_dawg,
        user_words,
        ambigs,
    };
    check_consistency(&pack, dir)?;
    Ok(pack)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PackIssue {
    /// A linguistic file holds nothing. Expected when dictionaries are unused.
    EmptyDictionary { file: String },
    /// A class trained from fewer than two samples.
    UndertrainedClass { glyph: char, samples: u64 },
    /// A unicharset glyph that one of the models has no class for.
    UnmodeledGlyph { glyph: char },
}

impl PackIssue {
    pub fn is_notice(&self) -> bool {
        matches!(self, PackIssue::EmptyDictionary { .. })
    }
}

impl fmt::Display for PackIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackIssue::EmptyDictionary { file } => write!(f, "notice: {file} is empty"),
            PackIssue::UndertrainedClass { glyph, samples } => {
                write!(f, "warning: class {glyph:?} was trained from {samples} sample(s)")
            }
            PackIssue::UnmodeledGlyph { glyph } => write!(f, "warning: unicharset glyph {glyph:?} has no prototypes"),
        }
    }
}

pub fn validate_pack(pack: &LanguagePack) -> Vec<PackIssue> {
    let mut issues = Vec::new();
    let blank = [
        (FREQ_DAWG, pack.freq_dawg.is_empty()),
        (WORD_DAWG, pack.word_dawg.is_empty()),
        (USER_WORDS, pack.user_words.is_empty()),
        (DANG_AMBIGS, pack.ambigs.is_empty()),
    ];
    for (name, empty) in blank {
        if empty {
            issues.push(PackIssue::EmptyDictionary { file: format!("{}.{name}", pack.lang) });
        }
    }
    for e in &pack.unicharset.entries {
        let modeled = pack.prototypes.classes.contains_key(&e.glyph) && pack.micro.classes.contains_key(&e.glyph);
        if !modeled {
            issues.push(PackIssue::UnmodeledGlyph { glyph: e.glyph });
        } else if e.count < 2 {
            issues.push(PackIssue::UndertrainedClass { glyph: e.glyph, samples: e.count });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{build_dawg, AmbigRule};
    use crate::training::{MicroFeature, Prototype, UnicharEntry};

    fn parts(glyphs: &str) -> PackParts {
        let mut prototypes = PrototypeModel::default();
        let mut micro = MicroProtoModel::default();
        for g in glyphs.chars() {
            prototypes.classes.insert(g, vec![Prototype { mean: [0.5; 4], var: [0.01; 4], weight: 1.0 }]);
            micro.classes.insert(g, vec![MicroFeature { x: 0.5, y: 0.25, dir: 2, len: 0.125 }]);
            micro.expected_count.insert(g, 3);
        }
        PackParts {
            unicharset: Some(Unicharset { entries: glyphs.chars().map(|glyph| UnicharEntry { glyph, count: 5 }).collect() }),
            prototypes: Some(prototypes),
            micro: Some(micro),
            ..Default::default()
        }
    }

    #[test]
    fn writes_exactly_eight_named_files() {
        let dir = tempfile::tempdir().unwrap();
        assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        let mut names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        let mut expected: Vec<String> = PACK_FILES.iter().map(|n| format!("usa.{n}")).collect();
        expected.sort();
        assert_eq!(names, expected);
    }

    #[test]
    fn blank_dictionaries_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        let len = |n: &str| std::fs::metadata(dir.path().join(format!("usa.{n}"))).unwrap().len();
        assert_eq!(len(FREQ_DAWG), 11);
        assert_eq!(len(WORD_DAWG), 11);
        assert_eq!(len(USER_WORDS), 0);
        assert_eq!(len(DANG_AMBIGS), 0);
    }

    #[test]
    fn zero_length_dawgs_load_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        std::fs::write(dir.path().join("usa.freq-dawg"), b"").unwrap();
        let pack = load_pack(dir.path(), "usa").unwrap();
        assert!(pack.freq_dawg.is_empty());
    }

    #[test]
    fn rejects_bad_codes_and_missing_parts() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(assemble_pack(dir.path(), "US1", parts("a")), Err(PackError::BadLang(_))));
        assert!(matches!(assemble_pack(dir.path(), "us", parts("a")), Err(PackError::BadLang(_))));
        let mut p = parts("a");
        p.prototypes = None;
        assert!(matches!(assemble_pack(dir.path(), "abc", p), Err(PackError::MissingPart(NORMPROTO))));
    }

    #[test]
    fn missing_normproto_is_named() {
        let dir = tempfile::tempdir().unwrap();
        assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        std::fs::remove_file(dir.path().join("usa.normproto")).unwrap();
        let err = load_pack(dir.path(), "usa").unwrap_err();
        assert!(err.to_string().contains("usa.normproto"), "{err}");
    }

    #[test]
    fn inttemp_class_outside_unicharset() {
        let dir = tempfile::tempdir().unwrap();
        assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        let path = dir.path().join("usa.inttemp");
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("class q 1\nmfp 0.500000 0.500000 0 0.250000\n");
        std::fs::write(&path, text).unwrap();
        let err = load_pack(dir.path(), "usa").unwrap_err();
        assert!(matches!(&err, PackError::Invalid { path, .. } if path.ends_with("usa.inttemp")), "{err}");
    }

    #[test]
    fn validation_notices() {
        let dir = tempfile::tempdir().unwrap();
        let pack = assemble_pack(dir.path(), "usa", parts("ab")).unwrap();
        let issues = validate_pack(&pack);
        assert_eq!(issues.len(), 4);
        assert!(issues.iter().all(PackIssue::is_notice));

        let mut full = parts("ab");
        full.freq_dawg = Some(build_dawg(&WordList::parse("ab\n")).unwrap());
        full.word_dawg = Some(build_dawg(&WordList::parse("ba\n")).unwrap());
        full.user_words = Some(WordList::parse("aa\n"));
        full.ambigs = Some(AmbigTable { rules: vec![AmbigRule { wrong: "b".into(), right: "a".into() }] });
        let pack = assemble_pack(dir.path(), "usb", full.clone()).unwrap();
        assert!(validate_pack(&pack).is_empty());
        assert_eq!(load_pack(dir.path(), "usb").unwrap(), pack);

        let mut extra = full;
        extra.unicharset.as_mut().unwrap().entries.push(UnicharEntry { glyph: 'z', count: 3 });
        let pack = assemble_pack(dir.path(), "usc", extra).unwrap();
        assert_eq!(validate_pack(&pack), vec![PackIssue::UnmodeledGlyph { glyph: 'z' }]);
    }
}

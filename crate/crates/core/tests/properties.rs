//! Randomized checks of the module invariants against independent oracles.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use handtess_core::boxfile::{make_boxes, parse_boxfile, serialize_boxfile, BoxEntry, BoxFile};
use handtess_core::geometry::BBox;
use handtess_core::imaging::{binarize, extract_components, segment_page, SegConfig};
use handtess_core::langpack::{assemble_pack, load_pack, PackParts, PACK_FILES};
use handtess_core::lexicon::{build_dawg, deserialize_dawg, serialize_dawg, AmbigRule, AmbigTable, Dawg, WordList};
use handtess_core::recognizer::{recognize_page, RecognizerConfig};
use handtess_core::synth::{isolated_page, random_lines, render_glyph, text_page, writer_styles, Jitter};
use handtess_core::training::{
    cn_features, cn_training, emit_tr, extract_unicharset, mf_training, micro_features, MicroFeature, MicroProtoModel,
    Prototype, PrototypeModel, TrainingConfig, Unicharset, UnicharEntry,
};
use handtess_core::LanguagePack;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

fn arb_entry() -> impl Strategy<Value = BoxEntry> {
    (any::<char>().prop_filter("visible", |c| !c.is_whitespace() && !c.is_control()), 0i32..5000, 0i32..5000, 1i32..400, 1i32..400)
        .prop_map(|(glyph, l, b, w, h)| BoxEntry { glyph, bbox: BBox::new(l, b, l + w, b + h).unwrap() })
}

/// Distinct right languages of the trie over `words`: the state count of the
/// minimal acyclic automaton (root included even when the language is empty).
fn minimal_state_count(words: &[String]) -> usize {
    let set: BTreeSet<&str> = words.iter().map(String::as_str).collect();
    let mut prefixes: BTreeSet<&str> = BTreeSet::new();
    for w in &set {
        for i in 0..=w.len() {
            prefixes.insert(&w[..i]);
        }
    }
    let right: BTreeSet<Vec<&str>> = prefixes
        .iter()
        .map(|p| set.iter().filter_map(|w| w.strip_prefix(p)).collect::<Vec<_>>())
        .collect();
    right.len().max(1)
}

fn is_acyclic(d: &Dawg) -> bool {
    fn visit(d: &Dawg, n: usize, state: &mut [u8]) -> bool {
        match state[n] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        state[n] = 1;
        let ok = d.nodes()[n].edges.iter().all(|&(_, t)| visit(d, t as usize, state));
        state[n] = 2;
        ok
    }
    let mut state = vec![0u8; d.node_count()];
    (0..d.node_count()).all(|n| visit(d, n, &mut state))
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn box_codec_round_trips(entries in proptest::collection::vec(arb_entry(), 0..40)) {
        let bf = BoxFile { page_id: "p".into(), entries };
        let bytes = serialize_boxfile(&bf);
        let back = parse_boxfile("p", &bytes).unwrap();
        prop_assert_eq!(&back, &bf);
        prop_assert_eq!(serialize_boxfile(&back), bytes);
    }

    #[test]
    fn non_ascii_digits_are_refused(digit in prop::sample::select(vec!['\u{0663}', '\u{FF15}', '\u{096A}'])) {
        let line = format!("a 1 2 {digit} 9\n");
        prop_assert_eq!(parse_boxfile("p", line.as_bytes()).unwrap_err().line, 1);
    }

    #[test]
    fn dawg_language_matches_set(words in proptest::collection::vec("[a-e]{1,6}", 0..60), probes in proptest::collection::vec("[a-f]{0,7}", 0..100)) {
        let d = build_dawg(&WordList::new(words.clone())).unwrap();
        let set: BTreeSet<&str> = words.iter().map(String::as_str).collect();
        for p in words.iter().chain(&probes) {
            prop_assert_eq!(d.contains(p), set.contains(p.as_str()), "{}", p);
        }
        prop_assert_eq!(d.node_count(), minimal_state_count(&words));
        let back = deserialize_dawg(&serialize_dawg(&d)).unwrap();
        prop_assert_eq!(back.words(), set.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn mutated_dawgs_decode_acyclic_or_fail(words in proptest::collection::vec("[a-c]{1,4}", 1..12), at in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let mut bytes = serialize_dawg(&build_dawg(&WordList::new(words)).unwrap());
        let i = at.index(bytes.len());
        bytes[i] = byte;
        if let Ok(d) = deserialize_dawg(&bytes) {
            prop_assert!(is_acyclic(&d));
        }
    }

    #[test]
    fn unicharset_counts_are_the_label_multiset(files in proptest::collection::vec(proptest::collection::vec(arb_entry(), 0..15), 0..4)) {
        let bfs: Vec<BoxFile> = files.into_iter().map(|entries| BoxFile { page_id: "p".into(), entries }).collect();
        let u = extract_unicharset(&bfs);
        let mut oracle: HashMap<char, u64> = HashMap::new();
        for e in bfs.iter().flat_map(|b| &b.entries) {
            *oracle.entry(e.glyph).or_default() += 1;
        }
        prop_assert_eq!(u.entries.len(), oracle.len());
        for e in &u.entries {
            prop_assert_eq!(Some(&e.count), oracle.get(&e.glyph));
        }
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn segmentation_invariants(seed in any::<u64>(), style in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lines = random_lines(&mut rng, 3, 1..=4, 1..=6);
        let p = text_page("t", &writer_styles()[style], &lines, &Jitter::default(), seed);
        let bin = binarize(&p.page);
        let cfg = SegConfig::default();
        let seg = segment_page(&bin, &cfg);
        prop_assert_eq!(&seg, &segment_page(&bin, &cfg));
        // Reading order: bands descend down the page.
        for pair in seg.lines.windows(2) {
            prop_assert!(pair[0].band.1 >= pair[1].band.1);
        }
        // Glyphs of a word hold disjoint ink.
        let height = p.page.height() as i64;
        for w in seg.lines.iter().flat_map(|l| &l.words) {
            let mut owner: HashMap<(i64, i64), usize> = HashMap::new();
            for (gi, g) in w.glyphs.iter().enumerate() {
                let top = g.bbox.raster_top_row(p.page.height());
                for r in 0..g.mask.height() {
                    for c in 0..g.mask.width() {
                        if g.mask.get(c, r) {
                            let key = (g.bbox.left as i64 + c as i64, top + r as i64);
                            prop_assert!(key.1 < height);
                            prop_assert!(owner.insert(key, gi).is_none_or(|o| o == gi));
                        }
                    }
                }
            }
        }
        prop_assert_eq!(make_boxes("t", &seg, None).entries.len(), seg.glyph_count());
    }

    #[test]
    fn components_are_connected_ink(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lines = random_lines(&mut rng, 2, 1..=3, 1..=5);
        let p = text_page("t", &writer_styles()[(seed % 3) as usize], &lines, &Jitter::default(), seed);
        let bin = binarize(&p.page);
        for comp in extract_components(&bin, 1) {
            let set: BTreeSet<(u32, u32)> = comp.pixels.iter().copied().collect();
            prop_assert!(set.iter().all(|&(c, r)| bin.get(c, r)));
            // Flood fill inside the component reaches every member.
            let mut seen = BTreeSet::from([comp.pixels[0]]);
            let mut stack = vec![comp.pixels[0]];
            while let Some((c, r)) = stack.pop() {
                for dc in -1i64..=1 {
                    for dr in -1i64..=1 {
                        let n = ((c as i64 + dc) as u32, (r as i64 + dr) as u32);
                        if set.contains(&n) && seen.insert(n) {
                            stack.push(n);
                        }
                    }
                }
            }
            prop_assert_eq!(seen.len(), set.len());
        }
    }

    #[test]
    fn integer_upscaling_keeps_features(seed in any::<u64>(), ch in prop::sample::select(('a'..='z').collect::<Vec<_>>()), k in 2u32..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let style = &writer_styles()[(seed % 3) as usize];
        let g = render_glyph(style, ch, &Jitter::default(), &mut rng).unwrap();
        let big = g.mask.upscale(k);
        let (a, b) = (cn_features(&g.mask), cn_features(&big));
        for d in 0..4 {
            prop_assert!((a[d] - b[d]).abs() < 0.02, "cn[{}]: {} vs {}", d, a[d], b[d]);
        }
        let q = |v: Vec<MicroFeature>| v.into_iter().map(|m| m.quantized()).collect::<Vec<_>>();
        prop_assert_eq!(q(micro_features(&g.mask)), q(micro_features(&big)));
    }

    #[test]
    fn training_is_deterministic_and_covers_every_label(seed in any::<u64>(), n in 1usize..4) {
        let glyphs: Vec<char> = ('a'..='f').flat_map(|c| std::iter::repeat_n(c, n)).collect();
        let p = isolated_page("p", &writer_styles()[(seed % 3) as usize], &glyphs, 6, &Jitter::default(), seed);
        let cfg = TrainingConfig::default();
        let tr = emit_tr(&p.page, &p.truth, &cfg).features;
        let trs = vec![tr];
        let cn = cn_training(&trs, &cfg).unwrap();
        let mf = mf_training(&trs, &cfg).unwrap();
        prop_assert_eq!(&cn, &cn_training(&trs, &cfg).unwrap());
        prop_assert_eq!(&mf, &mf_training(&trs, &cfg).unwrap());
        let u = extract_unicharset(&[p.truth.clone()]);
        for c in 'a'..='f' {
            prop_assert!(u.contains(c) && cn.classes.contains_key(&c) && mf.classes.contains_key(&c));
        }
    }
}

fn arb_pack() -> impl Strategy<Value = LanguagePack> {
    let glyphs = proptest::collection::btree_set(prop::sample::select(('a'..='z').collect::<Vec<_>>()), 1..6);
    (glyphs, any::<u64>(), proptest::collection::vec("[a-z]{1,5}", 0..20), proptest::collection::vec("[a-z]{1,5}", 0..5), proptest::collection::vec(("[a-z]{1,3}", "[a-z]{1,3}"), 0..3))
        .prop_map(|(glyphs, seed, words, user, ambigs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::Rng;
            let mut unit = || rng.random_range(0..=64) as f64 / 64.0;
            let mut prototypes = BTreeMap::new();
            let mut micro = MicroProtoModel::default();
            let mut unichars = Vec::new();
            for (i, g) in glyphs.iter().enumerate() {
                unichars.push(UnicharEntry { glyph: *g, count: 2 + i as u64 });
                let p = Prototype { mean: [unit(), unit(), unit(), unit()], var: [0.5, 0.25, 0.125, 1.0 / 64.0], weight: 1.0 };
                prototypes.insert(*g, vec![p]);
                let mf: Vec<MicroFeature> = (0..3).map(|k| MicroFeature { x: unit(), y: unit(), dir: (k * 5 % 8) as u8, len: unit() }).collect();
                micro.classes.insert(*g, mf);
                micro.expected_count.insert(*g, 3 + i as u32);
            }
            LanguagePack {
                lang: handtess_core::LangCode::new("abc").unwrap(),
                unicharset: Unicharset { entries: unichars },
                prototypes: PrototypeModel { classes: prototypes },
                micro,
                freq_dawg: build_dawg(&WordList::new(words.iter().take(5).cloned().collect())).unwrap(),
                word_dawg: build_dawg(&WordList::new(words)).unwrap(),
                user_words: WordList::new(user),
                ambigs: AmbigTable {
                    rules: ambigs.into_iter().collect::<BTreeSet<_>>().into_iter().map(|(wrong, right)| AmbigRule { wrong, right }).collect(),
                },
            }
        })
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn pack_round_trip(pack in arb_pack()) {
        let dir = tempfile::tempdir().unwrap();
        let parts = PackParts {
            unicharset: Some(pack.unicharset.clone()),
            prototypes: Some(pack.prototypes.clone()),
            micro: Some(pack.micro.clone()),
            freq_dawg: Some(pack.freq_dawg.clone()),
            word_dawg: Some(pack.word_dawg.clone()),
            user_words: Some(pack.user_words.clone()),
            ambigs: Some(pack.ambigs.clone()),
        };
        let built = assemble_pack(dir.path(), "abc", parts).unwrap();
        prop_assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), PACK_FILES.len());
        let loaded = load_pack(dir.path(), "abc").unwrap();
        prop_assert_eq!(&loaded.unicharset, &pack.unicharset);
        prop_assert_eq!(&loaded.prototypes, &pack.prototypes);
        prop_assert_eq!(&loaded.micro, &pack.micro);
        prop_assert_eq!(loaded.word_dawg.words(), pack.word_dawg.words());
        prop_assert_eq!(loaded.freq_dawg.words(), pack.freq_dawg.words());
        prop_assert_eq!(&loaded.user_words, &pack.user_words);
        prop_assert_eq!(&loaded.ambigs, &pack.ambigs);
        prop_assert_eq!(&built, &loaded);
    }
}

#[test]
fn recognition_is_deterministic() {
    let glyphs: Vec<char> = ('a'..='h').flat_map(|c| std::iter::repeat_n(c, 3)).collect();
    let style = &writer_styles()[0];
    let train = isolated_page("tr", style, &glyphs, 8, &Jitter::default(), 5);
    let cfg = TrainingConfig::default();
    let trs = vec![emit_tr(&train.page, &train.truth, &cfg).features];
    let pack = LanguagePack {
        lang: handtess_core::LangCode::new("abc").unwrap(),
        unicharset: extract_unicharset(&[train.truth.clone()]),
        prototypes: cn_training(&trs, &cfg).unwrap(),
        micro: mf_training(&trs, &cfg).unwrap(),
        freq_dawg: Dawg::empty(),
        word_dawg: Dawg::empty(),
        user_words: WordList::default(),
        ambigs: AmbigTable::default(),
    };
    let test = isolated_page("te", style, &glyphs, 8, &Jitter::default(), 6);
    let rcfg = RecognizerConfig::default();
    let a = recognize_page(&pack, &test.page, &rcfg).unwrap();
    assert_eq!(a, recognize_page(&pack, &test.page, &rcfg).unwrap());
    assert!(a.chars().count() > 0);
}

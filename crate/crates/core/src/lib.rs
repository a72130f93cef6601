//! Per-user handwriting OCR: page segmentation, box-file labeling, prototype
//! training, DAWG lexicons, language packs, recognition and scoring.

pub mod boxfile;
pub mod evaluation;
pub mod fsutil;
pub mod geometry;
pub mod imaging;
pub mod langpack;
pub mod lexicon;
pub mod recognizer;
pub mod synth;
pub mod training;

pub use boxfile::{BoxEntry, BoxFile};
pub use evaluation::{EvalReport, GroundTruth};
pub use geometry::BBox;
pub use imaging::{BinaryImage, Bitmap, GlyphSample, PageImage};
pub use langpack::{LangCode, LanguagePack};
pub use recognizer::{RecognitionResult, RecognizerConfig};

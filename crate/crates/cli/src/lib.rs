//! Command-line front end for the handwriting OCR toolkit and the HTTP
//! service behind the box labeler.
//!
//! Every subcommand reads its inputs, calls one operation of
//! `handtess_core`, and writes the result atomically.

pub mod commands;
pub mod labeler;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use handtess_core::evaluation::Dataset;

/// Arguments older training scripts pass that carry no meaning here.
pub const IGNORED_WORDS: [&str; 4] = ["junk", "nobatch", "batch.nochop", "box.train"];

#[derive(Debug, Parser)]
#[command(name = "handtess", version, about = "Train and run per-user handwriting recognizers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Isolated,
    FreeFlow,
}

impl From<DatasetArg> for Dataset {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Isolated => Dataset::Isolated,
            DatasetArg::FreeFlow => Dataset::FreeFlow,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a page and write candidate boxes to `<base>.box`.
    Makebox {
        image: PathBuf,
        base: PathBuf,
        /// Label boxes with this pack's best guesses instead of `*`.
        #[arg(short, long)]
        lang: Option<String>,
        #[arg(short = 'd', long, default_value = "tessdata")]
        tessdata: PathBuf,
    },
    /// Extract training features for every labeled box into `<box stem>.tr`.
    Train {
        image: PathBuf,
        /// Defaults to the image path with a `.box` extension.
        boxes: Option<PathBuf>,
    },
    /// Cluster micro-features into `inttemp`, `pffmtable` and `Microfeat`.
    Mftraining {
        #[arg(required = true)]
        tr: Vec<PathBuf>,
        #[arg(short = 'D', long, default_value = ".")]
        output_dir: PathBuf,
        /// Micro-prototypes per class.
        #[arg(long)]
        max_protos: Option<usize>,
    },
    /// Cluster normalization features into `normproto`.
    Cntraining {
        #[arg(required = true)]
        tr: Vec<PathBuf>,
        #[arg(short = 'D', long, default_value = ".")]
        output_dir: PathBuf,
        #[arg(long)]
        max_protos: Option<usize>,
    },
    /// Collect the character set of box files into `unicharset`.
    UnicharsetExtract {
        #[arg(required = true)]
        boxes: Vec<PathBuf>,
        #[arg(short = 'D', long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Compile a word list (one word per line) into a DAWG file.
    Wordlist2dawg { list: PathBuf, out: PathBuf },
    /// Install model parts as the language pack `<tessdata>/<lang>.*`.
    ///
    /// Parts are recognized by file name (`unicharset`, `normproto`,
    /// `inttemp`, `pffmtable`, `freq-dawg`, `word-dawg`, `user-words`,
    /// `DangAmbigs`, optionally with a prefix ending in `.`). Missing
    /// dictionaries are written blank.
    Pack {
        #[arg(short, long)]
        lang: String,
        #[arg(short = 'd', long, default_value = "tessdata")]
        tessdata: PathBuf,
        #[arg(required = true)]
        parts: Vec<PathBuf>,
    },
    /// Recognize a page and write its text to `<out>.txt`.
    Recognize {
        image: PathBuf,
        out: PathBuf,
        #[arg(short, long)]
        lang: String,
        #[arg(short = 'd', long, default_value = "tessdata")]
        tessdata: PathBuf,
        /// Let the dictionaries break near-ties between readings.
        #[arg(long)]
        use_dict: bool,
        /// Also write the full result, with boxes and ratings, to `<out>.json`.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        reject_threshold: Option<f64>,
        /// Word gap as a multiple of the line's median gap.
        #[arg(long)]
        word_gap: Option<f64>,
    },
    /// Score predictions against ground-truth boxes.
    ///
    /// `--gt` and `--pred` pair up in order. A prediction ending in `.json`
    /// is a full recognition result; anything else is plain text.
    Eval {
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        /// Word-boundary sidecars, one per ground-truth file.
        #[arg(long)]
        words: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "isolated")]
        dataset: DatasetArg,
        #[arg(long, default_value = "user")]
        user: String,
        /// Print one JSON record per dataset column instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Character histogram of box files.
    Freq {
        #[arg(required = true)]
        boxes: Vec<PathBuf>,
    },
    /// Serve the box labeling API for the image/box pairs under `root`.
    ServeLabeler {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory holding the labeler's static files.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Render synthetic writers' training and test pages with box files.
    Synth {
        #[arg(short = 'D', long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        users: usize,
        #[arg(long, default_value_t = 70)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 17)]
        test_per_class: usize,
        #[arg(long, default_value_t = 2010)]
        seed: u64,
    },
}

/// Drops legacy incantation words after `makebox` and `train`, returning
/// the remaining arguments and the words removed.
pub fn strip_ignored(argv: Vec<OsString>) -> (Vec<OsString>, Vec<String>) {
    let legacy = matches!(argv.get(1).and_then(|a| a.to_str()), Some("makebox" | "train"));
    if !legacy {
        return (argv, Vec::new());
    }
    let mut dropped = Vec::new();
    let kept = argv
        .into_iter()
        .enumerate()
        .filter(|(i, a)| match a.to_str() {
            Some(s) if *i >= 2 && IGNORED_WORDS.contains(&s) => {
                dropped.push(s.to_string());
                false
            }
            _ => true,
        })
        .map(|(_, a)| a)
        .collect();
    (kept, dropped)
}

/// Parses `argv` (program name first) and runs the command. Usage errors
/// exit with 2, failures with 1.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let (argv, dropped) = strip_ignored(argv.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    for w in dropped {
        eprintln!("note: ignoring legacy argument {w:?}");
    }
    match commands::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

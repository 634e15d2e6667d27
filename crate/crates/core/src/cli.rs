//! Command-line entry points. Exit codes: 0 success, 1 usage error,
//! 2 data or format error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser as ClapParser, Subcommand};

use crate::analysis::{compute_profile, corpus_attachment_scores, profile_csv, sample_balanced};
use crate::error::{Error, Result};
use crate::model::{sentence_context, Mode, Parser};
use crate::repr::{load_contextual_store, ContextualStore, LayerRange, PretrainedEmbeddings};
use crate::train::{evaluate, mean, train, TrainConfig, TrainData};
use crate::treebank::{read_conllu_file, write_conllu, DepTree, Sentence};

/// Comment key that assigns a sentence to a treebank for per-language profiles.
pub const TREEBANK_COMMENT: &str = "treebank";

#[derive(Debug, ClapParser)]
#[command(name = "twinparse", version, about = "Transition- and graph-based dependency parsing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a parser and write the selected model with its manifest.
    Train(TrainArgs),
    /// Parse a CoNLL-U file with a trained model.
    Parse(ParseArgs),
    /// Print LAS and UAS of predictions against gold trees.
    Eval(EvalArgs),
    /// Write an error-profile CSV for one or more systems.
    Profile(ProfileArgs),
    /// Draw an equal number of sentences from each development set.
    SampleDev(SampleArgs),
    /// Summarise a contextual-vector file.
    InspectVectors(InspectArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Repeat for a multi-seed run; each seed is saved under OUT/seed-N.
    #[arg(long = "seed", default_values_t = [1u64])]
    seeds: Vec<u64>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Contextual vectors of the training set.
    #[arg(long)]
    ctx_vectors: Option<PathBuf>,
    #[arg(long, requires = "ctx_vectors")]
    dev_ctx_vectors: Option<PathBuf>,
    #[arg(long, requires = "ctx_vectors")]
    test_ctx_vectors: Option<PathBuf>,
    /// Inclusive layer range `A-B` into the stored layers; default all.
    #[arg(long, requires = "ctx_vectors")]
    ctx_layers: Option<LayerRange>,
}

#[derive(Debug, Args)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    ctx_vectors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    gold: PathBuf,
    /// One file per system; the system name is the file stem.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    /// Add per-treebank profiles (`# treebank = X` comments, else the gold file stem).
    #[arg(long)]
    per_language: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    ctx_vectors: PathBuf,
    /// Treebank whose sentences the vectors should align with.
    #[arg(long)]
    treebank: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Run with `argv` (including the program name), writing normal output
/// to `out` and messages to standard error. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => run_train(a, out),
        Command::Parse(a) => run_parse(a),
        Command::Eval(a) => run_eval(a, out),
        Command::Profile(a) => run_profile(a),
        Command::SampleDev(a) => run_sample(a),
        Command::InspectVectors(a) => run_inspect(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn require_files<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult {
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Usage(format!("no such file: {}", p.display())));
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<Sentence>> {
    read_conllu_file(path, None)
}

fn load_ctx(path: Option<&PathBuf>) -> Result<Option<ContextualStore>> {
    path.map(load_contextual_store).transpose()
}

fn print(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> CliResult {
    out.write_fmt(text).map_err(|e| Failure::Data(e.into()))
}

fn run_train(a: TrainArgs, out: &mut dyn Write) -> CliResult {
    let files: Vec<&PathBuf> = [Some(&a.train), Some(&a.dev), a.test.as_ref(), a.embeddings.as_ref()]
        .into_iter()
        .chain([a.ctx_vectors.as_ref(), a.dev_ctx_vectors.as_ref(), a.test_ctx_vectors.as_ref()])
        .flatten()
        .collect();
    require_files(files)?;
    if a.ctx_vectors.is_some() && a.dev_ctx_vectors.is_none() {
        return Err(Failure::Usage("--ctx-vectors needs --dev-ctx-vectors".into()));
    }
    if a.ctx_vectors.is_some() && a.test.is_some() && a.test_ctx_vectors.is_none() {
        return Err(Failure::Usage("--test with contextual vectors needs --test-ctx-vectors".into()));
    }
    let train_set = read(&a.train)?;
    let dev_set = read(&a.dev)?;
    let test_set = a.test.as_deref().map(read).transpose()?;
    let pretrained = a.embeddings.as_ref().map(PretrainedEmbeddings::load).transpose()?;
    let train_ctx = load_ctx(a.ctx_vectors.as_ref())?;
    let dev_ctx = load_ctx(a.dev_ctx_vectors.as_ref())?;
    let test_ctx = load_ctx(a.test_ctx_vectors.as_ref())?;
    let data = TrainData {
        train: &train_set,
        dev: &dev_set,
        train_ctx: train_ctx.as_ref(),
        dev_ctx: dev_ctx.as_ref(),
        pretrained: pretrained.as_ref(),
    };
    let mut flags = vec![
        ("flag_train".to_owned(), a.train.display().to_string()),
        ("flag_dev".to_owned(), a.dev.display().to_string()),
    ];
    for (k, v) in [
        ("flag_test", &a.test),
        ("flag_embeddings", &a.embeddings),
        ("flag_ctx_vectors", &a.ctx_vectors),
        ("flag_dev_ctx_vectors", &a.dev_ctx_vectors),
        ("flag_test_ctx_vectors", &a.test_ctx_vectors),
    ] {
        if let Some(p) = v {
            flags.push((k.to_owned(), p.display().to_string()));
        }
    }
    if let Some(r) = a.ctx_layers {
        flags.push(("flag_ctx_layers".to_owned(), r.to_string()));
    }

    let multi = a.seeds.len() > 1;
    let mut scores = Vec::new();
    for &seed in &a.seeds {
        let config = TrainConfig {
            epochs: a.epochs,
            seed,
            ctx_layers: a.ctx_layers,
            ..TrainConfig::new(a.mode)
        };
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        let dir = if multi { a.out.join(format!("seed-{seed}")) } else { a.out.clone() };
        let run = train(&config, data, flags.clone(), Some(&dir))?;
        let m = &run.manifest;
        print(
            out,
            format_args!(
                "seed {seed}: selected epoch {} dev LAS {:.2}\n",
                m.selected_epoch,
                m.dev_las[m.selected_epoch - 1]
            ),
        )?;
        if let Some(test) = &test_set {
            let s = evaluate(&run.parser, test, test_ctx.as_ref())?;
            print(out, format_args!("seed {seed}: test LAS {:.2} UAS {:.2}\n", 100.0 * s.las, 100.0 * s.uas))?;
            scores.push((100.0 * s.las, 100.0 * s.uas));
        }
    }
    if multi && !scores.is_empty() {
        let las: Vec<f64> = scores.iter().map(|s| s.0).collect();
        let uas: Vec<f64> = scores.iter().map(|s| s.1).collect();
        print(
            out,
            format_args!(
                "mean test LAS {:.2} UAS {:.2}\n",
                mean(&las).unwrap_or(0.0),
                mean(&uas).unwrap_or(0.0)
            ),
        )?;
    }
    Ok(())
}

fn run_parse(a: ParseArgs) -> CliResult {
    require_files([&a.input])?;
    if let Some(p) = &a.ctx_vectors {
        require_files([p])?;
    }
    if !a.model.is_dir() {
        return Err(Failure::Usage(format!("no such model directory: {}", a.model.display())));
    }
    let parser = Parser::load(&a.model)?;
    let sentences = read(&a.input)?;
    let ctx = load_ctx(a.ctx_vectors.as_ref())?;
    if let Some(c) = &ctx {
        for (i, s) in sentences.iter().enumerate() {
            sentence_context(Some(c), i, s)?;
        }
    }
    let trees = parser.parse_all(&sentences, ctx.as_ref())?;
    let parsed: Vec<Sentence> = sentences
        .iter()
        .zip(&trees)
        .map(|(s, t)| s.with_analysis(t.heads(), t.labels()))
        .collect();
    fs::write(&a.output, write_conllu(&parsed)).map_err(Error::from)?;
    Ok(())
}

fn trees(sentences: &[Sentence]) -> Result<Vec<DepTree>> {
    sentences
        .iter()
        .map(|s| DepTree::new(s.heads(), s.labels()).map_err(Error::from))
        .collect()
}

fn run_eval(a: EvalArgs, out: &mut dyn Write) -> CliResult {
    require_files([&a.gold, &a.pred])?;
    let gold = read(&a.gold)?;
    let pred = read(&a.pred)?;
    let scores = corpus_attachment_scores(&trees(&gold)?, &trees(&pred)?)?;
    print(out, format_args!("LAS {:.2} UAS {:.2}\n", 100.0 * scores.las, 100.0 * scores.uas))
}

/// Treebank id from a `# treebank = X` comment, if any.
pub fn treebank_comment(sentence: &Sentence) -> Option<&str> {
    sentence.comments.iter().find_map(|c| {
        let (k, v) = c.split_once('=')?;
        (k.trim() == TREEBANK_COMMENT).then(|| v.trim())
    })
}

fn run_profile(a: ProfileArgs) -> CliResult {
    require_files(std::iter::once(&a.gold).chain(&a.pred))?;
    let mut gold = read(&a.gold)?;
    for s in &mut gold {
        if let Some(id) = treebank_comment(s).map(str::to_owned) {
            s.treebank_id = id;
        }
    }
    let mut systems = Vec::new();
    for p in &a.pred {
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        systems.push((name, read(p)?));
    }
    let profiles = compute_profile(&gold, &systems, a.per_language)?;
    fs::write(&a.out, profile_csv(&profiles)).map_err(Error::from)?;
    Ok(())
}

fn run_sample(a: SampleArgs) -> CliResult {
    require_files(&a.inputs)?;
    let mut sets = Vec::new();
    for p in &a.inputs {
        let mut set = read(p)?;
        for s in &mut set {
            if treebank_comment(s).is_none() {
                s.comments.push(format!(" {TREEBANK_COMMENT} = {}", s.treebank_id));
            }
        }
        sets.push(set);
    }
    let sample = sample_balanced(&sets, a.seed)?;
    fs::write(&a.out, write_conllu(&sample)).map_err(Error::from)?;
    Ok(())
}

fn run_inspect(a: InspectArgs, out: &mut dyn Write) -> CliResult {
    require_files(std::iter::once(&a.ctx_vectors).chain(&a.treebank))?;
    let store = load_contextual_store(&a.ctx_vectors)?;
    print(
        out,
        format_args!(
            "layers {}\ndim {}\nsentences {}\n",
            store.layers(),
            store.dim(),
            store.len()
        ),
    )?;
    match &a.treebank {
        None => print(out, format_args!("checksums unchecked (no --treebank)\n")),
        Some(path) => {
            let sentences = read(path)?;
            let (mut ok, mut missing, mut mismatched) = (0, 0, 0);
            for (i, s) in sentences.iter().enumerate() {
                match store.query(&i.to_string(), s.forms()) {
                    Ok(_) => ok += 1,
                    Err(Error::MissingKey(_)) => missing += 1,
                    Err(_) => mismatched += 1,
                }
            }
            print(
                out,
                format_args!("checksums ok {ok} missing {missing} mismatched {mismatched}\n"),
            )?;
            if missing + mismatched > 0 {
                return Err(Failure::Data(Error::Invalid(format!(
                    "{} of {} sentences lack aligned vectors",
                    missing + mismatched,
                    sentences.len()
                ))));
            }
            Ok(())
        }
    }
}

//! Training loops, model selection and multi-seed runs.
//!
//! A run writes the selected model (see [`crate::model`]) plus
//! `manifest.txt`, a `key=value` record of every setting, data checksum
//! and per-epoch dev score. Nothing in it depends on the clock, so two
//! identical runs produce identical directories.

mod losses;
mod step;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

pub use losses::{explore_choice, graph_loss, transition_loss, GraphLoss, TransitionLoss};
pub use step::{drop_words, sentence_step, StepOptions};

use crate::analysis::{corpus_attachment_scores, AttachmentScores};
use crate::error::{Error, Result};
use crate::model::{sentence_context, Architecture, ContextSpec, Mode, Parser};
use crate::neural::Adam;
use crate::repr::{fnv1a64, ContextualStore, LayerRange, PretrainedEmbeddings};
use crate::treebank::{write_conllu, DepTree, Sentence};
use crate::Rng64;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub seed: u64,
    pub p_agg: f64,
    /// First epoch (1-based) in which exploration is active.
    pub explore_from_epoch: usize,
    pub margin: f64,
    pub adam: Adam,
    pub word_dropout_alpha: f64,
    pub arch: Architecture,
    /// Layers of the contextual store to mix; the full range when `None`.
    pub ctx_layers: Option<LayerRange>,
}

impl TrainConfig {
    pub fn new(mode: Mode) -> Self {
        TrainConfig {
            mode,
            epochs: 30,
            seed: 1,
            p_agg: 0.1,
            explore_from_epoch: 2,
            margin: 1.0,
            adam: Adam::default(),
            word_dropout_alpha: 0.25,
            arch: Architecture::default(),
            ctx_layers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Invalid("epochs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_agg) {
            return Err(Error::Invalid(format!("p_agg {} outside [0, 1]", self.p_agg)));
        }
        if self.margin < 0.0 || self.word_dropout_alpha < 0.0 {
            return Err(Error::Invalid("margin and word dropout must be non-negative".into()));
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mode".to_owned(), self.mode.to_string()),
            ("epochs".to_owned(), self.epochs.to_string()),
            ("seed".to_owned(), self.seed.to_string()),
            ("p_agg".to_owned(), self.p_agg.to_string()),
            ("explore_from_epoch".to_owned(), self.explore_from_epoch.to_string()),
            ("margin".to_owned(), self.margin.to_string()),
            ("optimizer".to_owned(), "adam".to_owned()),
            ("lr".to_owned(), self.adam.lr.to_string()),
            ("beta1".to_owned(), self.adam.beta1.to_string()),
            ("beta2".to_owned(), self.adam.beta2.to_string()),
            ("eps".to_owned(), self.adam.eps.to_string()),
            ("word_dropout_alpha".to_owned(), self.word_dropout_alpha.to_string()),
            ("updates".to_owned(), "one per sentence".to_owned()),
        ];
        out.extend(self.arch.to_pairs());
        out
    }
}

/// Inputs of a run. Contextual stores are keyed by sentence index within
/// their own split.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrainData<'a> {
    pub train: &'a [Sentence],
    pub dev: &'a [Sentence],
    pub train_ctx: Option<&'a ContextualStore>,
    pub dev_ctx: Option<&'a ContextualStore>,
    pub pretrained: Option<&'a PretrainedEmbeddings>,
}

impl TrainData<'_> {
    /// `name=fnv1a64` pairs over the canonical serialisation of each input.
    pub fn checksums(&self) -> Vec<(String, String)> {
        let hex = |h: u64| format!("{h:016x}");
        let mut out = vec![
            ("train_checksum".to_owned(), hex(fnv1a64(write_conllu(self.train).as_bytes()))),
            ("dev_checksum".to_owned(), hex(fnv1a64(write_conllu(self.dev).as_bytes()))),
        ];
        if let Some(c) = self.train_ctx {
            out.push(("train_ctx_checksum".to_owned(), hex(fnv1a64(&c.to_bytes()))));
        }
        if let Some(c) = self.dev_ctx {
            out.push(("dev_ctx_checksum".to_owned(), hex(fnv1a64(&c.to_bytes()))));
        }
        if let Some(p) = self.pretrained {
            let mut bytes = p.forms.join("\u{1}").into_bytes();
            for x in p.vectors.iter() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            let h = fnv1a64(&bytes);
            out.push(("embeddings_checksum".to_owned(), hex(h)));
        }
        out
    }
}

/// Record of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config: Vec<(String, String)>,
    pub checksums: Vec<(String, String)>,
    /// Extra caller-supplied entries, e.g. command-line flags.
    pub extra: Vec<(String, String)>,
    pub seed: u64,
    /// Dev LAS (percent) after each epoch.
    pub dev_las: Vec<f64>,
    /// Training loss summed over each epoch.
    pub train_loss: Vec<f64>,
    /// 1-based epoch of the saved model.
    pub selected_epoch: usize,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# twinparse run manifest\n");
        for (k, v) in self.config.iter().chain(&self.checksums).chain(&self.extra) {
            let _ = writeln!(out, "{k}={v}");
        }
        for (i, (las, loss)) in self.dev_las.iter().zip(&self.train_loss).enumerate() {
            let _ = writeln!(out, "epoch_{}_dev_las={las:.4}", i + 1);
            let _ = writeln!(out, "epoch_{}_train_loss={loss:.6}", i + 1);
        }
        let _ = writeln!(out, "selected_epoch={}", self.selected_epoch);
        let _ = writeln!(out, "selected_dev_las={:.4}", self.dev_las[self.selected_epoch - 1]);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// 1-based index of the first maximum.
pub fn select_epoch(dev_las: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in dev_las.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// Outcome of [`train`]: the selected parser and its manifest.
pub struct TrainedRun {
    pub parser: Parser,
    pub manifest: RunManifest,
}

fn word_counts(sentences: &[Sentence]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for s in sentences {
        for f in s.forms() {
            *counts.entry(f.to_owned()).or_insert(0) += 1;
        }
    }
    counts
}

fn check_context(store: Option<&ContextualStore>, split: &str, sentences: &[Sentence]) -> Result<()> {
    if let Some(c) = store {
        for (i, s) in sentences.iter().enumerate() {
            sentence_context(Some(c), i, s).map_err(|e| Error::Invalid(format!("{split} contextual vectors: {e}")))?;
        }
    }
    Ok(())
}

/// Dev LAS in percent.
pub fn dev_las(parser: &Parser, dev: &[Sentence], ctx: Option<&ContextualStore>) -> Result<f64> {
    Ok(100.0 * evaluate(parser, dev, ctx)?.las)
}

/// Attachment scores of `parser` on `sentences`.
pub fn evaluate(parser: &Parser, sentences: &[Sentence], ctx: Option<&ContextualStore>) -> Result<AttachmentScores> {
    let pred = parser.parse_all(sentences, ctx)?;
    let gold = sentences
        .iter()
        .map(|s| DepTree::new(s.heads(), s.labels()).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    corpus_attachment_scores(&gold, &pred)
}

/// Train for `config.epochs` epochs with one Adam step per sentence, keep
/// the epoch with the best dev LAS (earliest on ties) and, given `out_dir`,
/// save it there with `manifest.txt`.
pub fn train(
    config: &TrainConfig,
    data: TrainData<'_>,
    extra: Vec<(String, String)>,
    out_dir: Option<&Path>,
) -> Result<TrainedRun> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if data.dev.is_empty() {
        return Err(Error::Empty("development set"));
    }
    let mut arch = config.arch.clone();
    match (data.train_ctx, data.dev_ctx) {
        (None, None) => {
            if config.ctx_layers.is_some() {
                return Err(Error::Invalid("a layer range needs contextual vectors".into()));
            }
            arch.context = None;
        }
        (Some(t), Some(d)) => {
            if (t.layers(), t.dim()) != (d.layers(), d.dim()) {
                return Err(Error::Invalid("train and dev contextual stores differ in shape".into()));
            }
            let range = config.ctx_layers.unwrap_or_else(|| LayerRange::full(t.layers()));
            range.check(t.layers())?;
            arch.context = Some(ContextSpec { range, dim: t.dim() });
        }
        _ => return Err(Error::Invalid("contextual vectors are needed for both train and dev".into())),
    }
    check_context(data.train_ctx, "train", data.train)?;
    check_context(data.dev_ctx, "dev", data.dev)?;

    let mut parser = Parser::new(config.mode, arch.clone(), data.train, data.pretrained, config.seed)?;
    let counts = word_counts(data.train);
    let mut rng = Rng64::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut best: Option<Parser> = None;
    let mut dev_scores = Vec::with_capacity(config.epochs);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let options = StepOptions {
            margin: config.margin,
            p_agg: if epoch >= config.explore_from_epoch { config.p_agg } else { 0.0 },
            word_dropout_alpha: config.word_dropout_alpha,
            dropout: arch.dropout > 0.0,
        };
        let mut epoch_loss = 0.0;
        for &i in &order {
            let sentence = &data.train[i];
            let ctx = sentence_context(data.train_ctx, i, sentence)?;
            let mut grads = parser.store.zero_grads();
            epoch_loss += sentence_step(&parser, sentence, ctx, &counts, &options, &mut rng, &mut grads)?;
            if !grads.is_finite() {
                return Err(Error::NonFinite(format!("gradient in epoch {epoch}")));
            }
            parser.store.adam_step(&grads, &config.adam)?;
            if let Some(mixer) = &parser.tokens.context {
                let p = mixer.mix.probabilities(&parser.store);
                if (p.sum() - 1.0).abs() > 1e-9 || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::NonFinite("scalar mix weights left the simplex".into()));
                }
            }
        }
        let las = dev_las(&parser, data.dev, data.dev_ctx)?;
        if dev_scores.iter().all(|&b| las > b) {
            best = Some(parser.clone());
        }
        dev_scores.push(las);
        losses.push(epoch_loss);
    }
    let selected_epoch = select_epoch(&dev_scores).expect("at least one epoch");
    let parser = best.expect("first epoch is always kept");

    let mut config_pairs = config.to_pairs();
    config_pairs.retain(|(k, _)| !arch.to_pairs().iter().any(|(a, _)| a == k));
    config_pairs.extend(arch.to_pairs());
    let manifest = RunManifest {
        config: config_pairs,
        checksums: data.checksums(),
        extra,
        seed: config.seed,
        dev_las: dev_scores,
        train_loss: losses,
        selected_epoch,
    };
    if let Some(dir) = out_dir {
        parser.save(dir)?;
        manifest.save(dir.join("manifest.txt"))?;
    }
    Ok(TrainedRun { parser, manifest })
}

/// Test scores (percent) of one seed in [`multi_seed`].
#[derive(Clone, Debug, PartialEq)]
pub struct SeedScores {
    pub seed: u64,
    pub selected_epoch: usize,
    pub las: f64,
    pub uas: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeedReport {
    pub runs: Vec<SeedScores>,
    pub mean_las: f64,
    pub mean_uas: f64,
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Train once per seed and average test LAS and UAS. Each run is saved
/// under `out_dir/seed-<s>` when `out_dir` is given.
pub fn multi_seed(
    config: &TrainConfig,
    seeds: &[u64],
    data: TrainData<'_>,
    test: &[Sentence],
    test_ctx: Option<&ContextualStore>,
    out_dir: Option<&Path>,
) -> Result<MultiSeedReport> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let mut runs = Vec::new();
    for &seed in seeds {
        let cfg = TrainConfig { seed, ..config.clone() };
        let dir = out_dir.map(|d| d.join(format!("seed-{seed}")));
        let run = train(&cfg, data, Vec::new(), dir.as_deref())?;
        let scores = evaluate(&run.parser, test, test_ctx)?;
        runs.push(SeedScores {
            seed,
            selected_epoch: run.manifest.selected_epoch,
            las: 100.0 * scores.las,
            uas: 100.0 * scores.uas,
        });
    }
    let las: Vec<f64> = runs.iter().map(|r| r.las).collect();
    let uas: Vec<f64> = runs.iter().map(|r| r.uas).collect();
    Ok(MultiSeedReport {
        mean_las: mean(&las).expect("non-empty"),
        mean_uas: mean(&uas).expect("non-empty"),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::read_conllu;

    #[test]
    fn selection_rule() {
        assert_eq!(select_epoch(&[85.0, 87.0, 86.0]), Some(2));
        assert_eq!(select_epoch(&[87.0, 87.0]), Some(1));
        assert_eq!(select_epoch(&[]), None);
        assert_eq!(mean(&[80.0, 81.0, 82.0]), Some(81.0));
        assert_eq!(mean(&[77.5]), Some(77.5));
    }

    const TEXT: &str = "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tdog\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n3\tbarks\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n\
1\ta\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tcat\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n";

    fn tiny(mode: Mode) -> TrainConfig {
        TrainConfig {
            epochs: 3,
            arch: Architecture {
                word_dim: 6,
                char_dim: 3,
                char_hidden: 4,
                encoder_hidden: 5,
                encoder_layers: 1,
                mlp_hidden: 7,
                ..Default::default()
            },
            ..TrainConfig::new(mode)
        }
    }

    #[test]
    fn runs_are_reproducible_and_select_their_best_epoch() {
        let sentences = read_conllu(TEXT).unwrap();
        let data = TrainData {
            train: &sentences,
            dev: &sentences,
            ..Default::default()
        };
        for mode in [Mode::Transition, Mode::Graph] {
            let a = train(&tiny(mode), data, vec![], None).unwrap();
            let b = train(&tiny(mode), data, vec![], None).unwrap();
            assert_eq!(a.manifest.to_text(), b.manifest.to_text());
            assert_eq!(a.parser.store.to_bytes(), b.parser.store.to_bytes());
            let best = a.manifest.dev_las[a.manifest.selected_epoch - 1];
            assert!(a.manifest.dev_las.iter().all(|&v| v <= best));
            assert_eq!(dev_las(&a.parser, &sentences, None).unwrap(), best);
        }
    }

    #[test]
    fn empty_dev_is_an_error() {
        let sentences = read_conllu(TEXT).unwrap();
        let data = TrainData {
            train: &sentences,
            dev: &[],
            ..Default::default()
        };
        assert!(train(&tiny(Mode::Graph), data, vec![], None).is_err());
        let bad = TrainConfig { p_agg: 1.5, ..tiny(Mode::Graph) };
        assert!(bad.validate().is_err());
    }
}

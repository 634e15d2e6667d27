//! A complete parser: token representations, sentence encoder and one of
//! the two decoders, plus its on-disk form.
//!
//! A model directory holds `model.twnp` (parameters), `model.meta`
//! (`key=value` architecture settings) and `words.txt`, `chars.txt`,
//! `labels.txt` (one vocabulary entry per line, in id order).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView3};
use rand::SeedableRng;
use rayon::prelude::*;

use crate::encoder::{EncodedSentence, Encoder, EncoderTrace};
use crate::error::{Error, Result};
use crate::graph::{graph_decode, ArcScorer, LabelScorer};
use crate::neural::{Dropout, Gradients, ParamStore};
use crate::repr::{
    CharEmbedder, ContextMixer, ContextualStore, EmbeddingTable, LayerRange, PretrainedEmbeddings, TokenEncoder,
    TokenTrace, Vocab,
};
use crate::transition::{greedy_decode, TransitionScorer};
use crate::treebank::{DepTree, Sentence};
use crate::Rng64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Transition,
    Graph,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Transition => "transition",
            Mode::Graph => "graph",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transition" => Ok(Mode::Transition),
            "graph" => Ok(Mode::Graph),
            _ => Err(Error::Invalid(format!("mode must be transition or graph, got {s:?}"))),
        }
    }
}

/// Contextual-vector settings of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContextSpec {
    pub range: LayerRange,
    pub dim: usize,
}

/// Layer sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub encoder_hidden: usize,
    pub encoder_layers: usize,
    pub mlp_hidden: usize,
    pub dropout: f64,
    pub context: Option<ContextSpec>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            word_dim: 300,
            char_dim: 24,
            char_hidden: 100,
            encoder_hidden: 125,
            encoder_layers: 2,
            mlp_hidden: 100,
            dropout: 0.33,
            context: None,
        }
    }
}

impl Architecture {
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("word_dim".to_owned(), self.word_dim.to_string()),
            ("char_dim".to_owned(), self.char_dim.to_string()),
            ("char_hidden".to_owned(), self.char_hidden.to_string()),
            ("encoder_hidden".to_owned(), self.encoder_hidden.to_string()),
            ("encoder_layers".to_owned(), self.encoder_layers.to_string()),
            ("mlp_hidden".to_owned(), self.mlp_hidden.to_string()),
            ("dropout".to_owned(), self.dropout.to_string()),
        ];
        match self.context {
            Some(c) => {
                out.push(("ctx_layers".to_owned(), c.range.to_string()));
                out.push(("ctx_dim".to_owned(), c.dim.to_string()));
            }
            None => out.push(("ctx_layers".to_owned(), "none".to_owned())),
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum Decoder {
    Transition(TransitionScorer),
    Graph { arcs: ArcScorer, labels: LabelScorer },
}

#[derive(Clone, Debug)]
pub struct Parser {
    pub mode: Mode,
    pub arch: Architecture,
    pub labels: Vocab,
    pub tokens: TokenEncoder,
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub store: ParamStore,
}

/// Forward state kept for backpropagation into the shared layers.
pub struct EncodingTrace {
    tokens: TokenTrace,
    encoder: EncoderTrace,
}

impl Parser {
    /// Fresh model whose vocabularies come from `train`.
    pub fn new(
        mode: Mode,
        arch: Architecture,
        train: &[Sentence],
        pretrained: Option<&PretrainedEmbeddings>,
        seed: u64,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let mut labels = Vocab::new();
        for s in train {
            for t in &s.tokens {
                labels.insert(t.deprel.as_str());
            }
        }
        let mut store = ParamStore::new(seed);
        let mut rng = Rng64::seed_from_u64(seed);
        let forms: Vec<&str> = train.iter().flat_map(|s| s.forms()).collect();
        let words = EmbeddingTable::new(&mut store, "words", arch.word_dim, forms.iter().copied(), pretrained, &mut rng)?;
        let chars = CharEmbedder::new(&mut store, "chars", arch.char_dim, arch.char_hidden, forms.iter().copied());
        Ok(Self::assemble(mode, arch, labels, words, chars, store))
    }

    fn assemble(
        mode: Mode,
        arch: Architecture,
        labels: Vocab,
        words: EmbeddingTable,
        chars: CharEmbedder,
        mut store: ParamStore,
    ) -> Self {
        let context = arch.context.map(|c| ContextMixer::new(&mut store, "mix", c.range, c.dim));
        let tokens = TokenEncoder { words, chars, context };
        let encoder = Encoder::new(
            &mut store,
            "encoder",
            tokens.output_dim(),
            arch.encoder_hidden,
            arch.encoder_layers,
        );
        let dim = encoder.output_dim();
        let decoder = match mode {
            Mode::Transition => {
                Decoder::Transition(TransitionScorer::new(&mut store, "transition", dim, arch.mlp_hidden, labels.len()))
            }
            Mode::Graph => Decoder::Graph {
                arcs: ArcScorer::new(&mut store, "arc", dim, arch.mlp_hidden),
                labels: LabelScorer::new(&mut store, "label", dim, arch.mlp_hidden, labels.len()),
            },
        };
        Parser {
            mode,
            arch,
            labels,
            tokens,
            encoder,
            decoder,
            store,
        }
    }

    /// Token vectors and encoder outputs. With `dropout`, BiLSTM outputs
    /// are dropped at the configured rate.
    pub fn encode(
        &self,
        forms: &[&str],
        word_indices: &[usize],
        ctx: Option<ArrayView3<f32>>,
        dropout: Option<&mut Rng64>,
    ) -> Result<(EncodedSentence, EncodingTrace)> {
        let (vectors, tokens) = self.tokens.forward(&self.store, forms, word_indices, ctx)?;
        let dropout = dropout.map(|rng| Dropout {
            rate: self.arch.dropout,
            rng,
        });
        let (encoded, encoder) = self.encoder.encode(&self.store, vectors.view(), dropout)?;
        Ok((encoded, EncodingTrace { tokens, encoder }))
    }

    pub fn encode_backward(
        &self,
        trace: &EncodingTrace,
        d_vectors: &Array2<f64>,
        d_pad: &Array1<f64>,
        grads: &mut Gradients,
    ) {
        let d_tokens = self
            .encoder
            .backward(&self.store, &trace.encoder, d_vectors.view(), Some(d_pad), grads);
        self.tokens.backward(&self.store, &trace.tokens, d_tokens.view(), grads);
    }

    /// Predicted tree for one sentence.
    pub fn parse(&self, sentence: &Sentence, ctx: Option<ArrayView3<f32>>) -> Result<DepTree> {
        let forms: Vec<&str> = sentence.forms().collect();
        let indices = self.tokens.word_indices(forms.iter().copied());
        let (encoded, _) = self.encode(&forms, &indices, ctx, None)?;
        match &self.decoder {
            Decoder::Transition(scorer) => greedy_decode(&encoded, scorer, &self.store, &self.labels),
            Decoder::Graph { arcs, labels } => graph_decode(&encoded, arcs, labels, &self.store, &self.labels),
        }
    }

    /// Parse a corpus in parallel; output order follows input order. The
    /// contextual store is keyed by the sentence index.
    pub fn parse_all(&self, sentences: &[Sentence], ctx: Option<&ContextualStore>) -> Result<Vec<DepTree>> {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let tensor = sentence_context(ctx, i, s)?;
                self.parse(s, tensor)
            })
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.store.save(dir.join("model.twnp"))?;
        let mut meta = format!("mode={}\n", self.mode);
        for (k, v) in self.arch.to_pairs() {
            meta.push_str(&format!("{k}={v}\n"));
        }
        fs::write(dir.join("model.meta"), meta)?;
        write_vocab(&dir.join("words.txt"), &self.tokens.words.vocab)?;
        write_vocab(&dir.join("chars.txt"), &self.tokens.chars.chars)?;
        write_vocab(&dir.join("labels.txt"), &self.labels)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta = read_key_values(&fs::read_to_string(dir.join("model.meta"))?)?;
        let get = |k: &str| -> Result<&str> {
            meta.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Invalid(format!("model.meta lacks {k}")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Invalid(format!("model.meta: {k} is not an integer")))
        };
        let mode: Mode = get("mode")?.parse()?;
        let context = match get("ctx_layers")? {
            "none" => None,
            r => Some(ContextSpec {
                range: r.parse()?,
                dim: num("ctx_dim")?,
            }),
        };
        let arch = Architecture {
            word_dim: num("word_dim")?,
            char_dim: num("char_dim")?,
            char_hidden: num("char_hidden")?,
            encoder_hidden: num("encoder_hidden")?,
            encoder_layers: num("encoder_layers")?,
            mlp_hidden: num("mlp_hidden")?,
            dropout: get("dropout")?
                .parse()
                .map_err(|_| Error::Invalid("model.meta: bad dropout".into()))?,
            context,
        };
        let words = read_vocab(&dir.join("words.txt"))?;
        let chars = read_vocab(&dir.join("chars.txt"))?;
        let labels = read_vocab(&dir.join("labels.txt"))?;

        let mut store = ParamStore::new(0);
        let word_param = store.add_zeros("words", &[words.len(), arch.word_dim]);
        let words = EmbeddingTable::from_parts(words, word_param, arch.word_dim);
        let chars = CharEmbedder::with_vocab(&mut store, "chars", arch.char_dim, arch.char_hidden, chars);
        let mut parser = Self::assemble(mode, arch, labels, words, chars, store);
        let saved = ParamStore::load(dir.join("model.twnp"), 0)?;
        if saved.len() != parser.store.len() {
            return Err(Error::Container {
                kind: "checkpoint",
                message: format!("{} tensors, model needs {}", saved.len(), parser.store.len()),
            });
        }
        parser.store.copy_values_from(&saved)?;
        Ok(parser)
    }
}

/// Contextual tensor for sentence `index`, checked against its forms.
pub fn sentence_context<'a>(
    ctx: Option<&'a ContextualStore>,
    index: usize,
    sentence: &Sentence,
) -> Result<Option<ArrayView3<'a, f32>>> {
    ctx.map(|c| c.query(&index.to_string(), sentence.forms())).transpose()
}

fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut text = String::new();
    for item in vocab.items() {
        text.push_str(item);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path)?;
    let items: Vec<&str> = text.split_terminator('\n').collect();
    let vocab = Vocab::from_items(items.iter().copied());
    if vocab.len() != items.len() {
        return Err(Error::Invalid(format!("duplicate entries in {}", path.display())));
    }
    Ok(vocab)
}

/// Parse `key=value` lines, keeping order; blank lines and `#` comments are skipped.
pub fn read_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
            line: i + 1,
            message: "expected key=value".into(),
        })?;
        out.push((k.to_owned(), v.to_owned()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::read_conllu;

    const TEXT: &str = "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tdog\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n3\tbarks\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n";

    fn small() -> Architecture {
        Architecture {
            word_dim: 6,
            char_dim: 3,
            char_hidden: 4,
            encoder_hidden: 5,
            encoder_layers: 2,
            mlp_hidden: 7,
            ..Default::default()
        }
    }

    #[test]
    fn parse_gives_valid_trees_and_save_load_round_trips() {
        let sentences = read_conllu(TEXT).unwrap();
        for mode in [Mode::Transition, Mode::Graph] {
            let parser = Parser::new(mode, small(), &sentences, None, 4).unwrap();
            let tree = parser.parse(&sentences[0], None).unwrap();
            assert_eq!(tree.len(), 3);
            let dir = tempfile::tempdir().unwrap();
            parser.save(dir.path()).unwrap();
            let back = Parser::load(dir.path()).unwrap();
            assert_eq!(back.store.to_bytes(), parser.store.to_bytes());
            assert_eq!(back.parse(&sentences[0], None).unwrap(), tree);
        }
    }
}

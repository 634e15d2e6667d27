//! Word embedding tables.
//!
//! Pretrained vectors use the plain text format: a `count dim` header line,
//! then one `form v1 ... vdim` line per word.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use super::vocab::Vocab;
use crate::error::{Error, Result};
use crate::neural::{Gradients, ParamId, ParamStore};
use crate::Rng64;

pub const UNKNOWN_WORD: &str = "<unk>";

/// Vectors read from a text embedding file.
#[derive(Clone, Debug)]
pub struct PretrainedEmbeddings {
    pub forms: Vec<String>,
    pub vectors: Array2<f64>,
}

impl PretrainedEmbeddings {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Empty("embedding file"))?;
        let mut header_fields = header.split_whitespace();
        let parse_header = |field: Option<&str>| -> Result<usize> {
            field.and_then(|f| f.parse().ok()).ok_or_else(|| Error::Format {
                line: 1,
                message: "embedding header must be \"count dim\"".into(),
            })
        };
        let count = parse_header(header_fields.next())?;
        let dim = parse_header(header_fields.next())?;

        let mut forms = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (idx, line) in lines {
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let form = fields.next().unwrap_or_default();
            let before = data.len();
            for field in fields {
                let v: f64 = field.parse().map_err(|_| Error::Format {
                    line: idx + 1,
                    message: format!("invalid vector component {field:?}"),
                })?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::Format {
                    line: idx + 1,
                    message: format!("expected {dim} components, found {}", data.len() - before),
                });
            }
            forms.push(form.to_owned());
        }
        if forms.len() != count {
            return Err(Error::Format {
                line: 1,
                message: format!("header announces {count} vectors, file has {}", forms.len()),
            });
        }
        let vectors = Array2::from_shape_vec((count, dim), data).expect("row lengths checked");
        Ok(PretrainedEmbeddings { forms, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// A trainable word embedding matrix with an unknown-word row at index 0.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub param: ParamId,
    pub dim: usize,
    pub trainable: bool,
}

impl EmbeddingTable {
    /// Build a table over `forms`, copying pretrained rows where available
    /// and drawing the rest uniformly.
    pub fn new<'a>(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        forms: impl IntoIterator<Item = &'a str>,
        pretrained: Option<&PretrainedEmbeddings>,
        rng: &mut Rng64,
    ) -> Result<Self> {
        let mut vocab = Vocab::new();
        vocab.insert(UNKNOWN_WORD);
        if let Some(p) = pretrained {
            if p.dim() != dim {
                return Err(Error::Dimension {
                    op: "pretrained embeddings",
                    expected: dim,
                    found: p.dim(),
                });
            }
            for form in &p.forms {
                vocab.insert(form.as_str());
            }
        }
        for form in forms {
            vocab.insert(form);
        }

        let bound = (6.0 / (1 + dim) as f64).sqrt();
        let mut values = Array2::from_shape_simple_fn((vocab.len(), dim), || rng.gen_range(-bound..=bound));
        if let Some(p) = pretrained {
            for (form, row) in p.forms.iter().zip(p.vectors.rows()) {
                let i = vocab.get(form).expect("inserted above");
                values.row_mut(i).assign(&row);
            }
        }
        let param = store.add(name, values.into_dyn());
        Ok(EmbeddingTable {
            vocab,
            param,
            dim,
            trainable: true,
        })
    }

    /// Rebuild a table around an already registered parameter.
    pub fn from_parts(vocab: Vocab, param: ParamId, dim: usize) -> Self {
        EmbeddingTable {
            vocab,
            param,
            dim,
            trainable: true,
        }
    }

    /// Exact form, then lowercased form, then the unknown row.
    pub fn index(&self, form: &str) -> usize {
        self.vocab
            .get(form)
            .or_else(|| self.vocab.get(&form.to_lowercase()))
            .unwrap_or(0)
    }

    pub fn row<'s>(&self, store: &'s ParamStore, index: usize) -> ArrayView1<'s, f64> {
        store.row(self.param, index)
    }

    pub fn accumulate(&self, grads: &mut Gradients, index: usize, grad: ArrayView1<f64>) {
        if self.trainable {
            let mut g = grads.matrix_mut(self.param);
            let mut row = g.row_mut(index);
            row += &grad;
        }
    }
}

/// Vector for `form`: exact match, else lowercase match, else UNK.
pub fn lookup_word<'s>(form: &str, table: &EmbeddingTable, store: &'s ParamStore) -> ArrayView1<'s, f64> {
    table.row(store, table.index(form))
}

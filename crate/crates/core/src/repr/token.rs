use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView2, ArrayView3};

use super::chars::{CharEmbedder, CharTrace};
use super::contextual::ContextualStore;
use super::embeddings::EmbeddingTable;
use super::scalar_mix::ScalarMix;
use crate::error::{Error, Result};
use crate::neural::{Gradients, ParamStore};

/// Inclusive range of stored layers to mix, written `A-B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerRange {
    pub first: usize,
    pub last: usize,
}

impl LayerRange {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first > last {
            return Err(Error::Invalid(format!("empty layer range {first}-{last}")));
        }
        Ok(LayerRange { first, last })
    }

    pub fn full(layers: usize) -> Self {
        LayerRange {
            first: 0,
            last: layers.saturating_sub(1),
        }
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, layers: usize) -> Result<()> {
        if self.last >= layers {
            return Err(Error::Invalid(format!(
                "layer range {self} outside the {layers} stored layers"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for LayerRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

impl FromStr for LayerRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("layer range must be A-B, got {s:?}"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let first = a.trim().parse().map_err(|_| bad())?;
        let last = b.trim().parse().map_err(|_| bad())?;
        LayerRange::new(first, last)
    }
}

/// Scalar mix over a slice of the stored layers.
#[derive(Clone, Debug)]
pub struct ContextMixer {
    pub mix: ScalarMix,
    pub range: LayerRange,
    pub dim: usize,
}

impl ContextMixer {
    pub fn new(store: &mut ParamStore, prefix: &str, range: LayerRange, dim: usize) -> Self {
        ContextMixer {
            mix: ScalarMix::new(store, prefix, range.len()),
            range,
            dim,
        }
    }

    fn layers(&self, tensor: ArrayView3<f32>, token: usize) -> Array2<f64> {
        tensor
            .slice(s![token, self.range.first..=self.range.last, ..])
            .mapv(f64::from)
    }
}

/// Builds token vectors: word embedding, character vector and, optionally,
/// mixed contextual vectors.
#[derive(Clone, Debug)]
pub struct TokenEncoder {
    pub words: EmbeddingTable,
    pub chars: CharEmbedder,
    pub context: Option<ContextMixer>,
}

#[derive(Clone, Debug)]
pub struct TokenTrace {
    word_indices: Vec<usize>,
    chars: Vec<CharTrace>,
    context: Option<Vec<Array2<f64>>>,
}

impl TokenEncoder {
    pub fn output_dim(&self) -> usize {
        self.words.dim + self.chars.output_dim() + self.context.as_ref().map_or(0, |c| c.dim)
    }

    pub fn word_indices<'a>(&self, forms: impl IntoIterator<Item = &'a str>) -> Vec<usize> {
        forms.into_iter().map(|f| self.words.index(f)).collect()
    }

    fn check_context(&self, ctx: Option<ArrayView3<f32>>, n: usize) -> Result<()> {
        match (&self.context, ctx) {
            (None, None) => Ok(()),
            (Some(_), None) => Err(Error::Invalid("model expects contextual vectors".into())),
            (None, Some(_)) => Err(Error::Invalid("model was trained without contextual vectors".into())),
            (Some(mixer), Some(t)) => {
                let (tn, tl, td) = t.dim();
                if tn != n {
                    return Err(Error::Dimension {
                        op: "contextual tokens",
                        expected: n,
                        found: tn,
                    });
                }
                if td != mixer.dim {
                    return Err(Error::Dimension {
                        op: "contextual dim",
                        expected: mixer.dim,
                        found: td,
                    });
                }
                mixer.range.check(tl)
            }
        }
    }

    /// `N × output_dim` token vectors. `word_indices` come from
    /// [`Self::word_indices`], possibly with some replaced by 0 (UNK).
    pub fn forward(
        &self,
        store: &ParamStore,
        forms: &[&str],
        word_indices: &[usize],
        ctx: Option<ArrayView3<f32>>,
    ) -> Result<(Array2<f64>, TokenTrace)> {
        let n = forms.len();
        if n == 0 {
            return Err(Error::Empty("sentence"));
        }
        if word_indices.len() != n {
            return Err(Error::Dimension {
                op: "word indices",
                expected: n,
                found: word_indices.len(),
            });
        }
        self.check_context(ctx, n)?;
        let wd = self.words.dim;
        let cd = self.chars.output_dim();
        let mut out = Array2::zeros((n, self.output_dim()));
        let mut char_traces = Vec::with_capacity(n);
        let mut ctx_layers = self.context.as_ref().map(|_| Vec::with_capacity(n));
        for (k, form) in forms.iter().enumerate() {
            out.slice_mut(s![k, ..wd]).assign(&self.words.row(store, word_indices[k]));
            let (c, trace) = self.chars.forward(store, form)?;
            out.slice_mut(s![k, wd..wd + cd]).assign(&c);
            char_traces.push(trace);
            if let (Some(mixer), Some(t), Some(saved)) = (&self.context, ctx, ctx_layers.as_mut()) {
                let layers = mixer.layers(t, k);
                out.slice_mut(s![k, wd + cd..]).assign(&mixer.mix.forward(store, layers.view())?);
                saved.push(layers);
            }
        }
        Ok((
            out,
            TokenTrace {
                word_indices: word_indices.to_vec(),
                chars: char_traces,
                context: ctx_layers,
            },
        ))
    }

    pub fn backward(&self, store: &ParamStore, trace: &TokenTrace, d_out: ArrayView2<f64>, grads: &mut Gradients) {
        let wd = self.words.dim;
        let cd = self.chars.output_dim();
        for (k, d) in d_out.rows().into_iter().enumerate() {
            self.words.accumulate(grads, trace.word_indices[k], d.slice(s![..wd]));
            self.chars
                .backward(store, &trace.chars[k], d.slice(s![wd..wd + cd]).to_owned(), grads);
            if let (Some(mixer), Some(layers)) = (&self.context, &trace.context) {
                mixer.mix.backward(store, layers[k].view(), d.slice(s![wd + cd..]), grads);
            }
        }
    }
}

/// Input vector of token `k` (0-based) of a sentence. When the encoder
/// mixes contextual vectors, `ctx` supplies the store and the sentence key.
pub fn token_vector(
    k: usize,
    forms: &[&str],
    encoder: &TokenEncoder,
    store: &ParamStore,
    ctx: Option<(&ContextualStore, &str)>,
) -> Result<Array1<f64>> {
    let tensor = match ctx {
        Some((c, key)) => Some(c.query(key, forms.iter().copied())?),
        None => None,
    };
    if k >= forms.len() {
        return Err(Error::Invalid(format!("token {k} outside a sentence of {}", forms.len())));
    }
    let indices = encoder.word_indices(forms.iter().copied());
    let (out, _) = encoder.forward(store, forms, &indices, tensor)?;
    Ok(out.row(k).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::embeddings::EmbeddingTable;
    use crate::Rng64;
    use ndarray::Array3;
    use rand::SeedableRng;

    fn encoder(store: &mut ParamStore, context: Option<(LayerRange, usize)>) -> TokenEncoder {
        let mut rng = Rng64::seed_from_u64(0);
        let words = EmbeddingTable::new(store, "words", 300, ["a", "b"], None, &mut rng).unwrap();
        let chars = CharEmbedder::new(store, "chars", 24, 100, ["a", "b"]);
        let context = context.map(|(r, d)| ContextMixer::new(store, "mix", r, d));
        TokenEncoder { words, chars, context }
    }

    #[test]
    fn dimensions() {
        let mut store = ParamStore::new(0);
        let base = encoder(&mut store, None);
        assert_eq!(token_vector(0, &["a", "b"], &base, &store, None).unwrap().len(), 500);

        let mut ctx = ContextualStore::new(3, 1024);
        ctx.insert("0", ["a", "b"], Array3::zeros((2, 3, 1024))).unwrap();
        let mut store = ParamStore::new(0);
        let elmo = encoder(&mut store, Some((LayerRange::full(3), 1024)));
        let v = token_vector(1, &["a", "b"], &elmo, &store, Some((&ctx, "0"))).unwrap();
        assert_eq!(v.len(), 1524);

        let mut ctx = ContextualStore::new(12, 768);
        ctx.insert("0", ["a"], Array3::zeros((1, 12, 768))).unwrap();
        let mut store = ParamStore::new(0);
        let bert = encoder(&mut store, Some((LayerRange::new(4, 8).unwrap(), 768)));
        let v = token_vector(0, &["a"], &bert, &store, Some((&ctx, "0"))).unwrap();
        assert_eq!(v.len(), 1268);
    }

    #[test]
    fn layer_range_out_of_bounds() {
        let mut ctx = ContextualStore::new(3, 4);
        ctx.insert("0", ["a"], Array3::zeros((1, 3, 4))).unwrap();
        let mut store = ParamStore::new(0);
        let enc = encoder(&mut store, Some((LayerRange::new(2, 3).unwrap(), 4)));
        assert!(token_vector(0, &["a"], &enc, &store, Some((&ctx, "0"))).is_err());
    }

    #[test]
    fn parse_range() {
        assert_eq!("4-8".parse::<LayerRange>().unwrap(), LayerRange { first: 4, last: 8 });
        assert!("8-4".parse::<LayerRange>().is_err());
        assert!("4".parse::<LayerRange>().is_err());
    }
}

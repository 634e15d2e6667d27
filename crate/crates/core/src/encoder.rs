//! Sentence BiLSTM shared by both decoders.
//!
//! ROOT is a trained input vector appended after the last token; its output
//! is moved to index 0 so that row `k` of [`EncodedSentence::vectors`] is
//! token `k` in CoNLL-U numbering.

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::neural::{BiLstm, BiLstmTrace, Dropout, Gradients, ParamId, ParamStore};

#[derive(Clone, Debug)]
pub struct Encoder {
    pub lstm: BiLstm,
    pub root_input: ParamId,
    pub pad: ParamId,
}

/// `N+1` encoder outputs (row 0 = ROOT) and the trained padding vector.
#[derive(Clone, Debug)]
pub struct EncodedSentence {
    pub vectors: Array2<f64>,
    pub pad_vector: Array1<f64>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct EncoderTrace {
    lstm: BiLstmTrace,
}

impl Encoder {
    pub fn new(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden_dim: usize, layers: usize) -> Self {
        let lstm = BiLstm::new(store, &format!("{prefix}/lstm"), input_dim, hidden_dim, layers);
        let bound = (6.0 / (1 + input_dim) as f64).sqrt();
        let root_input = store.add_uniform(format!("{prefix}/root"), &[input_dim], bound);
        let out = lstm.output_dim();
        let bound = (6.0 / (1 + out) as f64).sqrt();
        let pad = store.add_uniform(format!("{prefix}/pad"), &[out], bound);
        Encoder { lstm, root_input, pad }
    }

    pub fn output_dim(&self) -> usize {
        self.lstm.output_dim()
    }

    pub fn encode(
        &self,
        store: &ParamStore,
        token_vectors: ArrayView2<f64>,
        dropout: Option<Dropout<'_>>,
    ) -> Result<(EncodedSentence, EncoderTrace)> {
        let n = token_vectors.nrows();
        if n == 0 {
            return Err(Error::Empty("sentence"));
        }
        let din = self.lstm.input_dim();
        if token_vectors.ncols() != din {
            return Err(Error::Dimension {
                op: "encoder input",
                expected: din,
                found: token_vectors.ncols(),
            });
        }
        let mut xs = Array2::zeros((n + 1, din));
        xs.slice_mut(s![..n, ..]).assign(&token_vectors);
        xs.row_mut(n).assign(&store.vector(self.root_input));
        let lstm = self.lstm.forward(store, xs.view(), dropout)?;

        let mut vectors = Array2::zeros((n + 1, self.output_dim()));
        vectors.row_mut(0).assign(&lstm.output.row(n));
        vectors.slice_mut(s![1.., ..]).assign(&lstm.output.slice(s![..n, ..]));
        let encoded = EncodedSentence {
            vectors,
            pad_vector: store.vector(self.pad).to_owned(),
        };
        Ok((encoded, EncoderTrace { lstm }))
    }

    /// `d_vectors` is indexed like [`EncodedSentence::vectors`]; `d_pad` is
    /// the gradient of the padding vector. Returns token-vector gradients.
    pub fn backward(
        &self,
        store: &ParamStore,
        trace: &EncoderTrace,
        d_vectors: ArrayView2<f64>,
        d_pad: Option<&Array1<f64>>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        let n = d_vectors.nrows() - 1;
        let mut d_seq = Array2::zeros(d_vectors.raw_dim());
        d_seq.row_mut(n).assign(&d_vectors.row(0));
        d_seq.slice_mut(s![..n, ..]).assign(&d_vectors.slice(s![1.., ..]));
        let d_xs = self.lstm.backward(store, &trace.lstm, d_seq.view(), grads);
        {
            let mut g = grads.vector_mut(self.root_input);
            g += &d_xs.row(n);
        }
        if let Some(d) = d_pad {
            let mut g = grads.vector_mut(self.pad);
            g += d;
        }
        d_xs.slice(s![..n, ..]).to_owned()
    }
}

/// Encode token vectors without dropout.
pub fn encode(encoder: &Encoder, store: &ParamStore, token_vectors: ArrayView2<f64>) -> Result<EncodedSentence> {
    Ok(encoder.encode(store, token_vectors, None)?.0)
}

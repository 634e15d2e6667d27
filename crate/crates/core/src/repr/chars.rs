//! Character BiLSTM word vectors.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::vocab::Vocab;
use crate::error::{Error, Result};
use crate::neural::{BiLstm, BiLstmTrace, Gradients, ParamId, ParamStore};

pub const UNKNOWN_CHAR: &str = "<unk>";

/// Embeds each code point, runs a one-layer BiLSTM over the form and keeps
/// the final forward and backward states.
#[derive(Clone, Debug)]
pub struct CharEmbedder {
    pub chars: Vocab,
    pub table: ParamId,
    pub lstm: BiLstm,
    pub char_dim: usize,
}

/// What [`CharEmbedder::backward`] needs from the forward pass.
#[derive(Clone, Debug)]
pub struct CharTrace {
    indices: Vec<usize>,
    lstm: BiLstmTrace,
}

impl CharEmbedder {
    pub fn new<'a>(
        store: &mut ParamStore,
        prefix: &str,
        char_dim: usize,
        hidden_dim: usize,
        forms: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut chars = Vocab::new();
        chars.insert(UNKNOWN_CHAR);
        for form in forms {
            for c in form.chars() {
                chars.insert(c.to_string());
            }
        }
        Self::with_vocab(store, prefix, char_dim, hidden_dim, chars)
    }

    pub fn with_vocab(
        store: &mut ParamStore,
        prefix: &str,
        char_dim: usize,
        hidden_dim: usize,
        chars: Vocab,
    ) -> Self {
        let bound = (6.0 / (1 + char_dim) as f64).sqrt();
        let table = store.add_uniform(format!("{prefix}/table"), &[chars.len(), char_dim], bound);
        let lstm = BiLstm::new(store, &format!("{prefix}/lstm"), char_dim, hidden_dim, 1);
        CharEmbedder {
            chars,
            table,
            lstm,
            char_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.lstm.output_dim()
    }

    fn indices(&self, form: &str) -> Vec<usize> {
        form.chars()
            .map(|c| {
                let mut buf = [0u8; 4];
                self.chars.get(c.encode_utf8(&mut buf)).unwrap_or(0)
            })
            .collect()
    }

    pub fn forward(&self, store: &ParamStore, form: &str) -> Result<(Array1<f64>, CharTrace)> {
        let indices = self.indices(form);
        if indices.is_empty() {
            return Err(Error::Empty("word form"));
        }
        let table = store.matrix(self.table);
        let mut xs = Array2::zeros((indices.len(), self.char_dim));
        for (row, &i) in xs.rows_mut().into_iter().zip(&indices) {
            let mut row = row;
            row.assign(&table.row(i));
        }
        let lstm = self.lstm.forward(store, xs.view(), None)?;
        let h = self.output_dim() / 2;
        let last = indices.len() - 1;
        let out = concatenate![
            Axis(0),
            lstm.output.slice(s![last, ..h]),
            lstm.output.slice(s![0, h..])
        ];
        Ok((out, CharTrace { indices, lstm }))
    }

    pub fn backward(&self, store: &ParamStore, trace: &CharTrace, d_out: Array1<f64>, grads: &mut Gradients) {
        let h = self.output_dim() / 2;
        let n = trace.indices.len();
        let mut d_states = Array2::zeros((n, 2 * h));
        d_states.slice_mut(s![n - 1, ..h]).assign(&d_out.slice(s![..h]));
        d_states.slice_mut(s![0, h..]).assign(&d_out.slice(s![h..]));
        let d_xs = self.lstm.backward(store, &trace.lstm, d_states.view(), grads);
        let mut d_table = grads.matrix_mut(self.table);
        for (&i, d) in trace.indices.iter().zip(d_xs.rows()) {
            let mut row = d_table.row_mut(i);
            row += &d;
        }
    }
}

/// Character BiLSTM vector of a word form.
pub fn char_embed(form: &str, embedder: &CharEmbedder, store: &ParamStore) -> Result<Array1<f64>> {
    Ok(embedder.forward(store, form)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let mut store = ParamStore::new(1);
        let emb = CharEmbedder::new(&mut store, "chars", 24, 100, ["house"]);
        let a = char_embed("house", &emb, &store).unwrap();
        let b = char_embed("house", &emb, &store).unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a, b);
        assert_eq!(char_embed("x", &emb, &store).unwrap().len(), 200);
        assert!(char_embed("", &emb, &store).is_err());
    }

    #[test]
    fn zero_parameters_give_zero_vector() {
        let mut store = ParamStore::new(1);
        let emb = CharEmbedder::new(&mut store, "chars", 8, 5, ["ab"]);
        for id in store.ids().collect::<Vec<_>>() {
            store.value_mut(id).fill(0.0);
        }
        assert!(char_embed("abc", &emb, &store).unwrap().iter().all(|&v| v == 0.0));
    }
}

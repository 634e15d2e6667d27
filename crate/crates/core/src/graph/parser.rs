//! Arc and label scorers of the graph parser.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};

use super::mst::{single_root_cle, ScoreMatrix};
use crate::encoder::EncodedSentence;
use crate::error::Result;
use crate::neural::ops::argmax;
use crate::neural::{Gradients, Mlp, MlpTrace, ParamId, ParamStore};
use crate::repr::Vocab;
use crate::treebank::DepTree;

pub const ROOT_LABEL: &str = "root";

/// `score(h, d) = w_out · tanh(W_head v_h + W_dep v_d + b) + b_out`, the
/// one-hidden-layer MLP over `[v_h; v_d]` with its first layer split.
#[derive(Clone, Debug)]
pub struct ArcScorer {
    pub head_weight: ParamId,
    pub dep_weight: ParamId,
    pub hidden_bias: ParamId,
    pub output_weight: ParamId,
    pub output_bias: ParamId,
    pub vector_dim: usize,
    pub hidden_dim: usize,
}

/// Cached projections for [`ArcScorer::backward`].
#[derive(Clone, Debug)]
pub struct ArcTrace {
    head_proj: Array2<f64>,
    dep_proj: Array2<f64>,
}

impl ArcScorer {
    pub fn new(store: &mut ParamStore, prefix: &str, vector_dim: usize, hidden_dim: usize) -> Self {
        // Xavier bound of the unsplit hidden x 2D matrix
        let bound = (6.0 / (hidden_dim + 2 * vector_dim) as f64).sqrt();
        ArcScorer {
            head_weight: store.add_uniform(format!("{prefix}/w_head"), &[hidden_dim, vector_dim], bound),
            dep_weight: store.add_uniform(format!("{prefix}/w_dep"), &[hidden_dim, vector_dim], bound),
            hidden_bias: store.add_zeros(format!("{prefix}/b_hidden"), &[hidden_dim]),
            output_weight: store.add_xavier(format!("{prefix}/w_out"), 1, hidden_dim),
            output_bias: store.add_zeros(format!("{prefix}/b_out"), &[1]),
            vector_dim,
            hidden_dim,
        }
    }

    fn hidden(&self, store: &ParamStore, trace: &ArcTrace, h: usize, d: usize) -> Array1<f64> {
        (&trace.head_proj.row(h) + &trace.dep_proj.row(d) + store.vector(self.hidden_bias)).mapv_into(f64::tanh)
    }

    pub fn forward(&self, store: &ParamStore, encoded: &EncodedSentence) -> (ScoreMatrix, ArcTrace) {
        let v = &encoded.vectors;
        let trace = ArcTrace {
            head_proj: v.dot(&store.matrix(self.head_weight).t()),
            dep_proj: v.dot(&store.matrix(self.dep_weight).t()),
        };
        let n = v.nrows();
        let w_out = store.matrix(self.output_weight).row(0).to_owned();
        let b_out = store.vector(self.output_bias)[0];
        let mut scores = Array2::from_elem((n, n), f64::NEG_INFINITY);
        for h in 0..n {
            for d in 1..n {
                if h != d {
                    scores[[h, d]] = self.hidden(store, &trace, h, d).dot(&w_out) + b_out;
                }
            }
        }
        (scores, trace)
    }

    /// `d_scores` must be zero on illegal cells. Returns the gradient of
    /// the encoder outputs.
    pub fn backward(
        &self,
        store: &ParamStore,
        encoded: &EncodedSentence,
        trace: &ArcTrace,
        d_scores: &Array2<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        let n = d_scores.nrows();
        let w_out = store.matrix(self.output_weight).row(0).to_owned();
        let mut d_head = Array2::zeros((n, self.hidden_dim));
        let mut d_dep = Array2::zeros((n, self.hidden_dim));
        let mut d_w_out = Array1::zeros(self.hidden_dim);
        let mut d_b_out = 0.0;
        for ((h, d), &g) in d_scores.indexed_iter() {
            if g == 0.0 {
                continue;
            }
            let z = self.hidden(store, trace, h, d);
            d_w_out.scaled_add(g, &z);
            d_b_out += g;
            let dz = (&w_out * g) * z.mapv(|v| 1.0 - v * v);
            let mut row = d_head.row_mut(h);
            row += &dz;
            let mut row = d_dep.row_mut(d);
            row += &dz;
        }
        {
            let mut g = grads.matrix_mut(self.output_weight);
            let mut row = g.row_mut(0);
            row += &d_w_out;
        }
        grads.vector_mut(self.output_bias)[0] += d_b_out;
        {
            let mut g = grads.vector_mut(self.hidden_bias);
            g += &d_head.sum_axis(Axis(0));
        }
        let v = &encoded.vectors;
        general_mat_mul(1.0, &d_head.t(), v, 1.0, &mut grads.matrix_mut(self.head_weight));
        general_mat_mul(1.0, &d_dep.t(), v, 1.0, &mut grads.matrix_mut(self.dep_weight));
        d_head.dot(&store.matrix(self.head_weight)) + d_dep.dot(&store.matrix(self.dep_weight))
    }
}

pub fn score_arcs(encoded: &EncodedSentence, scorer: &ArcScorer, store: &ParamStore) -> ScoreMatrix {
    scorer.forward(store, encoded).0
}

/// MLP over `[v_head; v_dep]` with one output per label.
#[derive(Clone, Debug)]
pub struct LabelScorer {
    pub mlp: Mlp,
    pub num_labels: usize,
}

impl LabelScorer {
    pub fn new(store: &mut ParamStore, prefix: &str, vector_dim: usize, hidden_dim: usize, num_labels: usize) -> Self {
        LabelScorer {
            mlp: Mlp::new(store, &format!("{prefix}/mlp"), 2 * vector_dim, hidden_dim, num_labels),
            num_labels,
        }
    }

    /// Rows `[v_h; v_d]` for each `(h, d)` pair.
    pub fn inputs(encoded: &EncodedSentence, arcs: &[(usize, usize)]) -> Array2<f64> {
        let d = encoded.dim();
        let mut x = Array2::zeros((arcs.len(), 2 * d));
        for (mut row, &(h, dep)) in x.rows_mut().into_iter().zip(arcs) {
            let pair = concatenate![Axis(0), encoded.vectors.row(h), encoded.vectors.row(dep)];
            row.assign(&pair);
        }
        x
    }

    pub fn forward(&self, store: &ParamStore, encoded: &EncodedSentence, arcs: &[(usize, usize)]) -> Result<MlpTrace> {
        self.mlp.forward(store, Self::inputs(encoded, arcs).view())
    }

    /// Returns the gradient of the encoder outputs.
    pub fn backward(
        &self,
        store: &ParamStore,
        trace: &MlpTrace,
        arcs: &[(usize, usize)],
        d_scores: &Array2<f64>,
        grads: &mut Gradients,
        d_vectors: &mut Array2<f64>,
    ) {
        let d_in = self.mlp.backward(store, trace, d_scores.view(), grads);
        let dim = d_vectors.ncols();
        for (row, &(h, d)) in d_in.rows().into_iter().zip(arcs) {
            let mut target = d_vectors.row_mut(h);
            target += &row.slice(ndarray::s![..dim]);
            let mut target = d_vectors.row_mut(d);
            target += &row.slice(ndarray::s![dim..]);
        }
    }
}

pub fn score_labels(
    h_head: ArrayView1<f64>,
    h_dep: ArrayView1<f64>,
    scorer: &LabelScorer,
    store: &ParamStore,
) -> Result<Array1<f64>> {
    let x = concatenate![Axis(0), h_head, h_dep];
    scorer.mlp.forward_one(store, x.view())
}

/// Single-root structure decoding, then the best label per arc. The
/// root-attached token gets `root` when that label is known.
pub fn graph_decode(
    encoded: &EncodedSentence,
    arcs: &ArcScorer,
    labels: &LabelScorer,
    store: &ParamStore,
    vocab: &Vocab,
) -> Result<DepTree> {
    let scores = score_arcs(encoded, arcs, store);
    let heads = single_root_cle(&scores);
    let pairs: Vec<(usize, usize)> = heads.iter().enumerate().map(|(i, &h)| (h, i + 1)).collect();
    let trace = labels.forward(store, encoded, &pairs)?;
    let root_label = vocab.get(ROOT_LABEL);
    let names = pairs
        .iter()
        .zip(trace.output.rows())
        .map(|(&(h, _), row)| {
            let id = match (h, root_label) {
                (0, Some(r)) => r,
                _ => argmax(row.iter().copied()).expect("at least one label"),
            };
            vocab.item(id).to_owned()
        })
        .collect();
    Ok(DepTree::new(heads, names)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encoded(n: usize, d: usize) -> EncodedSentence {
        EncodedSentence {
            vectors: Array2::from_shape_fn((n + 1, d), |(i, j)| ((i * d + j) as f64 * 0.37).sin()),
            pad_vector: Array1::zeros(d),
        }
    }

    #[test]
    fn legality_mask() {
        let mut store = ParamStore::new(0);
        let scorer = ArcScorer::new(&mut store, "arc", 4, 3);
        let m = score_arcs(&encoded(3, 4), &scorer, &store);
        assert_eq!(m.dim(), (4, 4));
        assert_eq!(m.iter().filter(|v| v.is_finite()).count(), 9);
    }

    #[test]
    fn factorized_scores_match_concatenated_mlp() {
        let mut store = ParamStore::new(3);
        let scorer = ArcScorer::new(&mut store, "arc", 4, 3);
        let enc = encoded(2, 4);
        let m = score_arcs(&enc, &scorer, &store);
        let w1 = concatenate![Axis(1), store.matrix(scorer.head_weight), store.matrix(scorer.dep_weight)];
        let x = concatenate![Axis(0), enc.vectors.row(2), enc.vectors.row(1)];
        let z = w1.dot(&x).mapv(f64::tanh);
        let expected = store.matrix(scorer.output_weight).row(0).dot(&z);
        assert!((m[[2, 1]] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_label_scores_tie_to_lowest() {
        let mut store = ParamStore::new(0);
        let scorer = LabelScorer::new(&mut store, "lab", 4, 3, 17);
        for id in store.ids().collect::<Vec<_>>() {
            store.value_mut(id).fill(0.0);
        }
        let enc = encoded(1, 4);
        let s = score_labels(enc.vectors.row(0), enc.vectors.row(1), &scorer, &store).unwrap();
        assert_eq!(s.len(), 17);
        assert_eq!(argmax(s.iter().copied()), Some(0));
    }
}

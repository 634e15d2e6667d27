//! Transition scoring over the 12 feature slots and greedy decoding.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut2};

use super::system::{
    feature_slots, initial_config, legal, max_transitions, num_transitions, LegalKinds, Slot, Transition,
    NUM_SLOTS,
};
use crate::encoder::EncodedSentence;
use crate::error::{Error, Result};
use crate::neural::{Mlp, ParamStore};
use crate::repr::Vocab;
use crate::treebank::DepTree;

/// MLP from the concatenated slot vectors to `[SHIFT, SWAP, LEFT×L, RIGHT×L]`.
#[derive(Clone, Debug)]
pub struct TransitionScorer {
    pub mlp: Mlp,
    pub num_labels: usize,
    pub vector_dim: usize,
}

impl TransitionScorer {
    pub fn new(store: &mut ParamStore, prefix: &str, vector_dim: usize, hidden_dim: usize, num_labels: usize) -> Self {
        let mlp = Mlp::new(
            store,
            &format!("{prefix}/mlp"),
            NUM_SLOTS * vector_dim,
            hidden_dim,
            num_transitions(num_labels),
        );
        TransitionScorer {
            mlp,
            num_labels,
            vector_dim,
        }
    }

    pub fn num_outputs(&self) -> usize {
        num_transitions(self.num_labels)
    }

    /// Concatenated slot vectors; PAD slots use the trained pad vector.
    pub fn input(&self, encoded: &EncodedSentence, slots: &[Slot; NUM_SLOTS]) -> Result<Array1<f64>> {
        if encoded.dim() != self.vector_dim {
            return Err(Error::Dimension {
                op: "transition slots",
                expected: self.vector_dim,
                found: encoded.dim(),
            });
        }
        let d = self.vector_dim;
        let mut x = Array1::zeros(NUM_SLOTS * d);
        for (i, slot) in slots.iter().enumerate() {
            let v = match slot {
                Some(t) => encoded.vectors.row(*t),
                None => encoded.pad_vector.view(),
            };
            x.slice_mut(s![i * d..(i + 1) * d]).assign(&v);
        }
        Ok(x)
    }

    /// Route input gradients (one row per scored configuration) back to the
    /// encoder outputs and the pad vector.
    pub fn scatter(
        &self,
        d_inputs: &Array2<f64>,
        slots: &[[Slot; NUM_SLOTS]],
        mut d_vectors: ArrayViewMut2<f64>,
        d_pad: &mut Array1<f64>,
    ) {
        let d = self.vector_dim;
        for (row, slots) in d_inputs.rows().into_iter().zip(slots) {
            for (i, slot) in slots.iter().enumerate() {
                let g = row.slice(s![i * d..(i + 1) * d]);
                match slot {
                    Some(t) => {
                        let mut target = d_vectors.row_mut(*t);
                        target += &g;
                    }
                    None => *d_pad += &g,
                }
            }
        }
    }
}

pub fn score_transitions(
    slots: &[Slot; NUM_SLOTS],
    encoded: &EncodedSentence,
    scorer: &TransitionScorer,
    store: &ParamStore,
) -> Result<Array1<f64>> {
    let x = scorer.input(encoded, slots)?;
    scorer.mlp.forward_one(store, x.view())
}

/// Best legal transition; ties go to the lowest output index.
pub fn masked_argmax(scores: ArrayView1<f64>, legal: &LegalKinds, num_labels: usize) -> Option<Transition> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in scores.iter().enumerate() {
        let t = Transition::from_index(i, num_labels);
        if !legal.allows(t) {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| Transition::from_index(i, num_labels))
}

/// Head and label-id arrays (1-based tokens, index 0 unused) from a
/// terminal configuration's arcs. Extra ROOT attachments are re-attached
/// to the first token that was attached to ROOT.
pub fn repaired_analysis(n: usize, arcs: impl Iterator<Item = (usize, usize, usize)>) -> (Vec<usize>, Vec<usize>) {
    let mut heads = vec![0; n + 1];
    let mut labels = vec![0; n + 1];
    let mut root: Option<usize> = None;
    for (h, l, d) in arcs {
        labels[d] = l;
        heads[d] = match (h, root) {
            (0, None) => {
                root = Some(d);
                0
            }
            (0, Some(r)) => r,
            _ => h,
        };
    }
    (heads, labels)
}

/// Greedy decoding with the scorer; returns a valid single-root tree.
pub fn greedy_decode(
    encoded: &EncodedSentence,
    scorer: &TransitionScorer,
    store: &ParamStore,
    labels: &Vocab,
) -> Result<DepTree> {
    let n = encoded.len() - 1;
    let mut config = initial_config(n)?;
    let mut steps = 0;
    while !config.is_terminal() {
        let mut allowed = legal(&config)?;
        steps += 1;
        if steps > max_transitions(n) {
            // unreachable by the swap bound; keep decoding total anyway
            allowed.swap = false;
        }
        let scores = score_transitions(&feature_slots(&config), encoded, scorer, store)?;
        let t = masked_argmax(scores.view(), &allowed, scorer.num_labels).expect("some transition is legal");
        config.apply_mut(t)?;
    }
    let (heads, label_ids) = repaired_analysis(n, config.arcs());
    let names = label_ids[1..].iter().map(|&l| labels.item(l).to_owned()).collect();
    Ok(DepTree::new(heads[1..].to_vec(), names)?)
}

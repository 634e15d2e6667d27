//! One sentence's forward pass, loss and gradients for either decoder.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView3, Axis};
use rand::Rng;

use super::losses::{explore_choice, graph_loss, transition_loss};
use crate::error::{Error, Result};
use crate::model::{Decoder, Parser};
use crate::neural::ops::softmax;
use crate::neural::Gradients;
use crate::transition::{
    feature_slots, initial_config, labeled_costs, GoldTree, Slot, Transition, TransitionScorer, NUM_SLOTS,
};
use crate::treebank::{DepTree, Sentence};
use crate::Rng64;

/// Training-time knobs of a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub margin: f64,
    /// Exploration probability; 0 follows the best zero-cost transition.
    pub p_agg: f64,
    /// Word dropout: a form seen `c` times becomes UNK with probability `alpha / (alpha + c)`.
    pub word_dropout_alpha: f64,
    /// Dropout on encoder outputs.
    pub dropout: bool,
}

/// Replace word ids by UNK (0) with frequency-scaled probability.
pub fn drop_words(
    forms: &[&str],
    indices: &[usize],
    counts: &HashMap<String, usize>,
    alpha: f64,
    rng: &mut Rng64,
) -> Vec<usize> {
    forms
        .iter()
        .zip(indices)
        .map(|(form, &i)| {
            if alpha <= 0.0 || i == 0 {
                return i;
            }
            let c = counts.get(*form).copied().unwrap_or(0) as f64;
            if rng.gen::<f64>() < alpha / (alpha + c) {
                0
            } else {
                i
            }
        })
        .collect()
}

/// Loss of one sentence; gradients are added to `grads`.
pub fn sentence_step(
    parser: &Parser,
    sentence: &Sentence,
    ctx: Option<ArrayView3<f32>>,
    counts: &HashMap<String, usize>,
    options: &StepOptions,
    rng: &mut Rng64,
    grads: &mut Gradients,
) -> Result<f64> {
    let forms: Vec<&str> = sentence.forms().collect();
    let indices = parser.tokens.word_indices(forms.iter().copied());
    let indices = drop_words(&forms, &indices, counts, options.word_dropout_alpha, rng);
    let (encoded, trace) = parser.encode(&forms, &indices, ctx, options.dropout.then_some(&mut *rng))?;
    let tree = DepTree::new(sentence.heads(), sentence.labels())?;
    let mut d_vectors = Array2::zeros(encoded.vectors.raw_dim());
    let mut d_pad = Array1::zeros(encoded.dim());
    let loss = match &parser.decoder {
        Decoder::Transition(scorer) => {
            let gold = GoldTree::new(&tree, &parser.labels)?;
            transition_step(parser, scorer, &encoded, &gold, options, rng, grads, &mut d_vectors, &mut d_pad)?
        }
        Decoder::Graph { arcs, labels } => {
            let (scores, arc_trace) = arcs.forward(&parser.store, &encoded);
            let out = graph_loss(&scores, tree.heads(), options.margin);
            let mut loss = out.loss;
            if out.loss > 0.0 {
                d_vectors += &arcs.backward(&parser.store, &encoded, &arc_trace, &out.d_scores, grads);
            }
            let pairs: Vec<(usize, usize)> = tree.heads().iter().enumerate().map(|(i, &h)| (h, i + 1)).collect();
            let label_trace = labels.forward(&parser.store, &encoded, &pairs)?;
            let mut d_labels = Array2::zeros(label_trace.output.raw_dim());
            for (k, row) in label_trace.output.axis_iter(Axis(0)).enumerate() {
                let gold = parser
                    .labels
                    .get(tree.label(k + 1))
                    .ok_or_else(|| Error::Invalid(format!("unknown label {:?}", tree.label(k + 1))))?;
                let p = softmax(row);
                loss -= p[gold].ln();
                let mut d = d_labels.row_mut(k);
                d.assign(&p);
                d[gold] -= 1.0;
            }
            labels.backward(&parser.store, &label_trace, &pairs, &d_labels, grads, &mut d_vectors);
            loss
        }
    };
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss".into()));
    }
    parser.encode_backward(&trace, &d_vectors, &d_pad, grads);
    Ok(loss)
}

/// Walk the sentence with the exploration policy, then backpropagate the
/// hinge of every configuration with positive loss in one batch.
#[allow(clippy::too_many_arguments)]
fn transition_step(
    parser: &Parser,
    scorer: &TransitionScorer,
    encoded: &crate::encoder::EncodedSentence,
    gold: &GoldTree,
    options: &StepOptions,
    rng: &mut Rng64,
    grads: &mut Gradients,
    d_vectors: &mut Array2<f64>,
    d_pad: &mut Array1<f64>,
) -> Result<f64> {
    let num_labels = scorer.num_labels;
    let mut config = initial_config(gold.len())?;
    let mut loss = 0.0;
    let mut slots_list: Vec<[Slot; NUM_SLOTS]> = Vec::new();
    let mut inputs: Vec<Array1<f64>> = Vec::new();
    let mut targets: Vec<(usize, usize)> = Vec::new();
    while !config.is_terminal() {
        let slots = feature_slots(&config);
        let x = scorer.input(encoded, &slots)?;
        let scores = scorer.mlp.forward_one(&parser.store, x.view())?;
        let costs = labeled_costs(&config, gold, num_labels)?;
        let hinge = transition_loss(scores.view(), &costs, options.margin)?;
        if hinge.loss > 0.0 {
            loss += hinge.loss;
            slots_list.push(slots);
            inputs.push(x);
            targets.push((hinge.zero_best, hinge.costly_best.expect("positive loss has a costly output")));
        }
        let choice = explore_choice(scores.view(), &costs, options.p_agg, rng)?;
        config.apply_mut(Transition::from_index(choice, num_labels))?;
    }
    if !inputs.is_empty() {
        let views: Vec<_> = inputs.iter().map(|x| x.view()).collect();
        let batch = ndarray::stack(Axis(0), &views).expect("equal-length inputs");
        let trace = scorer.mlp.forward(&parser.store, batch.view())?;
        let mut d_out = Array2::zeros(trace.output.raw_dim());
        for (k, &(good, bad)) in targets.iter().enumerate() {
            d_out[[k, good]] -= 1.0;
            d_out[[k, bad]] += 1.0;
        }
        let d_inputs = scorer.mlp.backward(&parser.store, &trace, d_out.view(), grads);
        scorer.scatter(&d_inputs, &slots_list, d_vectors.view_mut(), d_pad);
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rare_words_drop_more() {
        let counts: HashMap<String, usize> = [("common".to_owned(), 1000), ("rare".to_owned(), 1)].into();
        let mut rng = Rng64::seed_from_u64(0);
        let mut dropped = [0, 0];
        for _ in 0..2000 {
            let out = drop_words(&["common", "rare"], &[1, 2], &counts, 0.25, &mut rng);
            dropped[0] += usize::from(out[0] == 0);
            dropped[1] += usize::from(out[1] == 0);
        }
        assert!(dropped[0] < 10);
        assert!((300..500).contains(&dropped[1]));
        assert_eq!(drop_words(&["rare"], &[2], &counts, 0.0, &mut rng), vec![2]);
    }
}

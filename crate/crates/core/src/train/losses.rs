//! Hinge losses of both parsers and the exploration policy.

use ndarray::{Array2, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{single_root_cle, tree_score, ScoreMatrix};
use crate::Rng64;

/// Outcome of [`transition_loss`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionLoss {
    pub loss: f64,
    /// Best zero-cost output.
    pub zero_best: usize,
    /// Best positive-cost output, if any output is costly.
    pub costly_best: Option<usize>,
}

fn best_where(scores: ArrayView1<f64>, costs: &[Option<u32>], keep: impl Fn(u32) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&s, c)) in scores.iter().zip(costs).enumerate() {
        if let Some(c) = c {
            if keep(*c) && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// `max(0, margin - best zero-cost score + best costly score)`; 0 when no
/// legal output is costly. `costs[i]` is `None` for illegal outputs.
pub fn transition_loss(scores: ArrayView1<f64>, costs: &[Option<u32>], margin: f64) -> Result<TransitionLoss> {
    if scores.len() != costs.len() {
        return Err(Error::Dimension {
            op: "transition loss",
            expected: costs.len(),
            found: scores.len(),
        });
    }
    let zero_best = best_where(scores, costs, |c| c == 0)
        .ok_or_else(|| Error::Invalid("no zero-cost transition".into()))?;
    let costly_best = best_where(scores, costs, |c| c > 0);
    let loss = costly_best.map_or(0.0, |c| (margin - scores[zero_best] + scores[c]).max(0.0));
    Ok(TransitionLoss {
        loss,
        zero_best,
        costly_best,
    })
}

/// With probability `p_agg` the overall best legal output, otherwise the
/// best zero-cost one.
pub fn explore_choice(scores: ArrayView1<f64>, costs: &[Option<u32>], p_agg: f64, rng: &mut Rng64) -> Result<usize> {
    let zero = best_where(scores, costs, |c| c == 0).ok_or_else(|| Error::Invalid("no zero-cost transition".into()))?;
    if p_agg > 0.0 && rng.gen::<f64>() < p_agg {
        Ok(best_where(scores, costs, |_| true).expect("a zero-cost output exists"))
    } else {
        Ok(zero)
    }
}

/// Outcome of [`graph_loss`].
#[derive(Clone, Debug, PartialEq)]
pub struct GraphLoss {
    pub loss: f64,
    /// Cost-augmented decode.
    pub predicted: Vec<usize>,
    /// Gradient of `loss` with respect to the score matrix.
    pub d_scores: Array2<f64>,
}

/// Structured hinge: add `margin` to every non-gold arc, decode with one
/// root child, and compare to the gold tree's score.
pub fn graph_loss(scores: &ScoreMatrix, gold_heads: &[usize], margin: f64) -> GraphLoss {
    let n = gold_heads.len();
    let mut augmented = scores.clone();
    for h in 0..=n {
        for d in 1..=n {
            if h != d && gold_heads[d - 1] != h {
                augmented[[h, d]] += margin;
            }
        }
    }
    let predicted = single_root_cle(&augmented);
    let loss = (tree_score(&augmented, &predicted) - tree_score(scores, gold_heads)).max(0.0);
    let mut d_scores = Array2::zeros(scores.raw_dim());
    if loss > 0.0 {
        for d in 1..=n {
            d_scores[[predicted[d - 1], d]] += 1.0;
            d_scores[[gold_heads[d - 1], d]] -= 1.0;
        }
    }
    GraphLoss {
        loss,
        predicted,
        d_scores,
    }
}

//! Static and dynamic oracles.

use super::system::{initial_config, legal, max_transitions, Configuration, Kind, Transition};
use crate::error::{Error, Result};
use crate::repr::Vocab;
use crate::treebank::DepTree;

/// A gold tree with labels mapped to ids. Index 0 of both arrays is unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldTree {
    heads: Vec<usize>,
    labels: Vec<usize>,
    /// Position of each token in the projective order; ROOT goes last.
    order: Vec<usize>,
    projective: bool,
}

impl GoldTree {
    pub fn new(tree: &DepTree, labels: &Vocab) -> Result<Self> {
        let ids = tree
            .labels()
            .iter()
            .map(|l| labels.get(l).ok_or_else(|| Error::Invalid(format!("unknown label {l:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_ids(tree, ids))
    }

    /// Every arc gets label id 0.
    pub fn unlabeled(tree: &DepTree) -> Self {
        Self::from_ids(tree, vec![0; tree.len()])
    }

    fn from_ids(tree: &DepTree, ids: Vec<usize>) -> Self {
        let n = tree.len();
        let mut heads = vec![0];
        heads.extend_from_slice(tree.heads());
        let mut labels = vec![0];
        labels.extend(ids);
        let mut order = vec![0; n + 1];
        for (pos, &t) in projective_order(tree).iter().enumerate() {
            order[t] = pos;
        }
        order[0] = n + 1;
        GoldTree {
            heads,
            labels,
            order,
            projective: tree.is_projective(),
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn head(&self, dep: usize) -> usize {
        self.heads[dep]
    }

    pub fn label(&self, dep: usize) -> usize {
        self.labels[dep]
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    fn has_pending_dependent(&self, config: &Configuration, node: usize) -> bool {
        let pending = |d: &usize| *d != 0 && self.heads[*d] == node;
        config.stack.iter().any(pending) || config.buffer.iter().any(pending)
    }

    /// The static oracle's rule applied to an arbitrary configuration. The
    /// result is always legal.
    pub fn static_choice(&self, config: &Configuration) -> Result<Transition> {
        let legal = legal(config)?;
        let b1 = config.buffer[0];
        if let Some(s1) = config.s(1) {
            let complete = !self.has_pending_dependent(config, s1);
            if complete && self.heads[s1] == b1 {
                return Ok(Transition::LeftArc(self.labels[s1]));
            }
            if let Some(s2) = config.s(2) {
                if complete && self.heads[s1] == s2 {
                    return Ok(Transition::RightArc(self.labels[s1]));
                }
            }
            if legal.swap && self.order[s1] > self.order[b1] {
                return Ok(Transition::Swap);
            }
        }
        if legal.shift {
            Ok(Transition::Shift)
        } else {
            // Only reachable off the gold path: ROOT is at the front and s1
            // cannot be completed, so attach it anyway.
            let s1 = config.s(1).expect("non-terminal configuration with ROOT in front");
            Ok(Transition::LeftArc(self.labels[s1]))
        }
    }

    /// Gold-arc loss of the best completion, for in-order configurations on
    /// projective trees: wrong arcs already built plus unattached tokens
    /// whose gold head can no longer be reached.
    fn reachability_loss(&self, config: &Configuration) -> usize {
        let mut loss = config.arcs().filter(|&(h, _, d)| self.heads[d] != h).count();
        let in_buffer = |x: usize| config.buffer.contains(&x);
        for (pos, &d) in config.stack.iter().enumerate() {
            let h = self.heads[d];
            let below = pos.checked_sub(1).map(|p| config.stack[p]);
            if !(in_buffer(h) || Some(h) == below) {
                loss += 1;
            }
        }
        for &d in config.buffer.iter().filter(|&&d| d != 0) {
            let h = self.heads[d];
            if h != 0 && config.head(h).is_some() {
                loss += 1;
            }
        }
        loss
    }
}

/// In-order traversal from ROOT: left dependents ascending, the node, then
/// right dependents ascending. Projective trees map to `1..=N`.
pub fn projective_order(tree: &DepTree) -> Vec<usize> {
    let children = tree.children();
    let mut out = Vec::with_capacity(tree.len());
    // explicit stack of (node, expanded)
    let mut todo = vec![(0usize, false)];
    while let Some((node, expanded)) = todo.pop() {
        if expanded {
            if node != 0 {
                out.push(node);
            }
            continue;
        }
        let kids = &children[node];
        for &c in kids.iter().rev().filter(|&&c| c > node) {
            todo.push((c, false));
        }
        todo.push((node, true));
        for &c in kids.iter().rev().filter(|&&c| c < node) {
            todo.push((c, false));
        }
    }
    out
}

/// Canonical transition sequence with eager swapping.
pub fn static_oracle(tree: &DepTree, labels: &Vocab) -> Result<Vec<Transition>> {
    oracle_sequence(&GoldTree::new(tree, labels)?)
}

pub fn oracle_sequence(gold: &GoldTree) -> Result<Vec<Transition>> {
    let n = gold.len();
    let mut config = initial_config(n)?;
    let mut out = Vec::new();
    while !config.is_terminal() {
        if out.len() > max_transitions(n) {
            return Err(Error::Invalid("static oracle did not terminate".into()));
        }
        let t = gold.static_choice(&config)?;
        config.apply_mut(t)?;
        out.push(t);
    }
    Ok(out)
}

/// Unlabeled cost of each transition kind; `None` marks illegal kinds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindCosts {
    pub shift: Option<u32>,
    pub swap: Option<u32>,
    pub left_arc: Option<u32>,
    pub right_arc: Option<u32>,
}

impl KindCosts {
    pub fn get(&self, kind: Kind) -> Option<u32> {
        match kind {
            Kind::Shift => self.shift,
            Kind::Swap => self.swap,
            Kind::LeftArc => self.left_arc,
            Kind::RightArc => self.right_arc,
        }
    }

    fn set(&mut self, kind: Kind, cost: u32) {
        let slot = match kind {
            Kind::Shift => &mut self.shift,
            Kind::Swap => &mut self.swap,
            Kind::LeftArc => &mut self.left_arc,
            Kind::RightArc => &mut self.right_arc,
        };
        *slot = Some(cost);
    }
}

/// Unlabeled transition costs.
///
/// For projective gold trees and configurations still in surface order,
/// SHIFT and the arc transitions get their exact arc-hybrid costs; SWAP
/// costs 1 since no optimal projective derivation swaps. Otherwise the
/// static rule's choice costs 0 and every other legal kind costs 1.
pub fn dynamic_costs(config: &Configuration, gold: &GoldTree) -> Result<KindCosts> {
    let legal = legal(config)?;
    let mut costs = KindCosts::default();
    if gold.is_projective() && config.in_order() {
        let base = gold.reachability_loss(config);
        for kind in legal.kinds() {
            let cost = if kind == Kind::Swap {
                1
            } else {
                let t = representative(kind);
                let after = gold.reachability_loss(&config.apply(t)?);
                (after - base) as u32
            };
            costs.set(kind, cost);
        }
    } else {
        let choice = gold.static_choice(config)?.kind();
        for kind in legal.kinds() {
            costs.set(kind, u32::from(kind != choice));
        }
    }
    Ok(costs)
}

fn representative(kind: Kind) -> Transition {
    match kind {
        Kind::Shift => Transition::Shift,
        Kind::Swap => Transition::Swap,
        Kind::LeftArc => Transition::LeftArc(0),
        Kind::RightArc => Transition::RightArc(0),
    }
}

/// Cost of every scorer output (`[SHIFT, SWAP, LEFT×L, RIGHT×L]`). An arc
/// transition that builds a gold arc with the wrong label costs one more.
pub fn labeled_costs(config: &Configuration, gold: &GoldTree, num_labels: usize) -> Result<Vec<Option<u32>>> {
    let kinds = dynamic_costs(config, gold)?;
    let mut out = vec![None; 2 + 2 * num_labels];
    out[0] = kinds.shift;
    out[1] = kinds.swap;
    let s1 = config.s(1);
    let arc = |kind: Kind, head: Option<usize>, out: &mut Vec<Option<u32>>, offset: usize| {
        if let (Some(c), Some(s1), Some(h)) = (kinds.get(kind), s1, head) {
            let gold_headed = gold.head(s1) == h;
            for l in 0..num_labels {
                out[offset + l] = Some(c + u32::from(gold_headed && gold.label(s1) != l));
            }
        }
    };
    arc(Kind::LeftArc, config.b(1), &mut out, 2);
    arc(Kind::RightArc, config.s(2), &mut out, 2 + num_labels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Transition::*;

    fn tree(heads: &[usize]) -> DepTree {
        DepTree::unlabeled(heads.to_vec()).unwrap()
    }

    #[test]
    fn orders() {
        assert_eq!(projective_order(&tree(&[2, 0])), vec![1, 2]);
        let order = projective_order(&tree(&[3, 4, 0, 3]));
        assert_eq!(order, vec![1, 3, 2, 4]);
    }

    #[test]
    fn two_token_sequence() {
        let t = DepTree::new(vec![2, 0], vec!["l".into(), "root".into()]).unwrap();
        let labels = Vocab::from_items(["l", "root"]);
        assert_eq!(
            static_oracle(&t, &labels).unwrap(),
            vec![Shift, LeftArc(0), Shift, LeftArc(1)]
        );
    }

    #[test]
    fn nonprojective_needs_swap() {
        let gold = GoldTree::unlabeled(&tree(&[3, 4, 0, 3]));
        let seq = oracle_sequence(&gold).unwrap();
        assert!(seq.contains(&Swap));
        let mut c = initial_config(4).unwrap();
        for t in seq {
            c.apply_mut(t).unwrap();
        }
        assert_eq!(c.heads()[1..], [Some(3), Some(4), Some(0), Some(3)]);
    }

    #[test]
    fn shift_loses_the_left_arc() {
        let gold = GoldTree::unlabeled(&tree(&[2, 0]));
        let c = initial_config(2).unwrap().apply(Shift).unwrap();
        let costs = dynamic_costs(&c, &gold).unwrap();
        assert_eq!(costs.shift, Some(1));
        assert_eq!(costs.left_arc, Some(0));
        assert_eq!(costs.swap, Some(1));
        assert_eq!(costs.right_arc, None);
    }

    #[test]
    fn wrong_label_costs_one() {
        let t = DepTree::new(vec![2, 0], vec!["a".into(), "root".into()]).unwrap();
        let gold = GoldTree::new(&t, &Vocab::from_items(["a", "root"])).unwrap();
        let c = initial_config(2).unwrap().apply(Shift).unwrap();
        let costs = labeled_costs(&c, &gold, 2).unwrap();
        assert_eq!(costs, vec![Some(1), Some(1), Some(0), Some(1), None, None]);
    }
}

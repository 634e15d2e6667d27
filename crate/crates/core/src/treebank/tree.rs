use std::collections::BTreeSet;

use crate::error::TreeError;
use crate::treebank::Sentence;

/// A validated dependency tree over tokens 1..=N with a single root.
///
/// `heads[i]` and `labels[i]` describe token `i + 1`; head 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    heads: Vec<usize>,
    labels: Vec<String>,
}

impl DepTree {
    pub fn new(heads: Vec<usize>, labels: Vec<String>) -> Result<Self, TreeError> {
        if heads.len() != labels.len() {
            return Err(TreeError::LengthMismatch {
                heads: heads.len(),
                labels: labels.len(),
            });
        }
        check_heads(&heads)?;
        Ok(DepTree { heads, labels })
    }

    /// Tree with every label set to `"_"`.
    pub fn unlabeled(heads: Vec<usize>) -> Result<Self, TreeError> {
        let labels = vec!["_".to_owned(); heads.len()];
        Self::new(heads, labels)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Head of the 1-based token `dep`.
    pub fn head(&self, dep: usize) -> usize {
        self.heads[dep - 1]
    }

    pub fn label(&self, dep: usize) -> &str {
        &self.labels[dep - 1]
    }

    /// The unique root-attached token.
    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).map(|i| i + 1).unwrap()
    }

    /// Dependents of every node 0..=N in ascending order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len() + 1];
        for (i, &h) in self.heads.iter().enumerate() {
            children[h].push(i + 1);
        }
        children
    }

    /// Number of arcs on the path from the root-attached token to each
    /// token (index 0 is unused and set to 0).
    pub fn depths(&self) -> Vec<usize> {
        let n = self.len();
        let mut depth = vec![usize::MAX; n + 1];
        depth[0] = 0;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut node = start;
            while depth[node] == usize::MAX {
                path.push(node);
                node = self.heads[node - 1];
            }
            let mut d = depth[node];
            for &p in path.iter().rev() {
                d += 1;
                depth[p] = d;
            }
        }
        // arcs from the artificial root are not counted
        depth.iter().map(|&d| d.saturating_sub(1)).collect()
    }

    pub fn is_projective(&self) -> bool {
        nonprojective_arcs(self).is_empty()
    }
}

fn check_heads(heads: &[usize]) -> Result<(), TreeError> {
    let n = heads.len();
    if n == 0 {
        return Err(TreeError::Empty);
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(TreeError::HeadOutOfRange {
                token: i + 1,
                head: h,
                len: n,
            });
        }
        if h == i + 1 {
            return Err(TreeError::SelfLoop(h));
        }
    }

    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            let pos = path.iter().position(|&p| p == node).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            return Err(TreeError::Cycle(cycle));
        }
        for p in path {
            state[p] = 2;
        }
    }

    let roots: Vec<usize> = heads
        .iter()
        .enumerate()
        .filter(|&(_, &h)| h == 0)
        .map(|(i, _)| i + 1)
        .collect();
    match roots.len() {
        0 => Err(TreeError::NoRoot),
        1 => Ok(()),
        _ => Err(TreeError::MultipleRoots(roots)),
    }
}

/// Check a sentence's gold annotation and return it as a tree.
pub fn validate_tree(sentence: &Sentence) -> Result<DepTree, TreeError> {
    DepTree::new(sentence.heads(), sentence.labels())
}

/// Dependents whose incoming arc is non-projective: some token strictly
/// between head and dependent is not dominated by the head.
pub fn nonprojective_arcs(tree: &DepTree) -> BTreeSet<usize> {
    let n = tree.len();
    let children = tree.children();

    // Pre-order entry/exit times make dominance an interval test.
    let mut enter = vec![0usize; n + 1];
    let mut exit = vec![0usize; n + 1];
    let mut clock = 0;
    let mut stack = vec![(0usize, 0usize)];
    while let Some((node, next_child)) = stack.pop() {
        if next_child == 0 {
            enter[node] = clock;
            clock += 1;
        }
        if let Some(&child) = children[node].get(next_child) {
            stack.push((node, next_child + 1));
            stack.push((child, 0));
        } else {
            exit[node] = clock;
        }
    }
    let dominates = |h: usize, k: usize| enter[h] <= enter[k] && enter[k] < exit[h];

    let mut result = BTreeSet::new();
    for dep in 1..=n {
        let head = tree.head(dep);
        let (lo, hi) = if head < dep { (head, dep) } else { (dep, head) };
        if ((lo + 1)..hi).any(|k| !dominates(head, k)) {
            result.insert(dep);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(heads: &[usize]) -> DepTree {
        DepTree::unlabeled(heads.to_vec()).unwrap()
    }

    #[test]
    fn simple_tree_is_valid() {
        let t = tree(&[2, 0]);
        assert_eq!(t.root(), 2);
        assert_eq!(t.head(1), 2);
    }

    #[test]
    fn two_cycle_is_rejected() {
        assert_eq!(
            DepTree::unlabeled(vec![2, 1]),
            Err(TreeError::Cycle(vec![1, 2]))
        );
    }

    #[test]
    fn multiple_roots_rejected() {
        assert_eq!(
            DepTree::unlabeled(vec![0, 0]),
            Err(TreeError::MultipleRoots(vec![1, 2]))
        );
    }

    #[test]
    fn out_of_range_and_self_loops() {
        assert!(matches!(
            DepTree::unlabeled(vec![0, 5]),
            Err(TreeError::HeadOutOfRange { token: 2, .. })
        ));
        assert_eq!(DepTree::unlabeled(vec![0, 2]), Err(TreeError::SelfLoop(2)));
        assert_eq!(DepTree::unlabeled(vec![]), Err(TreeError::Empty));
    }

    #[test]
    fn nonprojective_examples() {
        assert!(nonprojective_arcs(&tree(&[2, 0])).is_empty());
        assert!(nonprojective_arcs(&tree(&[0])).is_empty());
        let np = nonprojective_arcs(&tree(&[3, 4, 0, 3]));
        assert_eq!(np.into_iter().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn depths_follow_paths() {
        let t = tree(&[2, 0, 2]);
        assert_eq!(&t.depths()[1..], &[1, 0, 1]);
        let chain: Vec<usize> = (0..12).collect();
        let t = tree(&chain);
        assert_eq!(t.depths()[12], 11);
    }
}

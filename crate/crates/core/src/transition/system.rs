//! Arc-hybrid transitions with SWAP. ROOT (index 0) sits at the end of the
//! buffer and takes its dependent through LEFT_ARC.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Shift,
    Swap,
    LeftArc,
    RightArc,
}

/// A transition; arc transitions carry a label id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    Shift,
    Swap,
    LeftArc(usize),
    RightArc(usize),
}

impl Transition {
    pub fn kind(self) -> Kind {
        match self {
            Transition::Shift => Kind::Shift,
            Transition::Swap => Kind::Swap,
            Transition::LeftArc(_) => Kind::LeftArc,
            Transition::RightArc(_) => Kind::RightArc,
        }
    }

    pub fn label(self) -> Option<usize> {
        match self {
            Transition::LeftArc(l) | Transition::RightArc(l) => Some(l),
            _ => None,
        }
    }

    /// Position in the scorer output `[SHIFT, SWAP, LEFT×L, RIGHT×L]`.
    pub fn index(self, num_labels: usize) -> usize {
        match self {
            Transition::Shift => 0,
            Transition::Swap => 1,
            Transition::LeftArc(l) => 2 + l,
            Transition::RightArc(l) => 2 + num_labels + l,
        }
    }

    pub fn from_index(index: usize, num_labels: usize) -> Self {
        match index {
            0 => Transition::Shift,
            1 => Transition::Swap,
            i if i < 2 + num_labels => Transition::LeftArc(i - 2),
            i => {
                assert!(i < 2 + 2 * num_labels, "transition index {i} out of range");
                Transition::RightArc(i - 2 - num_labels)
            }
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Shift => write!(f, "SHIFT"),
            Transition::Swap => write!(f, "SWAP"),
            Transition::LeftArc(l) => write!(f, "LEFT_ARC({l})"),
            Transition::RightArc(l) => write!(f, "RIGHT_ARC({l})"),
        }
    }
}

/// Number of scorer outputs for `num_labels` labels.
pub fn num_transitions(num_labels: usize) -> usize {
    2 + 2 * num_labels
}

/// Which transition kinds are allowed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LegalKinds {
    pub shift: bool,
    pub swap: bool,
    pub left_arc: bool,
    pub right_arc: bool,
}

impl LegalKinds {
    pub fn contains(&self, kind: Kind) -> bool {
        match kind {
            Kind::Shift => self.shift,
            Kind::Swap => self.swap,
            Kind::LeftArc => self.left_arc,
            Kind::RightArc => self.right_arc,
        }
    }

    pub fn allows(&self, t: Transition) -> bool {
        self.contains(t.kind())
    }

    pub fn kinds(&self) -> Vec<Kind> {
        [Kind::Shift, Kind::Swap, Kind::LeftArc, Kind::RightArc]
            .into_iter()
            .filter(|&k| self.contains(k))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// Top is the last element.
    pub stack: Vec<usize>,
    /// Always ends with ROOT (0).
    pub buffer: VecDeque<usize>,
    heads: Vec<Option<usize>>,
    labels: Vec<Option<usize>>,
    order: Vec<usize>,
}

pub fn initial_config(n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::Empty("sentence"));
    }
    let mut buffer: VecDeque<usize> = (1..=n).collect();
    buffer.push_back(0);
    Ok(Configuration {
        stack: Vec::new(),
        buffer,
        heads: vec![None; n + 1],
        labels: vec![None; n + 1],
        order: Vec::new(),
    })
}

impl Configuration {
    /// Number of tokens, ROOT excluded.
    pub fn len(&self) -> usize {
        self.heads.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_terminal(&self) -> bool {
        self.stack.is_empty() && self.buffer.len() == 1 && self.buffer[0] == 0
    }

    /// `i`-th stack item from the top, 1-based.
    pub fn s(&self, i: usize) -> Option<usize> {
        self.stack.len().checked_sub(i).map(|p| self.stack[p])
    }

    /// `i`-th buffer item, 1-based.
    pub fn b(&self, i: usize) -> Option<usize> {
        self.buffer.get(i - 1).copied()
    }

    pub fn head(&self, dep: usize) -> Option<usize> {
        self.heads[dep]
    }

    pub fn label(&self, dep: usize) -> Option<usize> {
        self.labels[dep]
    }

    pub fn heads(&self) -> &[Option<usize>] {
        &self.heads
    }

    /// `(head, label, dependent)` in the order the arcs were built.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.order
            .iter()
            .map(|&d| (self.heads[d].expect("attached"), self.labels[d].expect("attached"), d))
    }

    pub fn leftmost_dependent(&self, node: usize) -> Option<usize> {
        (1..self.heads.len()).find(|&d| self.heads[d] == Some(node))
    }

    pub fn rightmost_dependent(&self, node: usize) -> Option<usize> {
        (1..self.heads.len()).rev().find(|&d| self.heads[d] == Some(node))
    }

    /// True when stack and buffer are both in surface order, i.e. no SWAP
    /// has taken effect.
    pub fn in_order(&self) -> bool {
        let buffer_tokens = self.buffer.len() - 1;
        self.stack.windows(2).all(|w| w[0] < w[1])
            && self.buffer.iter().take(buffer_tokens).collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1])
            && match (self.stack.last(), self.buffer.front()) {
                (Some(&s), Some(&b)) if b != 0 => s < b,
                _ => true,
            }
    }

    pub fn legal(&self) -> Result<LegalKinds> {
        legal(self)
    }

    pub fn apply(&self, t: Transition) -> Result<Configuration> {
        let mut next = self.clone();
        next.apply_mut(t)?;
        Ok(next)
    }

    pub fn apply_mut(&mut self, t: Transition) -> Result<()> {
        if !legal(self)?.allows(t) {
            return Err(Error::IllegalTransition(format!("{t} in {self}")));
        }
        match t {
            Transition::Shift => {
                let b = self.buffer.pop_front().expect("legal shift");
                self.stack.push(b);
            }
            Transition::Swap => {
                let s = self.stack.pop().expect("legal swap");
                self.buffer.insert(1, s);
            }
            Transition::LeftArc(l) => {
                let s = self.stack.pop().expect("legal left arc");
                self.attach(self.buffer[0], l, s);
            }
            Transition::RightArc(l) => {
                let s = self.stack.pop().expect("legal right arc");
                self.attach(*self.stack.last().expect("legal right arc"), l, s);
            }
        }
        Ok(())
    }

    fn attach(&mut self, head: usize, label: usize, dep: usize) {
        self.heads[dep] = Some(head);
        self.labels[dep] = Some(label);
        self.order.push(dep);
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stack {:?} buffer {:?}", self.stack, self.buffer)
    }
}

pub fn legal(config: &Configuration) -> Result<LegalKinds> {
    if config.is_terminal() {
        return Err(Error::Terminal);
    }
    let front = config.buffer[0];
    let top = config.stack.last().copied();
    Ok(LegalKinds {
        shift: front != 0,
        left_arc: top.is_some(),
        right_arc: config.stack.len() >= 2,
        swap: matches!(top, Some(s) if front != 0 && s < front),
    })
}

pub fn apply(config: &Configuration, t: Transition) -> Result<Configuration> {
    config.apply(t)
}

/// A feature slot: a token position (0 = ROOT) or padding.
pub type Slot = Option<usize>;

pub const NUM_SLOTS: usize = 12;

/// For s1, s2, s3 and b1: the item, its leftmost and its rightmost
/// dependent under the current arcs.
pub fn feature_slots(config: &Configuration) -> [Slot; NUM_SLOTS] {
    let mut slots = [None; NUM_SLOTS];
    let anchors = [config.s(1), config.s(2), config.s(3), config.b(1)];
    for (i, anchor) in anchors.into_iter().enumerate() {
        if let Some(node) = anchor {
            slots[3 * i] = Some(node);
            slots[3 * i + 1] = config.leftmost_dependent(node);
            slots[3 * i + 2] = config.rightmost_dependent(node);
        }
    }
    slots
}

/// Upper bound on the length of any transition sequence for `n` tokens.
/// Each ordered pair of tokens can be swapped at most once and every swap
/// costs one extra shift.
pub fn max_transitions(n: usize) -> usize {
    n * n + n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(stack: &[usize], buffer: &[usize], n: usize) -> Configuration {
        let mut c = initial_config(n).unwrap();
        c.stack = stack.to_vec();
        c.buffer = buffer.iter().copied().collect();
        c
    }

    #[test]
    fn initial() {
        let c = initial_config(2).unwrap();
        assert!(c.stack.is_empty());
        assert_eq!(c.buffer, [1, 2, 0]);
        assert_eq!(c.arcs().count(), 0);
        assert_eq!(initial_config(1).unwrap().buffer, [1, 0]);
        assert!(!initial_config(1).unwrap().is_terminal());
        assert!(initial_config(0).is_err());
    }

    #[test]
    fn legality() {
        let only_shift = LegalKinds {
            shift: true,
            ..Default::default()
        };
        assert_eq!(legal(&initial_config(2).unwrap()).unwrap(), only_shift);
        let l = legal(&config(&[1], &[2, 0], 2)).unwrap();
        assert_eq!(l.kinds(), vec![Kind::Shift, Kind::Swap, Kind::LeftArc]);
        let l = legal(&config(&[1], &[0], 1)).unwrap();
        assert_eq!(l.kinds(), vec![Kind::LeftArc]);
        assert!(matches!(legal(&config(&[], &[0], 1)), Err(Error::Terminal)));
    }

    #[test]
    fn effects() {
        let c = initial_config(2).unwrap().apply(Transition::Shift).unwrap();
        assert_eq!((c.stack.clone(), c.buffer.clone()), (vec![1], VecDeque::from([2, 0])));
        let c = c.apply(Transition::LeftArc(7)).unwrap();
        assert!(c.stack.is_empty());
        assert_eq!(c.arcs().collect::<Vec<_>>(), vec![(2, 7, 1)]);
        let c = config(&[1], &[2, 3, 0], 3).apply(Transition::Swap).unwrap();
        assert!(c.stack.is_empty());
        assert_eq!(c.buffer, [2, 1, 3, 0]);
        assert!(!c.in_order());
        assert!(initial_config(2).unwrap().apply(Transition::RightArc(0)).is_err());
    }

    #[test]
    fn slots() {
        let s = feature_slots(&initial_config(3).unwrap());
        assert_eq!(s[9], Some(1));
        assert_eq!(s.iter().filter(|x| x.is_none()).count(), 11);
        let c = initial_config(2)
            .unwrap()
            .apply(Transition::Shift)
            .unwrap()
            .apply(Transition::LeftArc(0))
            .unwrap()
            .apply(Transition::Shift)
            .unwrap();
        let s = feature_slots(&c);
        assert_eq!(s[0], Some(2));
        assert_eq!(s[1], Some(1));
        assert_eq!(s[2], Some(1));
        assert_eq!(s[9], Some(0));
    }

    #[test]
    fn index_round_trip() {
        for i in 0..num_transitions(17) {
            assert_eq!(Transition::from_index(i, 17).index(17), i);
        }
        assert_eq!(num_transitions(17), 36);
    }
}

//! Attachment scores and their breakdowns. Every token counts, punctuation
//! included.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::treebank::{nonprojective_arcs, validate_tree, DepTree, Sentence};

/// A ratio kept with its counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ratio {
    pub numerator: usize,
    pub denominator: usize,
}

impl Ratio {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        Ratio { numerator, denominator }
    }

    /// `None` when the denominator is zero.
    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    fn add(&mut self, correct: bool) {
        self.denominator += 1;
        self.numerator += usize::from(correct);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttachmentScores {
    pub las: f64,
    pub uas: f64,
    pub labeled: Ratio,
    pub unlabeled: Ratio,
}

fn check_lengths(gold: usize, pred: usize) -> Result<()> {
    if gold != pred {
        return Err(Error::Dimension {
            op: "gold/predicted alignment",
            expected: gold,
            found: pred,
        });
    }
    Ok(())
}

/// LAS and UAS of one tree pair.
pub fn attachment_scores(gold: &DepTree, pred: &DepTree) -> Result<AttachmentScores> {
    corpus_attachment_scores(std::slice::from_ref(gold), std::slice::from_ref(pred))
}

/// Token-level LAS and UAS pooled over aligned corpora.
pub fn corpus_attachment_scores(gold: &[DepTree], pred: &[DepTree]) -> Result<AttachmentScores> {
    check_lengths(gold.len(), pred.len())?;
    let mut labeled = Ratio::default();
    let mut unlabeled = Ratio::default();
    for (g, p) in gold.iter().zip(pred) {
        check_lengths(g.len(), p.len())?;
        for d in 1..=g.len() {
            let head_ok = g.head(d) == p.head(d);
            unlabeled.add(head_ok);
            labeled.add(head_ok && g.label(d) == p.label(d));
        }
    }
    if labeled.denominator == 0 {
        return Err(Error::Empty("corpus"));
    }
    Ok(AttachmentScores {
        las: labeled.value().unwrap_or(0.0),
        uas: unlabeled.value().unwrap_or(0.0),
        labeled,
        unlabeled,
    })
}

/// Dependency-length bin: root attachments, lengths 1 to 9, or 10 and more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LengthBin {
    Root,
    Exact(usize),
    AtLeast10,
}

impl fmt::Display for LengthBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthBin::Root => f.write_str("root"),
            LengthBin::Exact(n) => write!(f, "{n}"),
            LengthBin::AtLeast10 => f.write_str(">=10"),
        }
    }
}

pub fn dep_length(head: usize, dep: usize) -> LengthBin {
    if head == 0 {
        return LengthBin::Root;
    }
    match head.abs_diff(dep) {
        n if n >= 10 => LengthBin::AtLeast10,
        n => LengthBin::Exact(n),
    }
}

/// Distance bin: 0 to 9 arcs from the root-attached token, or 10 and more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistanceBin {
    Exact(usize),
    AtLeast10,
}

impl fmt::Display for DistanceBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceBin::Exact(n) => write!(f, "{n}"),
            DistanceBin::AtLeast10 => f.write_str(">=10"),
        }
    }
}

fn distance_bin(depth: usize) -> DistanceBin {
    if depth >= 10 {
        DistanceBin::AtLeast10
    } else {
        DistanceBin::Exact(depth)
    }
}

/// Root distance of token `token` (1-based).
pub fn root_distance(tree: &DepTree, token: usize) -> DistanceBin {
    distance_bin(tree.depths()[token])
}

/// Per-bin precision, recall and F.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BinScore {
    /// Correct predicted arcs over predicted arcs in the bin.
    pub precision: Ratio,
    /// Correct gold arcs over gold arcs in the bin.
    pub recall: Ratio,
}

impl BinScore {
    /// Harmonic mean, defined when both precision and recall are.
    pub fn f(&self) -> Option<f64> {
        let p = self.precision.value()?;
        let r = self.recall.value()?;
        Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
    }
}

/// Labeled P/R/F per bin. Each arc is `(bin, labeled_correct)`; gold arcs
/// are binned by their gold properties, predicted arcs by predicted ones.
/// Bins holding neither kind of arc are absent.
pub fn binned_f<B: Ord + Clone>(gold_arcs: &[(B, bool)], pred_arcs: &[(B, bool)]) -> BTreeMap<B, BinScore> {
    let mut out: BTreeMap<B, BinScore> = BTreeMap::new();
    for (bin, ok) in gold_arcs {
        out.entry(bin.clone()).or_default().recall.add(*ok);
    }
    for (bin, ok) in pred_arcs {
        out.entry(bin.clone()).or_default().precision.add(*ok);
    }
    out
}

/// A gold and a predicted analysis of the same sentence.
#[derive(Clone, Debug)]
pub struct AlignedPair<'a> {
    pub gold: &'a DepTree,
    pub pred: &'a DepTree,
    pub upos: Vec<&'a str>,
}

impl AlignedPair<'_> {
    fn correct(&self, d: usize) -> bool {
        self.gold.head(d) == self.pred.head(d) && self.gold.label(d) == self.pred.label(d)
    }
}

pub fn by_dep_length(pairs: &[AlignedPair<'_>]) -> BTreeMap<LengthBin, BinScore> {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for p in pairs {
        for d in 1..=p.gold.len() {
            let ok = p.correct(d);
            gold.push((dep_length(p.gold.head(d), d), ok));
            pred.push((dep_length(p.pred.head(d), d), ok));
        }
    }
    binned_f(&gold, &pred)
}

/// Gold arcs binned by gold-tree depth, predicted arcs by predicted-tree depth.
pub fn by_root_distance(pairs: &[AlignedPair<'_>]) -> BTreeMap<DistanceBin, BinScore> {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for p in pairs {
        let gd = p.gold.depths();
        let pd = p.pred.depths();
        for d in 1..=p.gold.len() {
            let ok = p.correct(d);
            gold.push((distance_bin(gd[d]), ok));
            pred.push((distance_bin(pd[d]), ok));
        }
    }
    binned_f(&gold, &pred)
}

/// Precision over arcs non-projective in the prediction, recall over arcs
/// non-projective in the gold tree.
pub fn nonproj_pr(pairs: &[AlignedPair<'_>]) -> BinScore {
    let mut score = BinScore::default();
    for p in pairs {
        for d in nonprojective_arcs(p.pred) {
            score.precision.add(p.correct(d));
        }
        for d in nonprojective_arcs(p.gold) {
            score.recall.add(p.correct(d));
        }
    }
    score
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupMetrics {
    /// Labeled attachment accuracy per gold UPOS.
    pub by_upos: BTreeMap<String, Ratio>,
    /// Precision keyed by predicted relation, recall by gold relation.
    pub by_deprel: BTreeMap<String, BinScore>,
}

pub fn group_metrics(pairs: &[AlignedPair<'_>]) -> GroupMetrics {
    let mut out = GroupMetrics::default();
    for p in pairs {
        for d in 1..=p.gold.len() {
            let ok = p.correct(d);
            out.by_upos.entry(p.upos[d - 1].to_owned()).or_default().add(ok);
            out.by_deprel
                .entry(p.gold.label(d).to_owned())
                .or_default()
                .recall
                .add(ok);
            out.by_deprel
                .entry(p.pred.label(d).to_owned())
                .or_default()
                .precision
                .add(ok);
        }
    }
    out
}

/// Sentence-length bin: 1-10, 11-20, ..., 41-50, 50+.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentenceBin {
    UpTo(usize),
    Over50,
}

impl fmt::Display for SentenceBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceBin::UpTo(hi) => write!(f, "{}-{}", hi - 9, hi),
            SentenceBin::Over50 => f.write_str("50+"),
        }
    }
}

pub fn sentence_bin(len: usize) -> SentenceBin {
    if len > 50 {
        SentenceBin::Over50
    } else {
        SentenceBin::UpTo(len.max(1).div_ceil(10) * 10)
    }
}

/// Token-level LAS pooled within sentence-length bins.
pub fn las_by_sentence_length(pairs: &[AlignedPair<'_>]) -> BTreeMap<SentenceBin, Ratio> {
    let mut out: BTreeMap<SentenceBin, Ratio> = BTreeMap::new();
    for p in pairs {
        let bin = out.entry(sentence_bin(p.gold.len())).or_default();
        for d in 1..=p.gold.len() {
            bin.add(p.correct(d));
        }
    }
    out
}

/// Validated trees of aligned gold and predicted sentences.
pub fn aligned_trees(gold: &[Sentence], pred: &[Sentence]) -> Result<Vec<(DepTree, DepTree)>> {
    check_lengths(gold.len(), pred.len())?;
    gold.iter()
        .zip(pred)
        .map(|(g, p)| {
            check_lengths(g.len(), p.len())?;
            Ok((validate_tree(g)?, validate_tree(p)?))
        })
        .collect()
}

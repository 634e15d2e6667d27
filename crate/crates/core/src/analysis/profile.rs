//! Error profiles of one or more systems against a gold corpus, and their
//! CSV form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::metrics::{
    aligned_trees, by_dep_length, by_root_distance, corpus_attachment_scores, group_metrics,
    las_by_sentence_length, nonproj_pr, AlignedPair, BinScore, DistanceBin, GroupMetrics, LengthBin, Ratio,
    SentenceBin,
};
use crate::error::{Error, Result};
use crate::treebank::{DepTree, Sentence};

/// Treebank key of pooled profiles.
pub const ALL_TREEBANKS: &str = "all";

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorProfile {
    pub system: String,
    pub treebank: String,
    pub las: Ratio,
    pub uas: Ratio,
    pub by_dep_length: BTreeMap<LengthBin, BinScore>,
    pub by_root_distance: BTreeMap<DistanceBin, BinScore>,
    pub nonproj: BinScore,
    pub groups: GroupMetrics,
    pub by_sentence_length: BTreeMap<SentenceBin, Ratio>,
}

fn profile_of(system: &str, treebank: &str, trees: &[(DepTree, DepTree)], gold: &[&Sentence]) -> Result<ErrorProfile> {
    let pairs: Vec<AlignedPair<'_>> = trees
        .iter()
        .zip(gold)
        .map(|((g, p), s)| AlignedPair {
            gold: g,
            pred: p,
            upos: s.tokens.iter().map(|t| t.upos.as_str()).collect(),
        })
        .collect();
    let golds: Vec<DepTree> = trees.iter().map(|(g, _)| g.clone()).collect();
    let preds: Vec<DepTree> = trees.iter().map(|(_, p)| p.clone()).collect();
    let scores = corpus_attachment_scores(&golds, &preds)?;
    Ok(ErrorProfile {
        system: system.to_owned(),
        treebank: treebank.to_owned(),
        las: scores.labeled,
        uas: scores.unlabeled,
        by_dep_length: by_dep_length(&pairs),
        by_root_distance: by_root_distance(&pairs),
        nonproj: nonproj_pr(&pairs),
        groups: group_metrics(&pairs),
        by_sentence_length: las_by_sentence_length(&pairs),
    })
}

/// One pooled profile per system, followed (when `group_by_language`) by
/// one per system and treebank id in sorted order.
pub fn compute_profile(
    gold: &[Sentence],
    systems: &[(String, Vec<Sentence>)],
    group_by_language: bool,
) -> Result<Vec<ErrorProfile>> {
    if gold.is_empty() {
        return Err(Error::Empty("gold corpus"));
    }
    let mut out = Vec::new();
    for (name, pred) in systems {
        let trees = aligned_trees(gold, pred)?;
        for (g, p) in gold.iter().zip(pred) {
            if g.forms().ne(p.forms()) {
                return Err(Error::Invalid(format!(
                    "system {name}: token forms differ from the gold corpus"
                )));
            }
        }
        let all: Vec<&Sentence> = gold.iter().collect();
        out.push(profile_of(name, ALL_TREEBANKS, &trees, &all)?);
        if group_by_language {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in gold.iter().enumerate() {
                groups.entry(s.treebank_id.as_str()).or_default().push(i);
            }
            for (tb, idx) in groups {
                let sub_trees: Vec<_> = idx.iter().map(|&i| trees[i].clone()).collect();
                let sub_gold: Vec<&Sentence> = idx.iter().map(|&i| &gold[i]).collect();
                out.push(profile_of(name, tb, &sub_trees, &sub_gold)?);
            }
        }
    }
    Ok(out)
}

/// Header lines of the CSV, each starting with `#`.
pub const CSV_HEADER: &str = "\
# twinparse error profile
# tokens=all (punctuation included)
# ratios=fractions in [0,1]; numerator and denominator are token counts
# empty_bins=omitted
# dep_length=bins root,1..9,>=10; gold arcs binned by gold head, predicted arcs by predicted head
# root_distance=arcs from the root-attached token (that token is 0), bins 0..9,>=10; gold arcs in the gold tree, predicted arcs in the predicted tree
# nonproj=precision over predicted non-projective arcs, recall over gold non-projective arcs
# deprel=precision keyed by predicted relation, recall keyed by gold relation
# upos=labeled attachment accuracy keyed by gold UPOS
# sentence_length=token-level LAS pooled per bin 1-10,11-20,21-30,31-40,41-50,50+
system,treebank,metric,bin,value,numerator,denominator
";

fn ratio_row(out: &mut String, p: &ErrorProfile, metric: &str, bin: &str, r: Ratio) {
    if let Some(v) = r.value() {
        let _ = writeln!(
            out,
            "{},{},{metric},{bin},{v:.4},{},{}",
            p.system, p.treebank, r.numerator, r.denominator
        );
    }
}

fn score_rows(out: &mut String, p: &ErrorProfile, metric: &str, bin: &str, s: &BinScore, with_f: bool) {
    ratio_row(out, p, &format!("{metric}_precision"), bin, s.precision);
    ratio_row(out, p, &format!("{metric}_recall"), bin, s.recall);
    if with_f {
        if let Some(f) = s.f() {
            let _ = writeln!(out, "{},{},{metric}_f,{bin},{f:.4},,", p.system, p.treebank);
        }
    }
}

/// CSV text: header, then rows in profile order with a fixed metric order.
pub fn profile_csv(profiles: &[ErrorProfile]) -> String {
    let mut out = String::from(CSV_HEADER);
    for p in profiles {
        ratio_row(&mut out, p, "las", "all", p.las);
        ratio_row(&mut out, p, "uas", "all", p.uas);
        for (bin, s) in &p.by_dep_length {
            score_rows(&mut out, p, "dep_length", &bin.to_string(), s, true);
        }
        for (bin, s) in &p.by_root_distance {
            score_rows(&mut out, p, "root_distance", &bin.to_string(), s, true);
        }
        score_rows(&mut out, p, "nonproj", "all", &p.nonproj, false);
        for (tag, r) in &p.groups.by_upos {
            ratio_row(&mut out, p, "upos_las", tag, *r);
        }
        for (rel, s) in &p.groups.by_deprel {
            score_rows(&mut out, p, "deprel", rel, s, false);
        }
        for (bin, r) in &p.by_sentence_length {
            ratio_row(&mut out, p, "sentence_length_las", &bin.to_string(), *r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::read_conllu;

    const GOLD: &str = "1\ta\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn gold_against_itself_is_perfect() {
        let gold = read_conllu(GOLD).unwrap();
        let p = compute_profile(&gold, &[("g".into(), gold.clone())], false).unwrap();
        assert_eq!(p[0].las.value(), Some(1.0));
        assert!(p[0].by_dep_length.values().all(|b| b.f() == Some(1.0)));
        assert_eq!(p[0].nonproj.precision.value(), None);
        let csv = profile_csv(&p);
        assert!(csv.contains("g,all,las,all,1.0000,2,2\n"));
    }

    #[test]
    fn misaligned_corpora() {
        let gold = read_conllu(GOLD).unwrap();
        assert!(compute_profile(&gold, &[("x".into(), vec![])], false).is_err());
    }
}

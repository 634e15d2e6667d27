//! A small deterministic toy language for end-to-end checks, and
//! synthetic contextual vectors that encode gold head offsets.
//!
//! Sentences are `ADV? NP (who VI)? VP ADV? (who VI)? .?` with
//! `VP = VI | VT NP (with DET N)?`. The relative clause always modifies
//! the subject; after an intransitive main verb it may be extraposed to
//! the end of the sentence, which makes the subject-to-clause arc
//! non-projective. The `with` phrase attaches to the verb or to the
//! object at random, so its head cannot be read off the surface.

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::repr::ContextualStore;
use crate::treebank::{Sentence, Token};
use crate::Rng64;

const DET: &[&str] = &["the", "a", "every", "this"];
const ADJ: &[&str] = &["old", "young", "small", "big", "happy", "red"];
const NOUN: &[&str] = &["man", "woman", "dog", "cat", "child", "bird", "farmer", "teacher"];
const VT: &[&str] = &["sees", "likes", "follows", "finds", "helps"];
const VI: &[&str] = &["arrived", "slept", "left", "smiled", "laughed"];
const ADV: &[&str] = &["yesterday", "today", "quickly", "again"];
const INSTRUMENT: &[&str] = &["stick", "telescope", "hat", "ball"];

/// Sizes of the committed toy treebank.
pub const TOY_TRAIN: usize = 200;
pub const TOY_DEV: usize = 50;
/// Seeds of the committed toy splits.
pub const TOY_TRAIN_SEED: u64 = 20;
pub const TOY_DEV_SEED: u64 = 21;

struct Builder {
    tokens: Vec<Token>,
}

impl Builder {
    /// Push a token with a placeholder head; returns its 1-based id.
    fn push(&mut self, form: &str, upos: &str, deprel: &str) -> usize {
        let id = self.tokens.len() + 1;
        self.tokens.push(Token::new(id, form, upos, 0, deprel));
        id
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.tokens[dep - 1].head = head;
    }

    fn noun_phrase(&mut self, rng: &mut Rng64, deprel: &str) -> usize {
        let det = self.push(pick(DET, rng), "DET", "det");
        let adj = rng.gen_bool(0.4).then(|| self.push(pick(ADJ, rng), "ADJ", "amod"));
        let noun = self.push(pick(NOUN, rng), "NOUN", deprel);
        self.attach(det, noun);
        if let Some(a) = adj {
            self.attach(a, noun);
        }
        noun
    }

    fn relative_clause(&mut self, rng: &mut Rng64, noun: usize) {
        let who = self.push("who", "PRON", "nsubj");
        let verb = self.push(pick(VI, rng), "VERB", "acl:relcl");
        self.attach(who, verb);
        self.attach(verb, noun);
    }
}

fn pick<'a>(words: &[&'a str], rng: &mut Rng64) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

/// One toy sentence.
pub fn toy_sentence(rng: &mut Rng64) -> Sentence {
    let mut b = Builder { tokens: Vec::new() };
    let fronted = rng.gen_bool(0.15).then(|| b.push(pick(ADV, rng), "ADV", "advmod"));
    let subject = b.noun_phrase(rng, "nsubj");
    let transitive = rng.gen_bool(0.6);
    let extrapose = !transitive && rng.gen_bool(0.6);
    let with_phrase = transitive && rng.gen_bool(0.9);
    if !extrapose && !with_phrase && rng.gen_bool(0.3) {
        b.relative_clause(rng, subject);
    }
    let verb = if transitive {
        let v = b.push(pick(VT, rng), "VERB", "root");
        let object = b.noun_phrase(rng, "obj");
        b.attach(object, v);
        if with_phrase {
            let (head, deprel) = if rng.gen_bool(0.5) { (v, "obl") } else { (object, "nmod") };
            let case = b.push("with", "ADP", "case");
            let det = b.push(pick(DET, rng), "DET", "det");
            let noun = b.push(pick(INSTRUMENT, rng), "NOUN", deprel);
            b.attach(case, noun);
            b.attach(det, noun);
            b.attach(noun, head);
        }
        v
    } else {
        b.push(pick(VI, rng), "VERB", "root")
    };
    b.attach(subject, verb);
    if let Some(a) = fronted {
        b.attach(a, verb);
    }
    if fronted.is_none() && rng.gen_bool(0.4) {
        let adv = b.push(pick(ADV, rng), "ADV", "advmod");
        b.attach(adv, verb);
    }
    if extrapose {
        b.relative_clause(rng, subject);
    }
    if rng.gen_bool(0.9) {
        let p = b.push(".", "PUNCT", "punct");
        b.attach(p, verb);
    }
    Sentence {
        tokens: b.tokens,
        comments: vec![],
        preserved: vec![],
        treebank_id: "toy".to_owned(),
    }
}

/// `count` toy sentences from `seed`, each carrying a `sent_id` comment.
pub fn toy_treebank(count: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = Rng64::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut s = toy_sentence(&mut rng);
            s.comments.push(format!(" sent_id = toy-{seed}-{}", i + 1));
            s
        })
        .collect()
}

/// The committed toy splits: (train, dev).
pub fn toy_splits() -> (Vec<Sentence>, Vec<Sentence>) {
    (toy_treebank(TOY_TRAIN, TOY_TRAIN_SEED), toy_treebank(TOY_DEV, TOY_DEV_SEED))
}

/// Largest head offset given its own dimension; longer offsets share the edge slots.
pub const MAX_OFFSET: i64 = 11;
/// Width of the synthetic vectors: offsets `-11..=11` plus one root slot.
pub const OFFSET_DIM: usize = 2 * MAX_OFFSET as usize + 2;

/// Contextual vectors whose layers hold a one-hot of each token's gold
/// head offset plus Gaussian noise of the given standard deviation per
/// layer. Keys are sentence indices.
pub fn offset_vectors(sentences: &[Sentence], noise: &[f64], seed: u64) -> Result<ContextualStore> {
    let mut rng = Rng64::seed_from_u64(seed);
    let normals: Vec<Normal<f64>> = noise
        .iter()
        .map(|&sd| Normal::new(0.0, sd).map_err(|e| crate::Error::Invalid(format!("noise {sd}: {e}"))))
        .collect::<Result<_>>()?;
    let mut store = ContextualStore::new(noise.len(), OFFSET_DIM);
    for (i, s) in sentences.iter().enumerate() {
        let mut t = Array3::<f32>::zeros((s.len(), noise.len(), OFFSET_DIM));
        for (k, token) in s.tokens.iter().enumerate() {
            let slot = if token.head == 0 {
                OFFSET_DIM - 1
            } else {
                let offset = (token.head as i64 - (k as i64 + 1)).clamp(-MAX_OFFSET, MAX_OFFSET);
                (offset + MAX_OFFSET) as usize
            };
            for (l, normal) in normals.iter().enumerate() {
                for d in 0..OFFSET_DIM {
                    let clean = if d == slot { 1.0 } else { 0.0 };
                    t[[k, l, d]] = (clean + normal.sample(&mut rng)) as f32;
                }
            }
        }
        store.insert(i.to_string(), s.forms(), t)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{nonprojective_arcs, validate_tree};

    #[test]
    fn sentences_are_valid_trees_in_range() {
        let sentences = toy_treebank(300, 5);
        let mut nonproj = 0;
        for s in &sentences {
            assert!((3..=12).contains(&s.len()), "{}", s.len());
            let tree = validate_tree(s).unwrap();
            nonproj += usize::from(!nonprojective_arcs(&tree).is_empty());
        }
        assert!(nonproj * 10 >= sentences.len());
        assert_eq!(toy_treebank(10, 5), toy_treebank(10, 5));
    }

    #[test]
    fn clean_vectors_are_one_hot() {
        let sentences = toy_treebank(3, 1);
        let store = offset_vectors(&sentences, &[0.0, 1.0], 2).unwrap();
        let t = store.query("0", sentences[0].forms()).unwrap();
        let head = sentences[0].tokens[0].head as i64;
        let slot = if head == 0 { OFFSET_DIM - 1 } else { (head - 1 + MAX_OFFSET) as usize };
        assert_eq!(t[[0, 0, slot]], 1.0);
        assert_eq!(t.slice(ndarray::s![0, 0, ..]).sum(), 1.0);
    }
}

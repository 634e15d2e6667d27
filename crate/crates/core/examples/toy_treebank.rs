//! Write the synthetic toy treebank (train and dev splits) as CoNLL-U and
//! report how many sentences contain a non-projective arc.
//!
//! cargo run --release --example toy_treebank [out_dir]

use std::fs;
use std::path::PathBuf;

use twinparse::synthetic::toy_splits;
use twinparse::treebank::{nonprojective_arcs, validate_tree, write_conllu, Sentence};

fn nonprojective_sentences(sentences: &[Sentence]) -> twinparse::Result<usize> {
    let mut count = 0;
    for s in sentences {
        count += usize::from(!nonprojective_arcs(&validate_tree(s)?).is_empty());
    }
    Ok(count)
}

fn main() -> twinparse::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy".into()));
    fs::create_dir_all(&out)?;
    let (train, dev) = toy_splits();
    for (name, split) in [("toy_train.conllu", &train), ("toy_dev.conllu", &dev)] {
        fs::write(out.join(name), write_conllu(split))?;
        let lengths = split.iter().map(Sentence::len);
        println!(
            "{name}: {} sentences, lengths {}-{}, {} with a non-projective arc",
            split.len(),
            lengths.clone().min().unwrap_or(0),
            lengths.max().unwrap_or(0),
            nonprojective_sentences(split)?
        );
    }
    Ok(())
}

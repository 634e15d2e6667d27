//! Token vectors (word embedding, character BiLSTM, mixed contextual
//! layers) and the shared BiLSTM encoding of an untrained model.
//!
//! cargo run --example token_vectors

use twinparse::model::{Architecture, ContextSpec, Mode, Parser};
use twinparse::repr::LayerRange;
use twinparse::synthetic::{offset_vectors, toy_treebank, OFFSET_DIM};

fn main() -> twinparse::Result<()> {
    let sentences = toy_treebank(5, 7);
    let store = offset_vectors(&sentences, &[0.5, 0.2, 0.1], 3)?;
    let arch = Architecture {
        context: Some(ContextSpec { range: LayerRange::full(3), dim: OFFSET_DIM }),
        ..Default::default()
    };
    let parser = Parser::new(Mode::Graph, arch, &sentences, None, 1)?;
    println!(
        "token vector = word {} + chars {} + context {} = {}",
        parser.arch.word_dim,
        parser.tokens.chars.output_dim(),
        OFFSET_DIM,
        parser.tokens.output_dim()
    );

    let sentence = &sentences[0];
    let forms: Vec<&str> = sentence.forms().collect();
    let indices = parser.tokens.word_indices(forms.iter().copied());
    let ctx = store.query("0", forms.iter().copied())?;
    let (encoded, _) = parser.encode(&forms, &indices, Some(ctx), None)?;
    println!("{:?}", forms);
    println!(
        "encoder output: {} rows (ROOT + {} tokens) of {} dims, {} parameters",
        encoded.len(),
        forms.len(),
        encoded.dim(),
        parser.store.num_scalars()
    );
    println!("unknown word index: {}", parser.tokens.word_indices(["zebra"])[0]);
    Ok(())
}

//! Train a graph-based parser on part of the toy treebank, save it with
//! its manifest, reload it and parse a held-out sentence.
//!
//! cargo run --release --example train_and_parse [out_dir]

use std::path::PathBuf;

use twinparse::model::{Mode, Parser};
use twinparse::synthetic::toy_splits;
use twinparse::train::{train, TrainConfig, TrainData};
use twinparse::treebank::write_conllu;

fn main() -> twinparse::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy-graph-model".into()));
    let (train_set, dev_set) = toy_splits();
    let config = TrainConfig { epochs: 3, ..TrainConfig::new(Mode::Graph) };
    let data = TrainData { train: &train_set[..80], dev: &dev_set[..20], ..Default::default() };
    let run = train(&config, data, vec![], Some(&out))?;
    println!("dev LAS per epoch {:?}", run.manifest.dev_las);
    println!("saved epoch {} to {}", run.manifest.selected_epoch, out.display());

    let parser = Parser::load(&out)?;
    let sentence = &dev_set[30];
    let tree = parser.parse(sentence, None)?;
    print!("{}", write_conllu(&[sentence.with_analysis(tree.heads(), tree.labels())]));
    Ok(())
}

//! Draw an equal-size, reproducible sample from several development sets.
//!
//! cargo run --example sample_dev

use twinparse::analysis::sample_balanced;
use twinparse::synthetic::toy_treebank;

fn main() -> twinparse::Result<()> {
    let sets: Vec<_> = [(7, 1), (4, 2), (10, 3)]
        .into_iter()
        .map(|(n, seed)| {
            let mut set = toy_treebank(n, seed);
            for s in &mut set {
                s.treebank_id = format!("tb{seed}");
            }
            set
        })
        .collect();
    let sample = sample_balanced(&sets, 42)?;
    println!("{} sentences sampled", sample.len());
    for s in &sample {
        println!("{}: {}", s.treebank_id, s.forms().collect::<Vec<_>>().join(" "));
    }
    Ok(())
}

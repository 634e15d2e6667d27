//! Train both parsers on the toy treebank and report dev scores, including
//! recall on non-projective gold arcs.
//!
//! cargo run --release --example toy_convergence [epochs]

use std::time::Instant;

use twinparse::model::Mode;
use twinparse::synthetic::toy_splits;
use twinparse::train::{train, TrainConfig, TrainData};
use twinparse::treebank::{nonprojective_arcs, validate_tree};

fn main() -> twinparse::Result<()> {
    let epochs = std::env::args().nth(1).map_or(30, |a| a.parse().expect("epochs"));
    let (train_set, dev_set) = toy_splits();
    for mode in [Mode::Transition, Mode::Graph] {
        let start = Instant::now();
        let config = TrainConfig { epochs, ..TrainConfig::new(mode) };
        let data = TrainData { train: &train_set, dev: &dev_set, ..Default::default() };
        let run = train(&config, data, vec![], None)?;
        let pred = run.parser.parse_all(&dev_set, None)?;
        let (mut hit, mut total) = (0, 0);
        for (gold, p) in dev_set.iter().zip(&pred) {
            let tree = validate_tree(gold)?;
            for d in nonprojective_arcs(&tree) {
                total += 1;
                hit += usize::from(p.head(d) == tree.head(d));
            }
        }
        println!(
            "{mode}: dev LAS {:.2} (epoch {}), non-projective recall {hit}/{total}, {:.1}s",
            run.manifest.dev_las[run.manifest.selected_epoch - 1],
            run.manifest.selected_epoch,
            start.elapsed().as_secs_f64()
        );
        println!("  trace {:?}", run.manifest.dev_las.iter().map(|v| v.round() as i64).collect::<Vec<_>>());
    }
    Ok(())
}

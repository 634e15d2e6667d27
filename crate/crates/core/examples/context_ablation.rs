//! Train each parser with and without synthetic contextual vectors that
//! carry the gold head offset in three noisy layers, then compare dev LAS.
//!
//! cargo run --release --example context_ablation [epochs]

use twinparse::model::Mode;
use twinparse::synthetic::{offset_vectors, toy_splits};
use twinparse::train::{evaluate, train, TrainConfig, TrainData};

const NOISE: [f64; 3] = [0.6, 0.3, 0.1];

fn main() -> twinparse::Result<()> {
    let epochs = std::env::args().nth(1).map_or(30, |a| a.parse().expect("epochs"));
    let (train_set, dev_set) = toy_splits();
    let train_ctx = offset_vectors(&train_set, &NOISE, 1)?;
    let dev_ctx = offset_vectors(&dev_set, &NOISE, 2)?;
    for mode in [Mode::Transition, Mode::Graph] {
        let config = TrainConfig { epochs, ..TrainConfig::new(mode) };
        let plain = TrainData { train: &train_set, dev: &dev_set, ..Default::default() };
        let base = train(&config, plain, vec![], None)?;
        let base_las = 100.0 * evaluate(&base.parser, &dev_set, None)?.las;
        let with_ctx = TrainData { train_ctx: Some(&train_ctx), dev_ctx: Some(&dev_ctx), ..plain };
        let ctx = train(&config, with_ctx, vec![], None)?;
        let ctx_las = 100.0 * evaluate(&ctx.parser, &dev_set, Some(&dev_ctx))?.las;
        let mixer = ctx.parser.tokens.context.as_ref().expect("contextual model");
        println!(
            "{mode}: baseline LAS {base_las:.2}, with vectors {ctx_las:.2} ({:+.2}); layer weights {:.3}",
            ctx_las - base_las,
            mixer.mix.probabilities(&ctx.parser.store)
        );
    }
    Ok(())
}

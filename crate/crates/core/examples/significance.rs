//! Error reductions of two parser families over a set of languages and a
//! Wilcoxon signed-rank test on their per-language differences.
//!
//! cargo run --example significance

use twinparse::analysis::{error_reduction, wilcoxon_signed_rank};

fn main() -> twinparse::Result<()> {
    // (baseline, with vectors) LAS per language for each family
    let transition = [(78.2, 82.5), (74.0, 79.6), (85.1, 88.0), (81.3, 85.9), (69.8, 75.1), (88.6, 90.4), (80.2, 84.1)];
    let graph = [(79.5, 82.6), (76.1, 80.2), (85.9, 88.1), (82.7, 85.8), (72.4, 76.3), (89.3, 90.8), (81.0, 84.3)];
    let mut diffs = Vec::new();
    for (t, g) in transition.iter().zip(&graph) {
        let rt = error_reduction(t.0, t.1)?;
        let rg = error_reduction(g.0, g.1)?;
        println!("transition {rt:6.2}%  graph {rg:6.2}%");
        diffs.push(rt - rg);
    }
    let w = wilcoxon_signed_rank(&diffs)?;
    println!("W = {}, p = {:.4} ({}, n = {})", w.w, w.p, if w.exact { "exact" } else { "normal" }, w.n);
    Ok(())
}

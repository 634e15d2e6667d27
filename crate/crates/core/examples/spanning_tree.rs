//! Decode a score matrix with Chu-Liu-Edmonds, with and without the
//! single-root constraint, and compare against exhaustive search.
//!
//! cargo run --example spanning_tree

use ndarray::array;
use twinparse::graph::{brute_force_arborescence, cle, single_root_cle, tree_score};

fn main() -> twinparse::Result<()> {
    let x = f64::NEG_INFINITY;
    // ROOT likes both tokens 1 and 3; tokens 1 and 2 prefer each other.
    let scores = array![
        [x, 9.0, 1.0, 8.0],
        [x, x, 10.0, 2.0],
        [x, 11.0, x, 3.0],
        [x, 1.0, 2.0, x],
    ];
    let free = cle(&scores);
    let single = single_root_cle(&scores);
    println!("cle             {free:?} score {}", tree_score(&scores, &free));
    println!("single_root_cle {single:?} score {}", tree_score(&scores, &single));
    for single_root in [false, true] {
        let best = brute_force_arborescence(&scores, single_root)?;
        println!("brute force (single root {single_root}) {best:?} score {}", tree_score(&scores, &best));
    }
    Ok(())
}

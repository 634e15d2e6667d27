//! Derive the static oracle sequence for a non-projective tree, replay it,
//! and print the dynamic-oracle costs after a wrong first move.
//!
//! cargo run --example transition_oracle

use twinparse::repr::Vocab;
use twinparse::transition::{
    dynamic_costs, initial_config, max_transitions, projective_order, static_oracle, GoldTree, Transition,
};
use twinparse::treebank::{nonprojective_arcs, DepTree};

fn main() -> twinparse::Result<()> {
    // "A hearing is scheduled on the issue today": "issue" modifies
    // "hearing" across the verb, so the tree is non-projective.
    let heads = vec![2, 4, 4, 0, 7, 7, 2, 4];
    let labels = ["det", "nsubj", "aux", "root", "case", "det", "nmod", "obl"];
    let tree = DepTree::new(heads, labels.iter().map(|l| l.to_string()).collect())?;
    let vocab = Vocab::from_items(labels.iter().copied());
    println!("non-projective dependents {:?}", nonprojective_arcs(&tree));
    println!("projective order {:?}", projective_order(&tree));

    let sequence = static_oracle(&tree, &vocab)?;
    let mut config = initial_config(tree.len())?;
    for t in &sequence {
        config.apply_mut(*t)?;
        println!("{t:<14} {config}");
    }
    println!(
        "{} transitions (bound {}), tree rebuilt: {}",
        sequence.len(),
        max_transitions(tree.len()),
        (1..=tree.len()).all(|d| config.head(d) == Some(tree.head(d)))
    );

    // a projective tree and a configuration off the gold path
    let projective = DepTree::unlabeled(vec![2, 0, 2, 3])?;
    let gold = GoldTree::unlabeled(&projective);
    let mut c = initial_config(4)?;
    c.apply_mut(Transition::Shift)?;
    c.apply_mut(Transition::Shift)?;
    c.apply_mut(Transition::RightArc(0))?;
    println!("after a wrong RIGHT_ARC: {c}");
    println!("costs {:?}", dynamic_costs(&c, &gold)?);
    Ok(())
}

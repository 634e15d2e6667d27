//! Build a contextual-vector store, write and reload it, look vectors up
//! with their alignment check, and mix layers with a scalar mix.
//!
//! cargo run --example contextual_store

use ndarray::{arr1, Array3};
use twinparse::repr::{load_contextual_store, scalar_mix, ContextualStore};

fn main() -> twinparse::Result<()> {
    let forms = ["Dogs", "bark", "."];
    let tensor = Array3::from_shape_fn((3, 2, 4), |(t, l, d)| (t * 100 + l * 10 + d) as f32);
    let mut store = ContextualStore::new(2, 4);
    store.insert("0", forms, tensor)?;

    let path = std::env::temp_dir().join(format!("twinparse-example-{}.ctxv", std::process::id()));
    store.save(&path)?;
    let loaded = load_contextual_store(&path)?;
    std::fs::remove_file(&path)?;
    println!("{} sentence(s), {} layers of {} dims", loaded.len(), loaded.layers(), loaded.dim());

    let t = loaded.query("0", forms)?;
    println!("token 1 layer 1: {:?}", t.slice(ndarray::s![1, 1, ..]).to_vec());
    match loaded.query("0", ["Cats", "bark", "."]) {
        Ok(_) => println!("unexpected match"),
        Err(e) => println!("misaligned forms rejected: {e}"),
    }

    let layers: Vec<_> = (0..2).map(|l| t.slice(ndarray::s![1, l, ..]).mapv(f64::from)).collect();
    let views: Vec<_> = layers.iter().map(|l| l.view()).collect();
    let mixed = scalar_mix(&views, arr1(&[0.0, 2.0]).view(), 0.5)?;
    println!("mixed token 1: {mixed:.3}");
    Ok(())
}

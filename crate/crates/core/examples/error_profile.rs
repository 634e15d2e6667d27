//! Error profile of two systems on a small gold corpus, pooled and per
//! treebank, as CSV.
//!
//! cargo run --example error_profile

use std::path::Path;

use twinparse::analysis::compute_profile;
use twinparse::analysis::profile_csv;
use twinparse::cli::treebank_comment;
use twinparse::treebank::read_conllu_file;

fn main() -> twinparse::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/profile");
    let mut gold = read_conllu_file(dir.join("gold.conllu"), None)?;
    for s in &mut gold {
        if let Some(tb) = treebank_comment(s).map(str::to_owned) {
            s.treebank_id = tb;
        }
    }
    let mut systems = Vec::new();
    for name in ["transition", "graph"] {
        systems.push((name.to_owned(), read_conllu_file(dir.join(format!("{name}.conllu")), None)?));
    }
    let profiles = compute_profile(&gold, &systems, true)?;
    for p in &profiles {
        println!(
            "{:<10} {:<3} LAS {:.4} UAS {:.4}",
            p.system,
            p.treebank,
            p.las.value().unwrap_or(f64::NAN),
            p.uas.value().unwrap_or(f64::NAN)
        );
    }
    let csv = profile_csv(&profiles);
    let dep_length: Vec<&str> = csv.lines().filter(|l| l.starts_with("transition,all,dep_length")).collect();
    println!("{}", dep_length.join("\n"));
    Ok(())
}

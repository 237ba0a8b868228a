//! Generates both synthetic datasets and prints their shapes and row groups.
//!
//! `cargo run --release --example generate_linkage`

use comanifold::datasets::{generate, LinkageSpec, Variant};

fn main() -> comanifold::Result<()> {
    for variant in [Variant::Linkage, Variant::Linkage2] {
        let data = generate(&LinkageSpec::new(variant, 60, 80, 0))?;
        let (m, n) = data.x.shape();
        println!("{variant}: {m} x {n}, entries in [{:.3}, {:.3}]", data.x.min(), data.x.max());
        match data.row_labels() {
            Some(l) => println!("  row cluster sizes {:?}", l.cluster_sizes()),
            None => println!("  rows lie on a continuous curve"),
        }
        for line in data.metadata_lines().iter().take(3) {
            println!("  {line}");
        }
    }
    Ok(())
}

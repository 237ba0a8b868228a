//! Full pipeline: embeds the rows and columns of a masked linkage matrix and
//! compares the column embedding with the helix parameter of each column.
//!
//! `cargo run --release --example co_manifold_embedding`

use comanifold::datasets::{generate, LinkageSpec, Variant};
use comanifold::incomplete::{apply_mask, MaskSpec};
use comanifold::pipeline::{run_pipeline, PipelineConfig};

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    cov / var
}

fn main() -> comanifold::Result<()> {
    let data = generate(&LinkageSpec::new(Variant::Linkage, 40, 50, 0))?;
    let x = apply_mask(&data.x, &MaskSpec::new(0.5, 1)?)?;
    let out = run_pipeline(&x, &PipelineConfig::default())?;

    println!("cells solved: {}", out.sweep.cells.len());
    println!("row eigenvalues: {:?}", out.row_embedding.eigenvalues);
    println!("column eigenvalues: {:?}", out.col_embedding.eigenvalues);
    let params: Vec<f64> = data.col_meta.iter().map(|m| m.param).collect();
    let first: Vec<f64> = out.col_embedding.coordinates.column(0).iter().copied().collect();
    println!("|rank correlation| of first column coordinate with the helix parameter: {:.3}", spearman(&first, &params).abs());
    Ok(())
}

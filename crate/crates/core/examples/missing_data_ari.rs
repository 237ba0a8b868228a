//! Clusters the co-manifold row embedding of linkage2 with k-means and
//! compares the adjusted Rand index with a diffusion map of the masked
//! distances, over increasing fractions of missing entries.
//!
//! `cargo run --release --example missing_data_ari -- [seeds]`

use comanifold::datasets::{generate, LinkageSpec, Variant};
use comanifold::evaluation::{adjusted_rand_index, kmeans, mean_ari, ScoreLine, DEFAULT_RESTARTS};
use comanifold::incomplete::{apply_mask, MaskSpec};
use comanifold::pipeline::{baseline_diffusion, run_pipeline, PipelineConfig};
use comanifold::Mode;

fn main() -> comanifold::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let data = generate(&LinkageSpec::new(Variant::Linkage2, 60, 80, 0))?;
    let truth = data.row_labels().expect("linkage2 rows are labeled");

    println!("{}", ScoreLine::HEADER);
    for fraction in [0.2, 0.35, 0.5] {
        let (mut ours, mut base) = (Vec::new(), Vec::new());
        for seed in 0..seeds {
            let x = apply_mask(&data.x, &MaskSpec::new(fraction, seed)?)?;
            let out = run_pipeline(&x, &PipelineConfig::default())?;
            let labels = kmeans(&out.row_embedding.coordinates, 3, seed, DEFAULT_RESTARTS)?;
            ours.push(ScoreLine { method: "comanifold".into(), missing_fraction: fraction, seed, ari: adjusted_rand_index(&labels, &truth)? });
            let b = baseline_diffusion(&x, Mode::Rows, 3)?;
            let labels = kmeans(&b.coordinates, 3, seed, DEFAULT_RESTARTS)?;
            base.push(ScoreLine { method: "diffusion".into(), missing_fraction: fraction, seed, ari: adjusted_rand_index(&labels, &truth)? });
        }
        for s in ours.iter().chain(&base) {
            println!("{}", s.to_line());
        }
        println!("# {fraction}: mean {:.3} vs {:.3}", mean_ari(&ours).unwrap_or(f64::NAN), mean_ari(&base).unwrap_or(f64::NAN));
    }
    Ok(())
}

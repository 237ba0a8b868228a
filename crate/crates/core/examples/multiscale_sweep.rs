//! Sweeps the dyadic scale grid with warm starts and builds the multi-scale
//! row and column distances from every solved cell.
//!
//! `cargo run --release --example multiscale_sweep`

use comanifold::datasets::{generate, LinkageSpec, Variant};
use comanifold::graph::{default_k, knn_graph};
use comanifold::incomplete::{apply_mask, MaskSpec};
use comanifold::metric::{MetricAccumulator, DEFAULT_ALPHA};
use comanifold::penalty::Penalty;
use comanifold::solver::{FusionGraphs, SolverConfig};
use comanifold::sweep::{sweep_with, ScaleGrid, SweepOptions};
use comanifold::Mode;

fn main() -> comanifold::Result<()> {
    let data = generate(&LinkageSpec::new(Variant::Linkage, 24, 30, 2))?;
    let x = apply_mask(&data.x, &MaskSpec::new(0.3, 5)?)?;
    let graphs = FusionGraphs::new(
        knn_graph(&x, Mode::Rows, default_k(x.nrows()))?,
        knn_graph(&x, Mode::Columns, default_k(x.ncols()))?,
    )?;

    let mut metric = MetricAccumulator::new(DEFAULT_ALPHA);
    let mut failed = None;
    let result = sweep_with(
        &x,
        &graphs,
        &Penalty::default(),
        &ScaleGrid::default(),
        &SolverConfig::default(),
        SweepOptions::default(),
        |cell| {
            if failed.is_none() {
                failed = metric.add(cell).err();
            }
        },
    )?;
    if let Some(e) = failed {
        return Err(e);
    }
    let d = metric.finish()?;

    println!("cells solved: {}, cap reached: {}", result.cells.len(), result.cap_reached);
    println!("outer iterations: {}", result.total_outer_iters());
    for line in result.manifest_lines().iter().take(5) {
        println!("  {line}");
    }
    println!("row distance range: {:.4} .. {:.4}", d.row_dist.iter().filter(|v| **v > 0.0).fold(f64::MAX, |a, &b| a.min(b)), d.row_dist.max());
    println!("column distance range: {:.4} .. {:.4}", d.col_dist.iter().filter(|v| **v > 0.0).fold(f64::MAX, |a, &b| a.min(b)), d.col_dist.max());
    Ok(())
}

//! Co-clusters a partially observed matrix at a handful of scales and shows
//! how rows and columns merge as the regularization grows.
//!
//! `cargo run --release --example cocluster_missing`

use comanifold::datasets::{generate, LinkageSpec, Variant};
use comanifold::graph::{default_k, knn_graph};
use comanifold::incomplete::{apply_mask, MaskSpec};
use comanifold::penalty::Penalty;
use comanifold::solver::{co_cluster_missing, FusionGraphs, Gammas, SolverConfig};
use comanifold::Mode;

fn main() -> comanifold::Result<()> {
    let data = generate(&LinkageSpec::new(Variant::Linkage2, 30, 40, 1))?;
    let x = apply_mask(&data.x, &MaskSpec::new(0.4, 3)?)?;
    let graphs = FusionGraphs::new(
        knn_graph(&x, Mode::Rows, default_k(x.nrows()))?,
        knn_graph(&x, Mode::Columns, default_k(x.ncols()))?,
    )?;
    println!("{:>4} {:>4} {:>6} {:>6} {:>14} {:>6}", "l", "k", "n_r", "n_c", "objective", "outer");
    for e in [-4, 0, 4, 8, 12] {
        let r = co_cluster_missing(&x, Gammas::dyadic(e, e), &graphs, &Penalty::default(), &SolverConfig::default(), None)?;
        println!("{e:>4} {e:>4} {:>6} {:>6} {:>14.6e} {:>6}", r.n_r, r.n_c, r.objective(), r.outer_iters);
    }
    Ok(())
}

//! End-to-end co-manifold pipeline: graphs, scale sweep, multi-scale
//! metric and diffusion embeddings of both modes.

use log::info;
use nalgebra::DMatrix;

use crate::embedding::{embed_distances, DiffusionEmbedding, DEFAULT_DIMENSION};
use crate::error::{Error, Result};
use crate::graph::{default_k, knn_graph, masked_distances, NeighborGraph};
use crate::incomplete::ObservedMatrix;
use crate::metric::{accumulate, MultiScaleDistances, DEFAULT_ALPHA};
use crate::penalty::Penalty;
use crate::solver::{FusionGraphs, SolverConfig};
use crate::sweep::{sweep, ScaleGrid, SweepOptions, SweepResult};
use crate::Mode;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Neighbors per node in the row graph; `None` uses [`default_k`].
    pub k_rows: Option<usize>,
    pub k_cols: Option<usize>,
    /// Explicit graphs replace the k-nearest-neighbor construction.
    pub row_graph: Option<NeighborGraph>,
    pub col_graph: Option<NeighborGraph>,
    pub penalty: Penalty,
    pub grid: ScaleGrid,
    pub solver: SolverConfig,
    pub sweep: SweepOptions,
    pub alpha: f64,
    pub dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_rows: None,
            k_cols: None,
            row_graph: None,
            col_graph: None,
            penalty: Penalty::default(),
            grid: ScaleGrid::default(),
            solver: SolverConfig::default(),
            sweep: SweepOptions::default(),
            alpha: DEFAULT_ALPHA,
            dim: DEFAULT_DIMENSION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub row_graph: NeighborGraph,
    pub col_graph: NeighborGraph,
    pub sweep: SweepResult,
    pub distances: MultiScaleDistances,
    pub row_embedding: DiffusionEmbedding,
    pub col_embedding: DiffusionEmbedding,
}

impl PipelineOutput {
    pub fn embedding(&self, mode: Mode) -> &DiffusionEmbedding {
        match mode {
            Mode::Rows => &self.row_embedding,
            Mode::Columns => &self.col_embedding,
        }
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name, source: Box::new(e) })
}

fn build_graph(x: &ObservedMatrix, mode: Mode, k: Option<usize>, given: &Option<NeighborGraph>) -> Result<NeighborGraph> {
    match given {
        Some(g) => {
            if g.node_count() != x.node_count(mode) {
                return Err(Error::InvalidArgument(format!(
                    "{} graph has {} nodes, matrix has {}",
                    mode.name(),
                    g.node_count(),
                    x.node_count(mode)
                )));
            }
            Ok(g.clone())
        }
        None => knn_graph(x, mode, k.unwrap_or_else(|| default_k(x.node_count(mode)))),
    }
}

pub fn run_pipeline(x: &ObservedMatrix, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let row_graph = stage("graph", build_graph(x, Mode::Rows, cfg.k_rows, &cfg.row_graph))?;
    let col_graph = stage("graph", build_graph(x, Mode::Columns, cfg.k_cols, &cfg.col_graph))?;
    let graphs = stage("graph", FusionGraphs::new(row_graph.clone(), col_graph.clone()))?;
    info!("graphs: {} row edges, {} column edges", row_graph.edge_count(), col_graph.edge_count());

    let sweep = stage("sweep", sweep(x, &graphs, &cfg.penalty, &cfg.grid, &cfg.solver, cfg.sweep))?;
    info!("sweep: {} cells, {} outer iterations", sweep.cells.len(), sweep.total_outer_iters());

    let distances = stage("metric", accumulate(&sweep.cells, cfg.alpha))?;
    let (row_embedding, col_embedding) =
        rayon::join(|| embed_distances(&distances.row_dist, cfg.dim), || embed_distances(&distances.col_dist, cfg.dim));
    let row_embedding = stage("embedding", row_embedding)?;
    let col_embedding = stage("embedding", col_embedding)?;
    Ok(PipelineOutput { row_graph, col_graph, sweep, distances, row_embedding, col_embedding })
}

/// Dense masked-distance matrix of one mode; pairs without common
/// observations take the largest defined distance.
pub fn masked_distance_matrix(x: &ObservedMatrix, mode: Mode) -> Result<DMatrix<f64>> {
    let d = masked_distances(x, mode);
    let fill = d.max_defined().ok_or(Error::DegenerateDistances)?;
    Ok(d.to_dense(fill))
}

/// Diffusion maps applied directly to the masked-distance matrix of one mode.
pub fn baseline_diffusion(x: &ObservedMatrix, mode: Mode, dim: usize) -> Result<DiffusionEmbedding> {
    embed_distances(&masked_distance_matrix(x, mode)?, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, LinkageSpec, Variant};
    use crate::incomplete::{apply_mask, MaskSpec};

    fn small(seed: u64, missing: f64) -> ObservedMatrix {
        let d = generate(&LinkageSpec::new(Variant::Linkage2, 12, 10, seed)).unwrap();
        apply_mask(&d.x, &MaskSpec::new(missing, seed).unwrap()).unwrap()
    }

    #[test]
    fn pipeline_produces_embeddings_of_both_modes() {
        let x = small(1, 0.3);
        let out = run_pipeline(&x, &PipelineConfig { dim: 2, ..Default::default() }).unwrap();
        assert_eq!(out.row_embedding.coordinates.shape(), (12, 2));
        assert_eq!(out.col_embedding.coordinates.shape(), (10, 2));
        assert_eq!(out.distances.cells_used.len(), out.sweep.cells.len());
        assert!(out.row_graph.is_connected() && out.col_graph.is_connected());
    }

    #[test]
    fn disconnected_forced_graph_names_the_stage() {
        let x = small(2, 0.2);
        let broken = NeighborGraph::new(12, vec![(0, 1)]).unwrap();
        let err = run_pipeline(&x, &PipelineConfig { row_graph: Some(broken), ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "graph", .. }));
        assert!(matches!(err.root(), Error::Disconnected { mode: "row" }));
    }

    #[test]
    fn masked_distance_matrix_of_complete_data_is_euclidean() {
        let d = generate(&LinkageSpec::new(Variant::Linkage, 8, 6, 3)).unwrap();
        let x = ObservedMatrix::fully_observed(d.x.clone()).unwrap();
        let m = masked_distance_matrix(&x, Mode::Rows).unwrap();
        let e = crate::metric::euclidean_distances(&d.x, Mode::Rows);
        assert!((m - e).amax() < 1e-12);
        assert!(baseline_diffusion(&x, Mode::Columns, 2).is_ok());
    }
}

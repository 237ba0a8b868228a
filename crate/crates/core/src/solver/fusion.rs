use nalgebra::DMatrix;

use crate::graph::{NeighborGraph, UnionFind};
use crate::penalty::edge_differences;
use crate::Mode;

/// Number of fused groups along one mode and a group id per node.
///
/// Two nodes share a group when they are joined by a chain of graph edges
/// whose endpoint rows (columns) of `u` differ by at most `fuse_tol`.
pub fn count_fused_groups(
    u: &DMatrix<f64>,
    graph: &NeighborGraph,
    mode: Mode,
    fuse_tol: f64,
) -> (usize, Vec<usize>) {
    let diffs = edge_differences(u, graph, mode);
    let mut uf = UnionFind::new(graph.node_count());
    for (&(i, j), &d) in graph.edges().iter().zip(&diffs) {
        if d <= fuse_tol {
            uf.union(i, j);
        }
    }
    let labels = uf.labels();
    let count = labels.iter().max().map_or(0, |&m| m + 1);
    (count, labels)
}

/// Group ids from an exact-zero pattern on edges (`fused[l]` for edge `l`).
pub(crate) fn groups_from_edges(graph: &NeighborGraph, fused: impl Iterator<Item = bool>) -> Vec<usize> {
    let mut uf = UnionFind::new(graph.node_count());
    for (&(i, j), f) in graph.edges().iter().zip(fused) {
        if f {
            uf.union(i, j);
        }
    }
    uf.labels()
}

/// Replaces each row group by its mean row, then each column group by its
/// mean column. Members of a group end up bitwise identical.
pub(crate) fn average_groups(u: &mut DMatrix<f64>, row_groups: &[usize], col_groups: &[usize]) {
    let (m, n) = u.shape();
    let n_rg = row_groups.iter().max().map_or(0, |&g| g + 1);
    if n_rg < m {
        let mut sums = DMatrix::<f64>::zeros(n_rg, n);
        let mut counts = vec![0usize; n_rg];
        for i in 0..m {
            counts[row_groups[i]] += 1;
            for j in 0..n {
                sums[(row_groups[i], j)] += u[(i, j)];
            }
        }
        for i in 0..m {
            let g = row_groups[i];
            for j in 0..n {
                u[(i, j)] = sums[(g, j)] / counts[g] as f64;
            }
        }
    }
    let n_cg = col_groups.iter().max().map_or(0, |&g| g + 1);
    if n_cg < n {
        let mut sums = DMatrix::<f64>::zeros(m, n_cg);
        let mut counts = vec![0usize; n_cg];
        for j in 0..n {
            counts[col_groups[j]] += 1;
            for i in 0..m {
                sums[(i, col_groups[j])] += u[(i, j)];
            }
        }
        for j in 0..n {
            let g = col_groups[j];
            for i in 0..m {
                u[(i, j)] = sums[(i, g)] / counts[g] as f64;
            }
        }
    }
}

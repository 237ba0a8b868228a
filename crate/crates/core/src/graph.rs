//! Row and column neighbor graphs built from observed entries only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::incomplete::ObservedMatrix;
use crate::Mode;

/// Undirected simple graph; edges are stored as `(i, j)` with `i < j`,
/// sorted and without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl NeighborGraph {
    /// Normalizes edge orientation and ordering; rejects self-loops and
    /// out-of-range endpoints. Connectivity is not required here.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        Ok(Self { node_count, edges: norm })
    }

    pub fn complete(node_count: usize) -> Self {
        let edges = (0..node_count)
            .flat_map(|i| (i + 1..node_count).map(move |j| (i, j)))
            .collect();
        Self { node_count, edges }
    }

    pub fn path(node_count: usize) -> Self {
        let edges = (1..node_count).map(|i| (i - 1, i)).collect();
        Self { node_count, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Component id per node; ids are assigned in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.node_count);
        for &(i, j) in &self.edges {
            uf.union(i, j);
        }
        uf.labels()
    }

    pub fn is_connected(&self) -> bool {
        self.node_count <= 1 || self.components().iter().all(|&c| c == 0)
    }

    /// Signed edge-node incidence matrix: row `l` has `+1` at the first
    /// endpoint of edge `l` and `-1` at the second.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut phi = DMatrix::zeros(self.edges.len(), self.node_count);
        for (l, &(i, j)) in self.edges.iter().enumerate() {
            phi[(l, i)] = 1.0;
            phi[(l, j)] = -1.0;
        }
        phi
    }

    /// Combinatorial Laplacian, equal to `Φᵀ Φ` for the incidence matrix `Φ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut lap = DMatrix::zeros(self.node_count, self.node_count);
        for &(i, j) in &self.edges {
            lap[(i, i)] += 1.0;
            lap[(j, j)] += 1.0;
            lap[(i, j)] -= 1.0;
            lap[(j, i)] -= 1.0;
        }
        lap
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if the two sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if map[r] == usize::MAX {
                    map[r] = next;
                    next += 1;
                }
                map[r]
            })
            .collect()
    }
}

/// Rescaled Euclidean distance over the commonly observed coordinates:
/// `sqrt(L / |S| * sum_{t in S} (a_t - b_t)^2)`, or `None` when `S` is empty.
pub fn masked_distance(a: &[f64], a_obs: &[bool], b: &[f64], b_obs: &[bool]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let len = a.len();
    let (mut sum, mut common) = (0.0, 0usize);
    for t in 0..len {
        if a_obs[t] && b_obs[t] {
            let d = a[t] - b[t];
            sum += d * d;
            common += 1;
        }
    }
    (common > 0).then(|| (len as f64 / common as f64 * sum).sqrt())
}

/// Symmetric table of optional pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseDistances {
    n: usize,
    data: Vec<Option<f64>>,
}

impl PairwiseDistances {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut data = vec![Some(0.0); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        Self::from_fn(d.nrows(), |i, j| Some(d[(i, j)]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.data[i * self.n + j]
    }

    /// Dense copy with absent distances replaced by `fallback`.
    pub fn to_dense(&self, fallback: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).unwrap_or(fallback))
    }

    /// Largest defined distance, or `None` if nothing is defined off the diagonal.
    pub fn max_defined(&self) -> Option<f64> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j))
            .reduce(f64::max)
    }
}

/// All pairwise [`masked_distance`]s between rows (or columns).
pub fn masked_distances(x: &ObservedMatrix, mode: Mode) -> PairwiseDistances {
    let n = x.node_count(mode);
    let lanes: Vec<_> = (0..n).map(|i| x.lane(mode, i)).collect();
    PairwiseDistances::from_fn(n, |i, j| {
        masked_distance(&lanes[i].0, &lanes[i].1, &lanes[j].0, &lanes[j].1)
    })
}

pub fn default_k(node_count: usize) -> usize {
    let k = ((node_count as f64).log2().round() as usize).max(2);
    k.min(node_count.saturating_sub(1)).max(1)
}

/// Union of each node's `k` nearest neighbors, made connected.
pub fn knn_graph(x: &ObservedMatrix, mode: Mode, k: usize) -> Result<NeighborGraph> {
    let dist = masked_distances(x, mode);
    knn_from_distances(&dist, k)
}

pub fn knn_from_distances(dist: &PairwiseDistances, k: usize) -> Result<NeighborGraph> {
    let n = dist.len();
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k < {n}, got {k}"
        )));
    }
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .filter_map(|j| dist.get(i, j).map(|d| (d, j)))
            .collect();
        if cand.is_empty() {
            return Err(Error::IsolatedNode(i));
        }
        // ties go to the smaller index
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        edges.extend(cand.iter().take(k).map(|&(_, j)| (i, j)));
    }
    let g = NeighborGraph::new(n, edges)?;
    Ok(ensure_connected(g, dist))
}

/// Adds minimum-distance cross-component edges (Kruskal over the component
/// contraction) until the graph is connected. Absent distances rank after
/// every defined one.
pub fn ensure_connected(graph: NeighborGraph, dist: &PairwiseDistances) -> NeighborGraph {
    if graph.is_connected() {
        return graph;
    }
    let n = graph.node_count;
    let mut uf = UnionFind::new(n);
    for &(i, j) in &graph.edges {
        uf.union(i, j);
    }
    let mut cross: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if uf.find(i) != uf.find(j) {
                cross.push((dist.get(i, j).unwrap_or(f64::INFINITY), i, j));
            }
        }
    }
    cross.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut edges = graph.edges;
    for (_, i, j) in cross {
        if uf.union(i, j) {
            edges.push((i, j));
        }
    }
    NeighborGraph::new(n, edges).expect("cross edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incomplete::{apply_mask, MaskSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn masked_distance_cases() {
        let a = [0.0, 3.0, 4.0];
        let b = [0.0, 0.0, 0.0];
        let all = [true; 3];
        assert_eq!(masked_distance(&a, &all, &b, &all), Some(5.0));
        assert_eq!(masked_distance(&a, &all, &a, &all), Some(0.0));

        // a = [1, ., 3], b = [2, 5, .]: only coordinate 0 is shared
        let d = masked_distance(
            &[1.0, 0.0, 3.0],
            &[true, false, true],
            &[2.0, 5.0, 0.0],
            &[true, true, false],
        );
        assert!((d.unwrap() - 3f64.sqrt()).abs() < 1e-15);

        assert_eq!(
            masked_distance(&[1.0, 0.0], &[true, false], &[0.0, 1.0], &[false, true]),
            None
        );
    }

    #[test]
    fn collinear_points_form_a_path() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 3.0, 0.0]);
        let x = ObservedMatrix::fully_observed(x).unwrap();
        let g = knn_graph(&x, Mode::Rows, 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn k_equal_n_minus_one_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(5, 3, |_, _| rng.random::<f64>());
        let x = ObservedMatrix::fully_observed(x).unwrap();
        assert_eq!(knn_graph(&x, Mode::Rows, 4).unwrap(), NeighborGraph::complete(5));
    }

    #[test]
    fn knn_matches_all_pairs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values = DMatrix::from_fn(6, 8, |_, _| rng.random_range(-2.0..2.0));
        let x = apply_mask(&values, &MaskSpec::new(0.3, 5).unwrap()).unwrap();
        let k = 2;
        // independent oracle: full distance matrix, then per-node selection by scanning
        let mut dm = vec![vec![None; 6]; 6];
        for (i, row) in dm.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let (a, am) = x.lane(Mode::Rows, i);
                let (b, bm) = x.lane(Mode::Rows, j);
                let mut s = 0.0;
                let mut c = 0;
                for t in 0..8 {
                    if am[t] && bm[t] {
                        s += (a[t] - b[t]).powi(2);
                        c += 1;
                    }
                }
                if c > 0 {
                    *slot = Some((8.0 / c as f64 * s).sqrt());
                }
            }
        }
        let mut expected = std::collections::BTreeSet::new();
        for i in 0..6 {
            let mut taken: Vec<usize> = Vec::new();
            for _ in 0..k {
                let mut best: Option<(f64, usize)> = None;
                for j in 0..6 {
                    if j == i || taken.contains(&j) {
                        continue;
                    }
                    if let Some(d) = dm[i][j] {
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, j));
                        }
                    }
                }
                if let Some((_, j)) = best {
                    taken.push(j);
                    expected.insert((i.min(j), i.max(j)));
                }
            }
        }
        let g = knn_graph(&x, Mode::Rows, k).unwrap();
        let got: std::collections::BTreeSet<_> = g.edges().iter().copied().collect();
        assert!(g.is_connected());
        // the kNN union is contained in the output; extra edges only appear to connect it
        assert!(expected.is_subset(&got));
        let oracle = NeighborGraph::new(6, expected.into_iter().collect()).unwrap();
        if oracle.is_connected() {
            assert_eq!(g, oracle);
        }
    }

    #[test]
    fn node_without_shared_support_is_an_error() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 3.0]);
        let mask = DMatrix::from_row_slice(3, 2, &[true, false, false, true, false, true]);
        let x = ObservedMatrix::new(values, mask).unwrap();
        assert!(matches!(knn_graph(&x, Mode::Rows, 1), Err(Error::IsolatedNode(0))));
    }

    #[test]
    fn connected_graph_is_unchanged() {
        let g = NeighborGraph::path(4);
        let d = PairwiseDistances::from_fn(4, |_, _| Some(1.0));
        assert_eq!(ensure_connected(g.clone(), &d), g);
    }

    #[test]
    fn two_singletons_get_one_edge() {
        let g = NeighborGraph::new(2, vec![]).unwrap();
        let d = PairwiseDistances::from_fn(2, |_, _| None);
        assert_eq!(ensure_connected(g, &d).edges(), &[(0, 1)]);
    }

    #[test]
    fn three_components_join_by_minimum_spanning_choice() {
        // components {0,1}, {2,3}, {4}
        let g = NeighborGraph::new(5, vec![(0, 1), (2, 3)]).unwrap();
        let table = [
            [0.0, 1.0, 4.0, 7.0, 9.0],
            [1.0, 0.0, 5.0, 3.0, 2.5],
            [4.0, 5.0, 0.0, 1.0, 6.0],
            [7.0, 3.0, 1.0, 0.0, 8.0],
            [9.0, 2.5, 6.0, 8.0, 0.0],
        ];
        let d = PairwiseDistances::from_fn(5, |i, j| Some(table[i][j]));
        let out = ensure_connected(g.clone(), &d);
        assert!(out.is_connected());

        // exhaustive oracle: every pair of cross edges that connects the graph,
        // choose the cheapest
        let cross: Vec<(usize, usize)> = (0..5)
            .flat_map(|i| (i + 1..5).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.edges().contains(&(i, j)))
            .collect();
        let mut best = (f64::INFINITY, vec![]);
        for a in 0..cross.len() {
            for b in a + 1..cross.len() {
                let mut e = g.edges().to_vec();
                e.push(cross[a]);
                e.push(cross[b]);
                let cand = NeighborGraph::new(5, e.clone()).unwrap();
                let cost = table[cross[a].0][cross[a].1] + table[cross[b].0][cross[b].1];
                if cand.is_connected() && cost < best.0 {
                    best = (cost, e);
                }
            }
        }
        assert_eq!(out, NeighborGraph::new(5, best.1).unwrap());
    }

    #[test]
    fn connectivity_cases() {
        assert!(NeighborGraph::path(4).is_connected());
        let g = NeighborGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
    }

    #[test]
    fn connectivity_matches_traversal_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(2..9);
            let edges: Vec<_> = (0..rng.random_range(0..n + 2))
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .filter(|(a, b)| a != b)
                .collect();
            let g = NeighborGraph::new(n, edges).unwrap();
            // depth-first search from node 0
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &(a, b) in g.edges() {
                    let w = if a == v { b } else if b == v { a } else { continue };
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            assert_eq!(g.is_connected(), seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn incidence_of_connected_graph_has_rank_n_minus_one() {
        let g = NeighborGraph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let phi = g.incidence();
        for r in phi.row_iter() {
            assert_eq!(r.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(r.iter().filter(|&&v| v == -1.0).count(), 1);
        }
        let ones = nalgebra::DVector::from_element(5, 1.0);
        assert_eq!((&phi * ones).norm(), 0.0);
        assert_eq!(phi.rank(1e-10), 4);
        assert_eq!(phi.transpose() * &phi, g.laplacian());

        let split = NeighborGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(split.incidence().rank(1e-10), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn knn_output_is_connected(seed in 0u64..300, n in 3usize..10, p in 0.0f64..0.5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = DMatrix::from_fn(n, 6, |_, _| rng.random_range(-1.0..1.0));
                let x = apply_mask(&values, &MaskSpec::new(p, seed).unwrap()).unwrap();
                if let Ok(g) = knn_graph(&x, Mode::Rows, 1) {
                    prop_assert!(g.is_connected());
                }
            }

            #[test]
            fn masked_distance_symmetric_and_euclidean_when_complete(
                a in proptest::collection::vec(-5.0f64..5.0, 4),
                b in proptest::collection::vec(-5.0f64..5.0, 4),
                am in proptest::collection::vec(any::<bool>(), 4),
                bm in proptest::collection::vec(any::<bool>(), 4),
            ) {
                prop_assert_eq!(masked_distance(&a, &am, &b, &bm), masked_distance(&b, &bm, &a, &am));
                let all = [true; 4];
                let eu: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let d = masked_distance(&a, &all, &b, &all).unwrap();
                prop_assert!((d - eu).abs() <= 1e-12 * (1.0 + eu));
            }
        }
    }
}

//! Multi-scale row and column distances.
//!
//! Each grid cell contributes the Euclidean distances between rows (columns)
//! of its filled-in matrix, weighted by `(γ_r γ_c)^α`. Summing over cells
//! gives a metric that mixes every joint smoothing scale. With `α < 0` the
//! lightly smoothed cells dominate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sweep::GridCellResult;
use crate::Mode;

pub const DEFAULT_ALPHA: f64 = -0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleDistances {
    pub row_dist: DMatrix<f64>,
    pub col_dist: DMatrix<f64>,
    pub alpha: f64,
    pub cells_used: Vec<(i32, i32)>,
}

impl MultiScaleDistances {
    pub fn get(&self, mode: Mode) -> &DMatrix<f64> {
        match mode {
            Mode::Rows => &self.row_dist,
            Mode::Columns => &self.col_dist,
        }
    }
}

/// `(2^l · 2^k)^α`
pub fn cell_weight(l: i32, k: i32, alpha: f64) -> f64 {
    (2f64.powi(l) * 2f64.powi(k)).powf(alpha)
}

fn lane_distance(x: &DMatrix<f64>, mode: Mode, i: usize, j: usize) -> f64 {
    match mode {
        Mode::Rows => x
            .row(i)
            .iter()
            .zip(x.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        Mode::Columns => x
            .column(i)
            .iter()
            .zip(x.column(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    }
}

pub fn cell_distance(cell: &GridCellResult, mode: Mode, i: usize, j: usize, alpha: f64) -> f64 {
    cell_weight(cell.l, cell.k, alpha) * lane_distance(&cell.x_filled, mode, i, j)
}

/// Pairwise Euclidean distances between rows (or columns).
pub fn euclidean_distances(x: &DMatrix<f64>, mode: Mode) -> DMatrix<f64> {
    let n = match mode {
        Mode::Rows => x.nrows(),
        Mode::Columns => x.ncols(),
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = lane_distance(x, mode, i, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Streaming accumulator; adding the same cells in the same order as
/// [`accumulate`] gives bitwise identical distances.
#[derive(Debug, Clone)]
pub struct MetricAccumulator {
    alpha: f64,
    row_dist: Option<DMatrix<f64>>,
    col_dist: Option<DMatrix<f64>>,
    cells_used: Vec<(i32, i32)>,
}

impl MetricAccumulator {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, row_dist: None, col_dist: None, cells_used: Vec::new() }
    }

    pub fn add(&mut self, cell: &GridCellResult) -> Result<()> {
        let (m, n) = cell.x_filled.shape();
        let w = cell_weight(cell.l, cell.k, self.alpha);
        for (slot, mode, size) in [(&mut self.row_dist, Mode::Rows, m), (&mut self.col_dist, Mode::Columns, n)] {
            let acc = slot.get_or_insert_with(|| DMatrix::zeros(size, size));
            if acc.nrows() != size {
                return Err(Error::dims((acc.nrows(), acc.nrows()), (size, size)));
            }
            for i in 0..size {
                for j in i + 1..size {
                    let v = w * lane_distance(&cell.x_filled, mode, i, j);
                    acc[(i, j)] += v;
                    acc[(j, i)] += v;
                }
            }
        }
        self.cells_used.push((cell.l, cell.k));
        Ok(())
    }

    pub fn finish(self) -> Result<MultiScaleDistances> {
        match (self.row_dist, self.col_dist) {
            (Some(row_dist), Some(col_dist)) => Ok(MultiScaleDistances {
                row_dist,
                col_dist,
                alpha: self.alpha,
                cells_used: self.cells_used,
            }),
            _ => Err(Error::InvalidArgument("no grid cells to accumulate".into())),
        }
    }
}

pub fn accumulate(cells: &[GridCellResult], alpha: f64) -> Result<MultiScaleDistances> {
    let mut acc = MetricAccumulator::new(alpha);
    for c in cells {
        acc.add(c)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cell(l: i32, k: i32, x: DMatrix<f64>) -> GridCellResult {
        GridCellResult { l, k, x_filled: x, n_r: 1, n_c: 1, objective: 0.0, outer_iters: 0, inner_iters: 0 }
    }

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn unit_scale_is_plain_euclidean() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        let c = cell(0, 0, x);
        assert_eq!(cell_distance(&c, Mode::Rows, 0, 1, -0.5), 5.0);
    }

    #[test]
    fn row_scale_four_halves_distance() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        let c = cell(2, 0, x);
        assert_eq!(cell_distance(&c, Mode::Rows, 0, 1, -0.5), 2.5);
    }

    #[test]
    fn cell_distance_matches_loop_oracle() {
        let x = random(5, 4, 1);
        let c = cell(-3, 1, x.clone());
        let w = (2f64.powi(-3) * 2f64.powi(1)).powf(-0.5);
        for i in 0..5 {
            for j in 0..5 {
                let mut s = 0.0;
                for t in 0..4 {
                    s += (x[(i, t)] - x[(j, t)]).powi(2);
                }
                assert!((cell_distance(&c, Mode::Rows, i, j, -0.5) - w * s.sqrt()).abs() < 1e-14);
            }
        }
        for a in 0..4 {
            let mut s = 0.0;
            for r in 0..5 {
                s += (x[(r, a)] - x[(r, 0)]).powi(2);
            }
            assert!((cell_distance(&c, Mode::Columns, a, 0, -0.5) - w * s.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn single_unit_cell_gives_euclidean_matrix() {
        let x = random(4, 3, 2);
        let d = accumulate(&[cell(0, 0, x.clone())], -0.5).unwrap();
        assert_eq!(d.row_dist, euclidean_distances(&x, Mode::Rows));
        assert_eq!(d.col_dist, euclidean_distances(&x, Mode::Columns));
    }

    #[test]
    fn identical_cells_scale_complete_distances() {
        let x = random(5, 4, 3);
        let scales = [(-4, -4), (-4, -3), (-3, -4), (0, 2), (5, 5)];
        let cells: Vec<_> = scales.iter().map(|&(l, k)| cell(l, k, x.clone())).collect();
        let d = accumulate(&cells, -0.5).unwrap();
        let c: f64 = scales.iter().map(|&(l, k)| (2f64.powi(l + k)).powf(-0.5)).sum();
        let expected = euclidean_distances(&x, Mode::Rows) * c;
        assert!((d.row_dist - expected).amax() <= 1e-12);
    }

    #[test]
    fn two_cells_sum_entrywise() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 4.0]);
        // weights: (0,0) -> 1, (2,0) -> 1/2
        let d = accumulate(&[cell(0, 0, a), cell(2, 0, b)], -0.5).unwrap();
        assert!((d.row_dist[(0, 1)] - (1.0 + 0.5 * 3.0)).abs() < 1e-15);
        assert!((d.row_dist[(0, 2)] - (2.0 + 0.5 * 4.0)).abs() < 1e-15);
        assert!((d.row_dist[(1, 2)] - (5f64.sqrt() + 0.5 * 5.0)).abs() < 1e-15);
        assert_eq!(d.cells_used, vec![(0, 0), (2, 0)]);
    }

    #[test]
    fn empty_cell_list_is_an_error() {
        assert!(accumulate(&[], -0.5).is_err());
    }

    #[test]
    fn streaming_and_stored_paths_agree_bitwise() {
        let cells: Vec<_> = (0..4).map(|s| cell(s - 2, 1 - s, random(4, 5, 10 + s as u64))).collect();
        let stored = accumulate(&cells, -0.5).unwrap();
        let mut acc = MetricAccumulator::new(-0.5);
        for c in &cells {
            acc.add(c).unwrap();
        }
        assert_eq!(acc.finish().unwrap(), stored);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn metric_axioms_and_monotonicity(seed in 0u64..200, ncells in 1usize..4) {
                let cells: Vec<_> = (0..ncells)
                    .map(|c| cell(c as i32 - 2, 2 - c as i32, random(5, 3, seed * 7 + c as u64)))
                    .collect();
                let d = accumulate(&cells, -0.5).unwrap();
                for dm in [&d.row_dist, &d.col_dist] {
                    let n = dm.nrows();
                    for i in 0..n {
                        prop_assert_eq!(dm[(i, i)], 0.0);
                        for j in 0..n {
                            prop_assert_eq!(dm[(i, j)], dm[(j, i)]);
                            prop_assert!(dm[(i, j)] >= 0.0);
                            for k in 0..n {
                                prop_assert!(dm[(i, k)] <= dm[(i, j)] + dm[(j, k)] + 1e-12);
                            }
                        }
                    }
                }
                let mut more = cells.clone();
                more.push(cell(3, 3, random(5, 3, seed + 1000)));
                let bigger = accumulate(&more, -0.5).unwrap();
                prop_assert!(bigger.row_dist.iter().zip(d.row_dist.iter()).all(|(b, a)| b >= a));
            }
        }
    }
}

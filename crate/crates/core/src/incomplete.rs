//! Partially observed matrices.
//!
//! An [`ObservedMatrix`] pairs a dense value matrix with a boolean observation
//! mask. Unobserved slots always hold `0.0`, so projecting onto the observed
//! set is an elementwise multiply and the mask is the only source of truth
//! about which entries are known.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Mode;

const MAX_MASK_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
}

impl ObservedMatrix {
    /// Builds an observed matrix, zeroing every unobserved slot.
    pub fn new(mut values: DMatrix<f64>, mask: DMatrix<bool>) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::dims(values.shape(), mask.shape()));
        }
        let (m, n) = values.shape();
        if m < 2 || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 2x2, got {m}x{n}"
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::EmptyMask);
        }
        for (v, &obs) in values.iter_mut().zip(mask.iter()) {
            if !obs {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::InvalidArgument(
                    "observed entries must be finite".into(),
                ));
            }
        }
        Ok(Self { values, mask })
    }

    pub fn fully_observed(values: DMatrix<f64>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self::new(values, mask)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Canonical values; unobserved slots hold zero.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[(i, j)]
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn missing_fraction(&self) -> f64 {
        1.0 - self.observed_count() as f64 / self.mask.len() as f64
    }

    /// Number of nodes in the given mode.
    pub fn node_count(&self, mode: Mode) -> usize {
        match mode {
            Mode::Rows => self.nrows(),
            Mode::Columns => self.ncols(),
        }
    }

    /// Values and observation flags of row (or column) `idx`.
    pub fn lane(&self, mode: Mode, idx: usize) -> (Vec<f64>, Vec<bool>) {
        match mode {
            Mode::Rows => (
                self.values.row(idx).iter().copied().collect(),
                self.mask.row(idx).iter().copied().collect(),
            ),
            Mode::Columns => (
                self.values.column(idx).iter().copied().collect(),
                self.mask.column(idx).iter().copied().collect(),
            ),
        }
    }

    /// Observed values kept, every other entry exactly zero.
    pub fn project_observed(&self) -> DMatrix<f64> {
        self.values.clone()
    }

    /// Observed entries from `self`, unobserved entries from `estimate`.
    pub fn fill_with(&self, estimate: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if estimate.shape() != self.shape() {
            return Err(Error::dims(self.shape(), estimate.shape()));
        }
        Ok(DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| {
            if self.mask[(i, j)] {
                self.values[(i, j)]
            } else {
                estimate[(i, j)]
            }
        }))
    }

    /// Squared Frobenius norm of the residual restricted to observed entries.
    pub(crate) fn observed_residual_sq(&self, estimate: &DMatrix<f64>) -> f64 {
        self.values
            .iter()
            .zip(estimate.iter())
            .zip(self.mask.iter())
            .filter(|(_, &obs)| obs)
            .map(|((x, u), _)| (x - u) * (x - u))
            .sum()
    }

    pub fn observed_mean(&self) -> Result<f64> {
        let (sum, count) = self
            .values
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &obs)| obs)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(sum / count as f64)
    }

    /// Applies a row and a column permutation; `row_perm[i]` is the source row
    /// of output row `i`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        let (m, n) = self.shape();
        if row_perm.len() != m || col_perm.len() != n {
            return Err(Error::dims((m, n), (row_perm.len(), col_perm.len())));
        }
        let values = DMatrix::from_fn(m, n, |i, j| self.values[(row_perm[i], col_perm[j])]);
        let mask = DMatrix::from_fn(m, n, |i, j| self.mask[(row_perm[i], col_perm[j])]);
        Self::new(values, mask)
    }
}

/// Uniform missingness with a fixed fraction of hidden entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub fraction_missing: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(fraction_missing: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction_missing) {
            return Err(Error::InvalidArgument(format!(
                "missing fraction must lie in [0, 1), got {fraction_missing}"
            )));
        }
        Ok(Self { fraction_missing, seed })
    }
}

/// Hides `round(fraction * m * n)` entries chosen uniformly without
/// replacement, re-drawing until every row and column keeps an observation.
pub fn apply_mask(values: &DMatrix<f64>, spec: &MaskSpec) -> Result<ObservedMatrix> {
    let (m, n) = values.shape();
    let spec = MaskSpec::new(spec.fraction_missing, spec.seed)?;
    let total = m * n;
    let n_missing = (spec.fraction_missing * total as f64).round() as usize;
    let infeasible = Error::InfeasibleMask {
        fraction: spec.fraction_missing,
        rows: m,
        cols: n,
    };
    // every row and column needs one observation, which takes at least max(m, n) cells
    if n_missing + m.max(n) > total {
        return Err(infeasible);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cells: Vec<usize> = (0..total).collect();
    for _ in 0..MAX_MASK_DRAWS {
        cells.shuffle(&mut rng);
        let mut mask = DMatrix::from_element(m, n, true);
        for &c in &cells[..n_missing] {
            // column-major linear index
            mask[(c % m, c / m)] = false;
        }
        let rows_ok = mask.row_iter().all(|r| r.iter().any(|&b| b));
        let cols_ok = mask.column_iter().all(|c| c.iter().any(|&b| b));
        if rows_ok && cols_ok {
            return ObservedMatrix::new(values.clone(), mask);
        }
    }
    Err(infeasible)
}

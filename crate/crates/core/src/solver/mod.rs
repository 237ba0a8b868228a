//! Missing-data co-clustering.
//!
//! The objective
//!
//! ```text
//! f(U) = ½‖P_Θ(X) − P_Θ(U)‖²_F + γ_r Σ_{E_r} Ω(‖U_i· − U_j·‖) + γ_c Σ_{E_c} Ω(‖U_·i − U_·j‖)
//! ```
//!
//! is minimized by majorization-minimization: each outer step fills the
//! missing entries from the current iterate, linearizes `Ω` at the current
//! edge differences, and solves the resulting weighted convex biclustering
//! problem exactly (see [`convex_bicluster`]).

mod admm;
mod fusion;
mod mm;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::incomplete::ObservedMatrix;
use crate::penalty::{edge_differences, mm_weights, Penalty};
use crate::Mode;

pub use admm::{convex_bicluster, InnerSolution};
pub use fusion::count_fused_groups;
pub use mm::{co_cluster_missing, mean_imputed, SolveResult, TraceEntry};

pub(crate) use admm::AdmmState;
pub(crate) use mm::co_cluster_missing_warm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Outer stop: relative change of the objective.
    pub tol_outer: f64,
    /// Inner stop: relative change of the convex surrogate and scaled
    /// primal/dual residuals of the splitting.
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Optional outer stop on `‖U_{t+1} − U_t‖_F`, required in addition to
    /// the objective criterion when set.
    pub tol_step: Option<f64>,
    /// Fusion threshold relative to the value range of the filled-in matrix.
    pub fuse_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_outer: 1e-6,
            tol_inner: 1e-8,
            max_outer: 100,
            max_inner: 2000,
            tol_step: None,
            fuse_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_outer, self.tol_inner, self.fuse_tol];
        if positive.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if self.tol_step.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("step tolerance must be positive".into()));
        }
        if self.max_outer < 1 || self.max_inner < 1 {
            return Err(Error::InvalidArgument("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Absolute fusion threshold for a given filled-in matrix.
    pub fn fuse_threshold(&self, filled: &DMatrix<f64>) -> f64 {
        let (lo, hi) = filled
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let range = hi - lo;
        if range > 0.0 {
            self.fuse_tol * range
        } else {
            self.fuse_tol
        }
    }
}

/// Eigendecomposition `L = Q diag(λ) Qᵀ` of a graph Laplacian.
#[derive(Debug, Clone)]
pub(crate) struct SpectralBasis {
    pub q: DMatrix<f64>,
    pub qt: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

impl SpectralBasis {
    fn of(graph: &NeighborGraph) -> Self {
        let eig = SymmetricEigen::new(graph.laplacian());
        let eigenvalues = eig.eigenvalues.map(|v| v.max(0.0));
        let qt = eig.eigenvectors.transpose();
        Self { q: eig.eigenvectors, qt, eigenvalues }
    }
}

/// Fixed row and column graphs together with their Laplacian spectra.
///
/// Both graphs must be connected. The spectra are computed once and shared
/// by every solve on the same graphs.
#[derive(Debug, Clone)]
pub struct FusionGraphs {
    rows: NeighborGraph,
    cols: NeighborGraph,
    pub(crate) row_basis: SpectralBasis,
    pub(crate) col_basis: SpectralBasis,
}

impl FusionGraphs {
    pub fn new(rows: NeighborGraph, cols: NeighborGraph) -> Result<Self> {
        if !rows.is_connected() {
            return Err(Error::Disconnected { mode: "row" });
        }
        if !cols.is_connected() {
            return Err(Error::Disconnected { mode: "column" });
        }
        let row_basis = SpectralBasis::of(&rows);
        let col_basis = SpectralBasis::of(&cols);
        Ok(Self { rows, cols, row_basis, col_basis })
    }

    pub fn rows(&self) -> &NeighborGraph {
        &self.rows
    }

    pub fn cols(&self) -> &NeighborGraph {
        &self.cols
    }

    pub fn graph(&self, mode: Mode) -> &NeighborGraph {
        match mode {
            Mode::Rows => &self.rows,
            Mode::Columns => &self.cols,
        }
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        let expected = (self.rows.node_count(), self.cols.node_count());
        if shape != expected {
            return Err(Error::dims(expected, shape));
        }
        Ok(())
    }
}

/// Regularization strengths for one cell of the scale grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gammas {
    pub rows: f64,
    pub cols: f64,
}

impl Gammas {
    pub fn new(rows: f64, cols: f64) -> Result<Self> {
        if !(rows >= 0.0 && cols >= 0.0 && rows.is_finite() && cols.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "regularization strengths must be finite and nonnegative, got ({rows}, {cols})"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn dyadic(l: i32, k: i32) -> Self {
        Self { rows: 2f64.powi(l), cols: 2f64.powi(k) }
    }
}

fn penalty_sum(u: &DMatrix<f64>, graph: &NeighborGraph, mode: Mode, penalty: &Penalty) -> f64 {
    edge_differences(u, graph, mode)
        .into_iter()
        .map(|d| penalty.value(d))
        .sum()
}

/// `f(U)`: observed-entry fidelity plus the two fusion penalties.
pub fn objective_value(
    u: &DMatrix<f64>,
    x: &ObservedMatrix,
    graphs: &FusionGraphs,
    gammas: Gammas,
    penalty: &Penalty,
) -> Result<f64> {
    graphs.check_shape(x.shape())?;
    graphs.check_shape(u.shape())?;
    Ok(objective_unchecked(u, x, graphs, gammas, penalty))
}

pub(crate) fn objective_unchecked(
    u: &DMatrix<f64>,
    x: &ObservedMatrix,
    graphs: &FusionGraphs,
    gammas: Gammas,
    penalty: &Penalty,
) -> f64 {
    let mut f = 0.5 * x.observed_residual_sq(u);
    if gammas.rows > 0.0 {
        f += gammas.rows * penalty_sum(u, &graphs.rows, Mode::Rows, penalty);
    }
    if gammas.cols > 0.0 {
        f += gammas.cols * penalty_sum(u, &graphs.cols, Mode::Columns, penalty);
    }
    f
}

/// Weighted convex biclustering objective `½‖X̃ − U‖² + Σ γ w ‖ΔU‖`.
pub(crate) fn convex_objective(
    u: &DMatrix<f64>,
    filled: &DMatrix<f64>,
    graphs: &FusionGraphs,
    gammas: Gammas,
    row_weights: &[f64],
    col_weights: &[f64],
) -> f64 {
    let fid = 0.5 * (filled - u).norm_squared();
    let pr: f64 = edge_differences(u, &graphs.rows, Mode::Rows)
        .iter()
        .zip(row_weights)
        .map(|(d, w)| d * w)
        .sum();
    let pc: f64 = edge_differences(u, &graphs.cols, Mode::Columns)
        .iter()
        .zip(col_weights)
        .map(|(d, w)| d * w)
        .sum();
    fid + gammas.rows * pr + gammas.cols * pc
}

/// Majorizer `g(U | Ũ)` of the objective, anchored at `anchor` (Ũ).
///
/// The constant `κ = Σ γ [Ω(d̃) − Ω'(d̃) d̃]` is included so that
/// `g(Ũ | Ũ) = f(Ũ)` holds numerically.
pub fn surrogate_value(
    u: &DMatrix<f64>,
    anchor: &DMatrix<f64>,
    x: &ObservedMatrix,
    graphs: &FusionGraphs,
    gammas: Gammas,
    penalty: &Penalty,
) -> Result<f64> {
    graphs.check_shape(u.shape())?;
    let filled = x.fill_with(anchor)?;
    let wr = mm_weights(anchor, &graphs.rows, Mode::Rows, penalty);
    let wc = mm_weights(anchor, &graphs.cols, Mode::Columns, penalty);
    let kappa = |graph: &NeighborGraph, mode: Mode| -> f64 {
        edge_differences(anchor, graph, mode)
            .into_iter()
            .map(|d| penalty.value(d) - penalty.slope(d) * d)
            .sum()
    };
    let kappa_total = gammas.rows * kappa(&graphs.rows, Mode::Rows)
        + gammas.cols * kappa(&graphs.cols, Mode::Columns);
    Ok(convex_objective(u, &filled, graphs, gammas, &wr, &wc) + kappa_total)
}

use log::debug;
use nalgebra::DMatrix;

use super::admm::{self, AdmmState};
use super::{count_fused_groups, objective_unchecked, FusionGraphs, Gammas, SolverConfig};
use crate::error::{Error, Result};
use crate::incomplete::ObservedMatrix;
use crate::penalty::{mm_weights, Penalty};
use crate::Mode;

/// Objective increases below this relative size are floating-point noise.
const ROUNDING_SLACK: f64 = 1e-13;
/// Inner tolerance for the first outer step, and the loosest ever used.
const INEXACT_MAX: f64 = 1e-3;
/// Inner tolerance relative to the last outer objective decrease.
const INEXACT_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub n_r: usize,
    pub n_c: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Smooth estimate `U(γ_r, γ_c)`.
    pub u: DMatrix<f64>,
    /// Observed entries of `X`, missing entries from `u`.
    pub x_filled: DMatrix<f64>,
    pub n_r: usize,
    pub n_c: usize,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    /// Objective at the initial point followed by one value per accepted
    /// outer iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial point")
    }

    /// `iter,objective,n_r,n_c` lines, one per trace entry.
    pub fn trace_lines(&self) -> Vec<String> {
        self.trace
            .iter()
            .map(|t| format!("{},{},{},{}", t.iter, crate::io::format_number(t.objective), t.n_r, t.n_c))
            .collect()
    }
}

/// Default starting point: observed entries as given, missing entries set to
/// the mean of the observed values.
pub fn mean_imputed(x: &ObservedMatrix) -> Result<DMatrix<f64>> {
    let mean = x.observed_mean()?;
    x.fill_with(&DMatrix::from_element(x.nrows(), x.ncols(), mean))
}

/// Majorization-minimization for the missing-data co-clustering objective.
///
/// Each outer step fills the missing entries of `X` from the current
/// iterate, sets edge weights `Ω'(‖ΔU‖)` from it, and solves the weighted
/// convex biclustering problem. The initial weights are taken from `u0`,
/// which defaults to the mean-imputed data matrix.
///
/// Early inner solves are inexact, with a tolerance tied to the last
/// objective decrease; the final step is always solved to
/// `cfg.tol_inner`. An inexact step that raises the objective is redone at
/// full accuracy. A full-accuracy step that still raises the objective
/// beyond floating-point noise is rejected and ends the iteration, so the
/// returned trace is non-increasing.
pub fn co_cluster_missing(
    x: &ObservedMatrix,
    gammas: Gammas,
    graphs: &FusionGraphs,
    penalty: &Penalty,
    cfg: &SolverConfig,
    u0: Option<&DMatrix<f64>>,
) -> Result<SolveResult> {
    let mut state = None;
    co_cluster_missing_warm(x, gammas, graphs, penalty, cfg, u0, &mut state)
}

/// As [`co_cluster_missing`], carrying splitting state across calls.
pub(crate) fn co_cluster_missing_warm(
    x: &ObservedMatrix,
    gammas: Gammas,
    graphs: &FusionGraphs,
    penalty: &Penalty,
    cfg: &SolverConfig,
    u0: Option<&DMatrix<f64>>,
    state: &mut Option<AdmmState>,
) -> Result<SolveResult> {
    cfg.validate()?;
    graphs.check_shape(x.shape())?;
    let gammas = Gammas::new(gammas.rows, gammas.cols)?;
    let mut u = match u0 {
        Some(u0) => {
            graphs.check_shape(u0.shape())?;
            u0.clone()
        }
        None => mean_imputed(x)?,
    };

    let counts = |u: &DMatrix<f64>| -> Result<(usize, usize)> {
        let tol = cfg.fuse_threshold(&x.fill_with(u)?);
        Ok((
            count_fused_groups(u, graphs.rows(), Mode::Rows, tol).0,
            count_fused_groups(u, graphs.cols(), Mode::Columns, tol).0,
        ))
    };

    let mut f = objective_unchecked(&u, x, graphs, gammas, penalty);
    let (n_r0, n_c0) = counts(&u)?;
    let mut trace = vec![TraceEntry { iter: 0, objective: f, n_r: n_r0, n_c: n_c0 }];
    let mut st = state.take().unwrap_or_else(|| AdmmState::cold(&u, graphs));
    let mut outer_iters = 0;
    let mut inner_iters = 0;
    let mut converged = false;

    let mut inner_tol = INEXACT_MAX.max(cfg.tol_inner);
    let mut t = 0;
    while t < cfg.max_outer {
        let filled = x.fill_with(&u)?;
        let wr = mm_weights(&u, graphs.rows(), Mode::Rows, penalty);
        let wc = mm_weights(&u, graphs.cols(), Mode::Columns, penalty);
        let sol = admm::solve(&filled, gammas, &wr, &wc, graphs, cfg, inner_tol, &mut st);
        inner_iters += sol.iterations;
        if !sol.converged {
            return Err(Error::NonConvergence {
                iterations: sol.iterations,
                residual: sol.primal_residual,
            });
        }
        // zero iterations means the closed-form solution was returned
        let exact = inner_tol <= cfg.tol_inner || sol.iterations == 0;
        let f_new = objective_unchecked(&sol.u, x, graphs, gammas, penalty);
        if f_new > f + ROUNDING_SLACK * f.abs() {
            if !exact {
                // an inexact step may overshoot; redo it at full accuracy
                inner_tol = cfg.tol_inner;
                continue;
            }
            debug!("outer step {} rejected: objective {f_new:e} > {f:e}", t + 1);
            converged = true;
            break;
        }
        t += 1;
        let rel = (f - f_new) / f.abs().max(f64::MIN_POSITIVE);
        let step = (&sol.u - &u).norm();
        u = sol.u;
        f = f_new;
        outer_iters = t;
        trace.push(TraceEntry { iter: t, objective: f, n_r: sol.n_r, n_c: sol.n_c });
        let step_ok = cfg.tol_step.is_none_or(|tol| step <= tol);
        if rel < cfg.tol_outer && step_ok {
            if exact {
                converged = true;
                break;
            }
            // confirm with a full-accuracy step before stopping
            inner_tol = cfg.tol_inner;
            continue;
        }
        inner_tol = (INEXACT_FACTOR * rel).clamp(cfg.tol_inner, INEXACT_MAX.max(cfg.tol_inner));
    }
    *state = Some(st);

    let x_filled = x.fill_with(&u)?;
    let tol = cfg.fuse_threshold(&x_filled);
    let (n_r, row_labels) = count_fused_groups(&u, graphs.rows(), Mode::Rows, tol);
    let (n_c, col_labels) = count_fused_groups(&u, graphs.cols(), Mode::Columns, tol);
    Ok(SolveResult {
        objective_trace: trace.iter().map(|e| e.objective).collect(),
        trace,
        u,
        x_filled,
        n_r,
        n_c,
        row_labels,
        col_labels,
        outer_iters,
        inner_iters,
        converged,
    })
}

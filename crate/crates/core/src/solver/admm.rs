//! Weighted convex biclustering by alternating direction splitting.
//!
//! Minimizes
//!
//! ```text
//! ½‖X̃ − U‖²_F + γ_r Σ_e w_e ‖V_e‖₂ + γ_c Σ_f w_f ‖Z_f‖₂
//! s.t. V_e = U_i· − U_j·  (row edges),  Z_f = U_·a − U_·b  (column edges)
//! ```
//!
//! The `U` step is the Sylvester system `(I + ρ L_r) U + ρ U L_c = R`, solved
//! exactly in the eigenbases of the two graph Laplacians. Because the bases do
//! not depend on `ρ`, the penalty parameter is adapted freely by residual
//! balancing. The `V`/`Z` steps are group soft-thresholds
//! `max(0, 1 − τ/‖v‖) v`, which produce exact zeros on fused edges.

use nalgebra::DMatrix;

use super::fusion::{average_groups, count_fused_groups, groups_from_edges};
use super::{FusionGraphs, Gammas, SolverConfig};
use crate::error::{Error, Result};
use crate::Mode;

const RHO_INIT: f64 = 1.0;
const RHO_ADAPT_EVERY: usize = 10;
const RHO_BALANCE: f64 = 2.0;
const RHO_FACTOR: f64 = 2.0;
/// Over-relaxation of the splitting constraint, in (0, 2).
const RELAX: f64 = 1.6;

/// Solution of one weighted convex biclustering problem.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub u: DMatrix<f64>,
    pub n_r: usize,
    pub n_c: usize,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub converged: bool,
}

/// Splitting variables and scaled duals; reusable as a warm start.
///
/// `v` is `n × |E_r|` (one column per row edge), `z` is `m × |E_c|`.
#[derive(Debug, Clone)]
pub(crate) struct AdmmState {
    v: DMatrix<f64>,
    lam: DMatrix<f64>,
    z: DMatrix<f64>,
    gam: DMatrix<f64>,
    rho: f64,
}

impl AdmmState {
    pub(crate) fn cold(u: &DMatrix<f64>, graphs: &FusionGraphs) -> Self {
        let (m, n) = u.shape();
        let er = graphs.rows().edges();
        let ec = graphs.cols().edges();
        let mut v = DMatrix::zeros(n, er.len());
        for (e, &(i, j)) in er.iter().enumerate() {
            for t in 0..n {
                v[(t, e)] = u[(i, t)] - u[(j, t)];
            }
        }
        let mut z = DMatrix::zeros(m, ec.len());
        for (f, &(a, b)) in ec.iter().enumerate() {
            for s in 0..m {
                z[(s, f)] = u[(s, a)] - u[(s, b)];
            }
        }
        Self {
            lam: DMatrix::zeros(n, er.len()),
            gam: DMatrix::zeros(m, ec.len()),
            v,
            z,
            rho: RHO_INIT,
        }
    }

    fn matches(&self, graphs: &FusionGraphs, shape: (usize, usize)) -> bool {
        self.v.shape() == (shape.1, graphs.rows().edge_count())
            && self.z.shape() == (shape.0, graphs.cols().edge_count())
    }
}

/// Group soft-threshold in place; returns true if the vector was zeroed.
#[inline]
fn shrink(v: &mut [f64], tau: f64) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= tau {
        v.iter_mut().for_each(|x| *x = 0.0);
        true
    } else {
        let s = 1.0 - tau / norm;
        v.iter_mut().for_each(|x| *x *= s);
        false
    }
}

/// Solves the weighted convex biclustering problem for a filled-in matrix.
///
/// Fails with [`Error::NonConvergence`] if the splitting has not met the
/// tolerances within `cfg.max_inner` iterations.
#[allow(clippy::too_many_arguments)]
pub fn convex_bicluster(
    filled: &DMatrix<f64>,
    gammas: Gammas,
    row_weights: &[f64],
    col_weights: &[f64],
    graphs: &FusionGraphs,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    cfg.validate()?;
    graphs.check_shape(filled.shape())?;
    if row_weights.len() != graphs.rows().edge_count() || col_weights.len() != graphs.cols().edge_count() {
        return Err(Error::InvalidArgument("one weight per graph edge is required".into()));
    }
    if row_weights.iter().chain(col_weights).any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument("edge weights must be positive and finite".into()));
    }
    let mut state = AdmmState::cold(filled, graphs);
    let sol = solve(filled, gammas, row_weights, col_weights, graphs, cfg, cfg.tol_inner, &mut state);
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NonConvergence { iterations: sol.iterations, residual: sol.primal_residual })
    }
}

/// Runs the splitting from `state` to tolerance `tol`, leaving the final
/// iterate in it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve(
    filled: &DMatrix<f64>,
    gammas: Gammas,
    row_weights: &[f64],
    col_weights: &[f64],
    graphs: &FusionGraphs,
    cfg: &SolverConfig,
    tol: f64,
    state: &mut AdmmState,
) -> InnerSolution {
    let (m, n) = filled.shape();
    if !state.matches(graphs, (m, n)) {
        *state = AdmmState::cold(filled, graphs);
    }
    let er = graphs.rows().edges();
    let ec = graphs.cols().edges();
    let active_r = gammas.rows > 0.0 && !er.is_empty();
    let active_c = gammas.cols > 0.0 && !ec.is_empty();

    if !active_r && !active_c {
        // nothing couples the entries; the minimizer is the data itself
        let u = filled.clone();
        return finish(u, filled, graphs, cfg, None, None, 0, 0.0, true);
    }

    let thr_r: Vec<f64> = row_weights.iter().map(|w| gammas.rows * w).collect();
    let thr_c: Vec<f64> = col_weights.iter().map(|w| gammas.cols * w).collect();
    let rb = &graphs.row_basis;
    let cb = &graphs.col_basis;
    let scale = filled.norm().max(f64::MIN_POSITIVE);

    let mut u = filled.clone();
    let mut rhs = DMatrix::zeros(m, n);
    let mut tmp_mn = DMatrix::zeros(m, n);
    let mut spec = DMatrix::zeros(m, n);
    let mut buf_n = vec![0.0; n];
    let mut buf_m = vec![0.0; m];
    let mut row_zero = vec![false; er.len()];
    let mut col_zero = vec![false; ec.len()];
    let mut prev_obj = f64::INFINITY;
    let mut primal = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_inner {
        iterations = it;
        let rho = state.rho;

        // U step: (I + ρ L_r) U + ρ U L_c = X̃ + ρ Φ_rᵀ(V − Λ) + ρ (Z − Γ) Φ_c
        rhs.copy_from(filled);
        if active_r {
            for (e, &(i, j)) in er.iter().enumerate() {
                for t in 0..n {
                    let d = rho * (state.v[(t, e)] - state.lam[(t, e)]);
                    rhs[(i, t)] += d;
                    rhs[(j, t)] -= d;
                }
            }
        }
        if active_c {
            for (f, &(a, b)) in ec.iter().enumerate() {
                for s in 0..m {
                    let d = rho * (state.z[(s, f)] - state.gam[(s, f)]);
                    rhs[(s, a)] += d;
                    rhs[(s, b)] -= d;
                }
            }
        }
        rb.qt.mul_to(&rhs, &mut tmp_mn);
        tmp_mn.mul_to(&cb.q, &mut spec);
        for j in 0..n {
            let lc = if active_c { cb.eigenvalues[j] } else { 0.0 };
            for i in 0..m {
                let lr = if active_r { rb.eigenvalues[i] } else { 0.0 };
                spec[(i, j)] /= 1.0 + rho * (lr + lc);
            }
        }
        rb.q.mul_to(&spec, &mut tmp_mn);
        tmp_mn.mul_to(&cb.qt, &mut u);

        // V and Z steps with scaled dual updates
        let mut r_sq = 0.0;
        let mut dual_r = DMatrix::<f64>::zeros(if active_r { m } else { 0 }, n);
        let mut dual_c = DMatrix::<f64>::zeros(m, if active_c { n } else { 0 });
        let mut penalty = 0.0;
        if active_r {
            for (e, &(i, j)) in er.iter().enumerate() {
                for t in 0..n {
                    let diff = u[(i, t)] - u[(j, t)];
                    buf_n[t] = RELAX * diff + (1.0 - RELAX) * state.v[(t, e)] + state.lam[(t, e)];
                }
                row_zero[e] = shrink(&mut buf_n, thr_r[e] / rho);
                let mut vn = 0.0;
                for t in 0..n {
                    let diff = u[(i, t)] - u[(j, t)];
                    let relaxed = RELAX * diff + (1.0 - RELAX) * state.v[(t, e)];
                    let dv = buf_n[t] - state.v[(t, e)];
                    dual_r[(i, t)] += dv;
                    dual_r[(j, t)] -= dv;
                    state.v[(t, e)] = buf_n[t];
                    state.lam[(t, e)] += relaxed - buf_n[t];
                    let res = diff - buf_n[t];
                    r_sq += res * res;
                    vn += buf_n[t] * buf_n[t];
                }
                penalty += thr_r[e] * vn.sqrt();
            }
        }
        if active_c {
            for (f, &(a, b)) in ec.iter().enumerate() {
                for s in 0..m {
                    let diff = u[(s, a)] - u[(s, b)];
                    buf_m[s] = RELAX * diff + (1.0 - RELAX) * state.z[(s, f)] + state.gam[(s, f)];
                }
                col_zero[f] = shrink(&mut buf_m, thr_c[f] / rho);
                let mut zn = 0.0;
                for s in 0..m {
                    let diff = u[(s, a)] - u[(s, b)];
                    let relaxed = RELAX * diff + (1.0 - RELAX) * state.z[(s, f)];
                    let dz = buf_m[s] - state.z[(s, f)];
                    dual_c[(s, a)] += dz;
                    dual_c[(s, b)] -= dz;
                    state.z[(s, f)] = buf_m[s];
                    state.gam[(s, f)] += relaxed - buf_m[s];
                    let res = diff - buf_m[s];
                    r_sq += res * res;
                    zn += buf_m[s] * buf_m[s];
                }
                penalty += thr_c[f] * zn.sqrt();
            }
        }
        primal = r_sq.sqrt();
        let dual = rho * (dual_r.norm_squared() + dual_c.norm_squared()).sqrt();
        let obj = 0.5 * (filled - &u).norm_squared() + penalty;
        let rel_change = (prev_obj - obj).abs() / obj.abs().max(f64::MIN_POSITIVE);
        prev_obj = obj;

        if rel_change <= tol && primal <= tol * scale && dual <= tol * scale {
            converged = true;
            break;
        }

        if it % RHO_ADAPT_EVERY == 0 {
            let factor = if primal > RHO_BALANCE * dual {
                RHO_FACTOR
            } else if dual > RHO_BALANCE * primal {
                1.0 / RHO_FACTOR
            } else {
                1.0
            };
            if factor != 1.0 {
                state.rho *= factor;
                state.lam /= factor;
                state.gam /= factor;
            }
        }
    }

    let rz = active_r.then_some(row_zero.as_slice());
    let cz = active_c.then_some(col_zero.as_slice());
    finish(u, filled, graphs, cfg, rz, cz, iterations, primal, converged)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mut u: DMatrix<f64>,
    filled: &DMatrix<f64>,
    graphs: &FusionGraphs,
    cfg: &SolverConfig,
    row_zero: Option<&[bool]>,
    col_zero: Option<&[bool]>,
    iterations: usize,
    primal_residual: f64,
    converged: bool,
) -> InnerSolution {
    // snap edges whose split variable is exactly zero onto exact equality
    let (m, n) = u.shape();
    let rg = match row_zero {
        Some(z) => groups_from_edges(graphs.rows(), z.iter().copied()),
        None => (0..m).collect(),
    };
    let cg = match col_zero {
        Some(z) => groups_from_edges(graphs.cols(), z.iter().copied()),
        None => (0..n).collect(),
    };
    average_groups(&mut u, &rg, &cg);

    let tol = cfg.fuse_threshold(filled);
    let (n_r, row_labels) = count_fused_groups(&u, graphs.rows(), Mode::Rows, tol);
    let (n_c, col_labels) = count_fused_groups(&u, graphs.cols(), Mode::Columns, tol);
    InnerSolution {
        u,
        n_r,
        n_c,
        row_labels,
        col_labels,
        iterations,
        primal_residual,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::super::convex_objective;
    use super::*;
    use crate::graph::NeighborGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graphs(m: usize, n: usize) -> FusionGraphs {
        FusionGraphs::new(NeighborGraph::complete(m), NeighborGraph::path(n)).unwrap()
    }

    #[test]
    fn zero_regularization_returns_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let g = graphs(5, 4);
        let wr = vec![1.0; g.rows().edge_count()];
        let wc = vec![1.0; g.cols().edge_count()];
        let sol = convex_bicluster(&x, Gammas::new(0.0, 0.0).unwrap(), &wr, &wc, &g, &SolverConfig::default()).unwrap();
        assert_eq!(sol.u, x);
        assert_eq!((sol.n_r, sol.n_c), (5, 4));
    }

    #[test]
    fn huge_regularization_returns_grand_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let g = graphs(5, 4);
        let wr = vec![1.0; g.rows().edge_count()];
        let wc = vec![1.0; g.cols().edge_count()];
        let sol = convex_bicluster(&x, Gammas::new(1e6, 1e6).unwrap(), &wr, &wc, &g, &SolverConfig::default()).unwrap();
        let mean = x.mean();
        assert!(sol.u.iter().all(|&v| (v - mean).abs() < 1e-9));
        assert_eq!((sol.n_r, sol.n_c), (1, 1));
    }

    #[test]
    fn one_sided_regularization_is_convex_clustering() {
        // γ_c = 0: columns decouple, rows fuse fully for large γ_r
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 8.0]);
        let g = graphs(3, 2);
        let wr = vec![1.0; 3];
        let wc = vec![1.0; 1];
        let sol = convex_bicluster(&x, Gammas::new(100.0, 0.0).unwrap(), &wr, &wc, &g, &SolverConfig::default()).unwrap();
        assert_eq!(sol.n_r, 1);
        assert!((sol.u[(0, 0)] - 2.0).abs() < 1e-9);
        assert!((sol.u[(0, 1)] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let x = DMatrix::zeros(3, 2);
        let g = graphs(3, 2);
        let r = convex_bicluster(&x, Gammas::new(1.0, 1.0).unwrap(), &[1.0, 0.0, 1.0], &[1.0], &g, &SolverConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let g = graphs(5, 4);
        let cfg = SolverConfig { max_inner: 2, ..Default::default() };
        let wr = vec![1.0; g.rows().edge_count()];
        let wc = vec![1.0; g.cols().edge_count()];
        let r = convex_bicluster(&x, Gammas::new(0.3, 0.3).unwrap(), &wr, &wc, &g, &cfg);
        assert!(matches!(r, Err(Error::NonConvergence { iterations: 2, .. })));
    }

    /// Subgradient method with step 1/t and best-iterate tracking.
    fn subgradient_oracle(
        x: &DMatrix<f64>,
        gm: Gammas,
        wr: &[f64],
        wc: &[f64],
        g: &FusionGraphs,
        iters: usize,
    ) -> f64 {
        let (m, n) = x.shape();
        let mut u = x.clone();
        let mut best = convex_objective(&u, x, g, gm, wr, wc);
        for t in 1..=iters {
            let mut grad = &u - x;
            for (e, &(i, j)) in g.rows().edges().iter().enumerate() {
                let d: Vec<f64> = (0..n).map(|c| u[(i, c)] - u[(j, c)]).collect();
                let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    for c in 0..n {
                        let s = gm.rows * wr[e] * d[c] / nrm;
                        grad[(i, c)] += s;
                        grad[(j, c)] -= s;
                    }
                }
            }
            for (f, &(a, b)) in g.cols().edges().iter().enumerate() {
                let d: Vec<f64> = (0..m).map(|r| u[(r, a)] - u[(r, b)]).collect();
                let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    for r in 0..m {
                        let s = gm.cols * wc[f] * d[r] / nrm;
                        grad[(r, a)] += s;
                        grad[(r, b)] -= s;
                    }
                }
            }
            u -= grad * (1.0 / t as f64);
            best = best.min(convex_objective(&u, x, g, gm, wr, wc));
        }
        best
    }

    #[test]
    fn matches_subgradient_oracle_on_small_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-2.0..2.0));
        let g = graphs(5, 4);
        let gm = Gammas::new(0.3, 0.5).unwrap();
        let wr = vec![1.0; g.rows().edge_count()];
        let wc = vec![1.0; g.cols().edge_count()];
        let sol = convex_bicluster(&x, gm, &wr, &wc, &g, &SolverConfig::default()).unwrap();
        let ours = convex_objective(&sol.u, &x, &g, gm, &wr, &wc);
        let oracle = subgradient_oracle(&x, gm, &wr, &wc, &g, 100_000);
        assert!((ours - oracle) / oracle.abs() <= 1e-6, "ours {ours} oracle {oracle}");
    }
}

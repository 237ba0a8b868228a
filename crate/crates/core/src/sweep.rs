//! Traversal of the `(γ_r, γ_c) = (2^l, 2^k)` solution surface.
//!
//! For each row scale `l`, the column scale climbs from `k0` until the
//! columns fuse into one cluster; the row scale then doubles and the column
//! scale resets. The sweep ends once the first cell of a row of the grid
//! already has a single row cluster.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::incomplete::ObservedMatrix;
use crate::penalty::Penalty;
use crate::solver::{co_cluster_missing_warm, AdmmState, FusionGraphs, Gammas, SolveResult, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleGrid {
    pub l0: i32,
    pub k0: i32,
    pub l_max: i32,
    pub k_max: i32,
}

impl Default for ScaleGrid {
    fn default() -> Self {
        Self { l0: -4, k0: -4, l_max: 20, k_max: 20 }
    }
}

impl ScaleGrid {
    pub fn validate(&self) -> Result<()> {
        if self.l0 >= 0 || self.k0 >= 0 {
            return Err(Error::InvalidArgument(format!(
                "grid must start at negative exponents, got l0={} k0={}",
                self.l0, self.k0
            )));
        }
        if self.l_max <= self.l0 || self.k_max <= self.k0 {
            return Err(Error::InvalidArgument("grid caps must exceed the start exponents".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCellResult {
    pub l: i32,
    pub k: i32,
    pub x_filled: DMatrix<f64>,
    pub n_r: usize,
    pub n_c: usize,
    pub objective: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
}

impl GridCellResult {
    pub fn gammas(&self) -> Gammas {
        Gammas::dyadic(self.l, self.k)
    }

    /// `l,k,n_r,n_c,objective`
    pub fn manifest_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.l,
            self.k,
            self.n_r,
            self.n_c,
            crate::io::format_number(self.objective)
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<GridCellResult>,
    /// True if a grid cap stopped the sweep before full fusion.
    pub cap_reached: bool,
}

impl SweepResult {
    pub fn total_outer_iters(&self) -> usize {
        self.cells.iter().map(|c| c.outer_iters).sum()
    }

    pub fn total_inner_iters(&self) -> usize {
        self.cells.iter().map(|c| c.inner_iters).sum()
    }

    pub fn manifest_lines(&self) -> Vec<String> {
        self.cells.iter().map(GridCellResult::manifest_line).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Start each cell from the previous cell's estimate and splitting state.
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { warm_start: true }
    }
}

pub fn sweep(
    x: &ObservedMatrix,
    graphs: &FusionGraphs,
    penalty: &Penalty,
    grid: &ScaleGrid,
    cfg: &SolverConfig,
    opts: SweepOptions,
) -> Result<SweepResult> {
    sweep_with(x, graphs, penalty, grid, cfg, opts, |_| {})
}

/// As [`sweep`], calling `on_cell` for every cell in execution order.
pub fn sweep_with(
    x: &ObservedMatrix,
    graphs: &FusionGraphs,
    penalty: &Penalty,
    grid: &ScaleGrid,
    cfg: &SolverConfig,
    opts: SweepOptions,
    mut on_cell: impl FnMut(&GridCellResult),
) -> Result<SweepResult> {
    grid.validate()?;
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut cap_reached = false;
    let mut done = false;
    // warm start for the first cell of the next grid row
    let mut row_seed: Option<(DMatrix<f64>, AdmmState)> = None;

    for l in grid.l0..=grid.l_max {
        let mut chain: Option<(DMatrix<f64>, AdmmState)> = if opts.warm_start { row_seed.take() } else { None };
        let mut first_n_r = None;
        let mut columns_fused = false;

        for k in grid.k0..=grid.k_max {
            let (u0, mut state) = match chain.take() {
                Some((u, s)) => (Some(u), Some(s)),
                None => (None, None),
            };
            let res: SolveResult =
                co_cluster_missing_warm(x, Gammas::dyadic(l, k), graphs, penalty, cfg, u0.as_ref(), &mut state)?;
            let cell = GridCellResult {
                l,
                k,
                x_filled: res.x_filled.clone(),
                n_r: res.n_r,
                n_c: res.n_c,
                objective: res.objective(),
                outer_iters: res.outer_iters,
                inner_iters: res.inner_iters,
            };
            on_cell(&cell);
            cells.push(cell);

            if opts.warm_start {
                let state = state.expect("solver leaves its state");
                if k == grid.k0 {
                    row_seed = Some((res.u.clone(), state.clone()));
                }
                chain = Some((res.u, state));
            }
            if k == grid.k0 {
                first_n_r = Some(res.n_r);
            }
            if res.n_c == 1 {
                columns_fused = true;
                break;
            }
        }
        if !columns_fused {
            cap_reached = true;
        }
        if first_n_r == Some(1) {
            done = true;
            break;
        }
    }
    if !done {
        cap_reached = true;
    }
    if cap_reached {
        warn!("scale grid cap reached before full fusion ({} cells)", cells.len());
    }
    Ok(SweepResult { cells, cap_reached })
}

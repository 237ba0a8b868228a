//! Concave fusion penalties and the majorization weights derived from them.
//!
//! A penalty `Ω: [0, ∞) → [0, ∞)` must be concave, increasing, vanish at zero
//! and have a finite slope at the origin. Linearizing `Ω` at the current
//! iterate gives the per-edge weights `Ω'(‖Ũ_i − Ũ_j‖)` that turn the
//! non-convex problem into a weighted convex biclustering problem.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::Mode;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `Ω(z) = ½ ∫₀ᶻ dζ / (√ζ + ε)`, which tends to `√z` as `ε → 0`.
    Snowflake { epsilon: f64 },
    /// `Ω(z) = z`; fixed weights, i.e. plain convex biclustering.
    Linear,
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::Snowflake { epsilon: DEFAULT_EPSILON }
    }
}

impl Penalty {
    pub fn snowflake(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "snowflake epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Penalty::Snowflake { epsilon })
    }

    pub fn omega(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.value(z))
    }

    pub fn omega_deriv(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.slope(z))
    }

    /// Unchecked `Ω(z)` for `z ≥ 0`.
    #[inline]
    pub(crate) fn value(&self, z: f64) -> f64 {
        match *self {
            // closed form of the integral after substituting s = √ζ
            Penalty::Snowflake { epsilon } => {
                let s = z.sqrt();
                s - epsilon * (s / epsilon).ln_1p()
            }
            Penalty::Linear => z,
        }
    }

    /// Unchecked `Ω'(z)` for `z ≥ 0`.
    #[inline]
    pub(crate) fn slope(&self, z: f64) -> f64 {
        match *self {
            Penalty::Snowflake { epsilon } => 0.5 / (z.sqrt() + epsilon),
            Penalty::Linear => 1.0,
        }
    }
}

fn check_nonneg(z: f64) -> Result<()> {
    if z >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "penalty argument must be nonnegative, got {z}"
        )))
    }
}

/// Euclidean distance between the endpoints of each edge, measured on rows
/// or columns of `u`.
pub fn edge_differences(u: &DMatrix<f64>, graph: &NeighborGraph, mode: Mode) -> Vec<f64> {
    graph
        .edges()
        .iter()
        .map(|&(i, j)| match mode {
            Mode::Rows => u
                .row(i)
                .iter()
                .zip(u.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Mode::Columns => (u.column(i) - u.column(j)).norm(),
        })
        .collect()
}

/// Per-edge weights `Ω'(‖U_i − U_j‖₂)` in graph edge order.
pub fn mm_weights(u: &DMatrix<f64>, graph: &NeighborGraph, mode: Mode, penalty: &Penalty) -> Vec<f64> {
    edge_differences(u, graph, mode)
        .into_iter()
        .map(|d| penalty.slope(d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }

    /// Quadrature of ½ ∫₀ᶻ dζ/(√ζ+ε) on geometric sub-intervals; the piece
    /// [0, 1e-40] is bounded by 1e-40/(2ε) and dropped.
    fn snowflake_quadrature(z: f64, eps: f64) -> f64 {
        let f = |t: f64| 0.5 / (t.sqrt() + eps);
        let mut total = 0.0;
        let mut hi = z;
        while hi > 1e-40 {
            let lo = hi / 2.0;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            total += simpson(&f, lo, hi, fa, fm, fb, whole, 1e-17 * hi.max(1e-300), 40);
            hi = lo;
        }
        total
    }

    #[test]
    fn omega_vanishes_at_origin() {
        assert_eq!(Penalty::default().omega(0.0).unwrap(), 0.0);
    }

    #[test]
    fn omega_at_one_is_one() {
        let q = snowflake_quadrature(1.0, 1e-12);
        assert!((q - 1.0).abs() < 1e-9);
        assert!((Penalty::default().omega(1.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_quadrature_at_log_spaced_points() {
        for &eps in &[1e-12, 1e-3, 0.5] {
            let p = Penalty::snowflake(eps).unwrap();
            for k in 0..10 {
                let z = 10f64.powf(-6.0 + k as f64);
                let q = snowflake_quadrature(z, eps);
                let c = p.omega(z).unwrap();
                assert!(
                    (q - c).abs() <= 1e-10 * q.max(1e-12),
                    "eps={eps} z={z}: quadrature {q} closed form {c}"
                );
            }
        }
    }

    #[test]
    fn small_epsilon_approaches_square_root() {
        for &z in &[1e-4, 0.3, 2.0, 50.0] {
            let p = Penalty::snowflake(1e-14).unwrap();
            assert!((p.omega(z).unwrap() - z.sqrt()).abs() < 1e-11);
        }
    }

    #[test]
    fn derivative_cases() {
        let p = Penalty::default();
        assert_eq!(p.omega_deriv(0.0).unwrap(), 0.5 / 1e-12);
        assert!((p.omega_deriv(1.0).unwrap() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let p = Penalty::default();
        for &z in &[0.1, 1.0, 10.0] {
            let h = 1e-5 * z;
            let fd = (p.omega(z + h).unwrap() - p.omega(z - h).unwrap()) / (2.0 * h);
            assert!((fd - p.omega_deriv(z).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn negative_arguments_are_rejected() {
        assert!(Penalty::default().omega(-1e-3).is_err());
        assert!(Penalty::Linear.omega_deriv(-1.0).is_err());
        assert!(Penalty::snowflake(0.0).is_err());
    }

    #[test]
    fn constant_matrix_gets_maximal_weights() {
        let u = DMatrix::from_element(4, 3, 2.0);
        let g = NeighborGraph::complete(4);
        let w = mm_weights(&u, &g, Mode::Rows, &Penalty::default());
        assert!(w.iter().all(|&x| x == 0.5 / 1e-12));
    }

    #[test]
    fn identical_rows_get_the_largest_weight() {
        let u = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 3.0, 1.0]);
        let g = NeighborGraph::complete(3);
        let w = mm_weights(&u, &g, Mode::Rows, &Penalty::default());
        let imax = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert_eq!(g.edges()[imax], (0, 1));
    }

    #[test]
    fn weights_match_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let p = Penalty::default();
        let gr = NeighborGraph::complete(5);
        let gc = NeighborGraph::path(4);
        let wr = mm_weights(&u, &gr, Mode::Rows, &p);
        for (l, &(i, j)) in gr.edges().iter().enumerate() {
            let mut s = 0.0;
            for c in 0..4 {
                s += (u[(i, c)] - u[(j, c)]).powi(2);
            }
            assert!((wr[l] - p.omega_deriv(s.sqrt()).unwrap()).abs() < 1e-12);
        }
        let wc = mm_weights(&u, &gc, Mode::Columns, &p);
        for (l, &(i, j)) in gc.edges().iter().enumerate() {
            let mut s = 0.0;
            for r in 0..5 {
                s += (u[(r, i)] - u[(r, j)]).powi(2);
            }
            assert!((wc[l] - p.omega_deriv(s.sqrt()).unwrap()).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn derivative_strictly_decreasing_and_positive(a in 0.0f64..100.0, b in 0.0f64..100.0) {
                prop_assume!(a < b);
                let p = Penalty::default();
                let (da, db) = (p.omega_deriv(a).unwrap(), p.omega_deriv(b).unwrap());
                prop_assert!(da > db);
                prop_assert!(db > 0.0 && da.is_finite());
            }

            #[test]
            fn tangent_line_majorizes(z1 in 0.0f64..50.0, z2 in 0.0f64..50.0, eps in 1e-12f64..1.0) {
                let p = Penalty::snowflake(eps).unwrap();
                let tangent = p.omega(z1).unwrap() + p.omega_deriv(z1).unwrap() * (z2 - z1);
                prop_assert!(p.omega(z2).unwrap() <= tangent + 1e-12 * (1.0 + tangent.abs()));
            }
        }
    }
}

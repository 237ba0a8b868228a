//! Diffusion maps.
//!
//! Distances become Gaussian affinities with a median bandwidth. The
//! random-walk matrix `P = D⁻¹A` is diagonalized through its symmetric
//! conjugate `S = D^{-1/2} A D^{-1/2}`, whose eigenvectors map back to right
//! eigenvectors of `P` by `ψ = D^{-1/2} v`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 3;

/// Tolerance for the trivial pair check and for flagging repeated eigenvalues.
const TRIVIAL_TOL: f64 = 1e-8;
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEmbedding {
    /// `node_count × d`, column `ℓ` is `λ_ℓ ψ_ℓ`.
    pub coordinates: DMatrix<f64>,
    /// `λ_1 ≥ … ≥ λ_d`; the trivial eigenvalue 1 is not included.
    pub eigenvalues: Vec<f64>,
    /// Kernel bandwidth, when the embedding was built from distances.
    pub sigma: Option<f64>,
    /// Set for coordinates whose eigenvalue is repeated; their individual
    /// directions are not unique.
    pub degenerate: Vec<bool>,
}

/// Full spectrum of the random walk on an affinity matrix.
#[derive(Debug, Clone)]
pub struct DiffusionSpectrum {
    pub transition: DMatrix<f64>,
    pub degrees: DVector<f64>,
    /// All eigenvalues of `P`, descending.
    pub eigenvalues: Vec<f64>,
    /// Right eigenvectors of `P` as unit-norm columns, in eigenvalue order.
    pub vectors: DMatrix<f64>,
}

/// Median of the off-diagonal entries `i < j`. Falls back to the smallest
/// positive entry when the median is zero.
pub fn median_bandwidth(d: &DMatrix<f64>) -> Result<f64> {
    check_square(d)?;
    let n = d.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two points for a bandwidth".into()));
    }
    let mut off: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[(i, j)]).collect();
    if off.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("distances must be finite and nonnegative".into()));
    }
    off.sort_by(f64::total_cmp);
    let h = off.len() / 2;
    let median = if off.len() % 2 == 1 { off[h] } else { 0.5 * (off[h - 1] + off[h]) };
    if median > 0.0 {
        return Ok(median);
    }
    off.into_iter().find(|&v| v > 0.0).ok_or(Error::DegenerateDistances)
}

/// `A[i,j] = exp(-d(i,j)² / σ²)`
pub fn gaussian_affinity(d: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    check_square(d)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {sigma}")));
    }
    let s2 = sigma * sigma;
    Ok(d.map(|v| (-(v * v) / s2).exp()))
}

/// `P = D⁻¹A` with `D` the diagonal degree matrix.
pub fn transition_matrix(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let deg = degrees(a)?;
    let mut p = a.clone();
    for (i, mut row) in p.row_iter_mut().enumerate() {
        row /= deg[i];
    }
    Ok(p)
}

fn check_square(d: &DMatrix<f64>) -> Result<()> {
    if d.nrows() != d.ncols() {
        return Err(Error::dims((d.nrows(), d.nrows()), d.shape()));
    }
    Ok(())
}

fn degrees(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_square(a)?;
    let n = a.nrows();
    for i in 0..n {
        if !(a[(i, i)] > 0.0) {
            return Err(Error::InvalidArgument(format!("affinity diagonal must be positive (node {i})")));
        }
        for j in 0..n {
            let v = a[(i, j)];
            if !v.is_finite() || v < 0.0 || v != a[(j, i)] {
                return Err(Error::InvalidArgument("affinity must be symmetric, finite and nonnegative".into()));
            }
        }
    }
    Ok(DVector::from_iterator(n, a.row_iter().map(|r| r.sum())))
}

/// Scale to unit norm and flip so the largest-magnitude entry is positive
/// (first such entry on ties).
fn normalize_sign(mut v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

pub fn diffusion_spectrum(a: &DMatrix<f64>) -> Result<DiffusionSpectrum> {
    let deg = degrees(a)?;
    let n = a.nrows();
    let inv_sqrt = deg.map(|g| 1.0 / g.sqrt());
    let s = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]);
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));

    let eigenvalues: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &c) in order.iter().enumerate() {
        let psi = eig.eigenvectors.column(c).component_mul(&inv_sqrt);
        vectors.set_column(dst, &normalize_sign(psi));
    }
    let transition = transition_matrix(a)?;
    Ok(DiffusionSpectrum { transition, degrees: deg, eigenvalues, vectors })
}

/// Embeds the nodes of `a` into `d` diffusion coordinates.
pub fn diffusion_map(a: &DMatrix<f64>, d: usize) -> Result<DiffusionEmbedding> {
    let n = a.nrows();
    if d < 1 || d >= n {
        return Err(Error::InvalidArgument(format!("embedding dimension must be in 1..{n}, got {d}")));
    }
    let spec = diffusion_spectrum(a)?;

    let lambda0 = spec.eigenvalues[0];
    let psi0 = spec.vectors.column(0);
    let c = 1.0 / (n as f64).sqrt();
    let spread = psi0.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
    if (lambda0 - 1.0).abs() > TRIVIAL_TOL || spread > TRIVIAL_TOL {
        return Err(Error::Eigen(format!(
            "leading pair is not trivial (λ0 = {lambda0}, deviation from constant {spread:e})"
        )));
    }

    let eigenvalues = spec.eigenvalues[1..=d].to_vec();
    let mut coordinates = DMatrix::zeros(n, d);
    let mut degenerate = vec![false; d];
    for l in 0..d {
        let lam = spec.eigenvalues[l + 1];
        coordinates.set_column(l, &(spec.vectors.column(l + 1) * lam));
        let close = |other: f64| (other - lam).abs() <= DEGENERATE_TOL * lam.abs().max(1.0);
        degenerate[l] = close(spec.eigenvalues[l]) || spec.eigenvalues.get(l + 2).is_some_and(|&e| close(e));
    }
    Ok(DiffusionEmbedding { coordinates, eigenvalues, sigma: None, degenerate })
}

/// Median-bandwidth Gaussian kernel followed by [`diffusion_map`].
pub fn embed_distances(dist: &DMatrix<f64>, d: usize) -> Result<DiffusionEmbedding> {
    let sigma = median_bandwidth(dist)?;
    let a = gaussian_affinity(dist, sigma)?;
    let mut e = diffusion_map(&a, d)?;
    e.sigma = Some(sigma);
    Ok(e)
}

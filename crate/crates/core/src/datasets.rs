//! Synthetic coupled-geometry datasets and expression-matrix ingestion.
//!
//! Rows are points on a helix (`linkage`) or in three Gaussian clouds
//! (`linkage2`); columns are points on a saddle surface placed `offset`
//! units away along the first axis. Entry `(i, j)` is the Euclidean distance
//! between row point `i` and column point `j`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::evaluation::Labeling;
use crate::io::{format_number, MISSING_TOKEN};

pub const DEFAULT_OFFSET: f64 = 10.0;
pub const HELIX_RADIUS: f64 = 1.0;
/// Rise per radian of the helix.
pub const HELIX_PITCH: f64 = 0.5;
/// Half-width of the square surface patch.
pub const SURFACE_HALF_WIDTH: f64 = 2.0;
/// Minimum distance between two cloud centers.
pub const CLOUD_SEPARATION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Linkage,
    Linkage2,
}

impl Variant {
    pub fn default_noise(self) -> f64 {
        match self {
            Variant::Linkage => 0.0,
            Variant::Linkage2 => 1.0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Linkage => "linkage",
            Variant::Linkage2 => "linkage2",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linkage" => Ok(Variant::Linkage),
            "linkage2" => Ok(Variant::Linkage2),
            other => Err(Error::InvalidArgument(format!("unknown dataset variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Standard deviation of the isotropic noise added to each row point.
    pub noise: f64,
    /// Shift of the surface along the first axis.
    pub offset: f64,
}

impl LinkageSpec {
    pub fn new(variant: Variant, n_rows: usize, n_cols: usize, seed: u64) -> Self {
        Self { n_rows, n_cols, variant, seed, noise: variant.default_noise(), offset: DEFAULT_OFFSET }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 4 || self.n_cols < 4 {
            return Err(Error::InvalidArgument(format!(
                "datasets need at least 4 rows and columns, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise must be nonnegative, got {}", self.noise)));
        }
        if !(self.offset > 0.0 && self.offset.is_finite()) {
            return Err(Error::InvalidArgument(format!("offset must be positive, got {}", self.offset)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMeta {
    pub label: Option<usize>,
    pub point: [f64; 3],
    /// Generating parameter: helix angle for helix rows, surface first
    /// coordinate for columns, cloud index for cloud rows.
    pub param: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageData {
    pub x: DMatrix<f64>,
    pub row_meta: Vec<PointMeta>,
    pub col_meta: Vec<PointMeta>,
}

impl LinkageData {
    /// Ground-truth row clusters, when the rows carry labels.
    pub fn row_labels(&self) -> Option<Labeling> {
        let raw: Option<Vec<usize>> = self.row_meta.iter().map(|m| m.label).collect();
        raw.map(|r| Labeling::new(&r))
    }

    pub const METADATA_HEADER: &'static str = "mode,index,label,x,y,z,param";

    /// `mode,index,label,x,y,z,param` lines for rows then columns.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut out = vec![Self::METADATA_HEADER.to_string()];
        for (mode, meta) in [("row", &self.row_meta), ("column", &self.col_meta)] {
            for (i, m) in meta.iter().enumerate() {
                let label = m.label.map_or(MISSING_TOKEN.to_string(), |l| l.to_string());
                out.push(format!(
                    "{mode},{i},{label},{},{},{},{}",
                    format_number(m.point[0]),
                    format_number(m.point[1]),
                    format_number(m.point[2]),
                    format_number(m.param)
                ));
            }
        }
        out
    }
}

/// `X[i,j] = ‖rows[i] − cols[j]‖₂`
pub fn cross_distances(rows: &[[f64; 3]], cols: &[[f64; 3]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (a, b) = (rows[i], cols[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    })
}

fn gaussian(rng: &mut ChaCha8Rng, scale: f64) -> [f64; 3] {
    let mut p = [0.0; 3];
    for v in &mut p {
        let z: f64 = StandardNormal.sample(rng);
        *v = scale * z;
    }
    p
}

/// Saddle `z = x·y` sampled on a jittered grid covering the square patch,
/// then shifted by `offset` along the first axis.
fn surface(n: usize, offset: f64, rng: &mut ChaCha8Rng) -> Vec<PointMeta> {
    let g = (n as f64).sqrt().ceil() as usize;
    let h = n.div_ceil(g);
    let cell_u = 2.0 * SURFACE_HALF_WIDTH / g as f64;
    let cell_v = 2.0 * SURFACE_HALF_WIDTH / h as f64;
    (0..n)
        .map(|c| {
            let (a, b) = (c % g, c / g);
            let u = -SURFACE_HALF_WIDTH + cell_u * (a as f64 + 0.5 + rng.random_range(-0.4..0.4));
            let v = -SURFACE_HALF_WIDTH + cell_v * (b as f64 + 0.5 + rng.random_range(-0.4..0.4));
            PointMeta { label: None, point: [u + offset, v, u * v], param: u }
        })
        .collect()
}

fn assemble(rows: Vec<PointMeta>, cols: Vec<PointMeta>) -> LinkageData {
    let rp: Vec<[f64; 3]> = rows.iter().map(|m| m.point).collect();
    let cp: Vec<[f64; 3]> = cols.iter().map(|m| m.point).collect();
    LinkageData { x: cross_distances(&rp, &cp), row_meta: rows, col_meta: cols }
}

/// Helix rows against surface columns.
pub fn generate_linkage(spec: &LinkageSpec) -> Result<LinkageData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.n_rows)
        .map(|_| {
            let t = rng.random_range(0.0..4.0 * PI);
            let e = gaussian(&mut rng, spec.noise);
            let point = [HELIX_RADIUS * t.cos() + e[0], HELIX_RADIUS * t.sin() + e[1], HELIX_PITCH * t + e[2]];
            PointMeta { label: None, point, param: t }
        })
        .collect();
    let cols = surface(spec.n_cols, spec.offset, &mut rng);
    Ok(assemble(rows, cols))
}

/// Centers of the three clouds, spaced `CLOUD_SEPARATION` apart along the
/// first axis on the side away from the surface. Distances to the surface
/// are dominated by the first coordinate, so clouds offset only across that
/// axis would produce nearly identical rows.
pub fn cloud_centers() -> [[f64; 3]; 3] {
    let s = CLOUD_SEPARATION;
    [[0.0, 0.0, 0.0], [-s, 0.0, 0.0], [-2.0 * s, 0.0, 0.0]]
}

/// Three Gaussian clouds of rows against surface columns. Row `i` belongs to
/// cloud `⌊3i/n⌋`, so cluster sizes differ by at most one.
pub fn generate_linkage2(spec: &LinkageSpec) -> Result<LinkageData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = cloud_centers();
    let rows = (0..spec.n_rows)
        .map(|i| {
            let c = 3 * i / spec.n_rows;
            let e = gaussian(&mut rng, spec.noise);
            let point = [centers[c][0] + e[0], centers[c][1] + e[1], centers[c][2] + e[2]];
            PointMeta { label: Some(c), point, param: c as f64 }
        })
        .collect();
    let cols = surface(spec.n_cols, spec.offset, &mut rng);
    Ok(assemble(rows, cols))
}

pub fn generate(spec: &LinkageSpec) -> Result<LinkageData> {
    match spec.variant {
        Variant::Linkage => generate_linkage(spec),
        Variant::Linkage2 => generate_linkage2(spec),
    }
}

/// Keeps the `count` rows of largest sample variance in their original
/// order. Ties prefer the earlier row.
pub fn top_variance_features(x: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    if count < 1 || count > x.nrows() {
        return Err(Error::InvalidArgument(format!("feature count must be in 1..={}, got {count}", x.nrows())));
    }
    let var: Vec<f64> = x.row_iter().map(|r| r.variance()).collect();
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    let mut keep = order[..count].to_vec();
    keep.sort_unstable();
    Ok(x.select_rows(&keep))
}

/// Reads a complete expression matrix (features as rows) and keeps the
/// `count` most variable features.
pub fn load_expression(path: &Path, has_header: bool, count: usize) -> Result<DMatrix<f64>> {
    top_variance_features(&crate::io::read_dense(path, has_header)?, count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shuffled {
    /// `x[(i, j)] = original[(row_perm[i], col_perm[j])]`
    pub x: DMatrix<f64>,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub row_inverse: Vec<usize>,
    pub col_inverse: Vec<usize>,
}

pub fn inverse_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

pub fn shuffle_modes(x: &DMatrix<f64>, seed: u64) -> Shuffled {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_perm: Vec<usize> = (0..x.nrows()).collect();
    let mut col_perm: Vec<usize> = (0..x.ncols()).collect();
    row_perm.shuffle(&mut rng);
    col_perm.shuffle(&mut rng);
    let shuffled = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(row_perm[i], col_perm[j])]);
    Shuffled {
        x: shuffled,
        row_inverse: inverse_permutation(&row_perm),
        col_inverse: inverse_permutation(&col_perm),
        row_perm,
        col_perm,
    }
}

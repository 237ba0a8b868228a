//! Diffusion map of points on a helix: the first coordinate orders the points
//! along the curve.
//!
//! `cargo run --release --example diffusion_map_helix`

use comanifold::embedding::embed_distances;
use comanifold::metric::euclidean_distances;
use comanifold::Mode;
use nalgebra::DMatrix;

fn main() -> comanifold::Result<()> {
    let n = 80;
    let t: Vec<f64> = (0..n).map(|i| 4.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).collect();
    let pts = DMatrix::from_fn(n, 3, |i, c| match c {
        0 => t[i].cos(),
        1 => t[i].sin(),
        _ => 0.5 * t[i],
    });
    let e = embed_distances(&euclidean_distances(&pts, Mode::Rows), 2)?;
    println!("bandwidth {:.4}, eigenvalues {:?}", e.sigma.unwrap_or(f64::NAN), e.eigenvalues);
    let first = e.coordinates.column(0);
    let monotone = first.as_slice().windows(2).all(|w| w[1] >= w[0]) || first.as_slice().windows(2).all(|w| w[1] <= w[0]);
    println!("first coordinate monotone along the helix: {monotone}");
    for i in (0..n).step_by(10) {
        println!("  t = {:6.3} -> ({:+.5}, {:+.5})", t[i], e.coordinates[(i, 0)], e.coordinates[(i, 1)]);
    }
    Ok(())
}

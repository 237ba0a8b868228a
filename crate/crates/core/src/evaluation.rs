//! k-means on embeddings and Adjusted Rand Index scoring.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERS: usize = 300;

/// Cluster assignment, relabeled so labels appear in order `0, 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    labels: Vec<usize>,
    clusters: usize,
}

impl Labeling {
    pub fn new(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, clusters: map.len() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.clusters];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labeling: Labeling,
    /// `k × d`
    pub centroids: DMatrix<f64>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
    /// Restart that produced this fit.
    pub restart: usize,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    points.row(i).iter().zip(c.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// D² seeding: the first center is uniform, each later one is drawn with
/// probability proportional to the squared distance to the nearest chosen
/// center.
fn seed_centroids(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut c = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    c.set_row(0, &points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &c, 0)).collect();
    for j in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        c.set_row(j, &points.row(pick));
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(sq_dist(points, i, &c, j));
        }
    }
    c
}

fn assign(points: &DMatrix<f64>, c: &DMatrix<f64>, labels: &mut [usize]) -> (f64, bool) {
    let mut wcss = 0.0;
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = sq_dist(points, i, c, 0);
        for j in 1..c.nrows() {
            let dj = sq_dist(points, i, c, j);
            if dj < best_d {
                best = j;
                best_d = dj;
            }
        }
        changed |= *label != best;
        *label = best;
        wcss += best_d;
    }
    (wcss, changed)
}

fn update(points: &DMatrix<f64>, labels: &mut [usize], c: &mut DMatrix<f64>) {
    let k = c.nrows();
    let mut counts = vec![0usize; k];
    c.fill(0.0);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = c.row_mut(l);
        row += points.row(i);
    }
    for j in 0..k {
        if counts[j] > 0 {
            let mut row = c.row_mut(j);
            row /= counts[j] as f64;
        }
    }
    // an empty cluster takes the point farthest from its own centroid
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| sq_dist(points, a, c, labels[a]).total_cmp(&sq_dist(points, b, c, labels[b])).then(b.cmp(&a)));
        if let Some(i) = far {
            let old = labels[i];
            counts[old] -= 1;
            labels[i] = j;
            counts[j] = 1;
            c.set_row(j, &points.row(i));
            let members: Vec<usize> = (0..labels.len()).filter(|&p| labels[p] == old).collect();
            let mut mean = points.row(members[0]).clone_owned();
            for &p in &members[1..] {
                mean += points.row(p);
            }
            c.set_row(old, &(mean / members.len() as f64));
        }
    }
}

/// One Lloyd run; returns the fit and the WCSS after every assignment step.
pub(crate) fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, DMatrix<f64>, Vec<f64>) {
    let mut c = seed_centroids(points, k, rng);
    let mut labels = vec![usize::MAX; points.nrows()];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let (wcss, changed) = assign(points, &c, &mut labels);
        history.push(wcss);
        if !changed {
            break;
        }
        update(points, &mut labels, &mut c);
    }
    (labels, c, history)
}

fn validate(points: &DMatrix<f64>, k: usize, restarts: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > points.nrows() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {} points", points.nrows())));
    }
    if restarts < 1 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    Ok(())
}

/// Best of `restarts` seeded Lloyd runs by WCSS; ties go to the lowest
/// restart index. Restart `r` draws from stream `r` of a generator seeded
/// with `seed`, so results do not depend on scheduling.
pub fn kmeans_fit(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    validate(points, k, restarts)?;
    let fits: Vec<KMeansFit> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let (labels, raw_centroids, history) = lloyd(points, k, &mut rng);
            let labeling = Labeling::new(&labels);
            let mut centroids = DMatrix::zeros(labeling.num_clusters(), points.ncols());
            for (&raw, &canon) in labels.iter().zip(labeling.labels()) {
                centroids.set_row(canon, &raw_centroids.row(raw));
            }
            KMeansFit {
                labeling,
                centroids,
                wcss: *history.last().expect("at least one assignment"),
                restart: r,
            }
        })
        .collect();
    let mut best = 0;
    for (r, f) in fits.iter().enumerate() {
        if f.wcss < fits[best].wcss {
            best = r;
        }
    }
    Ok(fits.into_iter().nth(best).expect("restarts ≥ 1"))
}

pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<Labeling> {
    kmeans_fit(points, k, seed, restarts).map(|f| f.labeling)
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index. When the expected and maximal
/// indices coincide (both partitions all singletons, or both a single
/// cluster) the value is defined as 1.
pub fn adjusted_rand_index(a: &Labeling, b: &Labeling) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("labelings have {} and {} nodes", a.len(), b.len())));
    }
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *table.entry((x, y)).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = a.cluster_sizes().into_iter().map(choose2).sum();
    let sb: f64 = b.cluster_sizes().into_iter().map(choose2).sum();
    let total = choose2(a.len());
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// One `method,missing_fraction,seed,ari` report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLine {
    pub method: String,
    pub missing_fraction: f64,
    pub seed: u64,
    pub ari: f64,
}

impl ScoreLine {
    pub const HEADER: &'static str = "method,missing_fraction,seed,ari";

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.method,
            crate::io::format_number(self.missing_fraction),
            self.seed,
            crate::io::format_number(self.ari)
        )
    }
}

pub fn mean_ari(lines: &[ScoreLine]) -> Option<f64> {
    if lines.is_empty() {
        None
    } else {
        Some(lines.iter().map(|l| l.ari).sum::<f64>() / lines.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nd = Normal::new(0.0, 0.3).unwrap();
        let truth: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let pts = DMatrix::from_fn(8, 2, |i, _| 10.0 * truth[i] as f64 + nd.sample(&mut rng));
        (pts, truth)
    }

    fn wcss_of(points: &DMatrix<f64>, labels: &[usize]) -> f64 {
        let k = labels.iter().max().unwrap() + 1;
        let mut total = 0.0;
        for c in 0..k {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..points.ncols() {
                let mean = members.iter().map(|&i| points[(i, d)]).sum::<f64>() / members.len() as f64;
                total += members.iter().map(|&i| (points[(i, d)] - mean).powi(2)).sum::<f64>();
            }
        }
        total
    }

    #[test]
    fn labeling_is_canonical() {
        let l = Labeling::new(&[7, 7, 2, 9, 2]);
        assert_eq!(l.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(l.num_clusters(), 3);
        assert_eq!(l.cluster_sizes(), vec![2, 2, 1]);
    }

    #[test]
    fn one_cluster_per_point() {
        let (p, _) = blobs(1);
        let f = kmeans_fit(&p, 8, 3, 4).unwrap();
        assert_eq!(f.labeling.num_clusters(), 8);
        assert!(f.wcss.abs() < 1e-20);
    }

    #[test]
    fn single_cluster_centroid_is_mean() {
        let (p, _) = blobs(2);
        let f = kmeans_fit(&p, 1, 0, 2).unwrap();
        assert_eq!(f.labeling.num_clusters(), 1);
        let mean = p.row_mean();
        assert!((f.centroids.row(0) - mean).norm() < 1e-12);
    }

    #[test]
    fn two_blobs_match_exhaustive_best_partition() {
        for seed in 0..5 {
            let (p, truth) = blobs(seed);
            let mut best = (f64::INFINITY, 0u32);
            for mask in 1u32..(1 << 7) {
                // node 7 is always in part 0 to skip mirrored partitions
                let labels: Vec<usize> = (0..8).map(|i| if i < 7 { ((mask >> i) & 1) as usize } else { 0 }).collect();
                let w = wcss_of(&p, &labels);
                if w < best.0 {
                    best = (w, mask);
                }
            }
            let oracle: Vec<usize> = (0..8).map(|i| if i < 7 { ((best.1 >> i) & 1) as usize } else { 0 }).collect();
            let got = kmeans(&p, 2, seed, 10).unwrap();
            assert_eq!(adjusted_rand_index(&got, &Labeling::new(&oracle)).unwrap(), 1.0);
            assert_eq!(adjusted_rand_index(&got, &Labeling::new(&truth)).unwrap(), 1.0);
        }
    }

    #[test]
    fn invalid_k() {
        let (p, _) = blobs(0);
        assert!(kmeans(&p, 0, 0, 1).is_err());
        assert!(kmeans(&p, 9, 0, 1).is_err());
        assert!(kmeans(&p, 2, 0, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DMatrix::from_fn(40, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = kmeans_fit(&p, 4, 11, 10).unwrap();
        let b = kmeans_fit(&p, 4, 11, 10).unwrap();
        assert_eq!(a.labeling, b.labeling);
        assert_eq!(a.wcss.to_bits(), b.wcss.to_bits());
        assert_eq!(a.restart, b.restart);
    }

    #[test]
    fn ari_trivial_cases() {
        let a = Labeling::new(&[0, 0, 1, 1]);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&a, &Labeling::new(&[1, 1, 0, 0])).unwrap(), 1.0);
        let single = Labeling::new(&[0, 1, 2, 3]);
        assert_eq!(adjusted_rand_index(&single, &single).unwrap(), 1.0);
        let one = Labeling::new(&[0, 0, 0]);
        assert_eq!(adjusted_rand_index(&one, &one).unwrap(), 1.0);
        assert!(adjusted_rand_index(&a, &one).is_err());
    }

    /// ARI from raw pair counts over all node pairs.
    fn pair_counting_ari(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => ss += 1.0,
                    (true, false) => sd += 1.0,
                    (false, true) => ds += 1.0,
                    (false, false) => dd += 1.0,
                }
            }
        }
        let total = ss + sd + ds + dd;
        let expected = (ss + sd) * (ss + ds) / total;
        let max = 0.5 * ((ss + sd) + (ss + ds));
        (ss - expected) / (max - expected)
    }

    #[test]
    fn ari_crossed_partitions_matches_pair_counting() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        let got = adjusted_rand_index(&Labeling::new(&a), &Labeling::new(&b)).unwrap();
        assert!((got - pair_counting_ari(&a, &b)).abs() < 1e-15);
        assert!((got + 0.5).abs() < 1e-15);
    }

    #[test]
    fn lloyd_never_increases_wcss() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
            let (_, _, h) = lloyd(&p, 4, &mut rng);
            for w in h.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn score_line_format() {
        let s = ScoreLine { method: "comanifold".into(), missing_fraction: 0.5, seed: 3, ari: 1.0 };
        assert_eq!(s.to_line(), "comanifold,5.0000000000000000e-1,3,1.0000000000000000e0");
        assert_eq!(mean_ari(&[s.clone(), ScoreLine { ari: 0.0, ..s }]), Some(0.5));
        assert_eq!(mean_ari(&[]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn ari_symmetric_permutation_invariant_and_exact(
                a in proptest::collection::vec(0usize..4, 2..20),
                b_seed in 0u64..1000,
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(b_seed);
                let b: Vec<usize> = a.iter().map(|_| rng.random_range(0..3)).collect();
                let la = Labeling::new(&a);
                let lb = Labeling::new(&b);
                let ab = adjusted_rand_index(&la, &lb).unwrap();
                prop_assert_eq!(ab, adjusted_rand_index(&lb, &la).unwrap());
                let renamed: Vec<usize> = a.iter().map(|&x| 3 - x).collect();
                prop_assert!((adjusted_rand_index(&Labeling::new(&renamed), &lb).unwrap() - ab).abs() < 1e-12);
                prop_assert_eq!(ab == 1.0, la == lb);
                prop_assert!(ab <= 1.0);
            }
        }
    }
}

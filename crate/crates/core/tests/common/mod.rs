//! Shared test utilities: independent brute-force minimizers and random
//! problem generators. Nothing here touches the solver's linear-algebra
//! path; objectives are evaluated directly and minimized by grid refinement.
// each test binary uses a different subset of these helpers
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rbridge::Dataset;

/// Minimize `f` over a hypercube by repeated grid refinement: evaluate a
/// tensor grid, re-center on the argmin, shrink the box to one old grid cell
/// per side, repeat. Converges to the global minimum for convex objectives
/// once the first grid is fine enough to land in the right basin.
pub fn grid_refine_minimize(
    f: &dyn Fn(&[f64]) -> f64,
    dims: usize,
    lo: f64,
    hi: f64,
    points: usize,
    rounds: usize,
) -> Vec<f64> {
    assert!(points >= 3 && dims >= 1);
    let mut center = vec![(lo + hi) / 2.0; dims];
    let mut half = (hi - lo) / 2.0;
    let mut best_x = center.clone();
    let mut x = vec![0.0; dims];
    for _ in 0..rounds {
        let step = 2.0 * half / (points - 1) as f64;
        let mut best_val = f64::INFINITY;
        let total = points.pow(dims as u32);
        for flat in 0..total {
            let mut rem = flat;
            for d in 0..dims {
                let i = rem % points;
                rem /= points;
                x[d] = center[d] - half + i as f64 * step;
            }
            let v = f(&x);
            if v < best_val {
                best_val = v;
                best_x.copy_from_slice(&x);
            }
        }
        center.copy_from_slice(&best_x);
        half = step;
    }
    best_x
}

/// Constrained variant for a single equality row: eliminate the variable
/// with the largest weight and minimize over the remaining coordinates.
pub fn grid_refine_minimize_constrained(
    f: &dyn Fn(&[f64]) -> f64,
    dims: usize,
    row: &[f64],
    rhs: f64,
    lo: f64,
    hi: f64,
    points: usize,
    rounds: usize,
) -> Vec<f64> {
    assert_eq!(row.len(), dims);
    let pivot = (0..dims)
        .max_by(|&a, &b| row[a].abs().partial_cmp(&row[b].abs()).unwrap())
        .unwrap();
    let free: Vec<usize> = (0..dims).filter(|&j| j != pivot).collect();
    let embed = |z: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; dims];
        let mut acc = rhs;
        for (zi, &j) in z.iter().zip(free.iter()) {
            full[j] = *zi;
            acc -= row[j] * zi;
        }
        full[pivot] = acc / row[pivot];
        full
    };
    let g = |z: &[f64]| f(&embed(z));
    let z_best = grid_refine_minimize(&g, dims - 1, lo, hi, points, rounds);
    embed(&z_best)
}

/// The Lq-penalized least squares objective.
pub fn bridge_objective(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, q: f64, beta: &[f64]) -> f64 {
    let n = x.nrows();
    let p = x.ncols();
    let mut rss = 0.0;
    for i in 0..n {
        let mut pred = 0.0;
        for j in 0..p {
            pred += x[[i, j]] * beta[j];
        }
        let r = y[i] - pred;
        rss += r * r;
    }
    let pen: f64 = beta.iter().map(|b| b.abs().powf(q)).sum();
    rss + lambda * pen
}

/// The elastic-net objective with the lasso-at-one convention.
pub fn enet_objective(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, alpha: f64, beta: &[f64]) -> f64 {
    let n = x.nrows();
    let p = x.ncols();
    let mut rss = 0.0;
    for i in 0..n {
        let mut pred = 0.0;
        for j in 0..p {
            pred += x[[i, j]] * beta[j];
        }
        let r = y[i] - pred;
        rss += r * r;
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    rss + lambda * (alpha * l1 + (1.0 - alpha) * l2)
}

/// Random regression instance with bounded true coefficients.
pub fn random_instance(n: usize, p: usize, sigma: f64, seed: u64) -> (Dataset, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((n, p));
    for v in x.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    let mut beta = Array1::<f64>::zeros(p);
    for v in beta.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = (z * 1.2).clamp(-2.0, 2.0);
    }
    let mut y = x.dot(&beta);
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    (Dataset::new(x, y, None).unwrap(), beta)
}

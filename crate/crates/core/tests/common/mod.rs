#![allow(dead_code, clippy::needless_range_loop)]

use brusselator_net::{CouplingMatrix, PatchNetwork, PerronPair};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rows(r: &[&[f64]]) -> Vec<Vec<f64>> {
    r.iter().map(|x| x.to_vec()).collect()
}

pub fn p_line_sum() -> CouplingMatrix {
    CouplingMatrix::new(&rows(&[&[-2., 1., 1.], &[1., -3., 2.], &[1., 2., -3.]])).unwrap()
}

pub fn p_non_line_sum() -> CouplingMatrix {
    CouplingMatrix::new(&rows(&[&[-3., 2., 3.], &[2., -3., 2.], &[1., 1., -5.]])).unwrap()
}

pub fn five_patch_p() -> CouplingMatrix {
    CouplingMatrix::new(&rows(&[
        &[-4., 1., 1., 1., 1.],
        &[1., -5., 2., 1., 1.],
        &[1., 1., -5., 1., 1.],
        &[1., 2., 1., -4., 2.],
        &[1., 1., 1., 1., -5.],
    ]))
    .unwrap()
}

pub fn five_patch_q() -> CouplingMatrix {
    CouplingMatrix::new(&rows(&[
        &[-5., 1., 1., 1., 1.],
        &[1., -6., 2., 1., 1.],
        &[1., 1., -5., 1., 1.],
        &[2., 1., 1., -6., 3.],
        &[1., 3., 1., 3., -6.],
    ]))
    .unwrap()
}

pub const FIVE_X0: [f64; 5] = [0.5, 1., 1., 0.5, 1.];
pub const FIVE_Y0: [f64; 5] = [2., 1., 2., 1., 1.];

/// Identical boxes with `P = Q`, `a = b = 1`.
pub fn identical(p: &CouplingMatrix, beta: f64, lambda: f64) -> PatchNetwork {
    let n = p.n();
    PatchNetwork::new(p.clone(), p.clone(), vec![1.0; n], vec![1.0; n], beta, lambda, 1.0).unwrap()
}

pub fn five_patch(beta: f64) -> PatchNetwork {
    PatchNetwork::new(
        five_patch_p(),
        five_patch_q(),
        vec![1., 2., 1., 0.5, 1.],
        vec![0.1, 0.2, 0.4, 0.1, 0.2],
        beta,
        0.1,
        1.0,
    )
    .unwrap()
}

pub fn perron(m: &PatchNetwork) -> PerronPair {
    PerronPair::of(m).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn with_diagonal(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    for k in 0..n {
        m[k][k] = 0.0;
        let s: f64 = (0..n).map(|j| m[j][k]).sum();
        m[k][k] = -s;
    }
    m
}

/// A random irreducible coupling matrix: a directed cycle through all
/// patches plus sparse random extra edges.
pub fn random_coupling(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for k in 0..n {
        m[(k + 1) % n][k] = rng.gen_range(0.2..3.0);
    }
    for j in 0..n {
        for k in 0..n {
            if j != k && rng.gen_bool(0.5) {
                m[j][k] += rng.gen_range(0.0..3.0);
            }
        }
    }
    with_diagonal(m)
}

/// A random line-sum-symmetric coupling matrix: symmetric part plus a
/// uniformly weighted directed cycle.
pub fn random_line_sum_symmetric(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in j + 1..n {
            if rng.gen_bool(0.6) {
                let w = rng.gen_range(0.1..3.0);
                m[j][k] = w;
                m[k][j] = w;
            }
        }
    }
    let c = rng.gen_range(0.2..2.0);
    for k in 0..n {
        m[(k + 1) % n][k] += c;
    }
    with_diagonal(m)
}

/// Random integer-valued irreducible coupling matrix.
pub fn random_integer_coupling(rng: &mut impl Rng, n: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; n]; n];
    for k in 0..n {
        m[(k + 1) % n][k] = rng.gen_range(1..5);
    }
    for j in 0..n {
        for k in 0..n {
            if j != k && rng.gen_bool(0.5) {
                m[j][k] += rng.gen_range(0..5);
            }
        }
    }
    for k in 0..n {
        let s: i64 = (0..n).filter(|&j| j != k).map(|j| m[j][k]).sum();
        m[k][k] = -s;
    }
    m
}

pub fn to_f64(m: &[Vec<i64>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

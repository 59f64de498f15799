#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublinear_qp::DenseProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A ~ U[-1,1]`, `d ~ margin + U[0,1]`, `b ~ U[-1,1]`.
pub fn random_problem(n: usize, margin: f64, seed: u64) -> DenseProblem {
    let mut r = rng(seed);
    let a = (0..n * n).map(|_| r.random_range(-1.0..1.0)).collect();
    let d = (0..n).map(|_| margin + r.random_range(0.0..1.0)).collect();
    let b = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    DenseProblem::new(n, a, d, b).unwrap()
}

/// Smallest margin on `d` that makes `(A + A^T)/2 + n diag(d)` diagonally
/// dominant for entries in `[-1, 1]`.
pub const PD_MARGIN: f64 = 1.0;

/// Independent reference: `z* = -(n^2/4) b^T M^{-1} b` by LU, for positive
/// definite `M = (A + A^T)/2 + n diag(d)`.
pub fn lu_minimum(p: &DenseProblem) -> f64 {
    let n = p.d_vec().len();
    let a = p.matrix();
    let mut m = (&a + a.transpose()) * 0.5;
    for i in 0..n {
        m[(i, i)] += n as f64 * p.d_vec()[i];
    }
    let b = DVector::from_column_slice(p.b_vec());
    let x = m.lu().solve(&b).expect("M is nonsingular");
    -(n as f64).powi(2) / 4.0 * b.dot(&x)
}

pub fn random_matrix(n: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, n, |_, _| scale * r.random_range(-1.0..1.0))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

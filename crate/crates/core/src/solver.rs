//! Exact unconstrained minimization of `p_{k,A,d,b}` over `R^k`.
//!
//! The objective only sees the symmetric part of `A`, so the solver works with
//! `M = (A + A^T)/2 + k diag(d)`. Stationarity reads `2 M v + k b = 0`, i.e.
//! `v = -(k/2) M^+ b`. The problem is bounded below iff `M` is positive
//! semidefinite and `b` has no component in the null space of `M`; in that
//! case the pseudoinverse gives the minimum-norm minimizer.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{contract, ensure_finite, Result};
use crate::problem::{evaluate, DenseProblem, QuadraticProblem, RestrictedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Minimized,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Minimum-norm minimizer; `None` when unbounded.
    pub minimizer: Option<Vec<f64>>,
    pub min_value: Option<f64>,
    /// `||M v + (k/2) b||` at the returned minimizer.
    pub residual: Option<f64>,
    /// Smallest eigenvalue of `M`.
    pub eig_min: f64,
    /// `max_i |v_i|`, the solution-magnitude constant `K`.
    pub k_bound: Option<f64>,
    /// Eigenvalues with `|lambda| <= eig_tol` are treated as zero.
    pub eig_tol: f64,
}

impl SolveReport {
    pub fn is_minimized(&self) -> bool {
        self.status == SolveStatus::Minimized
    }

    fn unbounded(eig_min: f64, eig_tol: f64) -> Self {
        Self {
            status: SolveStatus::Unbounded,
            minimizer: None,
            min_value: None,
            residual: None,
            eig_min,
            k_bound: None,
            eig_tol,
        }
    }
}

/// Relative tolerance for the null-space component of `b`.
const CONSISTENCY_TOL: f64 = 1e-8;
/// Relative tolerance used by [`residual_tolerance`].
const RESIDUAL_TOL: f64 = 1e-8;

struct View<'a> {
    a: &'a DMatrix<f64>,
    d: &'a [f64],
    b: &'a [f64],
}

impl QuadraticProblem for View<'_> {
    fn dim(&self) -> usize {
        self.d.len()
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }
    fn d(&self, i: usize) -> f64 {
        self.d[i]
    }
    fn b(&self, i: usize) -> f64 {
        self.b[i]
    }
}

/// `M = (A + A^T)/2 + k diag(d)`.
pub fn system_matrix(a: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let k = d.len();
    let mut m = (a + a.transpose()) * 0.5;
    for (i, &di) in d.iter().enumerate() {
        m[(i, i)] += k as f64 * di;
    }
    m
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `1e-8 (1 + ||b|| + ||M||_inf ||v||)`; a minimized report's residual stays below it.
pub fn residual_tolerance(m: &DMatrix<f64>, b: &[f64], v: &[f64]) -> f64 {
    let norm = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
    RESIDUAL_TOL * (1.0 + norm(b) + inf_norm(m) * norm(v))
}

/// Minimizes `<v, A v> + k <v, diag(d) v> + k <b, v>` over `R^k`.
pub fn solve(k: usize, a: &DMatrix<f64>, d: &[f64], b: &[f64]) -> Result<SolveReport> {
    if k == 0 {
        return Err(contract("k must be positive"));
    }
    if a.nrows() != k || a.ncols() != k || d.len() != k || b.len() != k {
        return Err(contract(format!(
            "expected a {k}x{k} matrix and vectors of length {k}, got {}x{}, {}, {}",
            a.nrows(),
            a.ncols(),
            d.len(),
            b.len()
        )));
    }
    ensure_finite("A", a.as_slice())?;
    ensure_finite("d", d)?;
    ensure_finite("b", b)?;

    let kf = k as f64;
    let m = system_matrix(a, d);
    let eig_tol = kf * f64::EPSILON * inf_norm(&m).max(1.0);
    let SymmetricEigen {
        eigenvalues,
        eigenvectors,
    } = SymmetricEigen::new(m.clone());
    let eig_min = eigenvalues.min();

    if eig_min < -eig_tol {
        return Ok(SolveReport::unbounded(eig_min, eig_tol));
    }

    let b_vec = DVector::from_column_slice(b);
    let coords = eigenvectors.tr_mul(&b_vec);
    let null_sq: f64 = coords
        .iter()
        .zip(eigenvalues.iter())
        .filter(|(_, lam)| lam.abs() <= eig_tol)
        .map(|(c, _)| c * c)
        .sum();
    if null_sq.sqrt() > CONSISTENCY_TOL * (1.0 + b_vec.norm()) {
        // b has a component along a flat direction: p decreases linearly.
        return Ok(SolveReport::unbounded(eig_min, eig_tol));
    }

    let scaled = DVector::from_iterator(
        k,
        coords.iter().zip(eigenvalues.iter()).map(|(c, &lam)| {
            if lam.abs() <= eig_tol {
                0.0
            } else {
                -0.5 * kf * c / lam
            }
        }),
    );
    let v = &eigenvectors * scaled;
    let residual = (&m * &v + &b_vec * (0.5 * kf)).norm();
    let minimizer: Vec<f64> = v.iter().copied().collect();
    let min_value = evaluate(&View { a, d, b }, &minimizer)?;
    let k_bound = minimizer.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));

    Ok(SolveReport {
        status: SolveStatus::Minimized,
        minimizer: Some(minimizer),
        min_value: Some(min_value),
        residual: Some(residual),
        eig_min,
        k_bound: Some(k_bound),
        eig_tol,
    })
}

pub fn solve_restricted(r: &RestrictedProblem) -> Result<SolveReport> {
    solve(r.k(), &r.a_sub, &r.d_sub, &r.b_sub)
}

/// Exact optimum `z*` of the full problem (O(n^3), desk scale only).
pub fn solve_full(problem: &DenseProblem) -> Result<SolveReport> {
    solve(
        problem.dim(),
        &problem.matrix(),
        problem.d_vec(),
        problem.b_vec(),
    )
}

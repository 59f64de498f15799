//! Nyström baseline for the divergence problem.
//!
//! `k` landmark columns are sampled without replacement, `C = H[:, L]` and
//! `W = H[L, L]`, and `H ~ C W^+ C^T`. The pseudoinverse drops eigenvalues of
//! `W` at or below `k * eps * lambda_max(W)` (negative ones included), so the
//! approximation is `F F^T` with `F = C U Lambda^{-1/2}` and stays positive
//! semidefinite. The ridge solve uses the Woodbury identity
//!
//! ```text
//! (F F^T + lambda I)^{-1} = (I - F (lambda I + F^T F)^{-1} F^T) / lambda
//! ```
//!
//! which costs `O(n k^2 + k^3)` and never forms the `n x n` approximation.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index;

use crate::error::{contract, Result};
use crate::pearson::{DivergenceConfig, GramOracle};
use crate::problem::IndexSequence;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct NystromModel {
    pub k: usize,
    pub landmark_indices: IndexSequence,
    /// `H[:, L]`, `n x k`.
    pub c: DMatrix<f64>,
    /// `H[L, L]`, the landmark rows of `c`.
    pub w: DMatrix<f64>,
    /// Gram entries materialized by the fit (`n k`).
    pub entry_evaluations: u64,
}

impl NystromModel {
    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    /// `F` with `F F^T = C W^+ C^T`.
    pub fn factor(&self) -> DMatrix<f64> {
        low_rank_factor(&self.c, &self.w)
    }

    /// The full `n x n` approximation. Desk scale only.
    pub fn approx_gram(&self) -> DMatrix<f64> {
        let f = self.factor();
        &f * f.transpose()
    }
}

/// `F = C U_r Lambda_r^{-1/2}` over the eigenpairs of `W` above the
/// threshold `k * eps * lambda_max(W)`.
pub fn low_rank_factor(c: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let k = w.nrows();
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lam_max = eig.eigenvalues.max().max(0.0);
    let tau = k as f64 * f64::EPSILON * lam_max;
    let kept: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > tau).collect();
    let mut basis = eig.eigenvectors.select_columns(kept.iter());
    for (col, &i) in kept.iter().enumerate() {
        basis.column_mut(col).scale_mut(1.0 / eig.eigenvalues[i].sqrt());
    }
    c * basis
}

/// Fit with `k` landmarks drawn uniformly without replacement.
pub fn nystrom_fit(cfg: &DivergenceConfig, k: usize, seed: u64) -> Result<NystromModel> {
    let n = cfg.n();
    if k == 0 || k > n {
        return Err(contract(format!("Nyström rank must lie in 1..={n}, got {k}")));
    }
    let mut rng = stream_rng(seed, Stream::Landmarks);
    let landmarks = index::sample(&mut rng, n, k).into_vec();
    let mut model = nystrom_fit_with_landmarks(cfg, landmarks)?;
    model.landmark_indices.seed = Some(seed);
    Ok(model)
}

pub fn nystrom_fit_with_landmarks(cfg: &DivergenceConfig, landmarks: Vec<usize>) -> Result<NystromModel> {
    let k = landmarks.len();
    if k == 0 {
        return Err(contract("at least one landmark is required"));
    }
    let mut seen = landmarks.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != k {
        return Err(contract("landmarks must be distinct"));
    }
    let oracle = GramOracle::new(cfg.clone());
    let c = oracle.gram_columns(&landmarks)?;
    let w = c.select_rows(landmarks.iter());
    Ok(NystromModel {
        k,
        landmark_indices: IndexSequence::new(landmarks, None),
        c,
        w,
        entry_evaluations: oracle.entry_evaluations(),
    })
}

/// `-(1/2) h^T (F F^T + lambda I)^{-1} h` via Woodbury.
pub fn woodbury_ridge_minimum(f: &DMatrix<f64>, h: &[f64], lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(contract("lambda must be positive"));
    }
    if f.nrows() != h.len() {
        return Err(contract("factor and h have different lengths"));
    }
    let h = DVector::from_column_slice(h);
    let r = f.ncols();
    let mut inner = f.tr_mul(f);
    for i in 0..r {
        inner[(i, i)] += lambda;
    }
    let fth = f.tr_mul(&h);
    let y = match Cholesky::new(inner.clone()) {
        Some(ch) => ch.solve(&fth),
        None => {
            // Woodbury inner system lost definiteness numerically; use its pseudoinverse.
            let eig = SymmetricEigen::new(inner);
            let tol = r as f64 * f64::EPSILON * eig.eigenvalues.amax();
            let coords = eig.eigenvectors.tr_mul(&fth);
            let scaled = DVector::from_iterator(
                r,
                coords
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(c, &l)| if l.abs() > tol { c / l } else { 0.0 }),
            );
            &eig.eigenvectors * scaled
        }
    };
    let z = (&h - f * y) / lambda;
    Ok(-0.5 * h.dot(&z))
}

/// Divergence with `H` replaced by its Nyström approximation; `h` is exact.
pub fn pe_nystrom(cfg: &DivergenceConfig, model: &NystromModel) -> Result<f64> {
    if model.n() != cfg.n() {
        return Err(contract(format!(
            "model was fitted for n = {} but the config has n = {}",
            model.n(),
            cfg.n()
        )));
    }
    let h = GramOracle::new(cfg.clone()).h_vector();
    Ok(-0.5 - woodbury_ridge_minimum(&model.factor(), &h, cfg.lambda)?)
}

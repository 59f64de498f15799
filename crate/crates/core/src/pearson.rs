//! Relative Pearson divergence through the quadratic estimator.
//!
//! With samples `x` (size `n`) and `x'` (size `n'`), a Gaussian kernel `phi`
//! and mixing weight `alpha`,
//!
//! ```text
//! H_lm = alpha/n  sum_i phi(x_i, x_l) phi(x_i, x_m)
//!      + (1-alpha)/n' sum_j phi(x'_j, x_l) phi(x'_j, x_m)
//! h_l  = 1/n sum_i phi(x_i, x_l)
//! PE   = -1/2 - min_v ( 1/2 <v, H v> - <h, v> + lambda/2 <v, v> )
//! ```
//!
//! The ridge problem maps onto the crate's objective with `A = H/2`,
//! `d = lambda/(2n) 1` and `b = -h`; substituting `v = n w` shows that the
//! minimum of that objective is `n^2` times the ridge minimum, so the sampled
//! estimate is divided by `n^2` before backing out the divergence.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::error::{contract, ensure_finite, QpError, Result};
use crate::estimator::{estimate_with, EstimateReport, Sampler};
use crate::problem::{check_indices, DenseProblem, EntryCost, IndexSequence, QuadraticProblem, RestrictedProblem};
use crate::rng::{stream_rng, Stream};
use crate::solver::solve;

/// Default Gaussian bandwidth `sigma^2`.
pub const DEFAULT_SIGMA2: f64 = 0.5;
/// Default ridge parameter.
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.5;

pub const GRID_SIGMA2: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const GRID_LAMBDA: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];
const CV_FOLDS: usize = 5;

/// `exp(-(x - y)^2 / (2 sigma^2))`.
pub fn kernel(x: f64, y: f64, sigma2: f64) -> f64 {
    let diff = x - y;
    (-(diff * diff) / (2.0 * sigma2)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceConfig {
    pub alpha: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
}

impl DivergenceConfig {
    pub fn new(alpha: f64, sigma2: f64, lambda: f64, x: Vec<f64>, x_prime: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(contract(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(contract(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(contract(format!("lambda must be positive, got {lambda}")));
        }
        if x.is_empty() || x_prime.is_empty() {
            return Err(contract("both samples must be non-empty"));
        }
        ensure_finite("x", &x)?;
        ensure_finite("x'", &x_prime)?;
        Ok(Self {
            alpha,
            sigma2,
            lambda,
            x,
            x_prime,
        })
    }

    /// Same samples with the default hyperparameters.
    pub fn with_defaults(x: Vec<f64>, x_prime: Vec<f64>) -> Result<Self> {
        Self::new(DEFAULT_ALPHA, DEFAULT_SIGMA2, DEFAULT_LAMBDA, x, x_prime)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn n_prime(&self) -> usize {
        self.x_prime.len()
    }
}

/// Draws `x_i ~ N(1, 0.5)` and `x'_j ~ N(1.5, 0.5)` (second argument is the variance).
pub fn sample_gaussian_pair(n: usize, n_prime: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let sd = 0.5_f64.sqrt();
    let px = Normal::new(1.0, sd).expect("valid normal");
    let pxp = Normal::new(1.5, sd).expect("valid normal");
    let mut rx = stream_rng(seed, Stream::PearsonX);
    let mut rxp = stream_rng(seed, Stream::PearsonXPrime);
    let x = (0..n).map(|_| px.sample(&mut rx)).collect();
    let xp = (0..n_prime).map(|_| pxp.sample(&mut rxp)).collect();
    (x, xp)
}

/// The divergence problem as a [`QuadraticProblem`]: `a = H/2`,
/// `d = lambda/(2n)`, `b = -h`.
///
/// Entries are computed on demand; one entry of `H` costs `O(n + n')`
/// kernel evaluations. `entry_evaluations` counts the `H` and `h` entries
/// produced by any path (queries, restriction, column extraction).
#[derive(Debug)]
pub struct GramOracle {
    cfg: DivergenceConfig,
    evaluations: AtomicU64,
}

impl GramOracle {
    pub fn new(cfg: DivergenceConfig) -> Self {
        Self {
            cfg,
            evaluations: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &DivergenceConfig {
        &self.cfg
    }

    pub fn entry_evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    fn count(&self, entries: usize) {
        self.evaluations.fetch_add(entries as u64, Ordering::Relaxed);
    }

    /// `(phi(x_1, x_l), ..., phi(x_n, x_l), phi(x'_1, x_l), ..., phi(x'_n', x_l))`.
    fn kernel_column(&self, l: usize) -> Vec<f64> {
        let c = &self.cfg;
        let xl = c.x[l];
        c.x.iter()
            .chain(c.x_prime.iter())
            .map(|&z| kernel(z, xl, c.sigma2))
            .collect()
    }

    fn gram_from_columns(&self, cl: &[f64], cm: &[f64]) -> f64 {
        let n = self.cfg.n();
        let first: f64 = cl[..n].iter().zip(&cm[..n]).map(|(p, q)| p * q).sum();
        let second: f64 = cl[n..].iter().zip(&cm[n..]).map(|(p, q)| p * q).sum();
        self.cfg.alpha / n as f64 * first + (1.0 - self.cfg.alpha) / self.cfg.n_prime() as f64 * second
    }

    fn h_from_column(&self, cl: &[f64]) -> f64 {
        let n = self.cfg.n();
        cl[..n].iter().sum::<f64>() / n as f64
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.cfg.n() {
            return Err(contract(format!("index {i} out of range for n = {}", self.cfg.n())));
        }
        Ok(())
    }

    pub fn gram_entry(&self, l: usize, m: usize) -> Result<f64> {
        self.check(l)?;
        self.check(m)?;
        self.count(1);
        Ok(self.gram_from_columns(&self.kernel_column(l), &self.kernel_column(m)))
    }

    pub fn h_entry(&self, l: usize) -> Result<f64> {
        self.check(l)?;
        self.count(1);
        Ok(self.h_from_column(&self.kernel_column(l)))
    }

    /// `diag(sqrt(w)) Psi` where `Psi` holds all kernel columns and `w` the
    /// per-sample weights, so that `H = B^T B`.
    fn weighted_features(&self) -> DMatrix<f64> {
        let c = &self.cfg;
        let (n, np) = (c.n(), c.n_prime());
        let wx = (c.alpha / n as f64).sqrt();
        let wxp = ((1.0 - c.alpha) / np as f64).sqrt();
        DMatrix::from_fn(n + np, n, |r, l| {
            let (z, w) = if r < n { (c.x[r], wx) } else { (c.x_prime[r - n], wxp) };
            w * kernel(z, c.x[l], c.sigma2)
        })
    }

    /// Full `H` (`O(n^2 (n + n'))`; desk scale).
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let n = self.cfg.n();
        self.count(n * n);
        let b = self.weighted_features();
        b.tr_mul(&b)
    }

    pub fn h_vector(&self) -> Vec<f64> {
        let c = &self.cfg;
        let n = c.n();
        self.count(n);
        (0..n)
            .map(|l| c.x.iter().map(|&xi| kernel(xi, c.x[l], c.sigma2)).sum::<f64>() / n as f64)
            .collect()
    }

    /// `H[:, cols]`, an `n x k` matrix.
    pub fn gram_columns(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        for &c in cols {
            self.check(c)?;
        }
        let n = self.cfg.n();
        self.count(n * cols.len());
        let b = self.weighted_features();
        let picked = b.select_columns(cols.iter());
        Ok(b.tr_mul(&picked))
    }
}

impl QuadraticProblem for GramOracle {
    fn dim(&self) -> usize {
        self.cfg.n()
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        self.count(1);
        0.5 * self.gram_from_columns(&self.kernel_column(i), &self.kernel_column(j))
    }
    fn d(&self, _i: usize) -> f64 {
        self.count(1);
        self.cfg.lambda / (2.0 * self.cfg.n() as f64)
    }
    fn b(&self, i: usize) -> f64 {
        self.count(1);
        -self.h_from_column(&self.kernel_column(i))
    }
    fn cost_hint(&self) -> EntryCost {
        EntryCost::LinearInData
    }

    /// Computes each sampled kernel column once; entries are bit-identical to
    /// the single-entry queries.
    fn restrict(&self, s: &IndexSequence) -> Result<RestrictedProblem> {
        check_indices(self.dim(), s)?;
        let k = s.k();
        let columns: Vec<Vec<f64>> = s.indices.iter().map(|&l| self.kernel_column(l)).collect();
        self.count(k * k + 2 * k);
        let a_sub = DMatrix::from_fn(k, k, |r, c| 0.5 * self.gram_from_columns(&columns[r], &columns[c]));
        let d_sub = vec![self.cfg.lambda / (2.0 * self.cfg.n() as f64); k];
        let b_sub = columns.iter().map(|c| -self.h_from_column(c)).collect();
        Ok(RestrictedProblem { a_sub, d_sub, b_sub })
    }

    fn materialize(&self) -> Result<DenseProblem> {
        let n = self.cfg.n();
        let a = self.gram_matrix() * 0.5;
        let d = vec![self.cfg.lambda / (2.0 * n as f64); n];
        let b = self.h_vector().into_iter().map(|h| -h).collect();
        DenseProblem::from_matrix(&a, d, b)
    }
}

/// `min_v 1/2 <v, H v> - <h, v> + lambda/2 <v, v>` through the dense solver.
pub fn ridge_minimum(h_mat: &DMatrix<f64>, h: &[f64], lambda: f64) -> Result<f64> {
    let n = h.len();
    let nf = n as f64;
    // p_n with A = H/2, d = lambda/(2n), b = -h/n is exactly the ridge objective
    let a = h_mat * 0.5;
    let d = vec![lambda / (2.0 * nf); n];
    let b: Vec<f64> = h.iter().map(|x| -x / nf).collect();
    let report = solve(n, &a, &d, &b)?;
    report
        .min_value
        .ok_or_else(|| QpError::Unbounded("ridge objective reported unbounded".into()))
}

/// Reference divergence from the full `n x n` problem.
pub fn pe_exact(cfg: &DivergenceConfig) -> Result<f64> {
    let oracle = GramOracle::new(cfg.clone());
    let h_mat = oracle.gram_matrix();
    let h = oracle.h_vector();
    Ok(-0.5 - ridge_minimum(&h_mat, &h, cfg.lambda)?)
}

/// Divergence from an estimator report on a [`GramOracle`].
pub fn divergence_from_estimate(report: &EstimateReport) -> Result<f64> {
    let z = report
        .z_est
        .ok_or_else(|| QpError::Unbounded("sampled subproblem is unbounded".into()))?;
    let n = report.n as f64;
    Ok(-0.5 - z / (n * n))
}

/// Sampled divergence with an explicit sampler.
pub fn pe_sampled_with(cfg: &DivergenceConfig, k: usize, sampler: Sampler) -> Result<f64> {
    let oracle = GramOracle::new(cfg.clone());
    divergence_from_estimate(&estimate_with(&oracle, k, sampler)?)
}

/// Sampled divergence from `k` uniformly drawn indices.
pub fn pe_sampled(cfg: &DivergenceConfig, k: usize, seed: u64) -> Result<f64> {
    pe_sampled_with(cfg, k, Sampler::Uniform { seed })
}

/// Result of [`grid_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChoice {
    pub sigma2: f64,
    pub lambda: f64,
    pub score: f64,
}

fn fold_split(xs: &[f64], fold: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, &x) in xs.iter().enumerate() {
        if i % CV_FOLDS == fold {
            test.push(x);
        } else {
            train.push(x);
        }
    }
    (train, test)
}

/// Picks `(sigma2, lambda)` from [`GRID_SIGMA2`] x [`GRID_LAMBDA`] by 5-fold
/// cross-validation of the squared loss
/// `alpha/2 E_x[g^2] + (1-alpha)/2 E_x'[g^2] - E_x[g]` on the held-out fold,
/// where `g = sum_l theta_l phi(., x_l)` is fitted on the other folds.
///
/// Sample `i` goes to fold `i mod 5`. Exact ridge fits are used, so this is
/// desk scale only.
pub fn grid_search(alpha: f64, x: &[f64], x_prime: &[f64]) -> Result<GridChoice> {
    if x.len() < CV_FOLDS || x_prime.len() < CV_FOLDS {
        return Err(contract(format!(
            "cross-validation needs at least {CV_FOLDS} points in each sample"
        )));
    }
    let mut scores = vec![vec![0.0; GRID_LAMBDA.len()]; GRID_SIGMA2.len()];
    for fold in 0..CV_FOLDS {
        let (x_tr, x_te) = fold_split(x, fold);
        let (xp_tr, xp_te) = fold_split(x_prime, fold);
        for (si, &sigma2) in GRID_SIGMA2.iter().enumerate() {
            let cfg = DivergenceConfig::new(alpha, sigma2, 1.0, x_tr.clone(), xp_tr.clone())?;
            let oracle = GramOracle::new(cfg);
            let h_mat = oracle.gram_matrix();
            let h = DVector::from_vec(oracle.h_vector());
            let basis = |t: &[f64]| DMatrix::from_fn(t.len(), x_tr.len(), |r, l| kernel(t[r], x_tr[l], sigma2));
            let phi_te = basis(&x_te);
            let phi_pte = basis(&xp_te);
            for (li, &lambda) in GRID_LAMBDA.iter().enumerate() {
                let mut reg = h_mat.clone();
                for i in 0..reg.nrows() {
                    reg[(i, i)] += lambda;
                }
                let theta = Cholesky::new(reg)
                    .ok_or_else(|| contract("regularized gram matrix is not positive definite"))?
                    .solve(&h);
                let g_te = &phi_te * &theta;
                let g_pte = &phi_pte * &theta;
                let score = alpha / 2.0 * g_te.norm_squared() / g_te.len() as f64
                    + (1.0 - alpha) / 2.0 * g_pte.norm_squared() / g_pte.len() as f64
                    - g_te.sum() / g_te.len() as f64;
                scores[si][li] += score / CV_FOLDS as f64;
            }
        }
    }
    let mut best = GridChoice {
        sigma2: GRID_SIGMA2[0],
        lambda: GRID_LAMBDA[0],
        score: f64::INFINITY,
    };
    for (si, row) in scores.iter().enumerate() {
        for (li, &score) in row.iter().enumerate() {
            if score < best.score {
                best = GridChoice {
                    sigma2: GRID_SIGMA2[si],
                    lambda: GRID_LAMBDA[li],
                    score,
                };
            }
        }
    }
    Ok(best)
}

//! Step dikernels on `[0, 1]^2` built from matrices.
//!
//! An `n x n` matrix `W` defines the dikernel that equals `W_ij` on the cell
//! `I_i x I_j` of the uniform grid, and a vector defines a step function on
//! `[0, 1]`. Integrals of step objects reduce to scaled sums, so everything
//! here is exact. The cut norm is computed by enumeration and is only
//! available for `n <= 22`.

use nalgebra::DMatrix;

use crate::error::{contract, ensure_finite, QpError, Result};
use crate::problem::{sample_indices, DenseProblem, IndexSequence, QuadraticProblem};

/// Largest grid size accepted by [`cut_norm_exact`].
pub const MAX_CUT_NORM_N: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct StepDikernel {
    values: DMatrix<f64>,
}

impl StepDikernel {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return Err(contract("a step dikernel needs a non-empty square matrix"));
        }
        ensure_finite("dikernel", values.as_slice())?;
        Ok(Self { values })
    }

    pub fn from_row_slice(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(contract("value count does not match n^2"));
        }
        Self::new(DMatrix::from_row_slice(n, n, values))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// `W(x, y)` for `x, y in [0, 1]`, with `I_1 = [0, 1/n]` and
    /// `I_i = ((i-1)/n, i/n]` afterwards.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let n = self.n();
        self.values[(grid_index(n, x), grid_index(n, y))]
    }

    /// `W|_S` viewed as a `k x k` step dikernel.
    pub fn restricted(&self, s: &IndexSequence) -> Result<Self> {
        let n = self.n();
        if let Some(&bad) = s.indices.iter().find(|&&i| i >= n) {
            return Err(contract(format!("index {bad} out of range for n = {n}")));
        }
        let k = s.k();
        let idx = &s.indices;
        Self::new(DMatrix::from_fn(k, k, |r, c| self.values[(idx[r], idx[c])]))
    }

    /// The rank-one dikernel `(x, y) -> u_{i(x)}`, i.e. the step version of `u 1^T`.
    pub fn row_constant(u: &[f64]) -> Result<Self> {
        let n = u.len();
        Self::new(DMatrix::from_fn(n, n, |i, _| u[i]))
    }
}

/// Zero-based index of the grid interval containing `x`.
fn grid_index(n: usize, x: f64) -> usize {
    let scaled = (x * n as f64).ceil() as usize;
    scaled.clamp(1, n) - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(contract("a step function needs at least one value"));
        }
        ensure_finite("step function", &values)?;
        Ok(Self { values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, x: f64) -> f64 {
        self.values[grid_index(self.n(), x)]
    }

    pub fn squared(&self) -> Self {
        Self {
            values: self.values.iter().map(|x| x * x).collect(),
        }
    }

    /// `sup |f|`, the bound `K` of the function.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// `||W||_cut = sup_{S,T} |int_S int_T W|`.
///
/// By bilinearity the supremum over measurable sets is attained at unions
/// of grid intervals, so it equals `max_{S,T subset [n]} |sum_{S x T} W_ij| / n^2`.
/// For a fixed row set `S` the best `T` takes all positive (or all negative)
/// column sums, which leaves `2^n` row sets to enumerate. Row sets are
/// visited in Gray-code order so each step updates the column sums in O(n).
pub fn cut_norm_exact(w: &StepDikernel) -> Result<f64> {
    let n = w.n();
    if n > MAX_CUT_NORM_N {
        return Err(QpError::Unsupported(format!(
            "exact cut norm enumerates 2^n row sets; n = {n} exceeds {MAX_CUT_NORM_N}"
        )));
    }
    let v = w.values();
    let mut col_sums = vec![0.0; n];
    let mut in_set = vec![false; n];
    let mut best = 0.0_f64;
    for step in 1_u64..(1_u64 << n) {
        let row = step.trailing_zeros() as usize;
        let sign = if in_set[row] { -1.0 } else { 1.0 };
        in_set[row] = !in_set[row];
        for (j, c) in col_sums.iter_mut().enumerate() {
            *c += sign * v[(row, j)];
        }
        let (pos, neg) = col_sums.iter().fold((0.0, 0.0), |(p, m), &c| {
            if c > 0.0 {
                (p + c, m)
            } else {
                (p, m - c)
            }
        });
        best = best.max(pos).max(neg);
    }
    Ok(best / (n * n) as f64)
}

/// `||W||_p = (int |W|^p)^(1/p)`.
pub fn lp_norm(w: &StepDikernel, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(contract(format!("p must be at least 1, got {p}")));
    }
    let n2 = (w.n() * w.n()) as f64;
    if p.is_infinite() {
        return Ok(w.values().iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    }
    let sum: f64 = w.values().iter().map(|x| x.abs().powf(p)).sum();
    Ok((sum / n2).powf(1.0 / p))
}

/// `<f, W g> = int int f(x) W(x, y) g(y) dx dy`.
pub fn inner_product_step(f: &StepFunction, w: &StepDikernel, g: &StepFunction) -> Result<f64> {
    let n = w.n();
    if f.n() != n || g.n() != n {
        return Err(contract(format!(
            "step functions of size {} and {} against a dikernel of size {n}",
            f.n(),
            g.n()
        )));
    }
    let v = w.values();
    let mut total = 0.0;
    for (i, &fi) in f.values().iter().enumerate() {
        let row: f64 = g.values().iter().enumerate().map(|(j, &gj)| v[(i, j)] * gj).sum();
        total += fi * row;
    }
    Ok(total / (n * n) as f64)
}

/// Replaces `W` by its mean on each block of the equipartition of `[0, 1]`
/// into `parts` intervals. The result is still expressed on the `n`-grid.
pub fn average_over_equipartition(w: &StepDikernel, parts: usize) -> Result<StepDikernel> {
    let n = w.n();
    if parts == 0 || !n.is_multiple_of(parts) {
        return Err(QpError::Unsupported(format!(
            "equipartition into {parts} parts is not aligned with the {n}-grid"
        )));
    }
    let block = n / parts;
    let v = w.values();
    let mut means = DMatrix::zeros(parts, parts);
    for bi in 0..parts {
        for bj in 0..parts {
            let s: f64 = v.view((bi * block, bj * block), (block, block)).iter().sum();
            means[(bi, bj)] = s / (block * block) as f64;
        }
    }
    StepDikernel::new(DMatrix::from_fn(n, n, |i, j| means[(i / block, j / block)]))
}

/// `P(f) = <f, A^ f> + <f^2, (d 1^T)^ 1> + <f, (b 1^T)^ 1>`.
///
/// For the step function of a vector `v`, `n^2 P(f) = p(v)`.
pub fn continuous_objective(problem: &DenseProblem, f: &StepFunction) -> Result<f64> {
    let n = problem.dim();
    if f.n() != n {
        return Err(contract(format!(
            "step function of size {} for a problem of dimension {n}",
            f.n()
        )));
    }
    let a_hat = StepDikernel::new(problem.matrix())?;
    let d_hat = StepDikernel::row_constant(problem.d_vec())?;
    let b_hat = StepDikernel::row_constant(problem.b_vec())?;
    let one = StepFunction::constant(n, 1.0)?;
    Ok(inner_product_step(f, &a_hat, f)?
        + inner_product_step(&f.squared(), &d_hat, &one)?
        + inner_product_step(f, &b_hat, &one)?)
}

/// `| ||(A|_S)^||_cut - ||A^||_cut |` for `k` indices sampled with `seed`.
pub fn concentration_trial(a: &DMatrix<f64>, k: usize, seed: u64) -> Result<f64> {
    let s = sample_indices(a.nrows(), k, seed)?;
    concentration_gap(a, &s)
}

/// Cut-norm gap for a given index sequence.
///
/// No measure-preserving alignment is searched for, so this is the
/// difference of the two norms rather than the cut distance.
pub fn concentration_gap(a: &DMatrix<f64>, s: &IndexSequence) -> Result<f64> {
    let w = StepDikernel::new(a.clone())?;
    if s.k() > MAX_CUT_NORM_N {
        return Err(QpError::Unsupported(format!(
            "sample size {} exceeds the cut norm limit {MAX_CUT_NORM_N}",
            s.k()
        )));
    }
    let full = cut_norm_exact(&w)?;
    let sampled = cut_norm_exact(&w.restricted(s)?)?;
    Ok((sampled - full).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker() -> StepDikernel {
        StepDikernel::from_row_slice(2, &[1.0, -1.0, -1.0, 1.0]).unwrap()
    }

    /// O(4^n) enumeration over both sets.
    fn brute_cut_norm(w: &StepDikernel) -> f64 {
        let n = w.n();
        let mut best = 0.0_f64;
        for s in 0..(1u32 << n) {
            for t in 0..(1u32 << n) {
                let mut sum = 0.0;
                for i in (0..n).filter(|i| s >> i & 1 == 1) {
                    for j in (0..n).filter(|j| t >> j & 1 == 1) {
                        sum += w.values()[(i, j)];
                    }
                }
                best = best.max(f64::abs(sum));
            }
        }
        best / (n * n) as f64
    }

    #[test]
    fn cut_norm_worked_examples() {
        assert_eq!(cut_norm_exact(&StepDikernel::new(DMatrix::zeros(3, 3)).unwrap()).unwrap(), 0.0);
        assert_eq!(cut_norm_exact(&checker()).unwrap(), 0.25);
        let ones = StepDikernel::from_row_slice(2, &[1.0; 4]).unwrap();
        assert_eq!(cut_norm_exact(&ones).unwrap(), 1.0);
    }

    #[test]
    fn cut_norm_matches_brute_force() {
        let vals = [0.3, -1.2, 0.7, 2.0, -0.4, 0.1, -0.9, 0.5, 1.1, -2.2, 0.05, 0.8, -0.6, 0.2, 0.9, -1.5];
        let w = StepDikernel::from_row_slice(4, &vals).unwrap();
        let got = cut_norm_exact(&w).unwrap();
        assert!((got - brute_cut_norm(&w)).abs() < 1e-14);
    }

    #[test]
    fn cut_norm_size_guard() {
        let w = StepDikernel::new(DMatrix::zeros(23, 23)).unwrap();
        assert!(matches!(cut_norm_exact(&w), Err(QpError::Unsupported(_))));
    }

    #[test]
    fn lp_norm_examples() {
        let zero = StepDikernel::new(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(lp_norm(&zero, 1.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&checker(), 1.0).unwrap(), 1.0);
        assert_eq!(lp_norm(&checker(), 2.0).unwrap(), 1.0);
        assert!(lp_norm(&checker(), 0.5).is_err());
        assert!(lp_norm(&checker(), f64::NAN).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let ones = StepDikernel::from_row_slice(3, &[1.0; 9]).unwrap();
        let one = StepFunction::constant(3, 1.0).unwrap();
        assert!((inner_product_step(&one, &ones, &one).unwrap() - 1.0).abs() < 1e-15);

        let zero = StepDikernel::new(DMatrix::zeros(2, 2)).unwrap();
        let f = StepFunction::new(vec![3.0, -2.0]).unwrap();
        assert_eq!(inner_product_step(&f, &zero, &f).unwrap(), 0.0);

        let alt = StepFunction::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(inner_product_step(&alt, &checker(), &alt).unwrap(), 1.0);

        assert!(inner_product_step(&one, &checker(), &alt).is_err());
    }

    #[test]
    fn equipartition_examples() {
        let w = checker();
        assert_eq!(average_over_equipartition(&w, 2).unwrap(), w);
        let flat = average_over_equipartition(&w, 1).unwrap();
        assert!(flat.values().iter().all(|&x| x == 0.0));
        assert!(matches!(
            average_over_equipartition(&w, 3),
            Err(QpError::Unsupported(_))
        ));
    }

    #[test]
    fn continuous_objective_examples() {
        let p = DenseProblem::new(4, vec![1.0; 16], vec![0.0; 4], vec![-1.0; 4]).unwrap();
        let f = StepFunction::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((continuous_objective(&p, &f).unwrap() + 3.0 / 16.0).abs() < 1e-15);

        let zero = DenseProblem::zeros(3).unwrap();
        let g = StepFunction::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(continuous_objective(&zero, &g).unwrap(), 0.0);
        assert!(continuous_objective(&zero, &f).is_err());
    }

    #[test]
    fn point_evaluation_uses_closed_left_first_interval() {
        let w = StepDikernel::from_row_slice(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(w.at(0.0, 0.0), 1.0);
        assert_eq!(w.at(0.5, 0.5), 1.0);
        assert_eq!(w.at(0.51, 1.0), 4.0);
        let f = StepFunction::new(vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(f.at(1.0 / 3.0), 5.0);
        assert_eq!(f.at(0.4), 6.0);
    }

    #[test]
    fn concentration_identity_and_constant() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        assert_eq!(concentration_gap(&a, &IndexSequence::identity(6)).unwrap(), 0.0);

        let c = DMatrix::from_element(8, 8, -0.7);
        for k in [1, 3, 8] {
            for seed in 0..5 {
                assert!(concentration_trial(&c, k, seed).unwrap() < 1e-15);
            }
        }
    }
}

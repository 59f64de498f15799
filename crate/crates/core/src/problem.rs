//! Quadratic problems with entry-oracle access.
//!
//! The objective is
//!
//! ```text
//! p(v) = <v, A v> + n <v, diag(d) v> + n <b, v>,   v in R^n
//! ```
//!
//! and every algorithm in the crate touches `A`, `d` and `b` only through
//! the entry queries of [`QuadraticProblem`]. Indices are zero based.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{contract, ensure_finite, QpError, Result};
use crate::rng::{stream_rng, Stream};

/// Documents what a single entry query costs for a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryCost {
    Constant,
    LinearInData,
}

/// Query access to `(n, A, d, b)`.
///
/// Implementations must be pure: the same query always returns the same
/// finite value.
pub trait QuadraticProblem: Send + Sync {
    fn dim(&self) -> usize;
    fn a(&self, i: usize, j: usize) -> f64;
    fn d(&self, i: usize) -> f64;
    fn b(&self, i: usize) -> f64;

    fn cost_hint(&self) -> EntryCost {
        EntryCost::Constant
    }

    /// Materializes `A|_S`, `d|_S`, `b|_S`.
    ///
    /// Backends may override this with a batched path, but the result must
    /// be bit-identical to querying the entries one by one.
    fn restrict(&self, s: &IndexSequence) -> Result<RestrictedProblem> {
        restrict_by_queries(self, s)
    }

    /// Full scan for `L`. Only backends that hold their data support it.
    fn bounds(&self) -> Result<ProblemBounds> {
        Err(QpError::Unsupported(
            "bounds requires a dense backend".into(),
        ))
    }

    /// Dense copy of the whole instance, for exact reference solves.
    fn materialize(&self) -> Result<DenseProblem> {
        Err(QpError::Unsupported(
            "this backend cannot be materialized".into(),
        ))
    }
}

impl<P: QuadraticProblem + ?Sized> QuadraticProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        (**self).a(i, j)
    }
    fn d(&self, i: usize) -> f64 {
        (**self).d(i)
    }
    fn b(&self, i: usize) -> f64 {
        (**self).b(i)
    }
    fn cost_hint(&self) -> EntryCost {
        (**self).cost_hint()
    }
    fn restrict(&self, s: &IndexSequence) -> Result<RestrictedProblem> {
        (**self).restrict(s)
    }
    fn bounds(&self) -> Result<ProblemBounds> {
        (**self).bounds()
    }
    fn materialize(&self) -> Result<DenseProblem> {
        (**self).materialize()
    }
}

/// Evaluates `p(v)` by direct summation over the oracle.
pub fn evaluate<P: QuadraticProblem + ?Sized>(problem: &P, v: &[f64]) -> Result<f64> {
    let n = problem.dim();
    if v.len() != n {
        return Err(contract(format!(
            "vector has length {} but the problem has dimension {n}",
            v.len()
        )));
    }
    ensure_finite("v", v)?;

    let mut quad = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        let mut row = 0.0;
        for (j, &vj) in v.iter().enumerate() {
            row += problem.a(i, j) * vj;
        }
        quad += vi * row;
    }
    let mut diag = 0.0;
    let mut lin = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        diag += problem.d(i) * vi * vi;
        lin += problem.b(i) * vi;
    }
    let nf = n as f64;
    Ok(quad + nf * diag + nf * lin)
}

/// Dense in-memory instance. `A` is stored row major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseProblem {
    n: usize,
    a: Vec<f64>,
    d: Vec<f64>,
    b: Vec<f64>,
}

impl DenseProblem {
    pub fn new(n: usize, a: Vec<f64>, d: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(contract("dimension must be positive"));
        }
        if a.len() != n * n || d.len() != n || b.len() != n {
            return Err(contract(format!(
                "expected {} matrix entries and two vectors of length {n}, got {}, {}, {}",
                n * n,
                a.len(),
                d.len(),
                b.len()
            )));
        }
        ensure_finite("A", &a)?;
        ensure_finite("d", &d)?;
        ensure_finite("b", &b)?;
        Ok(Self { n, a, d, b })
    }

    pub fn from_matrix(a: &DMatrix<f64>, d: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(contract("A must be square"));
        }
        let n = a.nrows();
        let row_major = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)])
            .collect();
        Self::new(n, row_major, d, b)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n], vec![0.0; n], vec![0.0; n])
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    pub fn a_row_major(&self) -> &[f64] {
        &self.a
    }

    pub fn d_vec(&self) -> &[f64] {
        &self.d
    }

    pub fn b_vec(&self) -> &[f64] {
        &self.b
    }

    /// Applies the same permutation to the rows/columns of `A` and to `d`, `b`:
    /// entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(contract("permutation length differs from dimension"));
        }
        let r = self.restrict(&IndexSequence::new(perm.to_vec(), None))?;
        DenseProblem::from_matrix(&r.a_sub, r.d_sub, r.b_sub)
    }
}

impl QuadraticProblem for DenseProblem {
    fn dim(&self) -> usize {
        self.n
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }
    fn d(&self, i: usize) -> f64 {
        self.d[i]
    }
    fn b(&self, i: usize) -> f64 {
        self.b[i]
    }
    fn bounds(&self) -> Result<ProblemBounds> {
        let max_abs = |xs: &[f64]| xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(ProblemBounds {
            l: max_abs(&self.a).max(max_abs(&self.d)).max(max_abs(&self.b)),
        })
    }
    fn materialize(&self) -> Result<DenseProblem> {
        Ok(self.clone())
    }
}

/// `L = max(max|A_ij|, max|d_i|, max|b_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemBounds {
    pub l: f64,
}

/// Ordered sample of indices; duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSequence {
    pub indices: Vec<usize>,
    /// Seed the sequence was drawn with, `None` for hand-built sequences.
    pub seed: Option<u64>,
}

impl IndexSequence {
    pub fn new(indices: Vec<usize>, seed: Option<u64>) -> Self {
        Self { indices, seed }
    }

    /// `(0, 1, ..., n-1)`, the sample that reproduces the full problem.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect(), None)
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

/// Draws `k` indices i.i.d. uniform on `0..n` from the `Indices` stream of `seed`.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Result<IndexSequence> {
    if n == 0 || k == 0 {
        return Err(contract(format!(
            "sampling needs n >= 1 and k >= 1 (got n = {n}, k = {k})"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Indices);
    let indices = (0..k).map(|_| rng.random_range(0..n)).collect();
    Ok(IndexSequence::new(indices, Some(seed)))
}

/// The `k x k` subproblem induced by an index sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedProblem {
    pub a_sub: DMatrix<f64>,
    pub d_sub: Vec<f64>,
    pub b_sub: Vec<f64>,
}

impl RestrictedProblem {
    pub fn k(&self) -> usize {
        self.d_sub.len()
    }
}

impl QuadraticProblem for RestrictedProblem {
    fn dim(&self) -> usize {
        self.k()
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        self.a_sub[(i, j)]
    }
    fn d(&self, i: usize) -> f64 {
        self.d_sub[i]
    }
    fn b(&self, i: usize) -> f64 {
        self.b_sub[i]
    }
}

pub(crate) fn check_indices(n: usize, s: &IndexSequence) -> Result<()> {
    if s.indices.is_empty() {
        return Err(contract("index sequence is empty"));
    }
    if let Some(&bad) = s.indices.iter().find(|&&i| i >= n) {
        return Err(contract(format!(
            "index {bad} is out of range for dimension {n}"
        )));
    }
    Ok(())
}

/// Restriction through exactly `k^2 + 2k` entry queries.
pub fn restrict_by_queries<P: QuadraticProblem + ?Sized>(
    problem: &P,
    s: &IndexSequence,
) -> Result<RestrictedProblem> {
    check_indices(problem.dim(), s)?;
    let idx = &s.indices;
    let k = idx.len();
    let a_sub = DMatrix::from_fn(k, k, |r, c| problem.a(idx[r], idx[c]));
    let d_sub = idx.iter().map(|&i| problem.d(i)).collect();
    let b_sub = idx.iter().map(|&i| problem.b(i)).collect();
    Ok(RestrictedProblem { a_sub, d_sub, b_sub })
}

/// Wraps a problem and counts every entry query.
///
/// Restriction always goes through [`restrict_by_queries`] so the count
/// reflects the query complexity regardless of the inner backend.
#[derive(Debug)]
pub struct CountingOracle<P> {
    inner: P,
    a_queries: AtomicU64,
    d_queries: AtomicU64,
    b_queries: AtomicU64,
}

impl<P: QuadraticProblem> CountingOracle<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            a_queries: AtomicU64::new(0),
            d_queries: AtomicU64::new(0),
            b_queries: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.a_queries.load(Ordering::Relaxed)
            + self.d_queries.load(Ordering::Relaxed)
            + self.b_queries.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.a_queries.store(0, Ordering::Relaxed);
        self.d_queries.store(0, Ordering::Relaxed);
        self.b_queries.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: QuadraticProblem> QuadraticProblem for CountingOracle<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn a(&self, i: usize, j: usize) -> f64 {
        self.a_queries.fetch_add(1, Ordering::Relaxed);
        self.inner.a(i, j)
    }
    fn d(&self, i: usize) -> f64 {
        self.d_queries.fetch_add(1, Ordering::Relaxed);
        self.inner.d(i)
    }
    fn b(&self, i: usize) -> f64 {
        self.b_queries.fetch_add(1, Ordering::Relaxed);
        self.inner.b(i)
    }
    fn cost_hint(&self) -> EntryCost {
        self.inner.cost_hint()
    }
    fn bounds(&self) -> Result<ProblemBounds> {
        self.inner.bounds()
    }
    fn materialize(&self) -> Result<DenseProblem> {
        self.inner.materialize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n * n]
    }

    #[test]
    fn evaluate_examples() {
        let zero = DenseProblem::zeros(2).unwrap();
        assert_eq!(evaluate(&zero, &[3.0, -7.0]).unwrap(), 0.0);

        let j4 = DenseProblem::new(4, ones(4), vec![0.0; 4], vec![-1.0; 4]).unwrap();
        assert_eq!(evaluate(&j4, &[1.0, 0.0, 0.0, 0.0]).unwrap(), -3.0);

        let diag = DenseProblem::new(2, vec![0.0; 4], vec![1.0, 1.0], vec![-2.0, -2.0]).unwrap();
        assert_eq!(evaluate(&diag, &[1.0, 1.0]).unwrap(), -4.0);
    }

    #[test]
    fn evaluate_rejects_bad_vectors() {
        let p = DenseProblem::zeros(3).unwrap();
        assert!(matches!(evaluate(&p, &[1.0, 2.0]), Err(QpError::Contract(_))));
        assert!(matches!(
            evaluate(&p, &[1.0, f64::NAN, 0.0]),
            Err(QpError::Contract(_))
        ));
    }

    #[test]
    fn dense_constructor_validates() {
        assert!(DenseProblem::new(0, vec![], vec![], vec![]).is_err());
        assert!(DenseProblem::new(2, vec![0.0; 3], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(DenseProblem::new(1, vec![f64::INFINITY], vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn sampling_single_index() {
        for seed in [0, 1, u64::MAX] {
            let s = sample_indices(1, 5, seed).unwrap();
            assert_eq!(s.indices, vec![0; 5]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_indices(100, 10, 42).unwrap();
        let b = sample_indices(100, 10, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, Some(42));
        assert_ne!(a, sample_indices(100, 10, 43).unwrap());
    }

    #[test]
    fn sampling_allows_k_above_n() {
        let s = sample_indices(3, 50, 9).unwrap();
        assert_eq!(s.k(), 50);
        assert!(s.indices.iter().all(|&i| i < 3));
    }

    #[test]
    fn sampling_rejects_empty() {
        assert!(matches!(sample_indices(0, 3, 1), Err(QpError::Contract(_))));
        assert!(matches!(sample_indices(3, 0, 1), Err(QpError::Contract(_))));
    }

    #[test]
    fn restrict_identity_returns_data() {
        let a: Vec<f64> = (0..9).map(|x| x as f64).collect();
        let p = DenseProblem::new(3, a, vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]).unwrap();
        let r = p.restrict(&IndexSequence::identity(3)).unwrap();
        assert_eq!(r.a_sub, p.matrix());
        assert_eq!(r.d_sub, p.d_vec());
        assert_eq!(r.b_sub, p.b_vec());
    }

    #[test]
    fn restrict_duplicates_and_order() {
        let p = DenseProblem::new(2, vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let r = p.restrict(&IndexSequence::new(vec![1, 1], None)).unwrap();
        assert_eq!(r.a_sub, DMatrix::from_row_slice(2, 2, &[4.0, 4.0, 4.0, 4.0]));

        let a: Vec<f64> = (1..=9).map(|x| x as f64).collect();
        let p = DenseProblem::new(3, a, vec![0.0; 3], vec![0.0; 3]).unwrap();
        let r = p.restrict(&IndexSequence::new(vec![2, 0], None)).unwrap();
        assert_eq!(r.a_sub, DMatrix::from_row_slice(2, 2, &[9.0, 7.0, 3.0, 1.0]));
    }

    #[test]
    fn restrict_rejects_out_of_range() {
        let p = DenseProblem::zeros(2).unwrap();
        let err = p.restrict(&IndexSequence::new(vec![0, 2], None));
        assert!(matches!(err, Err(QpError::Contract(_))));
    }

    #[test]
    fn restrict_query_count() {
        let p = CountingOracle::new(DenseProblem::zeros(7).unwrap());
        let s = sample_indices(7, 5, 3).unwrap();
        p.restrict(&s).unwrap();
        assert_eq!(p.queries(), 5 * 5 + 2 * 5);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(DenseProblem::zeros(3).unwrap().bounds().unwrap().l, 0.0);
        let p = DenseProblem::new(1, vec![-3.0], vec![2.0], vec![1.0]).unwrap();
        assert_eq!(p.bounds().unwrap().l, 3.0);
    }

    #[test]
    fn permuted_applies_to_all_parts() {
        let a: Vec<f64> = (1..=4).map(|x| x as f64).collect();
        let p = DenseProblem::new(2, a, vec![5.0, 6.0], vec![7.0, 8.0]).unwrap();
        let q = p.permuted(&[1, 0]).unwrap();
        assert_eq!(q.a_row_major(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(q.d_vec(), &[6.0, 5.0]);
        assert_eq!(q.b_vec(), &[8.0, 7.0]);
    }
}

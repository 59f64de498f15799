//! The constant-time estimator.
//!
//! Draw a sequence `S` of `k` indices uniformly with replacement, solve the
//! `k`-dimensional problem `p_{k, A|_S, d|_S, b|_S}` exactly and return
//! `(n^2 / k^2)` times its minimum. Only `k^2 + 2k` entries of the input are
//! ever read, independent of `n`.

use serde::Serialize;

use crate::error::{contract, Result};
use crate::problem::{sample_indices, IndexSequence, QuadraticProblem};
use crate::solver::{solve_restricted, SolveReport};

/// How the index sequence is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// I.i.d. uniform indices drawn from the given seed.
    Uniform { seed: u64 },
    /// `S = (0, ..., n-1)`; requires `k = n`. Reproduces the exact optimum
    /// and exists for testing the rescaling path.
    Identity,
}

impl Sampler {
    pub fn draw(&self, n: usize, k: usize) -> Result<IndexSequence> {
        match *self {
            Sampler::Uniform { seed } => sample_indices(n, k, seed),
            Sampler::Identity if k == n => Ok(IndexSequence::identity(n)),
            Sampler::Identity => Err(contract(format!(
                "identity sampling needs k = n (got k = {k}, n = {n})"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    /// `(n^2/k^2) * sub_report.min_value`; `None` when the sampled
    /// subproblem is unbounded.
    pub z_est: Option<f64>,
    pub n: usize,
    pub k: usize,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub indices: IndexSequence,
    pub sub_report: SolveReport,
    pub queries_used: u64,
}

/// Runs the estimator on an explicit index sequence.
pub fn estimate_with_indices<P: QuadraticProblem + ?Sized>(
    problem: &P,
    indices: IndexSequence,
) -> Result<EstimateReport> {
    let n = problem.dim();
    let k = indices.k();
    let restricted = problem.restrict(&indices)?;
    let sub_report = solve_restricted(&restricted)?;
    let scale = (n as f64 / k as f64).powi(2);
    Ok(EstimateReport {
        z_est: sub_report.min_value.map(|z| scale * z),
        n,
        k,
        seed: indices.seed,
        indices,
        sub_report,
        queries_used: (k * k + 2 * k) as u64,
    })
}

pub fn estimate_with<P: QuadraticProblem + ?Sized>(
    problem: &P,
    k: usize,
    sampler: Sampler,
) -> Result<EstimateReport> {
    let indices = sampler.draw(problem.dim(), k)?;
    estimate_with_indices(problem, indices)
}

/// Estimates `min_v p(v)` from `k` uniformly sampled indices.
///
/// `k` is not clamped to `n`: sampling is with replacement, so `k > n` is a
/// valid (if wasteful) request.
pub fn estimate_min<P: QuadraticProblem + ?Sized>(
    problem: &P,
    k: usize,
    seed: u64,
) -> Result<EstimateReport> {
    estimate_with(problem, k, Sampler::Uniform { seed })
}

/// Constants of the sample-size schedule
/// `k(eps, delta) = ceil(2^(c1/eps^2)) + ceil(c2 * l * max(1, ln l))`,
/// `l = max(1, ln(1/delta))`.
///
/// The asymptotic analysis fixes neither constant. The defaults (both 1) are
/// placeholders; calibrate them against a swept-`k` run before relying on the
/// schedule, since the exponential term dominates for any `eps < 0.3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeSchedule {
    c1: f64,
    c2: f64,
}

impl Default for SampleSizeSchedule {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0 }
    }
}

impl SampleSizeSchedule {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
            return Err(contract("schedule constants must be positive and finite"));
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }
}

/// Ceiling that ignores round-off just above an integer, so that e.g.
/// `ln(1/e^-1) = 1.0000000000000002` counts as 1.
fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Saturates at `usize::MAX` when `2^(c1/eps^2)` overflows.
pub fn suggest_k(eps: f64, delta: f64, schedule: &SampleSizeSchedule) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(contract(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(contract(format!("delta must lie in (0, 1), got {delta}")));
    }
    let regularity = snapped_ceil((schedule.c1 / (eps * eps)).exp2());
    let l = (1.0 / delta).ln().max(1.0);
    let confidence = snapped_ceil(schedule.c2 * l * l.ln().max(1.0));
    let total = regularity + confidence;
    if total >= usize::MAX as f64 {
        Ok(usize::MAX)
    } else {
        Ok(total as usize)
    }
}

/// Runs the estimator with `k = min(suggest_k(eps, delta), n)`.
pub fn estimate_with_tolerance<P: QuadraticProblem + ?Sized>(
    problem: &P,
    eps: f64,
    delta: f64,
    schedule: &SampleSizeSchedule,
    sampler: Sampler,
) -> Result<EstimateReport> {
    let k = suggest_k(eps, delta, schedule)?.min(problem.dim());
    estimate_with(problem, k, sampler)
}

//! Seeded experiment runners behind `sqp-bench`.
//!
//! Every runner returns its rows sorted by `(n, k, trial, method)` and every
//! non-timing column is a pure function of the options, so two runs with the
//! same options produce identical CSV apart from `time_ns`. `time_ns` covers
//! the estimate only (sampling, restriction and solve for the proposed
//! method, fit and Woodbury solve for Nyström); reference computations are
//! timed separately on the `exact` rows.
//!
//! CSV schema (header always written):
//!
//! ```text
//! experiment,method,n,k,trial,seed,value,reference,abs_err,abs_err_over_n2,time_ns,status
//! ```
//!
//! `value`, `reference` and the error columns are empty when unavailable
//! (unbounded estimate, or no reference beyond [`REFERENCE_MAX_N`]).
//! `exact` rows carry `k = n`.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::dikernel::{concentration_trial, MAX_CUT_NORM_N};
use crate::error::{contract, QpError, Result};
use crate::estimator::{estimate_with, Sampler};
use crate::nystrom::{nystrom_fit, pe_nystrom};
use crate::pearson::{
    grid_search, pe_exact, pe_sampled, sample_gaussian_pair, DivergenceConfig, DEFAULT_ALPHA,
    DEFAULT_LAMBDA, DEFAULT_SIGMA2,
};
use crate::problem::QuadraticProblem;
use crate::qprob::read_qprob;
use crate::rng::{stream_rng, trial_seed, Stream};
use crate::solver::{solve_full, SolveStatus};
use crate::synthetic::{SyntheticProblem, DEFAULT_D_MARGIN};

/// Largest `n` for which the synthetic runner computes the O(n^3) reference.
pub const REFERENCE_MAX_N: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Synth,
    Pearson,
    Cutnorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Exact,
    Nystrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Unbounded,
    ReferenceUnbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: Experiment,
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    pub abs_err: Option<f64>,
    pub abs_err_over_n2: Option<f64>,
    pub time_ns: u64,
    pub status: RecordStatus,
}

impl ExperimentRecord {
    #[allow(clippy::too_many_arguments)]
    fn new(
        experiment: Experiment,
        method: Method,
        n: usize,
        k: usize,
        trial: usize,
        seed: u64,
        value: Option<f64>,
        reference: Option<f64>,
        time_ns: u64,
    ) -> Self {
        let abs_err = value.zip(reference).map(|(v, r)| (v - r).abs());
        let status = if value.is_some() { RecordStatus::Ok } else { RecordStatus::Unbounded };
        Self {
            experiment,
            method,
            n,
            k,
            trial,
            seed,
            value,
            reference,
            abs_err,
            abs_err_over_n2: abs_err.map(|e| e / (n as f64 * n as f64)),
            time_ns,
            status,
        }
    }

    /// Equality ignoring `time_ns`.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self { time_ns: 0, ..self.clone() } == Self { time_ns: 0, ..other.clone() }
    }
}

fn sort_records(rows: &mut [ExperimentRecord]) {
    rows.sort_by_key(|r| (r.n, r.k, r.trial, r.method));
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

fn io_err(path: &Path, source: std::io::Error) -> QpError {
    QpError::Io { path: path.to_path_buf(), source }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let to_io = |e: csv::Error| io_err(path, std::io::Error::other(e));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.serialize(row).map_err(to_io)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub const RECORD_HEADER: [&str; 12] = [
    "experiment",
    "method",
    "n",
    "k",
    "trial",
    "seed",
    "value",
    "reference",
    "abs_err",
    "abs_err_over_n2",
    "time_ns",
    "status",
];

pub fn write_records(path: &Path, rows: &[ExperimentRecord]) -> Result<()> {
    write_csv(path, &RECORD_HEADER, rows)
}

fn check_lists(n_list: &[usize], k_list: &[usize], trials: usize) -> Result<()> {
    if n_list.is_empty() || k_list.is_empty() {
        return Err(contract("n and k lists must be non-empty"));
    }
    if n_list.contains(&0) || k_list.contains(&0) {
        return Err(contract("n and k must be positive"));
    }
    if trials == 0 {
        return Err(contract("trials must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub d_margin: f64,
    /// Use `S = (0, .., n-1)` instead of random sampling (requires `k = n`).
    pub identity: bool,
}

impl SynthOptions {
    pub fn new(n_list: Vec<usize>, k_list: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self { n_list, k_list, trials, seed, d_margin: DEFAULT_D_MARGIN, identity: false }
    }
}

/// Synthetic error study. The problem of trial `t` at size `n` is
/// `SyntheticProblem::new(n, seed ^ t, d_margin)`.
pub fn run_synth(opts: &SynthOptions) -> Result<Vec<ExperimentRecord>> {
    check_lists(&opts.n_list, &opts.k_list, opts.trials)?;
    let mut rows = Vec::new();
    for &n in &opts.n_list {
        for trial in 0..opts.trials {
            let seed = trial_seed(opts.seed, trial);
            let problem = SyntheticProblem::new(n, seed, opts.d_margin)?;
            let reference = if n <= REFERENCE_MAX_N {
                let start = Instant::now();
                let report = solve_full(&problem.materialize()?)?;
                let t = elapsed_ns(start);
                let z = report.min_value;
                rows.push(ExperimentRecord::new(
                    Experiment::Synth,
                    Method::Exact,
                    n,
                    n,
                    trial,
                    seed,
                    z,
                    z,
                    t,
                ));
                if z.is_none() {
                    rows.last_mut().unwrap().status = RecordStatus::ReferenceUnbounded;
                }
                z
            } else {
                None
            };
            for &k in &opts.k_list {
                let sampler = if opts.identity { Sampler::Identity } else { Sampler::Uniform { seed } };
                let start = Instant::now();
                let report = estimate_with(&problem, k, sampler)?;
                let t = elapsed_ns(start);
                rows.push(ExperimentRecord::new(
                    Experiment::Synth,
                    Method::Proposed,
                    n,
                    k,
                    trial,
                    seed,
                    report.z_est,
                    reference,
                    t,
                ));
            }
        }
    }
    sort_records(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct PearsonOptions {
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub n_prime: usize,
    pub alpha: f64,
    pub sigma2: f64,
    pub lambda: f64,
    /// Replace `sigma2` and `lambda` per trial by [`grid_search`].
    pub grid_cv: bool,
    /// Fixed samples `(x, x')`; when set, `n_list` must be `[x.len()]` and
    /// trials differ only in the index and landmark seeds.
    pub data: Option<(Vec<f64>, Vec<f64>)>,
}

impl PearsonOptions {
    pub fn new(n_list: Vec<usize>, k_list: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            n_list,
            k_list,
            trials,
            seed,
            n_prime: 200,
            alpha: DEFAULT_ALPHA,
            sigma2: DEFAULT_SIGMA2,
            lambda: DEFAULT_LAMBDA,
            grid_cv: false,
            data: None,
        }
    }
}

fn divergence_value(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(QpError::Unbounded(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Divergence accuracy and runtime: proposed estimator and Nyström at every
/// `k`, against the exact divergence.
pub fn run_pearson(opts: &PearsonOptions) -> Result<Vec<ExperimentRecord>> {
    check_lists(&opts.n_list, &opts.k_list, opts.trials)?;
    if let Some((x, _)) = &opts.data {
        if opts.n_list != [x.len()] {
            return Err(contract(format!(
                "fixed data has n = {} but the n list is {:?}",
                x.len(),
                opts.n_list
            )));
        }
    }
    for &n in &opts.n_list {
        if let Some(&k) = opts.k_list.iter().find(|&&k| k > n) {
            return Err(contract(format!("Nyström rank k = {k} exceeds n = {n}")));
        }
    }
    let mut rows = Vec::new();
    for &n in &opts.n_list {
        for trial in 0..opts.trials {
            let seed = trial_seed(opts.seed, trial);
            let (x, xp) = match &opts.data {
                Some((x, xp)) => (x.clone(), xp.clone()),
                None => sample_gaussian_pair(n, opts.n_prime, seed),
            };
            let (sigma2, lambda) = if opts.grid_cv {
                let g = grid_search(opts.alpha, &x, &xp)?;
                (g.sigma2, g.lambda)
            } else {
                (opts.sigma2, opts.lambda)
            };
            let cfg = DivergenceConfig::new(opts.alpha, sigma2, lambda, x, xp)?;

            let start = Instant::now();
            let reference = divergence_value(pe_exact(&cfg))?;
            let t = elapsed_ns(start);
            let mut exact = ExperimentRecord::new(
                Experiment::Pearson,
                Method::Exact,
                n,
                n,
                trial,
                seed,
                reference,
                reference,
                t,
            );
            if reference.is_none() {
                exact.status = RecordStatus::ReferenceUnbounded;
            }
            rows.push(exact);

            for &k in &opts.k_list {
                let start = Instant::now();
                let value = divergence_value(pe_sampled(&cfg, k, seed))?;
                let t = elapsed_ns(start);
                rows.push(ExperimentRecord::new(
                    Experiment::Pearson,
                    Method::Proposed,
                    n,
                    k,
                    trial,
                    seed,
                    value,
                    reference,
                    t,
                ));

                let start = Instant::now();
                let model = nystrom_fit(&cfg, k, seed)?;
                let value = divergence_value(pe_nystrom(&cfg, &model))?;
                let t = elapsed_ns(start);
                rows.push(ExperimentRecord::new(
                    Experiment::Pearson,
                    Method::Nystrom,
                    n,
                    k,
                    trial,
                    seed,
                    value,
                    reference,
                    t,
                ));
            }
        }
    }
    sort_records(&mut rows);
    Ok(rows)
}

/// One row of the cut-norm concentration study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutnormRecord {
    pub k: usize,
    pub sample: usize,
    pub seed: u64,
    pub gap: f64,
}

pub const CUTNORM_HEADER: [&str; 4] = ["k", "sample", "seed", "gap"];

pub fn write_cutnorm(path: &Path, rows: &[CutnormRecord]) -> Result<()> {
    write_csv(path, &CUTNORM_HEADER, rows)
}

/// Base matrix of the cut-norm study: entries `U[-1, 1]` from `seed`, or all
/// ones when `constant` is set.
pub fn cutnorm_base(n: usize, seed: u64, constant: bool) -> DMatrix<f64> {
    if constant {
        return DMatrix::from_element(n, n, 1.0);
    }
    let mut rng = stream_rng(seed, Stream::CutNormBase);
    DMatrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0)
}

/// Gap between the cut norms of a sampled restriction and the base matrix,
/// for `samples` seeds per `k`. Sample `s` uses seed `seed ^ s` for every `k`.
pub fn run_cutnorm(
    n: usize,
    k_list: &[usize],
    samples: usize,
    seed: u64,
    constant: bool,
) -> Result<Vec<CutnormRecord>> {
    check_lists(&[n], k_list, samples)?;
    if let Some(&too_big) = std::iter::once(&n).chain(k_list).find(|&&m| m > MAX_CUT_NORM_N) {
        return Err(QpError::Unsupported(format!(
            "cut norm enumeration is limited to size {MAX_CUT_NORM_N}, got {too_big}"
        )));
    }
    let base = cutnorm_base(n, seed, constant);
    let mut rows = Vec::with_capacity(k_list.len() * samples);
    for &k in k_list {
        for sample in 0..samples {
            let s = trial_seed(seed, sample);
            rows.push(CutnormRecord { k, sample, seed: s, gap: concentration_trial(&base, k, s)? });
        }
    }
    rows.sort_by_key(|r| (r.k, r.sample));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Sampled,
}

/// Output record of [`solve_file`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutput {
    pub path: String,
    pub mode: SolveMode,
    pub n: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub status: SolveStatus,
    pub value: Option<f64>,
    pub eig_min: f64,
    pub residual: Option<f64>,
    pub k_bound: Option<f64>,
    pub queries: u64,
    pub time_ns: u64,
}

/// Minimum of a QPROB1 file, exact or estimated. `k` and `seed` are required
/// in sampled mode and ignored in exact mode.
pub fn solve_file(path: &Path, mode: SolveMode, k: Option<usize>, seed: Option<u64>) -> Result<SolveOutput> {
    let problem = read_qprob(path)?;
    let n = problem.dim();
    let start = Instant::now();
    let (k, seed, report, value, queries) = match mode {
        SolveMode::Exact => {
            let r = solve_full(&problem)?;
            let v = r.min_value;
            (n, None, r, v, (n * n + 2 * n) as u64)
        }
        SolveMode::Sampled => {
            let k = k.ok_or_else(|| contract("sampled mode needs k"))?;
            let seed = seed.unwrap_or(0);
            let r = estimate_with(&problem, k, Sampler::Uniform { seed })?;
            (k, Some(seed), r.sub_report, r.z_est, r.queries_used)
        }
    };
    let time_ns = elapsed_ns(start);
    Ok(SolveOutput {
        path: path.display().to_string(),
        mode,
        n,
        k,
        seed,
        status: report.status,
        value,
        eig_min: report.eig_min,
        residual: report.residual,
        k_bound: report.k_bound,
        queries,
        time_ns,
    })
}

/// Writes `output` as one JSON line.
pub fn print_json_line<W: Write, T: Serialize>(out: &mut W, output: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, output)?;
    writeln!(out)
}

/// Median of the finite values; `None` for an empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Reads one real per non-empty line (`#` starts a comment).
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| QpError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: format!("expected one real number, got {line:?}"),
        })?;
        if !x.is_finite() {
            return Err(QpError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: "value is not finite".into(),
            });
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err(QpError::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "no samples".into(),
        });
    }
    Ok(out)
}

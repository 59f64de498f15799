//! Python bindings: `import sublinear_qp`.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyNotImplementedError, PyOSError, PyValueError};
use pyo3::prelude::*;

use sqp::dikernel::{cut_norm_exact, StepDikernel};
use sqp::QpError;
use sqp::QuadraticProblem;

fn to_py(e: QpError) -> PyErr {
    match e {
        QpError::Contract(_) | QpError::Parse { .. } => PyValueError::new_err(e.to_string()),
        QpError::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        QpError::Unbounded(_) => PyArithmeticError::new_err(e.to_string()),
        QpError::Io { .. } => PyOSError::new_err(e.to_string()),
    }
}

fn square(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square (a list of n rows of length n)"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[pyclass(name = "SolveReport", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySolveReport(sqp::SolveReport);

#[pymethods]
impl PySolveReport {
    /// "minimized" or "unbounded".
    #[getter]
    fn status(&self) -> &'static str {
        match self.0.status {
            sqp::SolveStatus::Minimized => "minimized",
            sqp::SolveStatus::Unbounded => "unbounded",
        }
    }
    #[getter]
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.0.minimizer.clone()
    }
    #[getter]
    fn min_value(&self) -> Option<f64> {
        self.0.min_value
    }
    #[getter]
    fn residual(&self) -> Option<f64> {
        self.0.residual
    }
    #[getter]
    fn eig_min(&self) -> f64 {
        self.0.eig_min
    }
    #[getter]
    fn k_bound(&self) -> Option<f64> {
        self.0.k_bound
    }
    fn __repr__(&self) -> String {
        format!("SolveReport(status={:?}, min_value={:?})", self.status(), self.0.min_value)
    }
}

#[pyclass(name = "EstimateReport", frozen, skip_from_py_object)]
struct PyEstimateReport(sqp::EstimateReport);

#[pymethods]
impl PyEstimateReport {
    /// `(n/k)^2` times the sampled minimum; `None` if the sample is unbounded.
    #[getter]
    fn z_est(&self) -> Option<f64> {
        self.0.z_est
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }
    #[getter]
    fn seed(&self) -> Option<u64> {
        self.0.seed
    }
    #[getter]
    fn indices(&self) -> Vec<usize> {
        self.0.indices.indices.clone()
    }
    #[getter]
    fn queries_used(&self) -> u64 {
        self.0.queries_used
    }
    #[getter]
    fn sub_report(&self) -> PySolveReport {
        PySolveReport(self.0.sub_report.clone())
    }
    fn __repr__(&self) -> String {
        format!("EstimateReport(z_est={:?}, n={}, k={})", self.0.z_est, self.0.n, self.0.k)
    }
}

fn estimate<P: QuadraticProblem>(p: &P, k: usize, seed: Option<u64>) -> PyResult<PyEstimateReport> {
    let sampler = match seed {
        Some(seed) => sqp::Sampler::Uniform { seed },
        None if k == p.dim() => sqp::Sampler::Identity,
        None => return Err(PyValueError::new_err("seed is required unless k = n")),
    };
    sqp::estimate_with(p, k, sampler).map(PyEstimateReport).map_err(to_py)
}

/// Dense instance of `p(v) = <v, A v> + n <v, diag(d) v> + n <b, v>`.
#[pyclass(name = "DenseProblem", frozen, skip_from_py_object)]
struct PyDenseProblem(sqp::DenseProblem);

#[pymethods]
impl PyDenseProblem {
    #[new]
    fn new(a: Vec<Vec<f64>>, d: Vec<f64>, b: Vec<f64>) -> PyResult<Self> {
        sqp::DenseProblem::from_matrix(&square(a)?, d, b).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        sqp::qprob::read_qprob(&path).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.dim()
    }

    fn evaluate(&self, v: Vec<f64>) -> PyResult<f64> {
        sqp::evaluate(&self.0, &v).map_err(to_py)
    }

    /// Exact minimum over `R^n`.
    fn solve(&self) -> PyResult<PySolveReport> {
        sqp::solve_full(&self.0).map(PySolveReport).map_err(to_py)
    }

    /// Sampled estimate from `k` indices; without a seed, `k` must equal `n`
    /// and the identity sequence is used.
    #[pyo3(signature = (k, seed=None))]
    fn estimate_min(&self, k: usize, seed: Option<u64>) -> PyResult<PyEstimateReport> {
        estimate(&self.0, k, seed)
    }

    fn to_qprob(&self) -> String {
        sqp::qprob::write_qprob(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("DenseProblem(n={})", self.0.dim())
    }
}

/// Implicit random instance with O(1) entry queries.
#[pyclass(name = "SyntheticProblem", frozen, skip_from_py_object)]
struct PySyntheticProblem(sqp::SyntheticProblem);

#[pymethods]
impl PySyntheticProblem {
    #[new]
    #[pyo3(signature = (n, seed, d_margin=sqp::synthetic::DEFAULT_D_MARGIN))]
    fn new(n: usize, seed: u64, d_margin: f64) -> PyResult<Self> {
        sqp::SyntheticProblem::new(n, seed, d_margin).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.dim()
    }

    fn entry(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.0.dim();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index out of range for n = {n}")));
        }
        Ok(self.0.a(i, j))
    }

    #[pyo3(signature = (k, seed=None))]
    fn estimate_min(&self, k: usize, seed: Option<u64>) -> PyResult<PyEstimateReport> {
        estimate(&self.0, k, seed)
    }

    fn materialize(&self) -> PyResult<PyDenseProblem> {
        self.0.materialize().map(PyDenseProblem).map_err(to_py)
    }
}

/// Samples and hyperparameters of the divergence problem.
#[pyclass(name = "DivergenceConfig", frozen, skip_from_py_object)]
struct PyDivergenceConfig(sqp::DivergenceConfig);

#[pymethods]
impl PyDivergenceConfig {
    #[new]
    #[pyo3(signature = (
        x,
        x_prime,
        alpha=sqp::pearson::DEFAULT_ALPHA,
        sigma2=sqp::pearson::DEFAULT_SIGMA2,
        lam=sqp::pearson::DEFAULT_LAMBDA,
    ))]
    fn new(x: Vec<f64>, x_prime: Vec<f64>, alpha: f64, sigma2: f64, lam: f64) -> PyResult<Self> {
        sqp::DivergenceConfig::new(alpha, sigma2, lam, x, x_prime).map(Self).map_err(to_py)
    }

    /// `x ~ N(1, 0.5)` and `x' ~ N(1.5, 0.5)` from `seed`, default hyperparameters.
    #[staticmethod]
    #[pyo3(signature = (n, seed, n_prime=200))]
    fn gaussian(n: usize, seed: u64, n_prime: usize) -> PyResult<Self> {
        let (x, xp) = sqp::pearson::sample_gaussian_pair(n, n_prime, seed);
        sqp::DivergenceConfig::with_defaults(x, xp).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn pe_exact(&self) -> PyResult<f64> {
        sqp::pe_exact(&self.0).map_err(to_py)
    }

    fn pe_sampled(&self, k: usize, seed: u64) -> PyResult<f64> {
        sqp::pe_sampled(&self.0, k, seed).map_err(to_py)
    }

    fn pe_nystrom(&self, k: usize, seed: u64) -> PyResult<f64> {
        let model = sqp::nystrom_fit(&self.0, k, seed).map_err(to_py)?;
        sqp::pe_nystrom(&self.0, &model).map_err(to_py)
    }
}

/// Exact minimum of `<v, A v> + k <v, diag(d) v> + k <b, v>`.
#[pyfunction]
fn solve(a: Vec<Vec<f64>>, d: Vec<f64>, b: Vec<f64>) -> PyResult<PySolveReport> {
    let a = square(a)?;
    sqp::solve(a.nrows(), &a, &d, &b).map(PySolveReport).map_err(to_py)
}

#[pyfunction]
fn sample_indices(n: usize, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    sqp::sample_indices(n, k, seed).map(|s| s.indices).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (eps, delta, c1=1.0, c2=1.0))]
fn suggest_k(eps: f64, delta: f64, c1: f64, c2: f64) -> PyResult<usize> {
    let schedule = sqp::SampleSizeSchedule::new(c1, c2).map_err(to_py)?;
    sqp::suggest_k(eps, delta, &schedule).map_err(to_py)
}

/// Exact cut norm of the step dikernel of a square matrix.
#[pyfunction]
fn cut_norm(values: Vec<Vec<f64>>) -> PyResult<f64> {
    let w = StepDikernel::new(square(values)?).map_err(to_py)?;
    cut_norm_exact(&w).map_err(to_py)
}

#[pymodule]
fn sublinear_qp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDenseProblem>()?;
    m.add_class::<PySyntheticProblem>()?;
    m.add_class::<PyDivergenceConfig>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyEstimateReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sample_indices, m)?)?;
    m.add_function(wrap_pyfunction!(suggest_k, m)?)?;
    m.add_function(wrap_pyfunction!(cut_norm, m)?)?;
    Ok(())
}

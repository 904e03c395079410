//! Python bindings. Results come back as plain dicts and lists so the module
//! needs nothing beyond the interpreter.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use plasma_branch::ball_branch::BallBranch;
use plasma_branch::gelfand::{bell_curve, lambda_grid, to_gelfand};
use plasma_branch::radial_core::{make_grid, BallGeometry};
use plasma_branch::solver::{derivative_fields, entropy_identity_defect, solve_plasma};
use plasma_branch::spectral::{eigen_l, sobolev_lambda, thresholds};
use plasma_branch::verify::{run_suite, VerifyConfig};
use plasma_branch::{Error, DEFAULT_GRID_N};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::LengthMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

/// The closed-form branch on the unit-volume ball in dimension `dim`.
#[pyclass(frozen, name = "Branch")]
struct PyBranch {
    inner: BallBranch,
    grid_n: usize,
}

#[pymethods]
impl PyBranch {
    #[new]
    #[pyo3(signature = (dim = 2, p = 2.0, grid_n = DEFAULT_GRID_N))]
    fn new(dim: usize, p: f64, grid_n: usize) -> PyResult<Self> {
        let inner = BallBranch::build(dim, p, grid_n).map_err(py_err)?;
        Ok(Self { inner, grid_n })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.exponent()
    }

    #[getter]
    fn lambda_plus(&self) -> f64 {
        self.inner.lambda_plus()
    }

    fn lambda_turn(&self) -> PyResult<f64> {
        self.inner.lambda_turn().map_err(py_err)
    }

    fn script_i(&self, r: f64) -> PyResult<f64> {
        self.inner.script_i(r).map_err(py_err)
    }

    fn r_of_lambda(&self, lambda: f64) -> PyResult<f64> {
        self.inner.r_of_lambda(lambda).map_err(py_err)
    }

    fn energy(&self, lambda: f64) -> PyResult<f64> {
        self.inner.energy_of(lambda).map_err(py_err)
    }

    /// One branch point as a dict; `mu` is None outside the positive regime.
    fn point<'py>(&self, py: Python<'py>, lambda: f64) -> PyResult<Bound<'py, PyDict>> {
        let pt = self.inner.point(lambda).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lambda", pt.lambda)?;
        d.set_item("R", pt.r_of_lambda)?;
        d.set_item("r_lambda", pt.r_lambda)?;
        d.set_item("gamma", pt.gamma)?;
        d.set_item("alpha", pt.alpha)?;
        d.set_item("mu", pt.mu)?;
        d.set_item("E", pt.energy)?;
        d.set_item("regime", pt.regime.as_str())?;
        Ok(d)
    }

    /// `samples` evenly spaced λ on [0, factor·λ₊].
    #[pyo3(signature = (factor = 2.0, samples = 200))]
    fn lambdas(&self, factor: f64, samples: usize) -> PyResult<Vec<f64>> {
        lambda_grid(self.inner.lambda_plus(), factor, samples).map_err(py_err)
    }

    /// Newton solution of the discrete problem at λ.
    fn solve<'py>(&self, py: Python<'py>, lambda: f64) -> PyResult<Bound<'py, PyDict>> {
        let grid =
            make_grid(self.inner.dim(), self.inner.geom.radius, self.grid_n).map_err(py_err)?;
        let sol = py
            .detach(|| solve_plasma(&self.inner.geom, self.inner.exponent(), lambda, &grid, None))
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lambda", sol.lambda)?;
        d.set_item("alpha", sol.alpha)?;
        d.set_item("energy", sol.energy)?;
        d.set_item("residual", sol.residual_pde)?;
        d.set_item("constraint_defect", sol.constraint_defect)?;
        d.set_item("iterations", sol.newton_iters)?;
        d.set_item("r", sol.psi.grid.nodes.clone())?;
        d.set_item("psi", sol.psi.values.clone())?;
        if sol.alpha > 0.0 && sol.lambda > 0.0 {
            let f = derivative_fields(&sol).map_err(py_err)?;
            d.set_item("dalpha", f.dalpha)?;
            d.set_item("d_energy", f.d_energy)?;
            d.set_item(
                "entropy_defect",
                entropy_identity_defect(&sol, &f).map_err(py_err)?,
            )?;
        }
        Ok(d)
    }

    /// Linearized spectrum at λ (positive regime only).
    #[pyo3(signature = (lambda, modes = 2))]
    fn spectrum<'py>(
        &self,
        py: Python<'py>,
        lambda: f64,
        modes: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid =
            make_grid(self.inner.dim(), self.inner.geom.radius, self.grid_n).map_err(py_err)?;
        let geom = &self.inner.geom;
        let p = self.inner.exponent();
        let rep = py
            .detach(|| {
                solve_plasma(geom, p, lambda, &grid, None).and_then(|s| eigen_l(geom, &s, modes))
            })
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lambda", rep.lambda)?;
        d.set_item("sigma1", rep.sigma1)?;
        d.set_item("nu1", rep.nu1)?;
        d.set_item("mu1", rep.mu1)?;
        d.set_item("residual", rep.residual)?;
        Ok(d)
    }

    /// Gelfand-side view of the branch point at λ ∈ [0, λ₊].
    fn gelfand<'py>(&self, py: Python<'py>, lambda: f64) -> PyResult<Bound<'py, PyDict>> {
        let g = to_gelfand(&self.inner, lambda).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("lambda", g.lambda)?;
        d.set_item("mu", g.mu)?;
        d.set_item("E", g.energy)?;
        d.set_item("v_max", g.v_max)?;
        d.set_item("residual", g.residual)?;
        Ok(d)
    }

    /// Bell curve rows `(lambda, mu, E)` and the turning-point summary.
    #[pyo3(signature = (samples = 200))]
    fn bell<'py>(&self, py: Python<'py>, samples: usize) -> PyResult<Bound<'py, PyDict>> {
        let bc = py
            .detach(|| bell_curve(&self.inner, samples))
            .map_err(py_err)?;
        let rows: Vec<(f64, f64, f64)> =
            bc.rows.iter().map(|r| (r.lambda, r.mu, r.energy)).collect();
        let d = PyDict::new(py);
        d.set_item("rows", rows)?;
        d.set_item("lambda_t", bc.turning.lambda_t)?;
        d.set_item("mu_t", bc.turning.mu_t)?;
        d.set_item("E_at_lambda_t", bc.turning.energy_t)?;
        d.set_item("E_inf", bc.turning.e_inf)?;
        d.set_item("lambda_plus", bc.turning.lambda_plus)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Branch(dim={}, p={}, grid_n={})",
            self.inner.dim(),
            self.inner.exponent(),
            self.grid_n
        )
    }
}

/// Λ(t) on the unit-volume ball.
#[pyfunction]
#[pyo3(signature = (dim = 2, t = 2.0))]
fn sobolev(dim: usize, t: f64) -> PyResult<f64> {
    let geom = BallGeometry::new(dim).map_err(py_err)?;
    sobolev_lambda(&geom, t).map_err(py_err)
}

/// The thresholds λ₀ and λ₁ (None when N ≠ 2).
#[pyfunction]
#[pyo3(signature = (dim = 2, p = 2.0))]
fn stability_thresholds(dim: usize, p: f64) -> PyResult<(f64, Option<f64>)> {
    let geom = BallGeometry::new(dim).map_err(py_err)?;
    let c = thresholds(&geom, p).map_err(py_err)?;
    Ok((c.lambda0, c.lambda1))
}

/// Run the verification suite; returns `(name, passed, value)` triples.
#[pyfunction]
#[pyo3(signature = (dim = 2, p = 2.0, grid_n = DEFAULT_GRID_N))]
fn verify(py: Python<'_>, dim: usize, p: f64, grid_n: usize) -> PyResult<Vec<(String, bool, f64)>> {
    let mut cfg = VerifyConfig::new(dim, p);
    cfg.grid_n = grid_n;
    let checks = py.detach(|| run_suite(&cfg)).map_err(py_err)?;
    Ok(checks
        .into_iter()
        .map(|c| (c.name, c.passed, c.value))
        .collect())
}

#[pymodule]
pub fn plasma_branch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBranch>()?;
    m.add_function(wrap_pyfunction!(sobolev, m)?)?;
    m.add_function(wrap_pyfunction!(stability_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("DEFAULT_GRID_N", DEFAULT_GRID_N)?;
    Ok(())
}

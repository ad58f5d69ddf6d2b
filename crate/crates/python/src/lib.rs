use std::collections::BTreeMap;
use std::sync::Arc;

use nholo::cli::{run_scene as run, Command, Overrides};
use nholo::dconn::{
    commutator_oracle, compat_residuals, d_curvature, d_torsion, levi_civita_and_deformation,
    ricci_scalar_einstein, theta_components, DConnection, DMetric,
};
use nholo::lagrange::Lagrangian;
use nholo::nconn::{DVector, NConnection};
use nholo::solutions::{
    ansatz_chart, build_solution, kahler_chart, kahler_example, sweep, vacuum_residuals,
    AnsatzData, H4Reading, Recipe, SampleWindow,
};
use nholo::{Chart, ScalarField};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Chart", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChart(Arc<Chart>);

#[pymethods]
impl PyChart {
    #[new]
    fn new(h: Vec<String>, v: Vec<String>) -> PyResult<Self> {
        let n = h.len();
        let names: Vec<String> = h.into_iter().chain(v).collect();
        let m = names.len() - n;
        Ok(Self(Arc::new(Chart::new(n, m, names).map_err(err)?)))
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    fn __repr__(&self) -> String {
        let (h, v) = self.0.names().split_at(self.0.n());
        format!("Chart(h={h:?}, v={v:?})")
    }
}

/// Symbolic scalar field on a chart.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(ScalarField);

#[pymethods]
impl PyField {
    #[new]
    fn new(source: &str, chart: &PyChart) -> PyResult<Self> {
        Ok(Self(ScalarField::parse(source, &chart.0).map_err(err)?))
    }

    fn eval(&self, coords: Vec<f64>) -> PyResult<f64> {
        self.0.eval_coords(&coords).map_err(err)
    }

    /// Symbolic partial derivative along the named coordinates, in order.
    fn partial(&self, names: Vec<String>) -> PyResult<Self> {
        let chart = self.0.chart();
        let idx = names
            .iter()
            .map(|n| {
                chart
                    .index_of(n)
                    .ok_or_else(|| err(format!("unknown coordinate `{n}`")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self(self.0.partial_field(&idx)))
    }

    fn simplify(&self) -> Self {
        Self(self.0.simplify())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Field({:?})", self.0.to_string())
    }
}

#[pyclass(name = "Lagrangian", frozen)]
struct PyLagrangian(Lagrangian);

fn dvec(n: usize, flat: &[f64]) -> PyResult<DVector> {
    if flat.len() != 2 * n {
        return Err(err(format!("expected {} components", 2 * n)));
    }
    Ok(DVector::from_flat(n, flat))
}

#[pymethods]
impl PyLagrangian {
    #[new]
    fn new(source: &str, chart: &PyChart) -> PyResult<Self> {
        Ok(Self(Lagrangian::parse(source, &chart.0).map_err(err)?))
    }

    /// `g_ij` at a point.
    fn metric(&self, coords: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.0.hessian_metric(&coords).map_err(err)?.0)
    }

    fn semispray(&self, coords: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.semispray(&coords).map_err(err)
    }

    /// `N^i_j` at a point, indexed `[i][j]`.
    fn nconnection(&self, coords: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.0.canonical_nconnection().values(&coords).map_err(err)
    }

    /// `θ(X, Y) = g(FX, Y)` for flat d-vectors `(h, v)`.
    fn symplectic_form(&self, x: Vec<f64>, y: Vec<f64>, coords: Vec<f64>) -> PyResult<f64> {
        let n = self.0.n();
        self.0
            .symplectic_form(&dvec(n, &x)?, &dvec(n, &y)?, &coords)
            .map_err(err)
    }

    fn sasaki(&self) -> PyResult<PyDMetric> {
        Ok(PyDMetric {
            dc: DConnection::canonical(&self.0.sasaki_metric().map_err(err)?),
            symplectic: true,
        })
    }
}

/// Block metric with its canonical d-connection.
#[pyclass(name = "DMetric", frozen)]
struct PyDMetric {
    dc: DConnection,
    symplectic: bool,
}

fn fields(chart: &Arc<Chart>, rows: &[Vec<String>]) -> PyResult<Vec<Vec<ScalarField>>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|s| ScalarField::parse(s, chart).map_err(err))
                .collect()
        })
        .collect()
}

#[pymethods]
impl PyDMetric {
    /// `g` is n×n, `h` m×m, `n` m×n (`N_i^a` at `[a][i]`), all as expression text.
    #[new]
    fn new(
        chart: &PyChart,
        g: Vec<Vec<String>>,
        h: Vec<Vec<String>>,
        n: Vec<Vec<String>>,
    ) -> PyResult<Self> {
        let c = &chart.0;
        let ncon = NConnection::symbolic(c, fields(c, &n)?).map_err(err)?;
        let dm = DMetric::new(fields(c, &g)?, fields(c, &h)?, ncon).map_err(err)?;
        Ok(Self {
            dc: DConnection::canonical(&dm),
            symplectic: false,
        })
    }

    /// Coefficients `[γ][β][α]`: component along `e_γ` of `D_{e_α} e_β`.
    fn connection(&self, coords: Vec<f64>) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let co = self.dc.at(&coords).map_err(err)?;
        let d = co.dim();
        Ok((0..d)
            .map(|g| {
                (0..d)
                    .map(|b| (0..d).map(|a| co.value(g, b, a)).collect())
                    .collect()
            })
            .collect())
    }

    /// Residuals of the canonical contract at a point.
    fn checks(&self, coords: Vec<f64>) -> PyResult<BTreeMap<String, f64>> {
        let co = self.dc.at(&coords).map_err(err)?;
        let theta = if self.symplectic {
            Some(theta_components(co.metric().expect("metric jets")).map_err(err)?)
        } else {
            None
        };
        let r = compat_residuals(&co, theta.as_ref()).map_err(err)?;
        let t = d_torsion(&co).map_err(err)?;
        let mut out = BTreeMap::from([
            ("dg".to_string(), r.dg),
            ("t_hhh".to_string(), t[0].max_abs()),
            ("t_vvv".to_string(), t[4].max_abs()),
            (
                "levi_civita".to_string(),
                levi_civita_and_deformation(&self.dc, &coords)
                    .map_err(err)?
                    .residual,
            ),
        ]);
        if self.symplectic {
            out.insert("dtheta".into(), r.dtheta);
        }
        Ok(out)
    }

    /// Ricci tensor, scalar, Einstein tensor and the trace-identity residual.
    fn curvature<'py>(&self, py: Python<'py>, coords: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let co = self.dc.at(&coords).map_err(err)?;
        let (curv, _) = d_curvature(&co).map_err(err)?;
        let r = ricci_scalar_einstein(&co, &curv).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("ricci", r.ricci)?;
        d.set_item("scalar", r.scalar)?;
        d.set_item("einstein", r.einstein)?;
        d.set_item("trace_residual", r.trace_residual)?;
        Ok(d.into_any())
    }

    /// Relative deviation of the curvature formulas from nested covariant
    /// derivatives applied to the vector field `z`.
    fn oracle(&self, coords: Vec<f64>, z: Vec<String>) -> PyResult<f64> {
        let chart = self.dc.metric().chart().clone();
        let z = z
            .iter()
            .map(|s| ScalarField::parse(s, &chart).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(commutator_oracle(&self.dc, &coords, &z)
            .map_err(err)?
            .relative_deviation())
    }
}

/// Generated vacuum solution on the ansatz chart `(x1, x2, x3 | v, y5)`.
#[pyclass(name = "Solution", frozen)]
struct PySolution(AnsatzData);

#[pymethods]
impl PySolution {
    fn fields(&self) -> BTreeMap<String, String> {
        let a = &self.0;
        let mut out = BTreeMap::new();
        for (k, f) in [
            ("varpi", &a.varpi),
            ("g2", &a.g2),
            ("g3", &a.g3),
            ("h4", &a.h4),
            ("h5", &a.h5),
        ] {
            out.insert(k.to_string(), f.to_string());
        }
        for i in 0..3 {
            out.insert(format!("w{}", i + 1), a.w[i].to_string());
            out.insert(format!("n{}", i + 1), a.n[i].to_string());
        }
        out
    }

    fn residuals(&self, coords: Vec<f64>) -> PyResult<BTreeMap<String, f64>> {
        let r = vacuum_residuals(&self.0, &coords).map_err(err)?;
        let m = |x: [f64; 3]| x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        Ok(BTreeMap::from([
            ("r1".to_string(), r.r1),
            ("r2".to_string(), r.r2),
            ("r3".to_string(), m(r.r3)),
            ("r4".to_string(), m(r.r4)),
        ]))
    }

    fn perturbed(&self, eps: f64) -> Self {
        Self(self.0.perturbed(eps))
    }

    /// Maxima over the standard 6⁴ window.
    #[pyo3(signature = (with_ricci = true))]
    fn sweep(&self, with_ricci: bool) -> PyResult<BTreeMap<String, f64>> {
        let s = sweep(&self.0, &SampleWindow::standard(), with_ricci).map_err(err)?;
        let mut out = BTreeMap::from([
            ("points".to_string(), s.points.len() as f64),
            ("excluded".to_string(), s.excluded as f64),
            (
                "vacuum".to_string(),
                s.max_vacuum().map_or(f64::NAN, |m| m.0),
            ),
        ]);
        if let Some((r, _)) = s.max_ricci().filter(|_| with_ricci) {
            out.insert("ricci".into(), r);
        }
        Ok(out)
    }
}

/// Family A with `h5 = v²` on the standard window.
#[pyfunction]
fn family_a() -> PyResult<PySolution> {
    let r = Recipe::family_a(&ansatz_chart());
    Ok(PySolution(
        build_solution(&r, &SampleWindow::standard()).map_err(err)?,
    ))
}

/// Residuals of the four-dimensional almost Kähler example at `points`
/// (coordinates `x2, x3, v, y5`).
#[pyfunction]
#[pyo3(signature = (a, g, points, reading = "gv2", pairs = 4, seed = 0))]
fn kahler_checks(
    a: f64,
    g: &str,
    points: Vec<Vec<f64>>,
    reading: &str,
    pairs: usize,
    seed: u64,
) -> PyResult<BTreeMap<String, f64>> {
    let reading = match reading {
        "gv2" => H4Reading::GV2,
        "gv" => H4Reading::GV,
        other => return Err(err(format!("unknown reading `{other}`"))),
    };
    let g = ScalarField::parse(g, &kahler_chart()).map_err(err)?;
    let ex = kahler_example(a, &g, reading, (1, 1), None).map_err(err)?;
    let c = ex.checks(&points, pairs, seed).map_err(err)?;
    Ok(BTreeMap::from([
        ("ode".to_string(), c.ode),
        ("f_squared".to_string(), c.f_squared),
        ("theta_antisymmetry".to_string(), c.theta_antisymmetry),
        ("theta_diagonal".to_string(), c.theta_diagonal),
        ("theta_minus_gf".to_string(), c.theta_vs_gf_flipped),
    ]))
}

/// Runs a CLI command on scene text and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (command, scene, tol = None, seed = None, panels = None, jet_order = None))]
fn run_scene(
    command: &str,
    scene: &str,
    tol: Option<f64>,
    seed: Option<u64>,
    panels: Option<usize>,
    jet_order: Option<u8>,
) -> PyResult<String> {
    let cmd = match command {
        "geometrize" => Command::Geometrize,
        "curvature" => Command::Curvature,
        "solve" => Command::Solve,
        "verify" => Command::Verify,
        other => return Err(err(format!("unknown command `{other}`"))),
    };
    let o = Overrides {
        tol,
        panels,
        seed,
        jet_order,
    };
    Ok(run(cmd, scene, &o).map_err(err)?.to_json())
}

#[pymodule]
fn pynholo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyChart>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyLagrangian>()?;
    m.add_class::<PyDMetric>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(family_a, m)?)?;
    m.add_function(wrap_pyfunction!(kahler_checks, m)?)?;
    m.add_function(wrap_pyfunction!(run_scene, m)?)?;
    Ok(())
}

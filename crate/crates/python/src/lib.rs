//! Python module `unitsml`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use unitsml::experiments::{self, equivariance_residual, random_group_elements, BlackbodyConfig, Scale, SpringyConfig};
use unitsml::intlinalg::{self, IntMatrix};
use unitsml::io::SpecFile;
use unitsml::pi::{self, EnumerateOptions, FeatureDescriptor, Monomial};
use unitsml::regress::lasso::{lambda_max, LassoOptions};
use unitsml::regress::{self, weighted_design, Dataset, FitMethod, Loss, RegressionModel};
use unitsml::units::{self, BaseUnitSystem, GroupElement, Quantity};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn chain(e: unitsml::Error) -> PyErr {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(&e);
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    PyValueError::new_err(msg)
}

fn int_matrix(rows: &[Vec<i64>]) -> PyResult<IntMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    IntMatrix::from_rows(rows, cols).map_err(chain)
}

fn to_rows(m: &IntMatrix) -> Vec<Vec<i64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Named features with integer unit vectors over a base-unit system.
#[pyclass(name = "FeatureSpec", module = "unitsml", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpec {
    inner: pi::FeatureSpec,
}

#[pymethods]
impl PySpec {
    /// `features` is a list of `(name, unit expression)` pairs.
    #[new]
    #[pyo3(signature = (base_units, features, weights=None, nonnegative=None))]
    fn new(
        base_units: Vec<String>,
        features: Vec<(String, String)>,
        weights: Option<Vec<u32>>,
        nonnegative: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let sys = BaseUnitSystem::with_si_aliases(&base_units).map_err(chain)?;
        let nonneg = nonnegative.unwrap_or_default();
        let mut feats = Vec::new();
        for (i, (name, expr)) in features.iter().enumerate() {
            let mut f = FeatureDescriptor::new(name, sys.parse(expr).map_err(chain)?);
            if let Some(w) = weights.as_ref().and_then(|w| w.get(i)) {
                f = f.weight(*w);
            }
            if nonneg.contains(name) {
                f = f.nonnegative();
            }
            feats.push(f);
        }
        Ok(PySpec {
            inner: pi::FeatureSpec::new(sys, feats).map_err(chain)?,
        })
    }

    #[staticmethod]
    fn from_json(path: &str) -> PyResult<Self> {
        let file = unitsml::io::read_spec_file(std::path::Path::new(path)).map_err(chain)?;
        Ok(PySpec {
            inner: file.to_spec().map_err(chain)?,
        })
    }

    #[staticmethod]
    fn pendulum() -> Self {
        PySpec {
            inner: unitsml::sims::pendulum::pendulum_spec(),
        }
    }

    #[staticmethod]
    fn planck() -> Self {
        PySpec {
            inner: unitsml::sims::planck::planck_spec(),
        }
    }

    #[staticmethod]
    fn rietkerk() -> Self {
        PySpec {
            inner: unitsml::sims::rietkerk::rietkerk_spec(),
        }
    }

    fn to_json(&self, label_units: Option<&str>) -> PyResult<String> {
        let lu = label_units.map(|e| self.inner.system.parse(e)).transpose().map_err(chain)?;
        serde_json::to_string_pretty(&SpecFile::from_spec(&self.inner, lu.as_ref())).map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn base_units(&self) -> Vec<String> {
        self.inner.system.names().to_vec()
    }

    fn rank(&self) -> PyResult<usize> {
        self.inner.rank().map_err(chain)
    }

    /// `d - rank`: the number of independent dimensionless monomials.
    fn s(&self) -> PyResult<usize> {
        Ok(self.inner.d() - self.inner.rank().map_err(chain)?)
    }

    fn units_matrix(&self) -> Vec<Vec<i64>> {
        to_rows(&self.inner.units_matrix())
    }

    fn parse_units(&self, expr: &str) -> PyResult<Vec<i32>> {
        Ok(self.inner.system.parse(expr).map_err(chain)?.exps().to_vec())
    }

    fn format_units(&self, exps: Vec<i32>) -> String {
        self.inner.system.format(&units::UnitVector::new(exps))
    }

    /// Units of a monomial given as an expression such as `"m g^-1"`.
    fn monomial_units(&self, expr: &str) -> PyResult<String> {
        let m = Monomial::parse(expr, &self.inner).map_err(chain)?;
        Ok(self.inner.system.format(&m.units(&self.inner).map_err(chain)?))
    }

    fn dimensionless_basis(&self) -> PyResult<Vec<String>> {
        let b = pi::dimensionless_basis(&self.inner).map_err(chain)?;
        Ok(b.iter().map(|m| m.display(&self.inner).to_string()).collect())
    }

    #[pyo3(signature = (max_degree, dimensionless_only=true))]
    fn enumerate(&self, max_degree: u32, dimensionless_only: bool) -> PyResult<Vec<Vec<i32>>> {
        let list = pi::enumerate_monomials(&self.inner, &EnumerateOptions::new(max_degree, dimensionless_only))
            .map_err(chain)?;
        Ok(list.into_iter().map(|m| m.exps).collect())
    }

    #[pyo3(signature = (target_units, max_degree=4))]
    fn decoders(&self, target_units: &str, max_degree: u32) -> PyResult<Vec<String>> {
        let t = self.inner.system.parse(target_units).map_err(chain)?;
        let list = pi::decoder_solutions(&self.inner, &t, max_degree).map_err(chain)?;
        Ok(list.iter().map(|m| m.display(&self.inner).to_string()).collect())
    }

    /// Integer coordinates of a monomial in the dimensionless basis, or None.
    fn lattice_coordinates(&self, expr: &str) -> PyResult<Option<Vec<i64>>> {
        let m = Monomial::parse(expr, &self.inner).map_err(chain)?;
        let b = pi::dimensionless_basis(&self.inner).map_err(chain)?;
        pi::lattice_coordinates(&b, &m).map_err(chain)
    }

    fn evaluate(&self, expr: &str, x: Vec<f64>) -> PyResult<f64> {
        let m = Monomial::parse(expr, &self.inner).map_err(chain)?;
        pi::evaluate_monomial(&m, &x).map_err(chain)
    }

    fn __repr__(&self) -> String {
        format!("FeatureSpec(d={}, k={}, names={:?})", self.inner.d(), self.inner.k(), self.inner.names())
    }
}

/// A fitted units-equivariant linear model.
#[pyclass(name = "Model", module = "unitsml", frozen)]
struct PyModel {
    model: RegressionModel,
    spec: pi::FeatureSpec,
    converged: bool,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.model.weights.clone()
    }

    #[getter]
    fn monomials(&self) -> Vec<String> {
        self.model.monomials.iter().map(|m| m.display(&self.spec).to_string()).collect()
    }

    #[getter]
    fn decoder(&self) -> String {
        self.model.decoder.display(&self.spec).to_string()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.converged
    }

    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        rows.iter()
            .map(|x| Ok(regress::predict(&self.model, &self.spec, x).map_err(chain)?.value))
            .collect()
    }

    /// Largest relative deviation of `f(g x)` from `g f(x)` over random `g`.
    #[pyo3(signature = (rows, trials=100, seed=0))]
    fn equivariance_residual(&self, rows: Vec<Vec<f64>>, trials: usize, seed: u64) -> PyResult<f64> {
        let group = random_group_elements(self.spec.k(), trials, seed);
        equivariance_residual(&self.model, &self.spec, &rows, &group).map_err(chain)
    }

    fn to_json(&self) -> PyResult<String> {
        let f = unitsml::io::ModelFile::new(&self.model, &self.spec).map_err(chain)?;
        serde_json::to_string_pretty(&f).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Model(features={}, decoder={})", self.model.monomials.len(), self.decoder())
    }
}

/// Fits `label ~ decoder(x) * sum_j w_j m_j(x)` over the chosen features.
///
/// `features` is `"basis"` (constant plus dimensionless basis), `"enumerate:<deg>"`
/// or an explicit list of monomial expressions.
#[pyfunction]
#[pyo3(signature = (spec, rows, labels, label_units, features=None, decoder=None, method="ols", lam=None, ridge=0.0, max_sweeps=1_000_000))]
#[allow(clippy::too_many_arguments)]
fn fit(
    spec: &PySpec,
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
    label_units: &str,
    features: Option<Bound<'_, PyAny>>,
    decoder: Option<&str>,
    method: &str,
    lam: Option<f64>,
    ridge: f64,
    max_sweeps: usize,
) -> PyResult<PyModel> {
    let s = &spec.inner;
    let lu = s.system.parse(label_units).map_err(chain)?;
    let data = Dataset::new(s.clone(), rows, labels, lu.clone()).map_err(chain)?;
    let monomials: Vec<Monomial> = match features {
        None => basis_features(s)?,
        Some(f) => {
            if let Ok(list) = f.extract::<Vec<String>>() {
                list.iter().map(|e| Monomial::parse(e, s).map_err(chain)).collect::<PyResult<_>>()?
            } else {
                let name: String = f.extract()?;
                if name == "basis" {
                    basis_features(s)?
                } else if let Some(deg) = name.strip_prefix("enumerate:") {
                    let deg: u32 = deg.parse().map_err(err)?;
                    pi::enumerate_monomials(s, &EnumerateOptions::new(deg, true)).map_err(chain)?
                } else {
                    return Err(PyValueError::new_err(format!("unknown feature set `{name}`")));
                }
            }
        }
    };
    let dec = match decoder {
        Some(e) => Monomial::parse(e, s).map_err(chain)?,
        None => pi::decoder_solutions(s, &lu, 4)
            .map_err(chain)?
            .into_iter()
            .next()
            .ok_or_else(|| PyValueError::new_err("no decoder with the label units up to degree 4"))?,
    };
    let fm = match method {
        "ols" => FitMethod::Ols { ridge },
        "lasso" => {
            let lambda = match lam {
                Some(l) => l,
                None => {
                    let (x, y) = weighted_design(&data, &monomials, &dec, &dec).map_err(chain)?;
                    1e-10 * lambda_max(&x, &y, true)
                }
            };
            FitMethod::Lasso(LassoOptions {
                lambda,
                max_sweeps,
                tol: 1e-13,
                standardize: true,
                path_steps: 60,
            })
        }
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let fitted = regress::fit_model(&data, &monomials, &dec, fm, Loss::Dimensionless).map_err(chain)?;
    Ok(PyModel {
        converged: fitted.status.converged,
        model: fitted.model,
        spec: s.clone(),
    })
}

fn basis_features(s: &pi::FeatureSpec) -> PyResult<Vec<Monomial>> {
    let mut v = vec![Monomial::constant(s.d())];
    v.extend(pi::dimensionless_basis(s).map_err(chain)?);
    Ok(v)
}

/// Returns `(S, D, T)` with `S A T = D`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn smith_normal_form(a: Vec<Vec<i64>>) -> PyResult<(Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let snf = intlinalg::smith_normal_form(&int_matrix(&a)?).map_err(chain)?;
    Ok((to_rows(&snf.s), to_rows(&snf.d), to_rows(&snf.t)))
}

/// Integer basis of `{x : x^T A = 0}`.
#[pyfunction]
fn nullspace_basis(a: Vec<Vec<i64>>) -> PyResult<Vec<Vec<i64>>> {
    intlinalg::nullspace_basis(&int_matrix(&a)?).map_err(chain)
}

#[pyfunction]
fn solve_diophantine(a: Vec<Vec<i64>>, b: Vec<i64>) -> PyResult<Option<Vec<i64>>> {
    intlinalg::solve_diophantine(&int_matrix(&a)?, &b).map_err(chain)
}

/// Value of `x` (in `units` over `base_units`) after the unit change `g`.
#[pyfunction]
fn rescale(base_units: Vec<String>, value: f64, units: &str, g: Vec<f64>) -> PyResult<f64> {
    let sys = BaseUnitSystem::with_si_aliases(&base_units).map_err(chain)?;
    let q = Quantity::new(value, sys.parse(units).map_err(chain)?);
    let g = GroupElement::new(g).map_err(chain)?;
    Ok(units::rescale(&g, &q).value)
}

/// `(rows, labels)` of pendulum samples over `FeatureSpec.pendulum()`.
#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn pendulum_data(n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = unitsml::sims::pendulum::sample_pendulum_dataset(n, seed, &Default::default()).map_err(chain)?;
    Ok((d.rows, d.labels))
}

#[pyfunction]
fn planck_law(wavelength: f64, temperature: f64) -> f64 {
    unitsml::sims::planck::planck_law(wavelength, temperature)
}

/// Runs a scripted experiment and returns its report as JSON text.
#[pyfunction]
#[pyo3(signature = (name, seed=0, n_train=None, n_test=None))]
fn run_experiment(py: Python<'_>, name: &str, seed: u64, n_train: Option<usize>, n_test: Option<usize>) -> PyResult<String> {
    let name = name.to_string();
    py.detach(move || -> PyResult<String> {
        match name.as_str() {
            "blackbody" => {
                let mut cfg = BlackbodyConfig::new(Scale::Desk, seed);
                cfg.n_train = n_train.unwrap_or(cfg.n_train);
                cfg.n_test = n_test.unwrap_or(cfg.n_test);
                let out = experiments::run_blackbody(&cfg).map_err(chain)?;
                serde_json::to_string(&out.report).map_err(err)
            }
            "springy" => {
                let mut cfg = SpringyConfig::new(Scale::Desk, seed);
                cfg.n_train = n_train.unwrap_or(cfg.n_train);
                cfg.n_test = n_test.unwrap_or(cfg.n_test);
                let out = experiments::run_springy(&cfg).map_err(chain)?;
                serde_json::to_string(&out.report).map_err(err)
            }
            other => Err(PyValueError::new_err(format!("unknown experiment `{other}`"))),
        }
    })
}

#[pymodule]
#[pyo3(name = "unitsml")]
fn unitsml_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(smith_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(nullspace_basis, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diophantine, m)?)?;
    m.add_function(wrap_pyfunction!(rescale, m)?)?;
    m.add_function(wrap_pyfunction!(pendulum_data, m)?)?;
    m.add_function(wrap_pyfunction!(planck_law, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

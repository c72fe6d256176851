//! Python bindings: instances, schedules, the approximation scheme, the
//! exact oracle, the greedy baseline, and the feasibility verifier.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use ums::generate::GenProfile;
use ums::milp::LpMode;
use ums::model::SchemeParams;
use ums::oracle::OracleLimits;
use ums::pipeline::{solve_instance, Preset, SolveOptions};
use ums::rational::{format_rat, parse_rat, to_f64};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A schedule: per machine, an ordered list of (job, start time).
#[pyclass(name = "Schedule", from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: ums::Schedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn from_json(raw: &str) -> PyResult<Self> {
        Ok(PySchedule { inner: ums::Schedule::from_json_str(raw).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    /// Number of scheduled jobs.
    fn job_count(&self) -> usize {
        self.inner.job_count()
    }

    /// (machine, job, start) triples with starts as "num/den" strings.
    fn assignments(&self) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        for entry in &self.inner.assignments {
            for js in &entry.jobs {
                out.push((entry.machine, js.job, format_rat(&js.start)));
            }
        }
        out
    }

    fn __repr__(&self) -> String {
        format!("Schedule(jobs={})", self.inner.job_count())
    }
}

/// A scheduling instance: jobs with sizes and resource demands, machines
/// with speeds, replenishment supplies, and the scheme parameters.
#[pyclass(name = "Instance", from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: ums::Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(raw: &str) -> PyResult<Self> {
        let inner = ums::Instance::from_json_str(raw).map_err(value_err)?;
        inner.validate().map_err(value_err)?;
        Ok(PyInstance { inner })
    }

    /// Deterministic random instance; profile is "easy" or "tight",
    /// rationals are "num/den" strings.
    #[staticmethod]
    #[pyo3(signature = (seed, jobs, machines, supplies, profile="easy", epsilon="1/1", psi="1/2", phi="2/1", rho=2))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        seed: u64,
        jobs: usize,
        machines: usize,
        supplies: usize,
        profile: &str,
        epsilon: &str,
        psi: &str,
        phi: &str,
        rho: u32,
    ) -> PyResult<Self> {
        let profile: GenProfile = profile.parse().map_err(value_err)?;
        let params = SchemeParams::new(
            parse_rat(epsilon).map_err(value_err)?,
            parse_rat(psi).map_err(value_err)?,
            parse_rat(phi).map_err(value_err)?,
            rho,
        );
        params.validate().map_err(value_err)?;
        Ok(PyInstance {
            inner: ums::generate::generate_instance(seed, jobs, machines, supplies, profile, params),
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn jobs(&self) -> usize {
        self.inner.jobs.len()
    }

    #[getter]
    fn machines(&self) -> usize {
        self.inner.machines.len()
    }

    #[getter]
    fn supplies(&self) -> usize {
        self.inner.supplies.len()
    }

    /// Runs the approximation scheme. Returns (schedule, report_json).
    /// preset: None | "paper" | "desk"; lp_mode: "exact" | "float".
    #[pyo3(signature = (preset=None, lp_mode="exact", threads=1, max_guesses=None, compare_exact=false, node_limit=200_000))]
    fn solve(
        &self,
        preset: Option<&str>,
        lp_mode: &str,
        threads: usize,
        max_guesses: Option<usize>,
        compare_exact: bool,
        node_limit: usize,
    ) -> PyResult<(PySchedule, String)> {
        let preset = match preset {
            None => None,
            Some("paper") => Some(Preset::Paper),
            Some("desk") => Some(Preset::Desk),
            Some(other) => return Err(value_err(format!("unknown preset {other:?}"))),
        };
        let lp_mode = match lp_mode {
            "exact" => LpMode::ExactRational,
            "float" => LpMode::Float,
            other => return Err(value_err(format!("unknown lp mode {other:?}"))),
        };
        let options = SolveOptions {
            preset,
            lp_mode,
            threads: threads.max(1),
            max_guesses,
            compare_exact,
            node_limit,
            ..SolveOptions::default()
        };
        let output = solve_instance(&self.inner, &options).map_err(runtime_err)?;
        let report = serde_json::to_string_pretty(&output.report).map_err(runtime_err)?;
        Ok((PySchedule { inner: output.schedule }, report))
    }

    /// Brute-force optimum for tiny instances. Returns (schedule, combined
    /// objective as float).
    #[pyo3(signature = (max_jobs=7, max_machines=3, max_supplies=3))]
    fn exact(
        &self,
        max_jobs: usize,
        max_machines: usize,
        max_supplies: usize,
    ) -> PyResult<(PySchedule, f64)> {
        let limits = OracleLimits { max_jobs, max_machines, max_supplies };
        let (schedule, objective) =
            ums::oracle::exact_optimum(&self.inner, &limits).map_err(value_err)?;
        Ok((PySchedule { inner: schedule }, to_f64(&objective.combined)))
    }

    /// Greedy baseline schedule.
    fn greedy(&self) -> PyResult<PySchedule> {
        Ok(PySchedule {
            inner: ums::oracle::greedy_baseline(&self.inner).map_err(value_err)?,
        })
    }

    /// Violation descriptions; an empty list means the schedule is feasible.
    fn verify(&self, schedule: &PySchedule) -> PyResult<Vec<String>> {
        let violations =
            ums::model::verify_schedule(&self.inner, &schedule.inner).map_err(value_err)?;
        Ok(violations.iter().map(|v| v.to_string()).collect())
    }

    /// Objective of a feasible schedule as (combined float, combined exact,
    /// makespan exact, norm-cost exact) with exact values as "num/den".
    fn evaluate(&self, schedule: &PySchedule) -> PyResult<(f64, String, String, String)> {
        let objective =
            ums::model::evaluate(&self.inner, &schedule.inner).map_err(value_err)?;
        Ok((
            to_f64(&objective.combined),
            format_rat(&objective.combined),
            format_rat(&objective.makespan),
            format_rat(&objective.norm_cost),
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(jobs={}, machines={}, supplies={})",
            self.inner.jobs.len(),
            self.inner.machines.len(),
            self.inner.supplies.len()
        )
    }
}

/// μ̃ for the given ε ("num/den").
#[pyfunction]
fn mu_tilde(epsilon: &str) -> PyResult<i64> {
    let eps = parse_rat(epsilon).map_err(value_err)?;
    let params = SchemeParams::new(eps, parse_rat("1/2").unwrap(), parse_rat("2/1").unwrap(), 2);
    params.validate().map_err(value_err)?;
    Ok(ums::normalize::mu_tilde(&params))
}

/// The end-to-end ratio bound (1+ε)^{6φ}·(1+6ε)^φ.
#[pyfunction]
#[pyo3(signature = (epsilon="1/1", phi="2/1"))]
fn theoretical_bound(epsilon: &str, phi: &str) -> PyResult<f64> {
    let params = SchemeParams::new(
        parse_rat(epsilon).map_err(value_err)?,
        parse_rat("1/2").unwrap(),
        parse_rat(phi).map_err(value_err)?,
        10,
    );
    params.validate().map_err(value_err)?;
    Ok(ums::cli::theoretical_bound(&params))
}

#[pymodule]
fn ums_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(mu_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_bound, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

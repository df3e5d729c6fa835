// SPDX-License-Identifier: Apache-2.0

//! Python bindings: parse, analyze both ways, compare, generate terms.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use schemeflow::analysis::{self, AnalysisConfig, AnalysisError, Truthiness};
use schemeflow::frontend::{extract_facts, parse_program, FrontendOptions, LabeledProgram};
use schemeflow::oracle::{self, OracleError};
use schemeflow::output;
use schemeflow::result::{AnalysisResult, RelationName};
use schemeflow::termgen::{self, GenSpec};

create_exception!(schemeflow, ParseError, PyValueError);
create_exception!(schemeflow, CeilingError, PyRuntimeError);

fn relation(name: &str) -> PyResult<RelationName> {
    RelationName::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown relation {name:?}")))
}

fn analysis_err(e: AnalysisError) -> PyErr {
    match e {
        AnalysisError::Ceiling { .. } => CeilingError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn oracle_err(e: OracleError) -> PyErr {
    match e {
        OracleError::Ceiling { .. } => CeilingError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A parsed, labeled program.
#[pyclass(name = "Program", module = "schemeflow", frozen)]
struct PyProgram {
    inner: LabeledProgram,
}

#[pymethods]
impl PyProgram {
    #[staticmethod]
    #[pyo3(signature = (text, allow_quote = false))]
    fn parse(text: &str, allow_quote: bool) -> PyResult<Self> {
        let opts = FrontendOptions {
            allow_quote,
            ..FrontendOptions::default()
        };
        parse_program(text, &opts)
            .map(|inner| PyProgram { inner })
            .map_err(|e| ParseError::new_err(e.to_string()))
    }

    /// Input relations as `{name: [[cell, ...], ...]}`.
    fn facts(&self) -> BTreeMap<&'static str, Vec<Vec<String>>> {
        extract_facts(&self.inner)
            .iter()
            .map(|(name, facts)| {
                let rows = facts
                    .iter()
                    .map(|f| f.iter().map(ToString::to_string).collect())
                    .collect();
                (name, rows)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("<Program with {} labels>", self.inner.len())
    }
}

#[pyclass(name = "Config", module = "schemeflow", frozen)]
struct PyConfig {
    inner: AnalysisConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (m = 0, widen_depth = Some(2), strict_appendix = false, truthiness = "both-branches", fact_ceiling = Some(schemeflow::DEFAULT_FACT_CEILING)))]
    fn new(
        m: usize,
        widen_depth: Option<usize>,
        strict_appendix: bool,
        truthiness: &str,
        fact_ceiling: Option<u64>,
    ) -> PyResult<Self> {
        let truthiness = match truthiness {
            "both-branches" => Truthiness::BothBranches,
            "appendix-exact" => Truthiness::AppendixExact,
            other => return Err(PyValueError::new_err(format!("unknown truthiness {other:?}"))),
        };
        Ok(PyConfig {
            inner: AnalysisConfig {
                m,
                widen_depth,
                strict_appendix,
                truthiness,
                fact_ceiling,
            },
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn widen_depth(&self) -> Option<usize> {
        self.inner.effective_widen_depth()
    }

    #[getter]
    fn truthiness(&self) -> &'static str {
        self.inner.effective_truthiness().as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(m={}, widen_depth={:?}, truthiness={:?})",
            self.inner.m,
            self.inner.effective_widen_depth(),
            self.truthiness()
        )
    }
}

/// Output relations as sorted, tab-separated rows of canonical terms.
#[pyclass(name = "Result", module = "schemeflow", frozen, eq)]
#[derive(PartialEq)]
struct PyResult_ {
    inner: AnalysisResult,
}

#[pymethods]
impl PyResult_ {
    #[staticmethod]
    fn relations() -> Vec<&'static str> {
        RelationName::ALL.iter().map(|r| r.as_str()).collect()
    }

    fn rows(&self, relation_name: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.rows(relation(relation_name)?).to_vec())
    }

    fn tuples(&self, relation_name: &str) -> PyResult<Vec<Vec<String>>> {
        let rel = relation(relation_name)?;
        Ok(self
            .inner
            .tuples(rel)
            .map(|t| t.into_iter().map(str::to_string).collect())
            .collect())
    }

    fn contains(&self, relation_name: &str, cells: Vec<String>) -> PyResult<bool> {
        let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
        Ok(self.inner.contains(relation(relation_name)?, &cells))
    }

    /// Values stored at an address such as `(VAddr x (Context))`.
    fn values_at(&self, vaddr: &str) -> Vec<String> {
        self.inner.values_at(vaddr).into_iter().map(str::to_string).collect()
    }

    fn counts(&self) -> BTreeMap<&'static str, usize> {
        RelationName::ALL
            .iter()
            .map(|r| (r.as_str(), self.inner.len(*r)))
            .collect()
    }

    fn to_json(&self) -> String {
        output::render_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        output::parse_json(text)
            .map(|inner| PyResult_ { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// The first row present on one side only, as `(relation, row, side)`.
    #[pyo3(signature = (other, flows = false))]
    fn first_divergence(&self, other: &PyResult_, flows: bool) -> Option<(String, String, &'static str)> {
        self.inner.first_divergence(&other.inner, flows).map(|d| {
            let side = if d.only_left { "left" } else { "right" };
            (d.relation.to_string(), d.row, side)
        })
    }

    fn __len__(&self) -> usize {
        self.inner.total()
    }
}

fn config_or_default(config: Option<&PyConfig>) -> AnalysisConfig {
    config.map(|c| c.inner).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (program, config = None))]
fn analyze(py: Python<'_>, program: &PyProgram, config: Option<&PyConfig>) -> PyResult<PyResult_> {
    let cfg = config_or_default(config);
    py.detach(|| analysis::analyze(&program.inner, &cfg))
        .map(|inner| PyResult_ { inner })
        .map_err(analysis_err)
}

#[pyfunction]
#[pyo3(signature = (program, config = None))]
fn run_oracle(py: Python<'_>, program: &PyProgram, config: Option<&PyConfig>) -> PyResult<PyResult_> {
    let cfg = config_or_default(config);
    py.detach(|| oracle::run_fixpoint(&program.inner, &cfg))
        .map(|inner| PyResult_ { inner })
        .map_err(oracle_err)
}

/// Runs both paths; `None` when they agree.
#[pyfunction]
#[pyo3(signature = (program, config = None, flows = false))]
fn diff(
    program: &PyProgram,
    config: Option<&PyConfig>,
    flows: bool,
) -> PyResult<Option<(String, String, &'static str)>> {
    let cfg = config_or_default(config);
    let a = analysis::analyze(&program.inner, &cfg).map_err(analysis_err)?;
    let o = oracle::run_fixpoint(&program.inner, &cfg).map_err(oracle_err)?;
    Ok(a.first_divergence(&o, flows).map(|d| {
        let side = if d.only_left { "analysis" } else { "oracle" };
        (d.relation.to_string(), d.row, side)
    }))
}

#[pyfunction]
#[pyo3(signature = (n, k = 1, padding = 0))]
fn gen_term(n: usize, k: usize, padding: usize) -> PyResult<String> {
    termgen::gen_mcfa_worst(&GenSpec::new(n, k, padding)).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn gen_vanhorn() -> String {
    termgen::gen_vanhorn()
}

#[pymodule(name = "schemeflow")]
fn schemeflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyResult_>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(gen_term, m)?)?;
    m.add_function(wrap_pyfunction!(gen_vanhorn, m)?)?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("CeilingError", m.py().get_type::<CeilingError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings for `specnorm`.
//!
//! Documents cross the boundary as JSON strings in the same schemas the
//! command-line tool reads and writes; exact rationals stay strings.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

use specnorm::construction::{verify_trace as verify_trace_core, ConstructionConfig, ConstructionState, Trace};
use specnorm::hom::{BaseDoc, HomDoc};
use specnorm::lattice::{FiniteLattice, LatticeDoc};
use specnorm::opminus::Term;
use specnorm::polyhedral::entails_basic;
use specnorm::rational::{parse_scalar, RationalVector};
use specnorm::FORMAT;

fn bad<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(bad)
}

/// A finite lattice loaded from a lattice document.
///
/// Only the order axioms are enforced on load, so non-distributive lattices
/// can be inspected.
#[pyclass(name = "Lattice", frozen)]
struct PyLattice {
    inner: Arc<FiniteLattice>,
}

#[pymethods]
impl PyLattice {
    #[new]
    fn new(doc: &str) -> PyResult<Self> {
        let d: LatticeDoc = parse(doc)?;
        Ok(PyLattice { inner: Arc::new(d.to_order().map_err(bad)?) })
    }

    #[staticmethod]
    fn chain(k: usize) -> Self {
        PyLattice { inner: Arc::new(FiniteLattice::chain(k)) }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn leq(&self, x: &str, y: &str) -> PyResult<bool> {
        Ok(self.inner.leq(self.index(x)?, self.index(y)?))
    }

    fn join(&self, x: &str, y: &str) -> PyResult<String> {
        Ok(self.inner.label(self.inner.join(self.index(x)?, self.index(y)?)).to_string())
    }

    fn meet(&self, x: &str, y: &str) -> PyResult<String> {
        Ok(self.inner.label(self.inner.meet(self.index(x)?, self.index(y)?)).to_string())
    }

    fn is_distributive(&self) -> bool {
        self.inner.check_distributive()
    }

    /// `None` when completely normal, otherwise a pair with no splitting pair.
    fn cn_counterexample(&self) -> Option<(String, String)> {
        self.inner.cn_counterexample().map(|(a, b)| (self.inner.label(a).to_string(), self.inner.label(b).to_string()))
    }

    fn is_completely_normal(&self) -> bool {
        self.inner.is_completely_normal()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_doc()).expect("lattice documents serialize")
    }

    fn __repr__(&self) -> String {
        format!("Lattice({} elements)", self.inner.len())
    }
}

impl PyLattice {
    fn index(&self, x: &str) -> PyResult<usize> {
        self.inner.index_of(x).map_err(bad)
    }
}

/// Decides `⋂_A ⟦a⟧ ⊆ ⋃_B ⟦b⟧`; returns `(holds, certificate_json)`.
#[pyfunction]
fn entail(a: &str, b: &str) -> PyResult<(bool, String)> {
    let a: Vec<RationalVector> = parse(a)?;
    let b: Vec<RationalVector> = parse(b)?;
    let res = entails_basic(&a, &b);
    Ok((res.holds, serde_json::to_string(&res.certificate).expect("certificates serialize")))
}

#[pyfunction]
fn canonicalize(term: &str) -> PyResult<String> {
    let t: Term = parse(term)?;
    let c = t.canonicalize().map_err(bad)?;
    Ok(serde_json::to_string(&c).expect("terms serialize"))
}

/// Term containment; returns `(holds, witness_json_or_None)`.
#[pyfunction]
fn leq(lhs: &str, rhs: &str) -> PyResult<(bool, Option<String>)> {
    let l: Term = parse(lhs)?;
    let r: Term = parse(rhs)?;
    let c = l.leq(&r).map_err(bad)?;
    Ok((c.holds, c.witness.map(|w| serde_json::to_string(&w).expect("vectors serialize"))))
}

/// Coherence of a hom document with an inline target.
#[pyfunction]
fn hom_coherent(doc: &str) -> PyResult<bool> {
    let d: HomDoc = parse(doc)?;
    match d.to_hom(None) {
        Ok(h) => Ok(h.is_coherent()),
        Err(specnorm::error::HomError::Incoherent(_)) => Ok(false),
        Err(e) => Err(bad(e)),
    }
}

/// Runs a construction and returns its trace as JSON lines.
#[pyfunction]
#[pyo3(signature = (lattice, stages = 200, seed = 0, lambda_cap = None, base = None))]
fn construct(lattice: &str, stages: usize, seed: u64, lambda_cap: Option<&str>, base: Option<&str>) -> PyResult<String> {
    let l = Arc::new(parse::<LatticeDoc>(lattice)?.to_lattice().map_err(bad)?);
    let mut config = ConstructionConfig { stages, seed, ..Default::default() };
    if let Some(cap) = lambda_cap {
        config.lambda_cap = parse_scalar(cap).map_err(bad)?;
    }
    let base = match base {
        Some(b) => parse::<BaseDoc>(b)?,
        None => BaseDoc::default(),
    }
    .to_base(&l)
    .map_err(bad)?;
    let mut st = ConstructionState::new(l, None, base, config).map_err(bad)?;
    st.run();
    Ok(st.trace().to_jsonl())
}

/// Re-checks a trace from scratch; returns the report as JSON.
#[pyfunction]
fn verify_trace(trace: &str) -> PyResult<String> {
    let t = Trace::from_jsonl(trace).map_err(PyValueError::new_err)?;
    let report = verify_trace_core(&t);
    let mut v = serde_json::to_value(&report).expect("reports serialize");
    v["ok"] = json!(report.ok());
    v["format"] = json!(FORMAT);
    Ok(v.to_string())
}

#[pymodule]
#[pyo3(name = "specnorm")]
fn specnorm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FORMAT", FORMAT)?;
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(entail, m)?)?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(leq, m)?)?;
    m.add_function(wrap_pyfunction!(hom_coherent, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(verify_trace, m)?)?;
    Ok(())
}

//! Python bindings. The module is named `credal`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use credal_core::io::{EventFile, Method, NetworkFile, Num, QueryFile, RuleFile, TargetFile};
use credal_core::joint_lp::joint_extreme_points;
use credal_core::network::CredalNetwork;
use credal_core::query::{run, Answer, Query};
use credal_core::Error;

create_exception!(credal, CredalError, PyException);
create_exception!(credal, InputError, CredalError);
create_exception!(credal, CapabilityError, CredalError);
create_exception!(credal, HypothesisError, CredalError);
create_exception!(credal, ModelError, CredalError);
create_exception!(credal, ConvergenceError, CredalError);
create_exception!(credal, NotComputableError, CredalError);

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Input(_) => InputError::new_err(msg),
        Error::Capability(_) => CapabilityError::new_err(msg),
        Error::Hypothesis(_) => HypothesisError::new_err(msg),
        Error::Model(_) => ModelError::new_err(msg),
        Error::Convergence(_) => ConvergenceError::new_err(msg),
        Error::NotComputable(_) => NotComputableError::new_err(msg),
    }
}

fn parse_rule(rule: Option<&str>) -> PyResult<Option<RuleFile>> {
    Ok(match rule {
        None => None,
        Some("natural") => Some(RuleFile::Natural),
        Some("regular") => Some(RuleFile::Regular),
        Some("unconditional") => Some(RuleFile::Unconditional),
        Some(other) => return Err(InputError::new_err(format!("unknown rule {other:?}"))),
    })
}

fn parse_method(method: &str) -> PyResult<Method> {
    Ok(match method {
        "auto" => Method::Auto,
        "lp" => Method::Lp,
        "decompose" => Method::Decompose,
        "chain" => Method::Chain,
        "hmm" => Method::Hmm,
        other => return Err(InputError::new_err(format!("unknown method {other:?}"))),
    })
}

/// A credal network with epistemically irrelevant local models.
#[pyclass(name = "Network", module = "credal", frozen)]
pub struct PyNetwork {
    net: CredalNetwork,
}

impl PyNetwork {
    fn answer(&self, q: QueryFile) -> PyResult<Answer> {
        let query = Query::from_file(&self.net, &q).map_err(py_err)?;
        run(&self.net, &query).map_err(py_err)
    }

    fn node_set(&self, names: Vec<String>) -> PyResult<credal_core::graph::NodeSet> {
        self.net.dag().ids(&names).map_err(py_err)
    }
}

fn answer_dict<'py>(py: Python<'py>, a: &Answer) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lower", a.lower.value)?;
    d.set_item("upper", a.upper.value)?;
    d.set_item("rule", a.rule)?;
    d.set_item("method", a.method)?;
    for (side, s) in [("lower", &a.lower), ("upper", &a.upper)] {
        if let Some(b) = &s.bracket {
            d.set_item(format!("{side}_bracket"), b.kind.label())?;
            d.set_item(format!("{side}_iterations"), b.iterations)?;
            d.set_item(format!("{side}_width"), b.width)?;
        }
    }
    Ok(d)
}

#[pymethods]
impl PyNetwork {
    /// Parses a network from its JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let net = NetworkFile::parse(text).and_then(|f| f.to_network()).map_err(py_err)?;
        Ok(PyNetwork { net })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::new_err(format!("{path}: {e}")))?;
        Self::from_json(&text)
    }

    /// The canonical JSON text of the network.
    fn to_json(&self) -> String {
        NetworkFile::from_network(&self.net).to_canonical()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.net.dag().names().to_vec()
    }

    fn states(&self, name: &str) -> PyResult<Vec<String>> {
        let s = self.net.dag().id(name).map_err(py_err)?;
        Ok(self.net.states(s).to_vec())
    }

    fn __len__(&self) -> usize {
        self.net.len()
    }

    fn __repr__(&self) -> String {
        format!("Network({})", self.net.dag().names().join(", "))
    }

    /// Runs a query given as JSON text, in the same format as the CLI.
    fn query<'py>(&self, py: Python<'py>, query_json: &str) -> PyResult<Bound<'py, PyDict>> {
        let q = QueryFile::parse(query_json).map_err(py_err)?;
        answer_dict(py, &self.answer(q)?)
    }

    /// Lower and upper expectation of the function given by `table` over
    /// `scope`, optionally conditional on an assignment of states to nodes.
    #[pyo3(signature = (scope, table, evidence=None, rule=None, method="auto", tolerance=None))]
    #[allow(clippy::too_many_arguments)]
    fn expectation<'py>(
        &self,
        py: Python<'py>,
        scope: Vec<String>,
        table: Vec<f64>,
        evidence: Option<BTreeMap<String, String>>,
        rule: Option<&str>,
        method: &str,
        tolerance: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let target = TargetFile::Table { scope, table: table.into_iter().map(Num::from_f64).collect() };
        let q = QueryFile {
            target,
            evidence: evidence.map(|assignment| EventFile::Assignment { assignment }),
            rule: parse_rule(rule)?,
            method: parse_method(method)?,
            tolerance: tolerance.map(Num::from_f64),
        };
        answer_dict(py, &self.answer(q)?)
    }

    /// Lower and upper probability of the event that the nodes in `event`
    /// take the given states.
    #[pyo3(signature = (event, evidence=None, rule=None, method="auto"))]
    fn probability(
        &self,
        event: BTreeMap<String, String>,
        evidence: Option<BTreeMap<String, String>>,
        rule: Option<&str>,
        method: &str,
    ) -> PyResult<(f64, f64)> {
        let q = QueryFile {
            target: TargetFile::Indicator { indicator: EventFile::Assignment { assignment: event } },
            evidence: evidence.map(|assignment| EventFile::Assignment { assignment }),
            rule: parse_rule(rule)?,
            method: parse_method(method)?,
            tolerance: None,
        };
        let a = self.answer(q)?;
        Ok((a.lower.value, a.upper.value))
    }

    fn ad_separated(&self, i: Vec<String>, s: Vec<String>, c: Vec<String>) -> PyResult<bool> {
        let (i, s, c) = (self.node_set(i)?, self.node_set(s)?, self.node_set(c)?);
        Ok(self.net.dag().ad_separated(&i, &s, &c))
    }

    fn d_separated(&self, i: Vec<String>, s: Vec<String>, c: Vec<String>) -> PyResult<bool> {
        let (i, s, c) = (self.node_set(i)?, self.node_set(s)?, self.node_set(c)?);
        Ok(self.net.dag().d_separated(&i, &s, &c))
    }

    /// Extreme points of the global credal set, as mass functions over
    /// joint states with the last node varying fastest.
    fn extreme_points(&self) -> PyResult<Vec<Vec<f64>>> {
        joint_extreme_points(&self.net).map_err(py_err)
    }
}

#[pymodule]
pub fn credal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyNetwork>()?;
    m.add("CredalError", py.get_type::<CredalError>())?;
    m.add("InputError", py.get_type::<InputError>())?;
    m.add("CapabilityError", py.get_type::<CapabilityError>())?;
    m.add("HypothesisError", py.get_type::<HypothesisError>())?;
    m.add("ModelError", py.get_type::<ModelError>())?;
    m.add("ConvergenceError", py.get_type::<ConvergenceError>())?;
    m.add("NotComputableError", py.get_type::<NotComputableError>())?;
    Ok(())
}

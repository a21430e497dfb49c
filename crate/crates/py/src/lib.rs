//! Python bindings: a thin string-in/string-out JSON layer over the
//! library's document formats, mirroring the command-line pipeline —
//! relationship generation, impact analysis, workflow derivation,
//! build-time checking and scenario simulation.
//!
//! Invalid documents or unknown ids raise `ValueError`; scenario protocol
//! violations raise `RuntimeError`.

use changeflow::bdr::CandidateMatrix;
use changeflow::csw::CswDocument;
use changeflow::ingest::SCHEMA_VERSION;
use changeflow::model::{ProjectModel, Violation};
use changeflow::store::{replay_scenario, ReplayError};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_model(text: &str) -> PyResult<ProjectModel> {
    changeflow::ingest::parse_model(text).map_err(value_error)
}

fn parse_csws(text: &str) -> PyResult<CswDocument> {
    changeflow::csw::parse_csws(text).map_err(value_error)
}

fn load_matrix(matrix_json: Option<&str>) -> PyResult<CandidateMatrix> {
    match matrix_json {
        None => Ok(CandidateMatrix::default()),
        Some(text) => changeflow::bdr::parse_matrix(text).map_err(value_error),
    }
}

/// The schema version every document format carries.
#[pyfunction]
fn schema_version() -> &'static str {
    SCHEMA_VERSION
}

/// Generate basic dependency relationships; returns the model document
/// augmented with them. `matrix_json` optionally restricts which
/// relationship kinds may hold between element kinds.
#[pyfunction]
#[pyo3(signature = (model_json, matrix_json=None))]
fn generate_bdrs(model_json: &str, matrix_json: Option<&str>) -> PyResult<String> {
    let mut model = parse_model(model_json)?;
    model.bdrs = changeflow::bdr::generate_bdrs(&model, &load_matrix(matrix_json)?)
        .map_err(value_error)?;
    Ok(changeflow::ingest::serialize_model(&model))
}

/// The artifacts potentially impacted by changing `root`, as a graph
/// document.
#[pyfunction]
fn impact(model_json: &str, root: &str) -> PyResult<String> {
    let model = parse_model(model_json)?;
    let graph = changeflow::impact::dependency_graph(&model, root).map_err(value_error)?;
    Ok(changeflow::impact::serialize_graph(&graph))
}

/// The same graph rendered as DOT text.
#[pyfunction]
fn impact_dot(model_json: &str, root: &str) -> PyResult<String> {
    let model = parse_model(model_json)?;
    let graph = changeflow::impact::dependency_graph(&model, root).map_err(value_error)?;
    Ok(changeflow::impact::export_dot(&graph))
}

/// Derive a change support workflow for `root`; returns a workflow
/// document holding it. `change_request` defaults to `cr-<root>`.
#[pyfunction]
#[pyo3(signature = (model_json, root, change_request=None))]
fn generate_workflow(
    model_json: &str,
    root: &str,
    change_request: Option<&str>,
) -> PyResult<String> {
    let model = parse_model(model_json)?;
    let change_request =
        change_request.map_or_else(|| format!("cr-{root}"), str::to_string);
    let csw_id = format!("{change_request}.g1.1");
    let csw = changeflow::csw::generate_csw(&model, root, &csw_id, &change_request)
        .map_err(value_error)?;
    let doc = CswDocument { schema_version: SCHEMA_VERSION.to_string(), csws: vec![csw] };
    Ok(changeflow::csw::serialize_csws(&doc))
}

/// Split a composite activity of `workflow_id` into branch workflows, one
/// per chosen root. Returns the whole document with the parent updated and
/// the branches appended.
#[pyfunction]
fn expand_composite(
    model_json: &str,
    csws_json: &str,
    workflow_id: &str,
    activity_id: &str,
    roots: Vec<String>,
) -> PyResult<String> {
    let model = parse_model(model_json)?;
    let mut doc = parse_csws(csws_json)?;
    let parent = doc
        .csws
        .iter_mut()
        .find(|c| c.id == workflow_id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown workflow {workflow_id:?}")))?;
    let branches = changeflow::csw::expand_composite(parent, activity_id, &model, &roots)
        .map_err(value_error)?;
    doc.csws.extend(branches);
    Ok(changeflow::csw::serialize_csws(&doc))
}

/// Check the named workflow against the other workflows of the document;
/// returns a JSON array of shared-artifact warnings.
#[pyfunction]
fn buildtime_warnings(csws_json: &str, workflow_id: &str) -> PyResult<String> {
    let doc = parse_csws(csws_json)?;
    let new_csw = doc
        .csws
        .iter()
        .find(|c| c.id == workflow_id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown workflow {workflow_id:?}")))?;
    let warnings = changeflow::store::buildtime_check(new_csw, &doc.csws);
    let mut text = serde_json::to_string_pretty(&warnings).map_err(value_error)?;
    text.push('\n');
    Ok(text)
}

/// Structural problems of every workflow in the document, as a JSON array
/// of violation messages; empty when all are well-formed.
#[pyfunction]
fn validate_workflows(csws_json: &str) -> PyResult<String> {
    let doc = parse_csws(csws_json)?;
    let messages: Vec<String> = doc
        .csws
        .iter()
        .flat_map(|csw| csw.validate())
        .map(|violation: Violation| violation.to_string())
        .collect();
    let mut text = serde_json::to_string_pretty(&messages).map_err(value_error)?;
    text.push('\n');
    Ok(text)
}

/// Replay a scenario over the document's workflows and run detection;
/// returns the simulation report (events plus warnings).
#[pyfunction]
fn simulate(model_json: &str, csws_json: &str, scenario_json: &str) -> PyResult<String> {
    let model = parse_model(model_json)?;
    let doc = parse_csws(csws_json)?;
    let scenario = changeflow::ingest::parse_scenario(scenario_json).map_err(value_error)?;
    let store = replay_scenario(&model, &doc.csws, &scenario).map_err(|err| match err {
        ReplayError::Setup(_) => value_error(err),
        ReplayError::Event { .. } => PyRuntimeError::new_err(err.to_string()),
    })?;
    let report = changeflow::detect::simulate_report(store.log(), &model);
    Ok(changeflow::detect::serialize_report(&report))
}

#[pymodule]
fn changeflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(schema_version, m)?)?;
    m.add_function(wrap_pyfunction!(generate_bdrs, m)?)?;
    m.add_function(wrap_pyfunction!(impact, m)?)?;
    m.add_function(wrap_pyfunction!(impact_dot, m)?)?;
    m.add_function(wrap_pyfunction!(generate_workflow, m)?)?;
    m.add_function(wrap_pyfunction!(expand_composite, m)?)?;
    m.add_function(wrap_pyfunction!(buildtime_warnings, m)?)?;
    m.add_function(wrap_pyfunction!(validate_workflows, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

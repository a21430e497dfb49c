//! Reading and writing the on-disk documents: project models and execution
//! scenarios.
//!
//! Both formats are JSON with camelCase keys and a required `schemaVersion`
//! (currently `"1"`). Parsing is total: any input yields either a fully
//! validated value or an error — never a partially usable document. Model
//! validation collects *every* violation; scenario validation stops at the
//! first protocol-level problem (bad time order, undeclared activity) since
//! later events are meaningless once the stream is broken.
//!
//! Serialization is canonical: collections are emitted in a fixed order so
//! that parse → serialize is a projection (serializing twice is
//! byte-identical).

use crate::model::{ProjectModel, Violation};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Schema version accepted and emitted by every document reader/writer.
pub const SCHEMA_VERSION: &str = "1";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Failure to read a model (or other structural) document.
#[derive(Debug, Error)]
pub enum DocumentError {
    /// The text is not well-formed JSON.
    #[error("syntax error: {0}")]
    Syntax(String),
    /// The JSON does not match the document structure (unknown fields,
    /// wrong types, unsupported schema version).
    #[error("schema error: {0}")]
    Schema(String),
    /// The document parsed but breaks semantic rules; every violation is
    /// listed with a path-like locator.
    #[error("invalid document:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn classify_json_error(err: serde_json::Error) -> DocumentError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Syntax | Category::Eof => DocumentError::Syntax(err.to_string()),
        _ => DocumentError::Schema(err.to_string()),
    }
}

pub(crate) fn check_schema_version(found: &str) -> Result<(), DocumentError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(DocumentError::Schema(format!(
            "unsupported schemaVersion {found:?}, expected {SCHEMA_VERSION:?}"
        )))
    }
}

/// Failure to read a scenario document.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    /// Event times must be finite, positive and strictly increasing.
    #[error("events[{index}]: time {time} is not after the previous event")]
    NonMonotonicTime { index: usize, time: f64 },
    /// An event names a workflow/activity pair the scenario never declared.
    #[error("events[{index}]: undeclared activity {workflow:?}/{activity:?}")]
    UnknownActivity { index: usize, workflow: String, activity: String },
    /// A declaration-level problem (duplicate ids, read/write overlap, ...).
    #[error("{0}")]
    Declaration(String),
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ModelFile {
    schema_version: String,
    #[serde(default)]
    phases: Vec<crate::model::Phase>,
    #[serde(default)]
    diagrams: Vec<crate::model::Diagram>,
    #[serde(default)]
    elements: Vec<crate::model::ModelElement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    intra_deps: Vec<crate::model::IntraDependency>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bdrs: Vec<crate::model::Bdr>,
}

/// Parse and validate a model document.
///
/// Returns a model whose collections are in canonical order, or an error:
/// [`DocumentError::Syntax`] for malformed JSON, [`DocumentError::Schema`]
/// for structural mismatches, [`DocumentError::Invalid`] with the complete
/// violation list otherwise.
pub fn parse_model(text: &str) -> Result<ProjectModel, DocumentError> {
    let file: ModelFile = serde_json::from_str(text).map_err(classify_json_error)?;
    check_schema_version(&file.schema_version)?;
    let mut model = ProjectModel {
        phases: file.phases,
        diagrams: file.diagrams,
        elements: file.elements,
        intra_deps: file.intra_deps,
        bdrs: file.bdrs,
    };
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(DocumentError::Invalid(violations));
    }
    model.canonicalize();
    Ok(model)
}

/// Serialize a model to the canonical document text (sorted collections,
/// pretty-printed, trailing newline). `parse_model(serialize_model(m))`
/// reproduces `m` up to canonical ordering, and serializing the reparsed
/// model is byte-identical.
#[must_use]
pub fn serialize_model(model: &ProjectModel) -> String {
    let mut canonical = model.clone();
    canonical.canonicalize();
    let file = ModelFile {
        schema_version: SCHEMA_VERSION.to_string(),
        phases: canonical.phases,
        diagrams: canonical.diagrams,
        elements: canonical.elements,
        intra_deps: canonical.intra_deps,
        bdrs: canonical.bdrs,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Scenario documents
// ---------------------------------------------------------------------------

/// What an execution event does with its artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventAction {
    CheckOut,
    CheckIn,
}

impl fmt::Display for EventAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventAction::CheckOut => f.write_str("checkOut"),
            EventAction::CheckIn => f.write_str("checkIn"),
        }
    }
}

/// Per-activity declaration: which artifacts the activity will read, and
/// optionally who works on it. `writes`, when present, must match the write
/// set of the workflow the scenario is replayed against (it is documentation
/// for standalone scenarios, not an override).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ActivityDecl {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reads: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub writes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<String>,
}

/// Declares one workflow taking part in the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WorkflowDecl {
    pub id: String,
    pub activities: Vec<ActivityDecl>,
}

/// One timed check-out or check-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EventDecl {
    pub time: f64,
    pub workflow: String,
    pub activity: String,
    pub action: EventAction,
    pub artifact: String,
}

/// A validated scenario: workflow/activity declarations plus a strictly
/// time-ordered event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: String,
    pub workflows: Vec<WorkflowDecl>,
    pub events: Vec<EventDecl>,
}

impl ScenarioDocument {
    /// Look up a declared activity.
    #[must_use]
    pub fn activity_decl(&self, workflow: &str, activity: &str) -> Option<&ActivityDecl> {
        self.workflows
            .iter()
            .find(|w| w.id == workflow)?
            .activities
            .iter()
            .find(|a| a.id == activity)
    }
}

/// Parse and validate a scenario document.
///
/// Checks: schema version, unique workflow/activity ids, disjoint per-activity
/// read and write declarations, and for every event a declared activity and a
/// finite, positive, strictly increasing timestamp (equal timestamps are
/// rejected — the store needs a total order on events).
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof => ScenarioError::Syntax(e.to_string()),
            _ => ScenarioError::Schema(e.to_string()),
        }
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Schema(format!(
            "unsupported schemaVersion {:?}, expected {SCHEMA_VERSION:?}",
            doc.schema_version
        )));
    }

    for (wi, w) in doc.workflows.iter().enumerate() {
        if doc.workflows[..wi].iter().any(|q| q.id == w.id) {
            return Err(ScenarioError::Declaration(format!(
                "workflows[{wi}]: duplicate workflow id {:?}",
                w.id
            )));
        }
        for (ai, a) in w.activities.iter().enumerate() {
            if w.activities[..ai].iter().any(|q| q.id == a.id) {
                return Err(ScenarioError::Declaration(format!(
                    "workflows[{wi}].activities[{ai}]: duplicate activity id {:?}",
                    a.id
                )));
            }
            if let Some(writes) = &a.writes {
                if let Some(shared) = a.reads.iter().find(|r| writes.contains(r)) {
                    return Err(ScenarioError::Declaration(format!(
                        "workflows[{wi}].activities[{ai}]: artifact {shared:?} declared in both reads and writes"
                    )));
                }
            }
        }
    }

    let mut last = 0.0_f64;
    for (i, e) in doc.events.iter().enumerate() {
        if !e.time.is_finite() || e.time <= last {
            return Err(ScenarioError::NonMonotonicTime { index: i, time: e.time });
        }
        last = e.time;
        if doc.activity_decl(&e.workflow, &e.activity).is_none() {
            return Err(ScenarioError::UnknownActivity {
                index: i,
                workflow: e.workflow.clone(),
                activity: e.activity.clone(),
            });
        }
    }
    Ok(doc)
}

/// Serialize a scenario to canonical document text.
#[must_use]
pub fn serialize_scenario(scenario: &ScenarioDocument) -> String {
    let mut out =
        serde_json::to_string_pretty(scenario).expect("scenario serialization cannot fail");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

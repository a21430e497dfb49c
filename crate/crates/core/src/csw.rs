//! Change support workflows: the workflow structure itself and its
//! generation from a dependency graph — grouping, root split, ordering
//! arcs, composite activities, graded sub-workflows and cross-grade
//! pipeline constraints.
//!
//! # Design
//!
//! - Grouping collapses Copy/InformationSharing-connected artifacts into
//!   one activity: such artifacts mirror the same information and are best
//!   changed by one worker in one step. Concept edges become ordering arcs
//!   *between* activities instead, because a concept and its refinement
//!   live in different phases and are changed in phase order.
//! - Since Copy and InformationSharing only relate same-phase artifacts,
//!   every group is phase-homogeneous and Concept arcs always point from
//!   an earlier-phase activity to a later-phase one — generated arc sets
//!   are DAGs by construction (checked anyway).
//! - Activities are numbered `<cswId>.<n>` from 1; branch workflows carved
//!   out of a composite activity are `<activityId>.<k>`, so an id encodes
//!   its full provenance path.
//! - Read sets are empty at generation time. Which artifacts an activity
//!   consults is declared per scenario at execution time; the write set is
//!   the planned change itself and never overlaps the read set.

use crate::impact::{dependency_graph, DependencyGraph, EdgeKind, UnknownRootError};
use crate::ingest::{classify_json_error, DocumentError};
use crate::model::{BdrKind, EntityId, ProjectModel, Violation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type CswId = String;
pub type ActivityId = String;
pub type WorkerId = String;

// ---------------------------------------------------------------------------
// Workflow structure
// ---------------------------------------------------------------------------

/// Start/finish times of an activity; `None` means not yet decided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TimeInterval {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish: Option<f64>,
}

/// One unit of change work: the artifacts it will modify, the artifacts it
/// consults, and its execution bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Activity {
    pub id: ActivityId,
    pub write_set: BTreeSet<EntityId>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub read_set: BTreeSet<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<WorkerId>,
    #[serde(default, skip_serializing_if = "interval_is_undecided")]
    pub interval: TimeInterval,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub composite: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub child_workflows: Vec<CswId>,
}

fn interval_is_undecided(interval: &TimeInterval) -> bool {
    interval.start.is_none() && interval.finish.is_none()
}

/// Workflow lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CswState {
    Planning,
    Executing,
    Finished,
}

/// A change support workflow: activities, ordering arcs, the artifact set
/// they cover, and lifecycle metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Csw {
    pub id: CswId,
    pub change_request_id: String,
    pub root_artifact: EntityId,
    pub grade: u32,
    pub state: CswState,
    pub activities: Vec<Activity>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub arcs: BTreeSet<(ActivityId, ActivityId)>,
    pub artifacts: BTreeSet<EntityId>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub workers: BTreeSet<WorkerId>,
}

impl Csw {
    /// Find an activity by id.
    #[must_use]
    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }

    /// The union of all activities' write sets.
    #[must_use]
    pub fn written_artifacts(&self) -> BTreeSet<EntityId> {
        self.activities.iter().flat_map(|a| a.write_set.iter().cloned()).collect()
    }

    /// Do the arcs form a DAG over the activity ids?
    #[must_use]
    pub fn arcs_form_dag(&self) -> bool {
        // Kahn's algorithm over the activity ids.
        let mut indegree: BTreeMap<&str, usize> =
            self.activities.iter().map(|a| (a.id.as_str(), 0)).collect();
        for (_, to) in &self.arcs {
            match indegree.get_mut(to.as_str()) {
                Some(d) => *d += 1,
                None => return false,
            }
        }
        let mut ready: Vec<&str> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut removed = 0;
        while let Some(node) = ready.pop() {
            removed += 1;
            for (from, to) in &self.arcs {
                if from == node {
                    let d = indegree.get_mut(to.as_str()).expect("checked above");
                    *d -= 1;
                    if *d == 0 {
                        ready.push(to);
                    }
                }
            }
        }
        removed == self.activities.len()
    }

    /// Structural validation; every problem found, not just the first.
    #[must_use]
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |path: String, message: String| out.push(Violation { path, message });
        let base = format!("csw {:?}", self.id);

        if self.grade == 0 {
            push(base.clone(), "grade must be at least 1".into());
        }
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        let mut workers: BTreeSet<&str> = BTreeSet::new();
        let mut covered: BTreeSet<&str> = BTreeSet::new();
        for activity in &self.activities {
            let path = format!("{base}, activity {:?}", activity.id);
            if !ids.insert(&activity.id) {
                push(path.clone(), "duplicate activity id".into());
            }
            for shared in activity.write_set.intersection(&activity.read_set) {
                push(path.clone(), format!("artifact {shared:?} is both written and read"));
            }
            if activity.write_set.is_empty() {
                push(path.clone(), "write set is empty".into());
            }
            if let TimeInterval { start: Some(s), finish: Some(f) } = activity.interval {
                if s > f {
                    push(path.clone(), format!("interval start {s} is after finish {f}"));
                }
            }
            if let Some(worker) = &activity.worker {
                workers.insert(worker);
            }
            if !activity.composite && !activity.child_workflows.is_empty() {
                push(path.clone(), "child workflows on a non-composite activity".into());
            }
            covered.extend(activity.write_set.iter().map(String::as_str));
            covered.extend(activity.read_set.iter().map(String::as_str));
        }
        for (from, to) in &self.arcs {
            if !ids.contains(from.as_str()) || !ids.contains(to.as_str()) {
                push(base.clone(), format!("arc ({from:?}, {to:?}) references unknown activity"));
            }
            if from == to {
                push(base.clone(), format!("arc ({from:?}, {to:?}) is a self-loop"));
            }
        }
        if !self.arcs_form_dag() {
            push(base.clone(), "arcs contain a cycle".into());
        }
        if self.artifacts.iter().map(String::as_str).collect::<BTreeSet<_>>() != covered {
            push(
                base.clone(),
                "artifact set differs from the union of activity read/write sets".into(),
            );
        }
        if self.workers.iter().map(String::as_str).collect::<BTreeSet<_>>() != workers {
            push(base.clone(), "worker set differs from the assigned activity workers".into());
        }
        if !self.artifacts.contains(&self.root_artifact) {
            push(base, format!("root artifact {:?} is not covered", self.root_artifact));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Grouping and generation
// ---------------------------------------------------------------------------

/// Partition the graph's vertices into groups connected by Copy or
/// InformationSharing edges (undirected view). Groups come back sorted by
/// their smallest member; every vertex is in exactly one group.
#[must_use]
pub fn group_artifacts(
    graph: &DependencyGraph,
    _model: &ProjectModel,
) -> Vec<BTreeSet<EntityId>> {
    let mut neighbours: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for edge in &graph.edges {
        if matches!(
            edge.kind,
            EdgeKind::Bdr(BdrKind::Copy) | EdgeKind::Bdr(BdrKind::InformationSharing)
        ) {
            neighbours.entry(edge.source.as_str()).or_default().push(edge.target.as_str());
            neighbours.entry(edge.target.as_str()).or_default().push(edge.source.as_str());
        }
    }
    let mut remaining: BTreeSet<&str> = graph.vertices.iter().map(String::as_str).collect();
    let mut groups = Vec::new();
    while let Some(seed) = remaining.iter().next().copied() {
        let mut group: BTreeSet<EntityId> = BTreeSet::new();
        let mut stack = vec![seed];
        remaining.remove(seed);
        while let Some(node) = stack.pop() {
            group.insert(node.to_string());
            for next in neighbours.get(node).into_iter().flatten() {
                if remaining.remove(*next) {
                    stack.push(next);
                }
            }
        }
        groups.push(group);
    }
    groups
}

/// Generate the main (grade-1) workflow for a change rooted at `root`.
///
/// The root's group is split so the root is changed first and alone
/// (activity 1) with the rest of its group following (activity 2, when
/// non-empty); every other group becomes one activity, ordered by smallest
/// member. Concept edges become arcs from the activity holding the edge's
/// target to the activity holding its source. An activity is composite
/// when one of its artifacts is a whole that exists-together with parts
/// left outside the workflow.
pub fn generate_csw(
    model: &ProjectModel,
    root: &str,
    csw_id: &str,
    change_request_id: &str,
) -> Result<Csw, UnknownRootError> {
    let graph = dependency_graph(model, root)?;
    let groups = group_artifacts(&graph, model);

    // Root split first, then the other groups in canonical order.
    let mut write_sets: Vec<BTreeSet<EntityId>> = Vec::new();
    write_sets.push([root.to_string()].into());
    let root_group = groups
        .iter()
        .find(|g| g.contains(root))
        .expect("grouping covers every vertex");
    let mut remainder = root_group.clone();
    remainder.remove(root);
    let root_split = !remainder.is_empty();
    if root_split {
        write_sets.push(remainder);
    }
    for group in &groups {
        if !group.contains(root) {
            write_sets.push(group.clone());
        }
    }

    let activities: Vec<Activity> = write_sets
        .into_iter()
        .enumerate()
        .map(|(i, write_set)| Activity {
            id: format!("{csw_id}.{}", i + 1),
            write_set,
            read_set: BTreeSet::new(),
            worker: None,
            interval: TimeInterval::default(),
            composite: false,
            child_workflows: Vec::new(),
        })
        .collect();

    let activity_of = |artifact: &str| -> Option<&str> {
        activities
            .iter()
            .find(|a| a.write_set.contains(artifact))
            .map(|a| a.id.as_str())
    };

    let mut arcs: BTreeSet<(ActivityId, ActivityId)> = BTreeSet::new();
    for edge in &graph.edges {
        if edge.kind != EdgeKind::Bdr(BdrKind::Concept) {
            continue;
        }
        if let (Some(from), Some(to)) = (activity_of(&edge.target), activity_of(&edge.source)) {
            if from != to {
                arcs.insert((from.to_string(), to.to_string()));
            }
        }
    }
    if root_split {
        arcs.insert((activities[0].id.clone(), activities[1].id.clone()));
    }

    let artifacts: BTreeSet<EntityId> = graph.vertices.clone();
    let mut csw = Csw {
        id: csw_id.to_string(),
        change_request_id: change_request_id.to_string(),
        root_artifact: root.to_string(),
        grade: 1,
        state: CswState::Planning,
        activities,
        arcs,
        artifacts,
        workers: BTreeSet::new(),
    };
    mark_composites(&mut csw, model);
    debug_assert!(csw.validate().is_empty(), "{:?}", csw.validate());
    Ok(csw)
}

/// Set each activity's composite flag: some written artifact is the target
/// of an ExistTogether relationship whose source lies outside the
/// workflow's artifact set.
fn mark_composites(csw: &mut Csw, model: &ProjectModel) {
    let artifacts = csw.artifacts.clone();
    for activity in &mut csw.activities {
        activity.composite = model.bdrs.iter().any(|bdr| {
            bdr.kind == BdrKind::ExistTogether
                && activity.write_set.contains(&bdr.target)
                && !artifacts.contains(&bdr.source)
        });
    }
}

// ---------------------------------------------------------------------------
// Composite expansion
// ---------------------------------------------------------------------------

/// Why a composite expansion was refused.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("workflow has no activity {id:?}")]
    UnknownActivity { id: String },
    #[error("activity {id:?} is not composite")]
    NotComposite { id: String },
    #[error(
        "artifact {root:?} is not an exists-together part of anything \
         activity {activity:?} writes"
    )]
    InvalidRoot { activity: String, root: String },
}

/// Carve branch workflows out of a composite activity, one per chosen
/// root. Each chosen root must be the source of an ExistTogether
/// relationship whose target the activity writes. Branch ids extend the
/// activity id (`W.2` → `W.2.1`, `W.2.2`, …) and are recorded in the
/// activity's child list; branches are ordinary grade-1 workflows of the
/// same change request.
pub fn expand_composite(
    parent: &mut Csw,
    activity_id: &str,
    model: &ProjectModel,
    chosen_roots: &[String],
) -> Result<Vec<Csw>, ExpandError> {
    let position = parent
        .activities
        .iter()
        .position(|a| a.id == activity_id)
        .ok_or_else(|| ExpandError::UnknownActivity { id: activity_id.to_string() })?;
    if !parent.activities[position].composite {
        return Err(ExpandError::NotComposite { id: activity_id.to_string() });
    }
    for root in chosen_roots {
        let witnessed = model.bdrs.iter().any(|bdr| {
            bdr.kind == BdrKind::ExistTogether
                && bdr.source == *root
                && parent.activities[position].write_set.contains(&bdr.target)
        });
        if !witnessed {
            return Err(ExpandError::InvalidRoot {
                activity: activity_id.to_string(),
                root: root.clone(),
            });
        }
    }

    let mut branches = Vec::with_capacity(chosen_roots.len());
    for (i, root) in chosen_roots.iter().enumerate() {
        let branch_index = parent.activities[position].child_workflows.len() + i + 1;
        let branch_id = format!("{activity_id}.{branch_index}");
        let branch = generate_csw(model, root, &branch_id, &parent.change_request_id)
            .expect("chosen root is an artifact of the model");
        branches.push(branch);
    }
    parent.activities[position]
        .child_workflows
        .extend(branches.iter().map(|b| b.id.clone()));
    Ok(branches)
}

// ---------------------------------------------------------------------------
// Grades and pipelining
// ---------------------------------------------------------------------------

/// Generate the workflows of the next grade.
///
/// An artifact roots a grade-`n+1` workflow when it has an intra-diagram
/// dependency with (either direction) an artifact written by some
/// grade-`n` workflow, and it appears in no existing workflow of the
/// change request. New workflows are returned in root-artifact order with
/// ids `<changeRequestId>.g<grade>.<k>`.
#[must_use]
pub fn generate_subcsws(model: &ProjectModel, existing: &[Csw], grade: u32) -> Vec<Csw> {
    if grade < 2 {
        return Vec::new();
    }
    let lower_written: BTreeSet<&str> = existing
        .iter()
        .filter(|c| c.grade == grade - 1)
        .flat_map(|c| c.activities.iter())
        .flat_map(|a| a.write_set.iter().map(String::as_str))
        .collect();
    let claimed: BTreeSet<&str> = existing
        .iter()
        .flat_map(|c| c.artifacts.iter().map(String::as_str))
        .collect();

    let mut roots: BTreeSet<&str> = BTreeSet::new();
    for dep in &model.intra_deps {
        for (inside, outside) in
            [(dep.target.as_str(), dep.source.as_str()), (dep.source.as_str(), dep.target.as_str())]
        {
            if lower_written.contains(inside) && !claimed.contains(outside) {
                roots.insert(outside);
            }
        }
    }

    let change_request_id = existing
        .first()
        .map(|c| c.change_request_id.clone())
        .unwrap_or_default();
    roots
        .into_iter()
        .enumerate()
        .map(|(k, root)| {
            let id = format!("{change_request_id}.g{grade}.{}", k + 1);
            let mut csw = generate_csw(model, root, &id, &change_request_id)
                .expect("intra-dependency endpoints are artifacts of the model");
            csw.grade = grade;
            csw
        })
        .collect()
}

/// The grades passed to [`pipeline_constraints`] are not consecutive.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected consecutive grades, got {lower} and {higher}")]
pub struct GradeMismatchError {
    pub lower: u32,
    pub higher: u32,
}

/// Precedence pairs for pipelined execution of consecutive grades: for
/// every intra-diagram dependency between an artifact of a lower-grade
/// activity and an artifact of a higher-grade activity, the lower activity
/// must finish first.
pub fn pipeline_constraints(
    lower: &Csw,
    higher: &Csw,
    model: &ProjectModel,
) -> Result<Vec<(ActivityId, ActivityId)>, GradeMismatchError> {
    if higher.grade != lower.grade + 1 {
        return Err(GradeMismatchError { lower: lower.grade, higher: higher.grade });
    }
    let covering = |csw: &Csw, artifact: &str| -> Option<ActivityId> {
        csw.activities
            .iter()
            .find(|a| a.write_set.contains(artifact) || a.read_set.contains(artifact))
            .map(|a| a.id.clone())
    };
    let mut pairs: BTreeSet<(ActivityId, ActivityId)> = BTreeSet::new();
    for dep in &model.intra_deps {
        for (a, b) in [(&dep.target, &dep.source), (&dep.source, &dep.target)] {
            if let (Some(low), Some(high)) = (covering(lower, a), covering(higher, b)) {
                pairs.insert((low, high));
            }
        }
    }
    Ok(pairs.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// A workflow document: every workflow of one change request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CswDocument {
    pub schema_version: String,
    pub csws: Vec<Csw>,
}

/// Parse a workflow document, validating schema version, per-workflow
/// structure and workflow-id uniqueness.
pub fn parse_csws(text: &str) -> Result<CswDocument, DocumentError> {
    let doc: CswDocument = serde_json::from_str(text).map_err(classify_json_error)?;
    if doc.schema_version != crate::ingest::SCHEMA_VERSION {
        return Err(DocumentError::Schema(format!(
            "unsupported schemaVersion {:?}, expected {:?}",
            doc.schema_version,
            crate::ingest::SCHEMA_VERSION
        )));
    }
    let mut violations = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for csw in &doc.csws {
        if !seen.insert(&csw.id) {
            violations.push(Violation {
                path: format!("csw {:?}", csw.id),
                message: "duplicate workflow id".into(),
            });
        }
        violations.extend(csw.validate());
    }
    if !violations.is_empty() {
        return Err(DocumentError::Invalid(violations));
    }
    Ok(doc)
}

/// Serialize a workflow document with workflows ordered by (grade, id).
#[must_use]
pub fn serialize_csws(doc: &CswDocument) -> String {
    let mut doc = doc.clone();
    doc.csws.sort_by(|a, b| (a.grade, &a.id).cmp(&(b.grade, &b.id)));
    let mut text = serde_json::to_string_pretty(&doc).expect("workflow documents serialize");
    text.push('\n');
    text
}

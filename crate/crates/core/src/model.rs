//! Core vocabulary for phased UML project models.
//!
//! A project model is a set of development *phases* (requirement, analysis,
//! design, ...), each holding *diagrams*, each holding *model elements*.
//! Two kinds of dependency connect them:
//!
//! - [`Bdr`] — a basic dependency relationship between two artifacts
//!   (elements or whole diagrams), directed `target <- source`: a change to
//!   the target may affect, or supply information needed by, the source.
//! - [`IntraDependency`] — a dependency between two elements inside one
//!   diagram (association, call, generalization, ...), taken as given input
//!   rather than derived.
//!
//! # Design
//!
//! - Identifiers are plain strings; elements and diagrams share one id
//!   namespace because BDR endpoints may be either (`Entity` resolves a
//!   reference to whichever it names).
//! - Name matching never uses raw names: [`normalize_name`] folds case,
//!   whitespace, underscores, a leading instance colon (`:Elevator`), and a
//!   plural `s`, and is idempotent.
//! - Validation is total: [`ProjectModel::validate`] returns *every*
//!   violation with a path-like locator instead of stopping at the first.

use serde::{Deserialize, Serialize};
use std::fmt;

pub type PhaseId = String;
pub type DiagramId = String;
pub type EntityId = String;

// ---------------------------------------------------------------------------
// Kinds
// ---------------------------------------------------------------------------

/// The nine diagram kinds the comparison rules know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagramKind {
    UseCaseDiagram,
    ClassDiagram,
    ObjectDiagram,
    ComponentDiagram,
    DeploymentDiagram,
    StateChartDiagram,
    ActivityDiagram,
    SequenceDiagram,
    CollaborationDiagram,
}

/// The element kinds that may appear inside diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Actor,
    UseCase,
    Class,
    Package,
    Node,
    Component,
    Object,
    Relation,
    Aggregation,
    Dependency,
    Generalization,
    Link,
    State,
    ActionState,
    Transition,
    Event,
    Action,
    Message,
}

/// The four kinds of basic dependency relationship.
///
/// Ordering is part of the public contract: generated BDR lists are sorted
/// by `(target, source, kind)` so repeated runs are byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BdrKind {
    /// The source cannot exist without the target (same diagram, or a
    /// diagram and one of its members).
    ExistTogether,
    /// Same phase, different diagrams, different element kinds: the two
    /// artifacts describe the same thing from different angles.
    InformationSharing,
    /// Same phase, different diagrams, same kind and same (normalized)
    /// name: duplicated information.
    Copy,
    /// Adjoining phases: the source refines a concept of the target.
    Concept,
}

/// Dependency kinds between elements of one diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntraDepKind {
    Generalization,
    Association,
    Aggregation,
    Composition,
    Call,
    Instantiation,
    Send,
    Parameter,
    Other,
}

// ---------------------------------------------------------------------------
// Model records
// ---------------------------------------------------------------------------

/// A development phase. Orders must be unique and contiguous from zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Phase {
    pub id: PhaseId,
    pub name: String,
    pub order: u32,
}

/// A diagram, owned by exactly one phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Diagram {
    pub id: DiagramId,
    pub name: String,
    pub kind: DiagramKind,
    pub phase: PhaseId,
}

/// A model element, owned by exactly one diagram.
///
/// `classifier` is only meaningful for `Object` elements: it names the type
/// after the colon in instance notation (`:FloorLampInterface`). It may be
/// absent even for objects, in which case the object's own name (with the
/// colon stripped by normalization) stands in for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelElement {
    pub id: EntityId,
    pub name: String,
    pub kind: ElementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<String>,
    pub diagram: DiagramId,
}

/// A basic dependency relationship, directed `target <- source`.
///
/// `rule_trace` lists the rule identifiers that produced the relationship
/// (comparison row and conditions, generation-model pair, selection cell),
/// empty for hand-written BDRs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Bdr {
    pub target: EntityId,
    pub source: EntityId,
    pub kind: BdrKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_trace: Vec<String>,
}

/// A dependency between two elements of the same diagram.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IntraDependency {
    pub target: EntityId,
    pub source: EntityId,
    pub kind: IntraDepKind,
}

/// A complete project model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProjectModel {
    pub phases: Vec<Phase>,
    pub diagrams: Vec<Diagram>,
    pub elements: Vec<ModelElement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intra_deps: Vec<IntraDependency>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bdrs: Vec<Bdr>,
}

// ---------------------------------------------------------------------------
// Entities: uniform view over elements and diagrams
// ---------------------------------------------------------------------------

/// Either an element kind or a diagram kind; the unit the comparison and
/// generation tables are keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Element(ElementKind),
    Diagram(DiagramKind),
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::Element(k) => write!(f, "{k:?}"),
            EntityKind::Diagram(k) => write!(f, "{k:?}"),
        }
    }
}

/// A resolved BDR endpoint: a model element or a whole diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entity<'a> {
    Element(&'a ModelElement),
    Diagram(&'a Diagram),
}

impl<'a> Entity<'a> {
    #[must_use]
    pub fn id(&self) -> &'a str {
        match self {
            Entity::Element(e) => &e.id,
            Entity::Diagram(d) => &d.id,
        }
    }

    #[must_use]
    pub fn name(&self) -> &'a str {
        match self {
            Entity::Element(e) => &e.name,
            Entity::Diagram(d) => &d.name,
        }
    }

    #[must_use]
    pub fn kind(&self) -> EntityKind {
        match self {
            Entity::Element(e) => EntityKind::Element(e.kind),
            Entity::Diagram(d) => EntityKind::Diagram(d.kind),
        }
    }

    /// The classifier name for objects in instance notation, falling back to
    /// the entity's own name (normalization strips the leading colon).
    #[must_use]
    pub fn classifier_or_name(&self) -> &'a str {
        match self {
            Entity::Element(e) => e.classifier.as_deref().unwrap_or(&e.name),
            Entity::Diagram(d) => &d.name,
        }
    }
}

// ---------------------------------------------------------------------------
// Name normalization and phase relations
// ---------------------------------------------------------------------------

/// Canonicalize a name for comparison.
///
/// Removes all whitespace and underscores, strips leading instance colons,
/// lowercases, and drops one plural `s` from names longer than three
/// characters (never from an `ss` ending, so the function stays idempotent:
/// `normalize_name(normalize_name(x)) == normalize_name(x)` for every `x`).
///
/// ```
/// use changeflow::model::normalize_name;
/// assert_eq!(normalize_name("FloorLampInterfaces"), "floorlampinterface");
/// assert_eq!(normalize_name(":ElevatorControl"), "elevatorcontrol");
/// assert_eq!(normalize_name(""), "");
/// ```
#[must_use]
pub fn normalize_name(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .flat_map(char::to_lowercase)
        .collect();
    let mut s = cleaned.trim_start_matches(':').to_string();
    if s.chars().count() > 3 && s.ends_with('s') && !s.ends_with("ss") {
        s.pop();
    }
    s
}

/// How two names relate under [`normalize_name`].
#[must_use]
pub fn names_similar(a: &str, b: &str) -> bool {
    normalize_name(a) == normalize_name(b)
}

/// Relation between two phases by their order distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRelation {
    Same,
    Adjoining,
    Separate,
}

/// Classify two phases: identical order, neighbours, or further apart.
/// Symmetric in its arguments.
#[must_use]
pub fn phase_relation(a: &Phase, b: &Phase) -> PhaseRelation {
    match a.order.abs_diff(b.order) {
        0 => PhaseRelation::Same,
        1 => PhaseRelation::Adjoining,
        _ => PhaseRelation::Separate,
    }
}

// ---------------------------------------------------------------------------
// Lookups and scope predicates
// ---------------------------------------------------------------------------

impl ProjectModel {
    #[must_use]
    pub fn phase(&self, id: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.id == id)
    }

    #[must_use]
    pub fn diagram(&self, id: &str) -> Option<&Diagram> {
        self.diagrams.iter().find(|d| d.id == id)
    }

    #[must_use]
    pub fn element(&self, id: &str) -> Option<&ModelElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Resolve an id to an element or a diagram.
    #[must_use]
    pub fn entity(&self, id: &str) -> Option<Entity<'_>> {
        self.element(id)
            .map(Entity::Element)
            .or_else(|| self.diagram(id).map(Entity::Diagram))
    }

    /// All BDR-endpoint candidates: every element, then every diagram.
    pub fn entities(&self) -> impl Iterator<Item = Entity<'_>> {
        self.elements
            .iter()
            .map(Entity::Element)
            .chain(self.diagrams.iter().map(Entity::Diagram))
    }

    /// The phase an entity ultimately belongs to (elements through their
    /// diagram). `None` only on dangling references.
    #[must_use]
    pub fn phase_of(&self, entity: Entity<'_>) -> Option<&Phase> {
        let diagram = match entity {
            Entity::Element(e) => self.diagram(&e.diagram)?,
            Entity::Diagram(d) => d,
        };
        self.phase(&diagram.phase)
    }

    /// Phase relation between two entities.
    #[must_use]
    pub fn entity_phase_relation(&self, a: Entity<'_>, b: Entity<'_>) -> Option<PhaseRelation> {
        Some(phase_relation(self.phase_of(a)?, self.phase_of(b)?))
    }

    /// True when two entities live in one diagram scope: two elements of the
    /// same diagram, or a diagram and one of its own members (either way
    /// round). Two distinct diagrams are never in the same scope.
    #[must_use]
    pub fn same_scope(&self, a: Entity<'_>, b: Entity<'_>) -> bool {
        match (a, b) {
            (Entity::Element(x), Entity::Element(y)) => x.diagram == y.diagram,
            (Entity::Diagram(d), Entity::Element(e))
            | (Entity::Element(e), Entity::Diagram(d)) => e.diagram == d.id,
            (Entity::Diagram(x), Entity::Diagram(y)) => x.id == y.id,
        }
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One semantic problem found in a document, with a path-like locator such
/// as `elements[3].diagram`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ProjectModel {
    /// Check every semantic rule and return all violations (empty = valid).
    ///
    /// Rules: unique ids (elements and diagrams share a namespace), phase
    /// orders unique and contiguous from 0, references resolve, classifiers
    /// only on objects, intra-dependencies stay inside one diagram, and
    /// every BDR satisfies its kind-specific invariant.
    #[must_use]
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        // Phase ids and orders.
        for (i, p) in self.phases.iter().enumerate() {
            if self.phases[..i].iter().any(|q| q.id == p.id) {
                out.push(Violation::new(
                    format!("phases[{i}].id"),
                    format!("duplicate phase id {:?}", p.id),
                ));
            }
        }
        let mut orders: Vec<u32> = self.phases.iter().map(|p| p.order).collect();
        orders.sort_unstable();
        let contiguous = orders.iter().enumerate().all(|(i, o)| *o == i as u32);
        if !self.phases.is_empty() && !contiguous {
            out.push(Violation::new(
                "phases",
                format!("phase orders must be unique and contiguous from 0, got {orders:?}"),
            ));
        }

        // One id namespace for diagrams and elements.
        for (i, d) in self.diagrams.iter().enumerate() {
            if self.diagrams[..i].iter().any(|q| q.id == d.id) {
                out.push(Violation::new(
                    format!("diagrams[{i}].id"),
                    format!("duplicate diagram id {:?}", d.id),
                ));
            }
            if self.phase(&d.phase).is_none() {
                out.push(Violation::new(
                    format!("diagrams[{i}].phase"),
                    format!("unknown phase {:?}", d.phase),
                ));
            }
        }
        for (i, e) in self.elements.iter().enumerate() {
            if self.elements[..i].iter().any(|q| q.id == e.id) {
                out.push(Violation::new(
                    format!("elements[{i}].id"),
                    format!("duplicate element id {:?}", e.id),
                ));
            }
            if self.diagrams.iter().any(|d| d.id == e.id) {
                out.push(Violation::new(
                    format!("elements[{i}].id"),
                    format!("id {:?} collides with a diagram id", e.id),
                ));
            }
            if self.diagram(&e.diagram).is_none() {
                out.push(Violation::new(
                    format!("elements[{i}].diagram"),
                    format!("unknown diagram {:?}", e.diagram),
                ));
            }
            if e.classifier.is_some() && e.kind != ElementKind::Object {
                out.push(Violation::new(
                    format!("elements[{i}].classifier"),
                    format!("classifier is only allowed on Object elements, not {:?}", e.kind),
                ));
            }
        }

        for (i, dep) in self.intra_deps.iter().enumerate() {
            let path = format!("intraDeps[{i}]");
            match (self.element(&dep.target), self.element(&dep.source)) {
                (Some(t), Some(s)) => {
                    if dep.target == dep.source {
                        out.push(Violation::new(&path, "target and source are the same element"));
                    } else if t.diagram != s.diagram {
                        out.push(Violation::new(
                            &path,
                            "intra-dependency endpoints must share one diagram",
                        ));
                    }
                }
                (t, s) => {
                    if t.is_none() {
                        out.push(Violation::new(
                            format!("{path}.target"),
                            format!("unknown element {:?}", dep.target),
                        ));
                    }
                    if s.is_none() {
                        out.push(Violation::new(
                            format!("{path}.source"),
                            format!("unknown element {:?}", dep.source),
                        ));
                    }
                }
            }
        }

        for (i, bdr) in self.bdrs.iter().enumerate() {
            let path = format!("bdrs[{i}]");
            match (self.entity(&bdr.target), self.entity(&bdr.source)) {
                (Some(_), Some(_)) => {
                    if let Err(msg) = self.check_bdr_invariant(bdr) {
                        out.push(Violation::new(&path, msg));
                    }
                }
                (t, s) => {
                    if t.is_none() {
                        out.push(Violation::new(
                            format!("{path}.target"),
                            format!("unknown artifact {:?}", bdr.target),
                        ));
                    }
                    if s.is_none() {
                        out.push(Violation::new(
                            format!("{path}.source"),
                            format!("unknown artifact {:?}", bdr.source),
                        ));
                    }
                }
            }
        }

        out
    }

    /// Kind-specific invariant for one BDR whose endpoints resolve.
    ///
    /// - ExistTogether: same diagram, or the target is a diagram containing
    ///   the source element.
    /// - Copy: same phase, different diagram scopes, same kind, names equal
    ///   after normalization.
    /// - InformationSharing: same phase, different diagram scopes.
    /// - Concept: adjoining phases.
    pub fn check_bdr_invariant(&self, bdr: &Bdr) -> Result<(), String> {
        let target = self.entity(&bdr.target).ok_or("unknown target")?;
        let source = self.entity(&bdr.source).ok_or("unknown source")?;
        if bdr.target == bdr.source {
            return Err("target and source are the same artifact".into());
        }
        let relation = self
            .entity_phase_relation(target, source)
            .ok_or("entity has no resolvable phase")?;
        match bdr.kind {
            BdrKind::ExistTogether => {
                let contains = matches!(
                    (target, source),
                    (Entity::Diagram(d), Entity::Element(e)) if e.diagram == d.id
                );
                let share = matches!(
                    (target, source),
                    (Entity::Element(x), Entity::Element(y)) if x.diagram == y.diagram
                );
                if !(contains || share) {
                    return Err(
                        "ExistTogether requires a shared diagram or a diagram containing the source"
                            .into(),
                    );
                }
            }
            BdrKind::Copy => {
                if relation != PhaseRelation::Same {
                    return Err("Copy requires the same phase".into());
                }
                if self.same_scope(target, source) {
                    return Err("Copy requires different diagrams".into());
                }
                if target.kind() != source.kind() {
                    return Err("Copy requires the same kind on both ends".into());
                }
                if !names_similar(target.name(), source.name()) {
                    return Err("Copy requires equal normalized names".into());
                }
            }
            BdrKind::InformationSharing => {
                if relation != PhaseRelation::Same {
                    return Err("InformationSharing requires the same phase".into());
                }
                if self.same_scope(target, source) {
                    return Err("InformationSharing requires different diagrams".into());
                }
            }
            BdrKind::Concept => {
                if relation != PhaseRelation::Adjoining {
                    return Err("Concept requires adjoining phases".into());
                }
            }
        }
        Ok(())
    }

    /// Sort all collections into the canonical order used by serialization:
    /// phases by order, diagrams/elements by id, dependency lists by
    /// (target, source, kind).
    pub fn canonicalize(&mut self) {
        self.phases.sort_by(|a, b| a.order.cmp(&b.order).then(a.id.cmp(&b.id)));
        self.diagrams.sort_by(|a, b| a.id.cmp(&b.id));
        self.elements.sort_by(|a, b| a.id.cmp(&b.id));
        self.intra_deps.sort();
        self.bdrs.sort();
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

//! Rule engine that derives basic dependency relationships from a project
//! model.
//!
//! Generation runs in five steps:
//!
//! 1. **Comparison sweep** — scan entity pairs against the comparison table
//!    (name similarity, containment and diagram membership conditions keyed
//!    on (target kind, source kind) rows).
//! 2. **Generation-model retrieval** — map both entities to their
//!    generation-model category ([`Gme`]).
//! 3. **Candidate identification** — ask the [`CandidateMatrix`] which BDR
//!    kinds the category pair admits.
//! 4. **Selection** — pick at most one kind from the candidates using phase,
//!    diagram, kind and name information ([`select_bdr`]).
//! 5. **Addition** — record the BDR with a complete rule trace.
//!
//! # Design
//!
//! - Each *unordered* entity pair is matched once: comparison rows are
//!   scanned in table order and the first row whose kinds fit and whose
//!   condition holds fixes the pair's orientation. Scanning ordered pairs
//!   instead would double-report mirror rows — (Class, Object) via SimType
//!   *and* (Object, Class) via TypeSim describe the same pair — and a
//!   class/object pair must yield exactly one relationship.
//! - `Concept` is always emitted with its source in the later phase (the
//!   refining artifact depends on the refined concept); when the matched row
//!   oriented the pair the other way the endpoints are swapped and the trace
//!   records it.
//! - Every step leaves an identifier in [`Bdr::rule_trace`], so a trace can
//!   be replayed against the model to re-derive the relationship.

use crate::ingest::DocumentError;
use crate::model::{
    names_similar, normalize_name, Bdr, BdrKind, DiagramKind, ElementKind, Entity, EntityKind,
    PhaseRelation, ProjectModel,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

// ---------------------------------------------------------------------------
// Comparison rules
// ---------------------------------------------------------------------------

/// The five conditions a comparison row may require.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComparisonCondition {
    /// Target name is a *strict* substring of the source name (equality is
    /// `Similar`'s case; the two conditions are disjoint).
    Contained,
    /// Equal normalized names.
    Similar,
    /// Target is an object whose classifier matches the source's name.
    TypeSim,
    /// Source is an object whose classifier matches the target's name.
    SimType,
    /// Source is an element owned by the target diagram.
    Include,
}

/// One row of the comparison table: which conditions may bind a
/// (target kind, source kind) pair.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRow {
    pub target: EntityKind,
    pub source: EntityKind,
    pub conditions: &'static [ComparisonCondition],
}

use ComparisonCondition::{Contained, Include, SimType, Similar, TypeSim};
use DiagramKind as DK;
use ElementKind as EK;

const fn elem(k: ElementKind) -> EntityKind {
    EntityKind::Element(k)
}
const fn diag(k: DiagramKind) -> EntityKind {
    EntityKind::Diagram(k)
}

/// The comparison table, in published order. Order matters: the first row
/// that fits a pair decides the pair's target/source orientation.
pub const COMPARISON_TABLE: &[ComparisonRow] = &[
    ComparisonRow { target: diag(DK::UseCaseDiagram), source: elem(EK::Actor), conditions: &[Include] },
    ComparisonRow { target: diag(DK::UseCaseDiagram), source: elem(EK::UseCase), conditions: &[Include] },
    ComparisonRow { target: elem(EK::UseCase), source: diag(DK::ClassDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::UseCase), source: diag(DK::StateChartDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::UseCase), source: diag(DK::CollaborationDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::UseCase), source: diag(DK::SequenceDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::UseCase), source: elem(EK::UseCase), conditions: &[Similar] },
    ComparisonRow { target: elem(EK::Actor), source: elem(EK::Actor), conditions: &[Similar] },
    ComparisonRow { target: elem(EK::Actor), source: elem(EK::Class), conditions: &[Similar] },
    ComparisonRow { target: elem(EK::Actor), source: elem(EK::Object), conditions: &[SimType] },
    ComparisonRow { target: diag(DK::ClassDiagram), source: elem(EK::Class), conditions: &[Include] },
    ComparisonRow { target: diag(DK::ClassDiagram), source: elem(EK::Package), conditions: &[Include] },
    ComparisonRow { target: elem(EK::Package), source: elem(EK::Class), conditions: &[Include] },
    ComparisonRow { target: elem(EK::Package), source: elem(EK::Package), conditions: &[Similar] },
    ComparisonRow { target: elem(EK::Class), source: elem(EK::Package), conditions: &[Similar] },
    ComparisonRow { target: elem(EK::Class), source: elem(EK::Object), conditions: &[SimType, Contained] },
    ComparisonRow { target: elem(EK::Class), source: diag(DK::StateChartDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::Class), source: diag(DK::ActivityDiagram), conditions: &[Contained] },
    ComparisonRow { target: elem(EK::Class), source: elem(EK::Class), conditions: &[Similar, Include] },
    ComparisonRow { target: diag(DK::ObjectDiagram), source: elem(EK::Object), conditions: &[Include] },
    ComparisonRow { target: elem(EK::Object), source: elem(EK::Class), conditions: &[TypeSim] },
    ComparisonRow { target: elem(EK::Object), source: diag(DK::StateChartDiagram), conditions: &[TypeSim] },
    ComparisonRow { target: elem(EK::Object), source: diag(DK::ActivityDiagram), conditions: &[TypeSim] },
    ComparisonRow { target: elem(EK::Object), source: elem(EK::Object), conditions: &[Similar, Include] },
    ComparisonRow { target: diag(DK::ComponentDiagram), source: elem(EK::Component), conditions: &[Include] },
    ComparisonRow { target: elem(EK::Component), source: elem(EK::Component), conditions: &[Similar] },
    ComparisonRow { target: diag(DK::DeploymentDiagram), source: elem(EK::Node), conditions: &[Include] },
    ComparisonRow { target: elem(EK::Node), source: elem(EK::Node), conditions: &[Similar] },
    ComparisonRow { target: diag(DK::StateChartDiagram), source: elem(EK::State), conditions: &[Include] },
    ComparisonRow { target: elem(EK::State), source: elem(EK::State), conditions: &[Similar, Include] },
    ComparisonRow { target: diag(DK::ActivityDiagram), source: elem(EK::ActionState), conditions: &[Include] },
    ComparisonRow { target: elem(EK::ActionState), source: elem(EK::ActionState), conditions: &[Similar, Include] },
    ComparisonRow { target: diag(DK::CollaborationDiagram), source: elem(EK::Object), conditions: &[Include] },
    ComparisonRow { target: diag(DK::SequenceDiagram), source: elem(EK::Object), conditions: &[Include] },
];

/// Does one condition hold for a concrete (target, source) orientation?
///
/// Name-based conditions never match an empty normalized name — elements
/// without usable names should not pair with everything.
fn condition_holds(
    cond: ComparisonCondition,
    target: Entity<'_>,
    source: Entity<'_>,
) -> bool {
    match cond {
        ComparisonCondition::Similar => {
            let t = normalize_name(target.name());
            !t.is_empty() && t == normalize_name(source.name())
        }
        ComparisonCondition::Contained => {
            let t = normalize_name(target.name());
            let s = normalize_name(source.name());
            !t.is_empty() && t != s && s.contains(&t)
        }
        ComparisonCondition::TypeSim => {
            let is_object = matches!(target, Entity::Element(e) if e.kind == ElementKind::Object);
            let t = normalize_name(target.classifier_or_name());
            is_object && !t.is_empty() && t == normalize_name(source.name())
        }
        ComparisonCondition::SimType => {
            let is_object = matches!(source, Entity::Element(e) if e.kind == ElementKind::Object);
            let t = normalize_name(target.name());
            is_object && !t.is_empty() && t == normalize_name(source.classifier_or_name())
        }
        ComparisonCondition::Include => match (target, source) {
            (Entity::Diagram(d), Entity::Element(e)) => e.diagram == d.id,
            // Element-in-element ownership (members in owners) is not part
            // of this model, so Include never binds two elements.
            _ => false,
        },
    }
}

/// Evaluate the comparison table for one *oriented* (target, source) pair:
/// the conditions of that orientation's row which actually hold. Empty when
/// no row exists or nothing holds.
#[must_use]
pub fn compare(
    _model: &ProjectModel,
    target: Entity<'_>,
    source: Entity<'_>,
) -> BTreeSet<ComparisonCondition> {
    COMPARISON_TABLE
        .iter()
        .filter(|row| row.target == target.kind() && row.source == source.kind())
        .flat_map(|row| row.conditions.iter().copied())
        .filter(|cond| condition_holds(*cond, target, source))
        .collect()
}

/// A pair that survived the comparison sweep, with its fixed orientation and
/// the conditions that matched.
#[derive(Debug, Clone)]
pub struct CandidatePair<'a> {
    pub target: Entity<'a>,
    pub source: Entity<'a>,
    pub matched: Vec<ComparisonCondition>,
}

/// Match one unordered pair against the table: first row (in table order)
/// whose kinds fit some orientation and whose conditions hold wins. For
/// same-kind rows the smaller id is tried as target first, which keeps the
/// outcome independent of input order.
fn match_pair<'a>(x: Entity<'a>, y: Entity<'a>) -> Option<CandidatePair<'a>> {
    let (first, second) = if x.id() <= y.id() { (x, y) } else { (y, x) };
    for row in COMPARISON_TABLE {
        for (target, source) in [(first, second), (second, first)] {
            if row.target != target.kind() || row.source != source.kind() {
                continue;
            }
            let matched: Vec<ComparisonCondition> = row
                .conditions
                .iter()
                .copied()
                .filter(|cond| condition_holds(*cond, target, source))
                .collect();
            if !matched.is_empty() {
                return Some(CandidatePair { target, source, matched });
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Generation model elements
// ---------------------------------------------------------------------------

/// The categories the addition rules are expressed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gme {
    ClassifierElement,
    RelationshipElement,
    StateElement,
    TransitionElement,
    InstanceElement,
    MessageElement,
    RelationshipDiagram,
    BehaviorDiagram,
    InteractionDiagram,
}

/// An entity whose kind has no generation-model category. The only such
/// case is an `Object` outside object, collaboration and sequence diagrams,
/// where instance notation has no defined meaning.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no generation model element for {id:?}: {detail}")]
pub struct UnmappedKindError {
    pub id: String,
    pub detail: String,
}

/// Map an entity to its generation-model category.
pub fn gme_of(model: &ProjectModel, entity: Entity<'_>) -> Result<Gme, UnmappedKindError> {
    match entity {
        Entity::Diagram(d) => Ok(match d.kind {
            DK::UseCaseDiagram | DK::ClassDiagram | DK::ObjectDiagram | DK::ComponentDiagram
            | DK::DeploymentDiagram => Gme::RelationshipDiagram,
            DK::StateChartDiagram | DK::ActivityDiagram => Gme::BehaviorDiagram,
            DK::SequenceDiagram | DK::CollaborationDiagram => Gme::InteractionDiagram,
        }),
        Entity::Element(e) => match e.kind {
            EK::Actor | EK::UseCase | EK::Class | EK::Package | EK::Node | EK::Component => {
                Ok(Gme::ClassifierElement)
            }
            EK::Relation | EK::Aggregation | EK::Dependency | EK::Generalization | EK::Link => {
                Ok(Gme::RelationshipElement)
            }
            EK::State | EK::ActionState => Ok(Gme::StateElement),
            EK::Transition | EK::Event | EK::Action => Ok(Gme::TransitionElement),
            EK::Message => Ok(Gme::MessageElement),
            EK::Object => {
                let diagram = model.diagram(&e.diagram).ok_or_else(|| UnmappedKindError {
                    id: e.id.clone(),
                    detail: format!("object's diagram {:?} is unknown", e.diagram),
                })?;
                match diagram.kind {
                    DK::ObjectDiagram => Ok(Gme::ClassifierElement),
                    DK::CollaborationDiagram | DK::SequenceDiagram => Ok(Gme::InstanceElement),
                    other => Err(UnmappedKindError {
                        id: e.id.clone(),
                        detail: format!("Object inside a {other:?} has no category"),
                    }),
                }
            }
        },
    }
}

// ---------------------------------------------------------------------------
// Addition rules (candidate matrix)
// ---------------------------------------------------------------------------

/// Which BDR kinds a (target category, source category) pair admits.
///
/// The default is permissive — all four kinds — except that relationship,
/// transition and message elements admit none: those artifacts are owned by
/// their endpoints and never carry dependencies of their own. Individual
/// pairs can be overridden from a configuration document.
#[derive(Debug, Clone, Default)]
pub struct CandidateMatrix {
    overrides: BTreeMap<(Gme, Gme), BTreeSet<BdrKind>>,
}

impl CandidateMatrix {
    /// Candidate kinds for one category pair.
    #[must_use]
    pub fn candidates(&self, target: Gme, source: Gme) -> BTreeSet<BdrKind> {
        if let Some(set) = self.overrides.get(&(target, source)) {
            return set.clone();
        }
        let excluded = |g: Gme| {
            matches!(g, Gme::RelationshipElement | Gme::TransitionElement | Gme::MessageElement)
        };
        if excluded(target) || excluded(source) {
            BTreeSet::new()
        } else {
            [BdrKind::ExistTogether, BdrKind::InformationSharing, BdrKind::Copy, BdrKind::Concept]
                .into_iter()
                .collect()
        }
    }

    /// Replace the admitted kinds for one pair.
    pub fn set(&mut self, target: Gme, source: Gme, kinds: impl IntoIterator<Item = BdrKind>) {
        self.overrides.insert((target, source), kinds.into_iter().collect());
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MatrixEntry {
    target: Gme,
    source: Gme,
    kinds: Vec<BdrKind>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MatrixFile {
    schema_version: String,
    entries: Vec<MatrixEntry>,
}

/// Parse a candidate-matrix override document. Pairs not listed keep the
/// default rules.
pub fn parse_matrix(text: &str) -> Result<CandidateMatrix, DocumentError> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(crate::ingest::classify_json_error)?;
    crate::ingest::check_schema_version(&file.schema_version)?;
    let mut matrix = CandidateMatrix::default();
    for entry in file.entries {
        matrix.set(entry.target, entry.source, entry.kinds);
    }
    Ok(matrix)
}

// ---------------------------------------------------------------------------
// Selection rules
// ---------------------------------------------------------------------------

/// Trace labels for the four selection outcomes.
pub const CELL_SAME_DIAGRAM: &str = "select:same-diagram";
pub const CELL_COPY: &str = "select:same-phase/diff-diagram/same-kind/similar-name";
pub const CELL_INFORMATION_SHARING: &str = "select:same-phase/diff-diagram/diff-kind";
pub const CELL_ADJOINING: &str = "select:adjoining-phases";

/// The decision procedure behind [`select_bdr`], also yielding the trace
/// label of the cell that fired.
fn decide(
    model: &ProjectModel,
    target: Entity<'_>,
    source: Entity<'_>,
) -> Option<(BdrKind, &'static str)> {
    if model.same_scope(target, source) {
        return Some((BdrKind::ExistTogether, CELL_SAME_DIAGRAM));
    }
    match model.entity_phase_relation(target, source)? {
        PhaseRelation::Same => {
            if target.kind() == source.kind() {
                if names_similar(target.name(), source.name()) {
                    Some((BdrKind::Copy, CELL_COPY))
                } else {
                    None
                }
            } else {
                Some((BdrKind::InformationSharing, CELL_INFORMATION_SHARING))
            }
        }
        PhaseRelation::Adjoining => Some((BdrKind::Concept, CELL_ADJOINING)),
        PhaseRelation::Separate => None,
    }
}

/// Choose at most one BDR kind for a candidate pair.
///
/// In order: same diagram scope → ExistTogether; same phase, different
/// diagrams, same kind and similar name → Copy; same phase, different
/// diagrams, different kinds → InformationSharing; adjoining phases →
/// Concept; otherwise none. The chosen kind must also be admitted by
/// `candidates`, else the pair yields nothing.
#[must_use]
pub fn select_bdr(
    model: &ProjectModel,
    pair: &CandidatePair<'_>,
    candidates: &BTreeSet<BdrKind>,
) -> Option<BdrKind> {
    decide(model, pair.target, pair.source)
        .filter(|(kind, _)| candidates.contains(kind))
        .map(|(kind, _)| kind)
}

// ---------------------------------------------------------------------------
// Generation pipeline
// ---------------------------------------------------------------------------

/// Trace entry recording that a Concept relationship was flipped so its
/// source lies in the later phase.
pub const TRACE_CONCEPT_REORIENTED: &str = "orient:concept-source-later-phase";

/// Run the whole pipeline over a model and return the generated BDRs,
/// deduplicated and sorted by (target, source, kind).
///
/// Entities that never match a comparison condition are ignored entirely;
/// an unmappable kind only fails generation when it appears in a matched
/// pair.
pub fn generate_bdrs(
    model: &ProjectModel,
    matrix: &CandidateMatrix,
) -> Result<Vec<Bdr>, UnmappedKindError> {
    let mut entities: Vec<Entity<'_>> = model.entities().collect();
    entities.sort_by(|a, b| a.id().cmp(b.id()));

    let mut merged: BTreeMap<(String, String, BdrKind), Bdr> = BTreeMap::new();
    for i in 0..entities.len() {
        for j in i + 1..entities.len() {
            let Some(pair) = match_pair(entities[i], entities[j]) else {
                continue;
            };
            let target_gme = gme_of(model, pair.target)?;
            let source_gme = gme_of(model, pair.source)?;
            let candidates = matrix.candidates(target_gme, source_gme);
            let Some((kind, cell)) =
                decide(model, pair.target, pair.source).filter(|(k, _)| candidates.contains(k))
            else {
                continue;
            };

            let mut trace: Vec<String> = pair
                .matched
                .iter()
                .map(|cond| {
                    format!("compare:{}/{}:{cond:?}", pair.target.kind(), pair.source.kind())
                })
                .collect();
            trace.push(format!("gme:{target_gme:?}/{source_gme:?}"));
            trace.push(cell.to_string());

            // Concept points at the concept being refined: source in the
            // later phase. Swap if the comparison row oriented it backwards.
            let (mut target, mut source) = (pair.target, pair.source);
            if kind == BdrKind::Concept {
                let target_order = model.phase_of(target).map(|p| p.order);
                let source_order = model.phase_of(source).map(|p| p.order);
                if source_order < target_order {
                    std::mem::swap(&mut target, &mut source);
                    trace.push(TRACE_CONCEPT_REORIENTED.to_string());
                }
            }

            let key = (target.id().to_string(), source.id().to_string(), kind);
            match merged.get_mut(&key) {
                Some(existing) => {
                    for entry in trace {
                        if !existing.rule_trace.contains(&entry) {
                            existing.rule_trace.push(entry);
                        }
                    }
                }
                None => {
                    merged.insert(
                        key.clone(),
                        Bdr { target: key.0, source: key.1, kind, rule_trace: trace },
                    );
                }
            }
        }
    }
    Ok(merged.into_values().collect())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

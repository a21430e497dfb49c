//! Run-time inconsistency detection over check-out/check-in event logs:
//! four patterns and their three direct refinements, detected both offline
//! over complete logs and incrementally at the earliest detectable moment,
//! plus advisory resolution strategies.
//!
//! # Patterns
//!
//! With activities A, B (and a foreign P), per-artifact active intervals
//! `[checkout, check-in]` (a missing check-in leaves the interval open):
//!
//! 1. **WwDirectConflict** — A and B in different workflows write the same
//!    artifact: overlapping intervals, equal checkout versions, different
//!    check-in versions.
//! 2. **PotentialIndirectConflict** — A and B in different workflows write
//!    different artifacts d2 and d6 with overlapping intervals, where d6
//!    transitively depends on d2. Refined to **RwDirectConflict** when B
//!    also read d2: equal checkout versions of d2, and A's check-in
//!    superseded the version B read.
//! 3. **WwwPotentialIndirect** — A and B in one workflow write d6 and d7,
//!    both depending on d2, and a foreign P writes d2 strictly between A's
//!    check-in of d6 and B's checkout of d7. Refined to
//!    **RwrDirectInconsistency** when A and B both read d2 and the version
//!    chain A→P→B matches exactly.
//! 4. **W2wPotentialIndirect** — A and B in one workflow; A wrote d2
//!    itself, B writes d7 depending on d2, and a foreign P writes d2
//!    strictly between them. Refined to **WwrDirectInconsistency** when B
//!    read d2 and the version chain A→P→B matches exactly.
//!
//! # Design
//!
//! - Clauses are evaluated literally over the log; every warning carries
//!   the evidence events per clause, so a warning can be re-checked by
//!   hand against the log alone.
//! - Intervals are closed; touching endpoints count as overlap. The
//!   "nested between" test of patterns 3 and 4 is strict containment in
//!   the open interval.
//! - For an activity that only reads an artifact, "its version at check-in
//!   time" means the version it read — reads are never checked in, and the
//!   read version is what the activity's own check-ins reflect.
//! - Per (activity, artifact), the first write checkout, first read
//!   checkout and first check-in are authoritative; later repetitions do
//!   not re-bind the pattern variables.
//! - The monitor reports twice: a *possibility* as soon as a pattern's
//!   checkout-observable clauses hold (at a checkout, as early as the
//!   patterns allow), and a *confirmed* warning once the remaining clauses
//!   and the refinement question are settled — at the settling event, or
//!   at the final flush. Over logs the store can produce (reads always hand
//!   out the latest version), confirmed warnings after a full replay equal
//!   the offline detectors' output exactly, record for record.

use crate::csw::{ActivityId, CswId};
use crate::impact::reaches;
use crate::ingest::EventAction;
use crate::model::{EntityId, ProjectModel};
use crate::store::{AccessMode, BuildTimeWarning, ChangeEvent, StoreError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// Warning vocabulary
// ---------------------------------------------------------------------------

/// The four patterns and three refinements.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum PatternKind {
    WwDirectConflict,
    PotentialIndirectConflict,
    RwDirectConflict,
    WwwPotentialIndirect,
    RwrDirectInconsistency,
    W2wPotentialIndirect,
    WwrDirectInconsistency,
}

/// One activity as named in the log.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ActivityRef {
    pub workflow: CswId,
    pub activity: ActivityId,
}

/// An involved artifact with the version numbers cited by the evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArtifactVersions {
    pub artifact: EntityId,
    pub versions: Vec<u32>,
}

/// One satisfied clause of a pattern, with the log indices of the events
/// that satisfy it (empty for clauses established by the model, not the
/// log).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EvidenceClause {
    pub clause: String,
    pub events: Vec<usize>,
}

/// A detected (possible) inconsistency.
///
/// `activities` is `[A, B]` or `[A, B, P]` in pattern order; `artifacts`
/// starts with the shared/foreign-written artifact (`[d]`, `[d2, d6]`,
/// `[d2, d6, d7]`, `[d2, d7]` for patterns 1–4 respectively).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InconsistencyWarning {
    pub kind: PatternKind,
    /// False for an early possibility report, true once every clause holds.
    pub confirmed: bool,
    pub activities: Vec<ActivityRef>,
    pub artifacts: Vec<ArtifactVersions>,
    pub detection_time: f64,
    pub evidence: Vec<EvidenceClause>,
}

// ---------------------------------------------------------------------------
// Log indexing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct EventRef {
    index: usize,
    time: f64,
    version: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct Access {
    write_co: Option<EventRef>,
    read_co: Option<EventRef>,
    write_ci: Option<EventRef>,
}

type ActKey = (CswId, ActivityId);
type LogIndex = BTreeMap<ActKey, BTreeMap<EntityId, Access>>;

fn index_log(log: &[ChangeEvent]) -> LogIndex {
    let mut out: LogIndex = BTreeMap::new();
    for (index, event) in log.iter().enumerate() {
        let access = out
            .entry((event.workflow.clone(), event.activity.clone()))
            .or_default()
            .entry(event.artifact.clone())
            .or_default();
        let slot = match (event.action, event.mode) {
            (EventAction::CheckOut, AccessMode::Write) => &mut access.write_co,
            (EventAction::CheckOut, AccessMode::Read) => &mut access.read_co,
            (EventAction::CheckIn, _) => &mut access.write_ci,
        };
        if slot.is_none() {
            *slot = Some(EventRef { index, time: event.time, version: event.version.number });
        }
    }
    out
}

/// The closed active interval of a write on one artifact; open-ended until
/// the check-in arrives.
fn write_interval(access: &Access) -> Option<(f64, f64)> {
    access
        .write_co
        .map(|co| (co.time, access.write_ci.map_or(f64::INFINITY, |ci| ci.time)))
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

fn clause(label: &str, events: &[Option<EventRef>]) -> EvidenceClause {
    EvidenceClause {
        clause: label.to_string(),
        events: events.iter().flatten().map(|e| e.index).collect(),
    }
}

/// Versions of `artifact` cited by the given evidence, ascending.
fn cited_versions(
    log: &[ChangeEvent],
    artifact: &str,
    evidence: &[EvidenceClause],
) -> ArtifactVersions {
    let versions: BTreeSet<u32> = evidence
        .iter()
        .flat_map(|c| c.events.iter())
        .filter(|i| log[**i].artifact == artifact)
        .map(|i| log[*i].version.number)
        .collect();
    ArtifactVersions { artifact: artifact.to_string(), versions: versions.into_iter().collect() }
}

fn activity_ref(key: &ActKey) -> ActivityRef {
    ActivityRef { workflow: key.0.clone(), activity: key.1.clone() }
}

// ---------------------------------------------------------------------------
// Pattern 1
// ---------------------------------------------------------------------------

/// Two activities in different workflows concurrently rewrote the same
/// artifact version. See the module docs for the clause set.
#[must_use]
pub fn detect_ww_direct(log: &[ChangeEvent]) -> Vec<InconsistencyWarning> {
    ww_instances(log, false)
}

fn ww_instances(log: &[ChangeEvent], relaxed: bool) -> Vec<InconsistencyWarning> {
    let index = index_log(log);
    let acts: Vec<(&ActKey, &BTreeMap<EntityId, Access>)> = index.iter().collect();
    let mut out = Vec::new();
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            let (key_x, arts_x) = acts[i];
            let (key_y, arts_y) = acts[j];
            if key_x.0 == key_y.0 {
                continue;
            }
            for (d, acc_x) in arts_x {
                let Some(acc_y) = arts_y.get(d) else { continue };
                let (Some(co_x), Some(co_y)) = (acc_x.write_co, acc_y.write_co) else {
                    continue;
                };
                // The later checkout plays B; its start is the detection time.
                let ((key_a, acc_a, co_a), (key_b, acc_b, co_b)) = if co_x.time <= co_y.time {
                    ((key_x, acc_x, co_x), (key_y, acc_y, co_y))
                } else {
                    ((key_y, acc_y, co_y), (key_x, acc_x, co_x))
                };
                if co_a.version != co_b.version {
                    continue;
                }
                let (ia, ib) = (
                    write_interval(acc_a).expect("write checkout present"),
                    write_interval(acc_b).expect("write checkout present"),
                );
                if !overlaps(ia, ib) {
                    continue;
                }
                let mut evidence = vec![
                    clause("activities-in-different-workflows", &[Some(co_a), Some(co_b)]),
                    // Cites the checkouts that open the intervals; the interval
                    // ends are the activities' own check-ins. Citing only
                    // first occurrences keeps the record identical whether the
                    // warning is written at its settling event or later.
                    clause("overlapping-active-intervals", &[Some(co_a), Some(co_b)]),
                    clause("same-version-at-checkout", &[Some(co_a), Some(co_b)]),
                ];
                if !relaxed {
                    let (Some(ci_a), Some(ci_b)) = (acc_a.write_ci, acc_b.write_ci) else {
                        continue;
                    };
                    if ci_a.version == ci_b.version {
                        continue;
                    }
                    evidence.push(clause(
                        "different-versions-at-checkin",
                        &[Some(ci_a), Some(ci_b)],
                    ));
                }
                let artifacts = vec![cited_versions(log, d, &evidence)];
                out.push(InconsistencyWarning {
                    kind: PatternKind::WwDirectConflict,
                    confirmed: !relaxed,
                    activities: vec![activity_ref(key_a), activity_ref(key_b)],
                    artifacts,
                    detection_time: co_b.time,
                    evidence,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Pattern 2
// ---------------------------------------------------------------------------

/// Two activities in different workflows concurrently wrote two different,
/// dependency-connected artifacts; refined to a read/write conflict when
/// the dependent activity demonstrably consumed a superseded input.
#[must_use]
pub fn detect_potential_indirect(
    log: &[ChangeEvent],
    model: &ProjectModel,
) -> Vec<InconsistencyWarning> {
    p2_instances(log, model, true)
}

fn p2_instances(
    log: &[ChangeEvent],
    model: &ProjectModel,
    refine: bool,
) -> Vec<InconsistencyWarning> {
    let index = index_log(log);
    let mut out = Vec::new();
    for (key_a, arts_a) in &index {
        for (key_b, arts_b) in &index {
            if key_a == key_b || key_a.0 == key_b.0 {
                continue;
            }
            for (d2, acc_a2) in arts_a {
                let Some(co_a) = acc_a2.write_co else { continue };
                for (d6, acc_b6) in arts_b {
                    if d6 == d2 {
                        continue;
                    }
                    let Some(co_b) = acc_b6.write_co else { continue };
                    if !reaches(model, d6, d2) {
                        continue;
                    }
                    let (ia, ib) = (
                        write_interval(acc_a2).expect("write checkout present"),
                        write_interval(acc_b6).expect("write checkout present"),
                    );
                    if !overlaps(ia, ib) {
                        continue;
                    }
                    let mut evidence = vec![
                        clause("activities-in-different-workflows", &[Some(co_a), Some(co_b)]),
                        clause("overlapping-active-intervals", &[Some(co_a), Some(co_b)]),
                        EvidenceClause {
                            clause: format!(
                                "dependency-path-to-modified-artifact:{d6}->{d2}"
                            ),
                            events: vec![],
                        },
                    ];
                    let read_b = arts_b.get(d2).and_then(|a| a.read_co);
                    let upgraded = refine
                        && match (read_b, acc_a2.write_ci) {
                            (Some(read), Some(ci)) => {
                                co_a.version == read.version && ci.version != read.version
                            }
                            _ => false,
                        };
                    let kind = if upgraded {
                        evidence.push(clause(
                            "reader-declared-shared-artifact",
                            &[read_b],
                        ));
                        evidence.push(clause(
                            "same-version-at-checkout",
                            &[Some(co_a), read_b],
                        ));
                        evidence.push(clause(
                            "input-version-superseded",
                            &[acc_a2.write_ci, read_b],
                        ));
                        PatternKind::RwDirectConflict
                    } else {
                        PatternKind::PotentialIndirectConflict
                    };
                    let artifacts = vec![
                        cited_versions(log, d2, &evidence),
                        cited_versions(log, d6, &evidence),
                    ];
                    out.push(InconsistencyWarning {
                        kind,
                        confirmed: refine,
                        activities: vec![activity_ref(key_a), activity_ref(key_b)],
                        artifacts,
                        detection_time: co_b.time,
                        evidence,
                    });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Patterns 3 and 4
// ---------------------------------------------------------------------------

/// Two same-workflow activities wrote artifacts that both depend on a
/// shared artifact, while a foreign activity rewrote that shared artifact
/// strictly between them; refined when the version chain through the
/// foreign write is exact.
#[must_use]
pub fn detect_www(log: &[ChangeEvent], model: &ProjectModel) -> Vec<InconsistencyWarning> {
    p3_instances(log, model, true)
}

fn p3_instances(
    log: &[ChangeEvent],
    model: &ProjectModel,
    refine: bool,
) -> Vec<InconsistencyWarning> {
    let index = index_log(log);
    let mut out = Vec::new();
    for (key_a, arts_a) in &index {
        for (key_b, arts_b) in &index {
            if key_a == key_b || key_a.0 != key_b.0 {
                continue;
            }
            for (key_p, arts_p) in &index {
                if key_p.0 == key_a.0 {
                    continue;
                }
                for (d6, acc_a6) in arts_a {
                    let Some(ci_a) = acc_a6.write_ci else { continue };
                    for (d7, acc_b7) in arts_b {
                        if d7 == d6 {
                            continue;
                        }
                        let Some(co_b) = acc_b7.write_co else { continue };
                        for (d2, acc_p2) in arts_p {
                            if d2 == d6 || d2 == d7 {
                                continue;
                            }
                            let (Some(co_p), Some(ci_p)) = (acc_p2.write_co, acc_p2.write_ci)
                            else {
                                continue;
                            };
                            if !(ci_a.time < co_p.time && ci_p.time < co_b.time) {
                                continue;
                            }
                            if !reaches(model, d6, d2) || !reaches(model, d7, d2) {
                                continue;
                            }
                            let mut evidence = vec![
                                clause("activities-in-same-workflow", &[Some(ci_a), Some(co_b)]),
                                clause("foreign-writer-in-different-workflow", &[Some(co_p)]),
                                clause(
                                    "foreign-write-nested-between-activities",
                                    &[Some(ci_a), Some(co_p), Some(ci_p), Some(co_b)],
                                ),
                                EvidenceClause {
                                    clause: format!(
                                        "dependency-path-from-first-artifact:{d6}->{d2}"
                                    ),
                                    events: vec![],
                                },
                                EvidenceClause {
                                    clause: format!(
                                        "dependency-path-from-second-artifact:{d7}->{d2}"
                                    ),
                                    events: vec![],
                                },
                            ];
                            let read_a = arts_a.get(d2).and_then(|a| a.read_co);
                            let read_b = arts_b.get(d2).and_then(|a| a.read_co);
                            let upgraded = refine
                                && match (read_a, read_b) {
                                    (Some(ra), Some(rb)) => {
                                        ra.version == co_p.version
                                            && ci_p.version == rb.version
                                    }
                                    _ => false,
                                };
                            let kind = if upgraded {
                                evidence.push(clause(
                                    "first-activity-read-foreign-input",
                                    &[read_a],
                                ));
                                evidence.push(clause(
                                    "foreign-writer-consumed-first-activity-version",
                                    &[read_a, Some(co_p)],
                                ));
                                evidence.push(clause(
                                    "second-activity-consumed-foreign-version",
                                    &[Some(ci_p), read_b],
                                ));
                                PatternKind::RwrDirectInconsistency
                            } else {
                                PatternKind::WwwPotentialIndirect
                            };
                            let artifacts = vec![
                                cited_versions(log, d2, &evidence),
                                cited_versions(log, d6, &evidence),
                                cited_versions(log, d7, &evidence),
                            ];
                            out.push(InconsistencyWarning {
                                kind,
                                confirmed: refine,
                                activities: vec![
                                    activity_ref(key_a),
                                    activity_ref(key_b),
                                    activity_ref(key_p),
                                ],
                                artifacts,
                                detection_time: co_p.time.max(co_b.time),
                                evidence,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// A same-workflow pair where the first activity wrote the shared artifact
/// itself, a foreign activity rewrote it strictly in between, and the
/// second activity writes a dependent artifact; refined when the second
/// activity demonstrably consumed the foreign version instead of its
/// workflow-mate's.
#[must_use]
pub fn detect_w2w(log: &[ChangeEvent], model: &ProjectModel) -> Vec<InconsistencyWarning> {
    p4_instances(log, model, true)
}

fn p4_instances(
    log: &[ChangeEvent],
    model: &ProjectModel,
    refine: bool,
) -> Vec<InconsistencyWarning> {
    let index = index_log(log);
    let mut out = Vec::new();
    for (key_a, arts_a) in &index {
        for (key_b, arts_b) in &index {
            if key_a == key_b || key_a.0 != key_b.0 {
                continue;
            }
            for (key_p, arts_p) in &index {
                if key_p.0 == key_a.0 {
                    continue;
                }
                for (d2, acc_a2) in arts_a {
                    let Some(ci_a) = acc_a2.write_ci else { continue };
                    let Some(acc_p2) = arts_p.get(d2) else { continue };
                    let (Some(co_p), Some(ci_p)) = (acc_p2.write_co, acc_p2.write_ci) else {
                        continue;
                    };
                    for (d7, acc_b7) in arts_b {
                        if d7 == d2 {
                            continue;
                        }
                        let Some(co_b) = acc_b7.write_co else { continue };
                        if !(ci_a.time < co_p.time && ci_p.time < co_b.time) {
                            continue;
                        }
                        if !reaches(model, d7, d2) {
                            continue;
                        }
                        let mut evidence = vec![
                            clause("activities-in-same-workflow", &[Some(ci_a), Some(co_b)]),
                            clause("foreign-writer-in-different-workflow", &[Some(co_p)]),
                            clause(
                                "foreign-write-nested-between-activities",
                                &[Some(ci_a), Some(co_p), Some(ci_p), Some(co_b)],
                            ),
                            EvidenceClause {
                                clause: format!(
                                    "dependency-path-to-previous-artifact:{d7}->{d2}"
                                ),
                                events: vec![],
                            },
                        ];
                        let read_b = arts_b.get(d2).and_then(|a| a.read_co);
                        let upgraded = refine
                            && match read_b {
                                Some(rb) => {
                                    ci_a.version == co_p.version && ci_p.version == rb.version
                                }
                                None => false,
                            };
                        let kind = if upgraded {
                            evidence.push(clause(
                                "second-activity-declared-shared-artifact",
                                &[read_b],
                            ));
                            evidence.push(clause(
                                "foreign-writer-consumed-first-activity-version",
                                &[Some(ci_a), Some(co_p)],
                            ));
                            evidence.push(clause(
                                "second-activity-consumed-foreign-version",
                                &[Some(ci_p), read_b],
                            ));
                            PatternKind::WwrDirectInconsistency
                        } else {
                            PatternKind::W2wPotentialIndirect
                        };
                        let artifacts = vec![
                            cited_versions(log, d2, &evidence),
                            cited_versions(log, d7, &evidence),
                        ];
                        out.push(InconsistencyWarning {
                            kind,
                            confirmed: refine,
                            activities: vec![
                                activity_ref(key_a),
                                activity_ref(key_b),
                                activity_ref(key_p),
                            ],
                            artifacts,
                            detection_time: co_p.time.max(co_b.time),
                            evidence,
                        });
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Combined detection and canonical order
// ---------------------------------------------------------------------------

fn canonical_sort(warnings: &mut [InconsistencyWarning]) {
    warnings.sort_by(|a, b| {
        a.detection_time
            .total_cmp(&b.detection_time)
            .then_with(|| a.kind.cmp(&b.kind))
            .then_with(|| a.activities.cmp(&b.activities))
            .then_with(|| {
                let la: Vec<&str> = a.artifacts.iter().map(|v| v.artifact.as_str()).collect();
                let lb: Vec<&str> = b.artifacts.iter().map(|v| v.artifact.as_str()).collect();
                la.cmp(&lb)
            })
    });
}

/// All four offline detectors, canonically ordered by
/// (detection time, kind, activities, artifacts).
#[must_use]
pub fn detect_all(log: &[ChangeEvent], model: &ProjectModel) -> Vec<InconsistencyWarning> {
    let mut out = detect_ww_direct(log);
    out.extend(detect_potential_indirect(log, model));
    out.extend(detect_www(log, model));
    out.extend(detect_w2w(log, model));
    canonical_sort(&mut out);
    out
}

fn possibilities(log: &[ChangeEvent], model: &ProjectModel) -> Vec<InconsistencyWarning> {
    let mut out = ww_instances(log, true);
    out.extend(p2_instances(log, model, false));
    out.extend(p3_instances(log, model, false));
    out.extend(p4_instances(log, model, false));
    canonical_sort(&mut out);
    out
}

// ---------------------------------------------------------------------------
// Online monitor
// ---------------------------------------------------------------------------

/// Identifies one pattern instance regardless of refinement: base pattern
/// family, activities, artifacts.
type WarningKey = (u8, Vec<(CswId, ActivityId)>, Vec<EntityId>);

fn family(kind: PatternKind) -> u8 {
    match kind {
        PatternKind::WwDirectConflict => 1,
        PatternKind::PotentialIndirectConflict | PatternKind::RwDirectConflict => 2,
        PatternKind::WwwPotentialIndirect | PatternKind::RwrDirectInconsistency => 3,
        PatternKind::W2wPotentialIndirect | PatternKind::WwrDirectInconsistency => 4,
    }
}

fn key_of(warning: &InconsistencyWarning) -> WarningKey {
    (
        family(warning.kind),
        warning
            .activities
            .iter()
            .map(|a| (a.workflow.clone(), a.activity.clone()))
            .collect(),
        warning.artifacts.iter().map(|a| a.artifact.clone()).collect(),
    )
}

/// Incremental detector: feed events in time order, collect warnings at
/// the earliest moment they are decidable.
///
/// Each pattern instance is reported at most twice: once as a possibility
/// when its checkout-observable clauses first hold, and once confirmed
/// when the full clause set and the refinement question are settled.
/// [`Monitor::finish`] flushes instances whose refinement could not be
/// ruled out before the log ended; after it, the confirmed warnings equal
/// [`detect_all`] over the same events.
#[derive(Debug)]
pub struct Monitor<'a> {
    model: &'a ProjectModel,
    log: Vec<ChangeEvent>,
    reported_possibilities: BTreeSet<WarningKey>,
    reported_confirmed: BTreeSet<WarningKey>,
}

impl<'a> Monitor<'a> {
    #[must_use]
    pub fn new(model: &'a ProjectModel) -> Self {
        Monitor {
            model,
            log: Vec::new(),
            reported_possibilities: BTreeSet::new(),
            reported_confirmed: BTreeSet::new(),
        }
    }

    /// The events observed so far.
    #[must_use]
    pub fn observed(&self) -> &[ChangeEvent] {
        &self.log
    }

    /// Is this warning's refinement question settled by the observed log?
    fn settled(&self, warning: &InconsistencyWarning) -> bool {
        match family(warning.kind) {
            1 => true,
            2 => {
                // Decided at A's check-in of the shared artifact: afterwards
                // any late read of it must see a newer version.
                if warning.kind == PatternKind::RwDirectConflict {
                    return true;
                }
                let a = &warning.activities[0];
                let d2 = &warning.artifacts[0].artifact;
                self.log.iter().any(|e| {
                    e.action == EventAction::CheckIn
                        && e.workflow == a.workflow
                        && e.activity == a.activity
                        && e.artifact == *d2
                })
            }
            _ => {
                // Decided once B's read of the shared artifact is on record;
                // a missing read keeps the refinement open until the flush.
                if matches!(
                    warning.kind,
                    PatternKind::RwrDirectInconsistency | PatternKind::WwrDirectInconsistency
                ) {
                    return true;
                }
                let b = &warning.activities[1];
                let d2 = &warning.artifacts[0].artifact;
                self.log.iter().any(|e| {
                    e.action == EventAction::CheckOut
                        && e.mode == AccessMode::Read
                        && e.workflow == b.workflow
                        && e.activity == b.activity
                        && e.artifact == *d2
                })
            }
        }
    }

    /// Observe one event; returns the warnings this event surfaces, newly
    /// possible ones first.
    pub fn step(&mut self, event: ChangeEvent) -> Result<Vec<InconsistencyWarning>, StoreError> {
        let last = self.log.last().map(|e| e.time).unwrap_or(0.0);
        if !event.time.is_finite() || event.time <= last {
            return Err(StoreError::TimeOrder { time: event.time, last });
        }
        self.log.push(event);

        let mut emitted = Vec::new();
        for warning in possibilities(&self.log, self.model) {
            let key = key_of(&warning);
            if !self.reported_possibilities.contains(&key)
                && !self.reported_confirmed.contains(&key)
            {
                self.reported_possibilities.insert(key);
                emitted.push(warning);
            }
        }
        for warning in detect_all(&self.log, self.model) {
            let key = key_of(&warning);
            if !self.reported_confirmed.contains(&key) && self.settled(&warning) {
                self.reported_confirmed.insert(key);
                emitted.push(warning);
            }
        }
        Ok(emitted)
    }

    /// End of the event stream: confirm every remaining instance whose
    /// refinement stayed open.
    pub fn finish(&mut self) -> Vec<InconsistencyWarning> {
        let mut emitted = Vec::new();
        for warning in detect_all(&self.log, self.model) {
            let key = key_of(&warning);
            if self.reported_confirmed.insert(key) {
                emitted.push(warning);
            }
        }
        emitted
    }
}

// ---------------------------------------------------------------------------
// Resolution advice
// ---------------------------------------------------------------------------

/// A warning of either stage — build-time (shared planned artifacts) or
/// run-time (pattern match).
#[derive(Debug, Clone, Copy)]
pub enum WarningRef<'a> {
    BuildTime(&'a BuildTimeWarning),
    RunTime(&'a InconsistencyWarning),
}

impl<'a> From<&'a BuildTimeWarning> for WarningRef<'a> {
    fn from(w: &'a BuildTimeWarning) -> Self {
        WarningRef::BuildTime(w)
    }
}

impl<'a> From<&'a InconsistencyWarning> for WarningRef<'a> {
    fn from(w: &'a InconsistencyWarning) -> Self {
        WarningRef::RunTime(w)
    }
}

/// The advisory resolution strategies for a warning, with the involved
/// artifacts named. Negotiation between the workers stays the primary
/// mechanism; these are starting points for it.
#[must_use]
pub fn suggest_resolutions(warning: WarningRef<'_>) -> Vec<String> {
    let artifacts: Vec<String> = match warning {
        WarningRef::BuildTime(w) => w.shared_artifacts.iter().cloned().collect(),
        WarningRef::RunTime(w) => w.artifacts.iter().map(|a| a.artifact.clone()).collect(),
    };
    let list = artifacts.join(", ");
    vec![
        format!(
            "Use a fine-grain work approach: the workflows can continue concurrently \
             if they modify different parts of {list}."
        ),
        "Create a new change request combining the change requests behind the \
         inconsistency-related workflows, and replace those workflows with ones \
         generated for the combined request; this can apply to potential \
         inconsistencies between planning workflows."
            .to_string(),
        "Merge the inconsistency-related parts of the workflows into a new workflow."
            .to_string(),
    ]
}

// ---------------------------------------------------------------------------
// Simulation report
// ---------------------------------------------------------------------------

/// The machine-readable outcome of replaying a scenario: the full event
/// log and every warning the monitor emitted, in emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimulationReport {
    pub schema_version: String,
    pub events: Vec<ChangeEvent>,
    pub warnings: Vec<InconsistencyWarning>,
}

/// Run the monitor over an already-validated log and assemble the report.
#[must_use]
pub fn simulate_report(log: &[ChangeEvent], model: &ProjectModel) -> SimulationReport {
    let mut monitor = Monitor::new(model);
    let mut warnings = Vec::new();
    for event in log {
        warnings.extend(
            monitor.step(event.clone()).expect("store logs are strictly time-ordered"),
        );
    }
    warnings.extend(monitor.finish());
    SimulationReport {
        schema_version: crate::ingest::SCHEMA_VERSION.to_string(),
        events: log.to_vec(),
        warnings,
    }
}

/// Parse a previously written report.
pub fn parse_report(text: &str) -> Result<SimulationReport, crate::ingest::DocumentError> {
    let report: SimulationReport =
        serde_json::from_str(text).map_err(crate::ingest::classify_json_error)?;
    crate::ingest::check_schema_version(&report.schema_version)?;
    Ok(report)
}

/// Serialize a report (pretty-printed, trailing newline).
#[must_use]
pub fn serialize_report(report: &SimulationReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

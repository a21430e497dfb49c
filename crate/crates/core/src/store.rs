//! Workflow execution: the lifecycle state machine, an optimistic versioned
//! artifact store with check-out/check-in bookkeeping, the build-time
//! shared-artifact check, and scenario replay.
//!
//! # Design
//!
//! - The store is *optimistic*: it never blocks or rejects concurrent
//!   check-ins. Two activities may both check out version 1 and both check
//!   in; the store simply records versions 2 and 3. Flagging that as a
//!   conflict is the detector's job — prevention would hide exactly the
//!   situations this system exists to surface.
//! - Time is one logical clock: scenario timestamps, strictly increasing
//!   across the whole log. Distributed workers are simulated, which keeps
//!   replays deterministic.
//! - An activity's interval is derived, not declared: it starts at the
//!   activity's first checkout and finishes with the check-in that closes
//!   its last open write checkout. Any later checkout reopens the activity
//!   (its finish becomes undecided again).
//! - Versions are opaque numbered tokens, 1-based per artifact; version 1
//!   always exists implicitly and belongs to no activity.

use crate::csw::{ActivityId, Csw, CswId, CswState};
use crate::ingest::{EventAction, ScenarioDocument};
use crate::model::{EntityId, ProjectModel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Store vocabulary
// ---------------------------------------------------------------------------

/// Who created a version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Creator {
    /// The baseline version present before any change work.
    Initial,
    /// The activity whose check-in produced the version.
    Activity(ActivityId),
}

/// One version of one artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Version {
    pub artifact: EntityId,
    /// 1-based, strictly increasing per artifact; number 1 is [`Creator::Initial`].
    pub number: u32,
    pub created_by: Creator,
    pub created_at: f64,
}

/// Whether a checkout was taken to modify the artifact or only to consult it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessMode {
    Read,
    Write,
}

/// One logged store operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChangeEvent {
    pub time: f64,
    pub workflow: CswId,
    pub activity: ActivityId,
    pub artifact: EntityId,
    pub action: EventAction,
    /// For a checkout: the version handed out. For a check-in: the version
    /// created.
    pub version: Version,
    /// Check-ins always have mode [`AccessMode::Write`].
    pub mode: AccessMode,
}

/// Everything that can go wrong talking to the store.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("workflow {workflow:?} cannot move from {from:?} to {to:?}")]
    IllegalTransition { workflow: String, from: CswState, to: CswState },
    #[error("workflow {workflow:?} is {state:?}, not Executing")]
    WorkflowNotExecuting { workflow: String, state: CswState },
    #[error("time {time} is not after the last logged time {last}")]
    TimeOrder { time: f64, last: f64 },
    #[error("activity {activity:?} holds no open write checkout of {artifact:?}")]
    NoOpenCheckout { activity: String, artifact: String },
    #[error("unknown workflow {workflow:?}")]
    UnknownWorkflow { workflow: String },
    #[error("unknown activity {activity:?} in workflow {workflow:?}")]
    UnknownActivity { workflow: String, activity: String },
    #[error("artifact {artifact:?} is not declared by activity {activity:?}")]
    UndeclaredArtifact { activity: String, artifact: String },
}

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------

/// Move a workflow from Planning to Executing.
pub fn start_workflow(csw: &mut Csw) -> Result<(), StoreError> {
    if csw.state != CswState::Planning {
        return Err(StoreError::IllegalTransition {
            workflow: csw.id.clone(),
            from: csw.state,
            to: CswState::Executing,
        });
    }
    csw.state = CswState::Executing;
    Ok(())
}

/// Move a workflow from Executing to Finished.
pub fn finish_workflow(csw: &mut Csw) -> Result<(), StoreError> {
    if csw.state != CswState::Executing {
        return Err(StoreError::IllegalTransition {
            workflow: csw.id.clone(),
            from: csw.state,
            to: CswState::Finished,
        });
    }
    csw.state = CswState::Finished;
    Ok(())
}

// ---------------------------------------------------------------------------
// Build-time shared-artifact check
// ---------------------------------------------------------------------------

/// How two workflows were related when a shared artifact was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuildTimeWarningKind {
    PlanningVsPlanning,
    PlanningVsExecuting,
}

/// Two workflows plan to touch the same artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BuildTimeWarning {
    pub kind: BuildTimeWarningKind,
    pub workflow: CswId,
    pub other_workflow: CswId,
    pub shared_artifacts: std::collections::BTreeSet<EntityId>,
    pub suggestion: String,
}

/// Compare a newly planned workflow against the other live workflows of the
/// system: one warning per other workflow sharing at least one artifact.
/// Finished workflows are no longer a hazard and produce nothing.
#[must_use]
pub fn buildtime_check(new_csw: &Csw, others: &[Csw]) -> Vec<BuildTimeWarning> {
    let mut warnings = Vec::new();
    for other in others {
        if other.id == new_csw.id {
            continue;
        }
        let kind = match other.state {
            CswState::Planning => BuildTimeWarningKind::PlanningVsPlanning,
            CswState::Executing => BuildTimeWarningKind::PlanningVsExecuting,
            CswState::Finished => continue,
        };
        let shared: std::collections::BTreeSet<EntityId> =
            new_csw.artifacts.intersection(&other.artifacts).cloned().collect();
        if shared.is_empty() {
            continue;
        }
        let suggestion = match kind {
            BuildTimeWarningKind::PlanningVsPlanning => format!(
                "renegotiate the change requests behind {:?} and {:?} so each shared \
                 artifact is changed by one workflow",
                new_csw.id, other.id
            ),
            BuildTimeWarningKind::PlanningVsExecuting => format!(
                "delay starting {:?} until executing workflow {:?} has finished",
                new_csw.id, other.id
            ),
        };
        warnings.push(BuildTimeWarning {
            kind,
            workflow: new_csw.id.clone(),
            other_workflow: other.id.clone(),
            shared_artifacts: shared,
            suggestion,
        });
    }
    warnings
}

// ---------------------------------------------------------------------------
// The store
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
struct OpenCheckout {
    mode: AccessMode,
    version: u32,
}

/// The versioned artifact store plus the workflows it executes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StoreState {
    csws: BTreeMap<CswId, Csw>,
    histories: BTreeMap<EntityId, Vec<Version>>,
    open: BTreeMap<(CswId, ActivityId, EntityId), OpenCheckout>,
    log: Vec<ChangeEvent>,
}

impl StoreState {
    /// A store executing the given workflows (ids must be unique).
    #[must_use]
    pub fn new(csws: Vec<Csw>) -> Self {
        let mut map = BTreeMap::new();
        for csw in csws {
            let previous = map.insert(csw.id.clone(), csw);
            debug_assert!(previous.is_none(), "duplicate workflow id");
        }
        StoreState { csws: map, ..StoreState::default() }
    }

    /// The workflows, including interval and state updates from execution.
    #[must_use]
    pub fn workflows(&self) -> impl Iterator<Item = &Csw> {
        self.csws.values()
    }

    /// One workflow by id.
    #[must_use]
    pub fn workflow(&self, id: &str) -> Option<&Csw> {
        self.csws.get(id)
    }

    /// Mutable access for lifecycle transitions.
    pub fn workflow_mut(&mut self, id: &str) -> Option<&mut Csw> {
        self.csws.get_mut(id)
    }

    /// The append-only, time-ordered event log.
    #[must_use]
    pub fn log(&self) -> &[ChangeEvent] {
        &self.log
    }

    /// Version history of one artifact, oldest first. Empty when the
    /// artifact was never touched.
    #[must_use]
    pub fn history(&self, artifact: &str) -> &[Version] {
        self.histories.get(artifact).map(Vec::as_slice).unwrap_or(&[])
    }

    fn last_time(&self) -> f64 {
        self.log.last().map(|e| e.time).unwrap_or(0.0)
    }

    fn check_time(&self, time: f64) -> Result<(), StoreError> {
        let last = self.last_time();
        if !time.is_finite() || time <= last {
            return Err(StoreError::TimeOrder { time, last });
        }
        Ok(())
    }

    fn executing_activity(
        &mut self,
        workflow: &str,
        activity: &str,
    ) -> Result<&mut crate::csw::Activity, StoreError> {
        let csw = self.csws.get_mut(workflow).ok_or_else(|| StoreError::UnknownWorkflow {
            workflow: workflow.to_string(),
        })?;
        if csw.state != CswState::Executing {
            return Err(StoreError::WorkflowNotExecuting {
                workflow: workflow.to_string(),
                state: csw.state,
            });
        }
        csw.activities.iter_mut().find(|a| a.id == activity).ok_or_else(|| {
            StoreError::UnknownActivity {
                workflow: workflow.to_string(),
                activity: activity.to_string(),
            }
        })
    }

    /// The latest version of an artifact, creating the implicit initial
    /// version on first contact.
    fn latest(&mut self, artifact: &str) -> Version {
        self.histories
            .entry(artifact.to_string())
            .or_insert_with(|| {
                vec![Version {
                    artifact: artifact.to_string(),
                    number: 1,
                    created_by: Creator::Initial,
                    created_at: 0.0,
                }]
            })
            .last()
            .expect("histories are never empty")
            .clone()
    }

    /// Check out the latest version of `artifact` for `activity`.
    ///
    /// Starts (or restarts) the activity's interval; a fresh checkout after
    /// the activity had finished makes its finish undecided again.
    pub fn check_out(
        &mut self,
        workflow: &str,
        activity: &str,
        artifact: &str,
        time: f64,
        mode: AccessMode,
    ) -> Result<ChangeEvent, StoreError> {
        self.check_time(time)?;
        let version = self.latest(artifact);
        let slot = self.executing_activity(workflow, activity)?;
        slot.interval.start = Some(match slot.interval.start {
            Some(start) => start.min(time),
            None => time,
        });
        slot.interval.finish = None;
        self.open.insert(
            (workflow.to_string(), activity.to_string(), artifact.to_string()),
            OpenCheckout { mode, version: version.number },
        );
        let event = ChangeEvent {
            time,
            workflow: workflow.to_string(),
            activity: activity.to_string(),
            artifact: artifact.to_string(),
            action: EventAction::CheckOut,
            version,
            mode,
        };
        self.log.push(event.clone());
        Ok(event)
    }

    /// Check in `artifact`, creating the next version.
    ///
    /// Requires an open write checkout by the same activity. If this closes
    /// the activity's last open write checkout, the activity's finish time
    /// is set.
    pub fn check_in(
        &mut self,
        workflow: &str,
        activity: &str,
        artifact: &str,
        time: f64,
    ) -> Result<ChangeEvent, StoreError> {
        self.check_time(time)?;
        let key = (workflow.to_string(), activity.to_string(), artifact.to_string());
        match self.open.get(&key) {
            Some(open) if open.mode == AccessMode::Write => {}
            _ => {
                return Err(StoreError::NoOpenCheckout {
                    activity: activity.to_string(),
                    artifact: artifact.to_string(),
                })
            }
        }
        // Fail before mutating anything if the workflow/activity is gone or
        // not executing.
        self.executing_activity(workflow, activity)?;
        self.open.remove(&key);

        let history = self.histories.get_mut(artifact).expect("write checkout created history");
        let version = Version {
            artifact: artifact.to_string(),
            number: history.last().expect("non-empty history").number + 1,
            created_by: Creator::Activity(activity.to_string()),
            created_at: time,
        };
        history.push(version.clone());

        let still_writing = self
            .open
            .iter()
            .any(|((w, a, _), open)| {
                w == workflow && a == activity && open.mode == AccessMode::Write
            });
        let slot = self.executing_activity(workflow, activity).expect("checked above");
        if !still_writing {
            slot.interval.finish = Some(time);
        }
        let event = ChangeEvent {
            time,
            workflow: workflow.to_string(),
            activity: activity.to_string(),
            artifact: artifact.to_string(),
            action: EventAction::CheckIn,
            version,
            mode: AccessMode::Write,
        };
        self.log.push(event.clone());
        Ok(event)
    }
}

// ---------------------------------------------------------------------------
// Scenario replay
// ---------------------------------------------------------------------------

/// Replay failure, located at the scenario declaration or event at fault.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("scenario setup: {0}")]
    Setup(String),
    #[error("event {index} at time {time}: {source}")]
    Event {
        index: usize,
        time: f64,
        #[source]
        source: StoreError,
    },
}

/// Replay a scenario against the given workflows.
///
/// Scenario declarations are merged first: per activity, `reads` becomes
/// the read set (it must name model artifacts and stay disjoint from the
/// write set) and `writes`, when present, replaces the write set — run-time
/// re-partitioning of planned work. A workflow still in Planning starts
/// executing at its first event. Events then stream through
/// [`StoreState::check_out`] / [`StoreState::check_in`], with each event's
/// access mode derived from the activity's declared sets; the first
/// protocol violation aborts the replay.
pub fn replay_scenario(
    model: &ProjectModel,
    csws: &[Csw],
    scenario: &ScenarioDocument,
) -> Result<StoreState, ReplayError> {
    let mut seen: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for csw in csws {
        if !seen.insert(&csw.id) {
            return Err(ReplayError::Setup(format!("duplicate workflow id {:?}", csw.id)));
        }
    }
    let mut store = StoreState::new(csws.to_vec());

    for decl in &scenario.workflows {
        let csw = store
            .csws
            .get_mut(&decl.id)
            .ok_or_else(|| ReplayError::Setup(format!("unknown workflow {:?}", decl.id)))?;
        for activity_decl in &decl.activities {
            let activity = csw
                .activities
                .iter_mut()
                .find(|a| a.id == activity_decl.id)
                .ok_or_else(|| {
                    ReplayError::Setup(format!(
                        "workflow {:?} has no activity {:?}",
                        decl.id, activity_decl.id
                    ))
                })?;
            if let Some(writes) = &activity_decl.writes {
                activity.write_set = writes.iter().cloned().collect();
            }
            activity.read_set = activity_decl.reads.iter().cloned().collect();
            for artifact in activity.write_set.union(&activity.read_set) {
                if model.entity(artifact).is_none() {
                    return Err(ReplayError::Setup(format!(
                        "activity {:?} declares unknown artifact {artifact:?}",
                        activity_decl.id
                    )));
                }
            }
            if let Some(shared) = activity.write_set.intersection(&activity.read_set).next() {
                return Err(ReplayError::Setup(format!(
                    "activity {:?} declares {shared:?} as both read and write",
                    activity_decl.id
                )));
            }
            if let Some(worker) = &activity_decl.worker {
                activity.worker = Some(worker.clone());
                csw.workers.insert(worker.clone());
            }
            csw.artifacts.extend(activity.write_set.iter().cloned());
            csw.artifacts.extend(activity.read_set.iter().cloned());
        }
    }

    for (index, event) in scenario.events.iter().enumerate() {
        let located = |source: StoreError| ReplayError::Event { index, time: event.time, source };

        let activity = scenario
            .activity_decl(&event.workflow, &event.activity)
            .expect("validated at parse time");
        let csw = store.csws.get_mut(&event.workflow).ok_or_else(|| {
            located(StoreError::UnknownWorkflow { workflow: event.workflow.clone() })
        })?;
        if csw.state == CswState::Planning {
            start_workflow(csw).expect("planning workflows can start");
        }

        let slot = csw.activities.iter().find(|a| a.id == activity.id).ok_or_else(|| {
            located(StoreError::UnknownActivity {
                workflow: event.workflow.clone(),
                activity: event.activity.clone(),
            })
        })?;
        let mode = if slot.write_set.contains(&event.artifact) {
            AccessMode::Write
        } else if slot.read_set.contains(&event.artifact) {
            AccessMode::Read
        } else {
            return Err(located(StoreError::UndeclaredArtifact {
                activity: event.activity.clone(),
                artifact: event.artifact.clone(),
            }));
        };

        match event.action {
            EventAction::CheckOut => store
                .check_out(&event.workflow, &event.activity, &event.artifact, event.time, mode)
                .map_err(located)?,
            EventAction::CheckIn => store
                .check_in(&event.workflow, &event.activity, &event.artifact, event.time)
                .map_err(located)?,
        };
    }
    Ok(store)
}

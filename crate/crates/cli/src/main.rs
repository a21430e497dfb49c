//! Command-line front end: wires model ingestion → relationship generation
//! → impact analysis → workflow derivation → scenario replay → detection,
//! reading and writing the library's JSON document formats.
//!
//! Exit codes: 0 success (warnings included — findings are not failures),
//! 1 invalid document content or semantics, 2 I/O failures, 3 scenario
//! protocol violations, 4 warnings when `--strict` asked for them to fail.
//! Machine-readable output goes to the `--out` path (standard output when
//! omitted); every diagnostic goes to standard error.

use changeflow::bdr::{generate_bdrs, parse_matrix, CandidateMatrix};
use changeflow::csw::{generate_csw, serialize_csws, CswDocument};
use changeflow::detect::{simulate_report, suggest_resolutions, WarningRef};
use changeflow::impact::{
    dependency_graph, export_dot, serialize_graph, DependencyGraph, EdgeKind,
};
use changeflow::ingest::{
    parse_model, parse_scenario, serialize_model, ScenarioDocument, SCHEMA_VERSION,
};
use changeflow::model::ProjectModel;
use changeflow::store::{buildtime_check, replay_scenario, BuildTimeWarning, ReplayError};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "changeflow",
    version,
    about = "Derive dependency relationships, change workflows and \
             concurrent-change warnings from UML project models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Output rendering: the JSON document formats, or a text summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Human,
}

#[derive(Subcommand)]
enum Command {
    /// Generate basic dependency relationships; writes the augmented model.
    GenBdr {
        /// Project model file.
        model: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Candidate-matrix override file restricting which relationship
        /// kinds may hold between element kinds.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Compute the artifacts potentially impacted by changing one root.
    Impact {
        /// Project model file (should already carry relationships;
        /// see --auto-bdr).
        model: PathBuf,
        /// Id of the element or diagram the change starts at.
        root: String,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the graph as DOT text to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Generate relationships first instead of expecting them in the
        /// model file.
        #[arg(long)]
        auto_bdr: bool,
        /// Candidate-matrix override used with --auto-bdr.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Derive a change support workflow for one change root.
    GenCsw {
        /// Project model file (should already carry relationships;
        /// see --auto-bdr).
        model: PathBuf,
        /// Id of the element or diagram the change starts at.
        root: String,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Change-request identifier; defaults to "cr-<root>".
        #[arg(long)]
        change_request: Option<String>,
        /// Existing workflow document to check the new workflow against;
        /// shared-artifact warnings go to standard error (exit stays 0).
        #[arg(long)]
        against: Option<PathBuf>,
        /// Generate relationships first instead of expecting them in the
        /// model file.
        #[arg(long)]
        auto_bdr: bool,
        /// Candidate-matrix override used with --auto-bdr.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Replay a check-out/check-in scenario over workflows and report
    /// inconsistency warnings with the final event log.
    Simulate {
        /// Project model file; its relationships drive indirect-conflict
        /// detection (augment with gen-bdr first if needed).
        model: PathBuf,
        /// Scenario file: workflow declarations plus timed events.
        scenario: PathBuf,
        /// One or more workflow documents; all their workflows participate.
        #[arg(required = true)]
        csws: Vec<PathBuf>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 4 when the report contains any warning.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

/// Failures grouped by exit code.
enum CliError {
    /// Invalid document content or semantics → exit 1.
    Validation(String),
    /// Unreadable or unwritable files → exit 2.
    Io(String),
    /// The scenario broke the check-out/check-in protocol → exit 3.
    Protocol(String),
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(CliError::Validation(message)) => fail(1, &message),
        Err(CliError::Io(message)) => fail(2, &message),
        Err(CliError::Protocol(message)) => fail(3, &message),
    }
}

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("changeflow: error: {message}");
    ExitCode::from(code)
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::GenBdr { model, out, matrix, format } => {
            let mut project = load_model(&model)?;
            project.bdrs = generate_bdrs(&project, &load_matrix(matrix.as_deref())?)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let text = match format {
                Format::Json => serialize_model(&project),
                Format::Human => render_bdrs(&project),
            };
            write_out(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Impact { model, root, out, dot, auto_bdr, matrix, format } => {
            let project = loaded_with_bdrs(&model, auto_bdr, matrix.as_deref())?;
            let graph = dependency_graph(&project, &root)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(dot_path) = dot {
                write_file(&dot_path, &export_dot(&graph))?;
            }
            let text = match format {
                Format::Json => serialize_graph(&graph),
                Format::Human => render_graph(&graph),
            };
            write_out(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenCsw { model, root, out, change_request, against, auto_bdr, matrix, format } => {
            let project = loaded_with_bdrs(&model, auto_bdr, matrix.as_deref())?;
            let change_request = change_request.unwrap_or_else(|| format!("cr-{root}"));
            let csw_id = format!("{change_request}.g1.1");
            let csw = generate_csw(&project, &root, &csw_id, &change_request)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if let Some(against_path) = against {
                let others = load_csws(&against_path)?;
                for warning in buildtime_check(&csw, &others.csws) {
                    eprintln!("changeflow: build-time warning: {}", render_buildtime(&warning));
                }
            }
            let doc = CswDocument { schema_version: SCHEMA_VERSION.to_string(), csws: vec![csw] };
            let text = match format {
                Format::Json => serialize_csws(&doc),
                Format::Human => render_csws(&doc),
            };
            write_out(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { model, scenario, csws, out, strict, format } => {
            let project = load_model(&model)?;
            let scenario = load_scenario(&scenario)?;
            let mut workflows = Vec::new();
            let mut seen: BTreeSet<String> = BTreeSet::new();
            for path in &csws {
                for csw in load_csws(path)?.csws {
                    if !seen.insert(csw.id.clone()) {
                        return Err(CliError::Validation(format!(
                            "workflow id {:?} appears in more than one document",
                            csw.id
                        )));
                    }
                    workflows.push(csw);
                }
            }
            let store =
                replay_scenario(&project, &workflows, &scenario).map_err(|err| match err {
                    ReplayError::Setup(_) => CliError::Validation(err.to_string()),
                    ReplayError::Event { .. } => CliError::Protocol(err.to_string()),
                })?;
            let report = simulate_report(store.log(), &project);
            let text = match format {
                Format::Json => changeflow::detect::serialize_report(&report),
                Format::Human => render_report(&report),
            };
            write_out(out.as_deref(), &text)?;
            if strict && !report.warnings.is_empty() {
                eprintln!(
                    "changeflow: {} warnings reported in strict mode",
                    report.warnings.len()
                );
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

// ---------------------------------------------------------------------------
// File plumbing
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<ProjectModel, CliError> {
    parse_model(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_matrix(path: Option<&Path>) -> Result<CandidateMatrix, CliError> {
    match path {
        None => Ok(CandidateMatrix::default()),
        Some(path) => parse_matrix(&read_file(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display()))),
    }
}

fn load_csws(path: &Path) -> Result<CswDocument, CliError> {
    changeflow::csw::parse_csws(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioDocument, CliError> {
    parse_scenario(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Load a model and ensure it carries relationships: generate them when
/// asked, otherwise point at the flag if the model has none to work with.
fn loaded_with_bdrs(
    path: &Path,
    auto_bdr: bool,
    matrix: Option<&Path>,
) -> Result<ProjectModel, CliError> {
    let mut project = load_model(path)?;
    if auto_bdr {
        project.bdrs = generate_bdrs(&project, &load_matrix(matrix)?)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    } else if project.bdrs.is_empty() && !project.elements.is_empty() {
        eprintln!(
            "changeflow: note: {} carries no basic dependency relationships; \
             pass --auto-bdr to generate them first",
            path.display()
        );
    }
    Ok(project)
}

// ---------------------------------------------------------------------------
// Human-readable rendering
// ---------------------------------------------------------------------------

fn render_bdrs(model: &ProjectModel) -> String {
    let mut out = format!("{} basic dependency relationships\n", model.bdrs.len());
    for bdr in &model.bdrs {
        let _ = writeln!(out, "  {:?}: {} <- {}", bdr.kind, bdr.target, bdr.source);
    }
    out
}

fn edge_label(kind: EdgeKind) -> String {
    match kind {
        EdgeKind::Bdr(k) => format!("{k:?}"),
        EdgeKind::Intra(k) => format!("intra {k:?}"),
    }
}

fn render_graph(graph: &DependencyGraph) -> String {
    let mut out = format!(
        "{} artifacts potentially impacted by changing {}\n",
        graph.vertices.len(),
        graph.root
    );
    for vertex in &graph.vertices {
        let marker = if *vertex == graph.root { " (root)" } else { "" };
        let _ = writeln!(out, "  {vertex}{marker}");
    }
    for edge in &graph.edges {
        let _ = writeln!(out, "  {} -> {} [{}]", edge.source, edge.target, edge_label(edge.kind));
    }
    out
}

fn join(ids: &BTreeSet<String>) -> String {
    ids.iter().cloned().collect::<Vec<_>>().join(", ")
}

fn render_csws(doc: &CswDocument) -> String {
    let mut out = String::new();
    for csw in &doc.csws {
        let _ = writeln!(
            out,
            "workflow {} (change request {}, grade {}, root {})",
            csw.id, csw.change_request_id, csw.grade, csw.root_artifact
        );
        for activity in &csw.activities {
            let _ = write!(out, "  activity {}: writes {}", activity.id, join(&activity.write_set));
            if !activity.read_set.is_empty() {
                let _ = write!(out, "; reads {}", join(&activity.read_set));
            }
            if activity.composite {
                let _ = write!(out, " [composite]");
            }
            out.push('\n');
        }
        for (from, to) in &csw.arcs {
            let _ = writeln!(out, "  order: {from} before {to}");
        }
    }
    out
}

fn render_buildtime(warning: &BuildTimeWarning) -> String {
    format!(
        "workflows {:?} and {:?} both plan to touch {}; {}",
        warning.workflow,
        warning.other_workflow,
        join(&warning.shared_artifacts),
        warning.suggestion
    )
}

fn render_report(report: &changeflow::detect::SimulationReport) -> String {
    let mut out =
        format!("{} events, {} warnings\n", report.events.len(), report.warnings.len());
    for warning in &report.warnings {
        let activities = warning
            .activities
            .iter()
            .map(|a| format!("{}/{}", a.workflow, a.activity))
            .collect::<Vec<_>>()
            .join(", ");
        let artifacts = warning
            .artifacts
            .iter()
            .map(|a| {
                let versions = a
                    .versions
                    .iter()
                    .map(|v| format!("v{v}"))
                    .collect::<Vec<_>>()
                    .join(",");
                if versions.is_empty() {
                    a.artifact.clone()
                } else {
                    format!("{} ({versions})", a.artifact)
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        let status = if warning.confirmed { "confirmed" } else { "possible" };
        let _ = writeln!(
            out,
            "  t={} {:?} [{status}]: activities {activities}; artifacts {artifacts}",
            warning.detection_time, warning.kind
        );
        if warning.confirmed {
            for suggestion in suggest_resolutions(WarningRef::RunTime(warning)) {
                let _ = writeln!(out, "    - {suggestion}");
            }
        }
    }
    out
}

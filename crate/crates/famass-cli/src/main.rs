//! `famass` — drive the model pipeline from the command line.
//!
//! One subcommand per pipeline stage: `validate` checks an analysis model,
//! `deploy` renders every stage artifact, `emit` renders one stage,
//! `simulate` runs a model, and `experiment` runs its experimental plan.
//! Exit codes: 0 on success, 1 on any model or run problem (diagnostics on
//! stderr, one line each), 2 on usage errors.

use std::fmt::Display;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use famass::deploy::{
    build_cam, build_domain_model, build_oam, ConceptualAgentModel, DomainModel,
    OperationalAgentModel,
};
use famass::emit::dump::{canonical, dump, load, StageDump};
use famass::emit::{
    emit_behavior_and_protocols, emit_class_artifacts, emit_package_diagram, Artifact,
    ArtifactKind, Stage,
};
use famass::exper::{run_plan_parallel, ExperimentPlan};
use famass::fml::{parse_fml, resolve_with_spans, ParsedModel};
use famass::simrt::{run_full, trace_csv, SimConfig};

#[derive(Parser)]
#[command(
    name = "famass",
    version,
    about = "Model compiler and simulation runtime for distributed planning networks",
    long_about = "Compiles FAMASS Model Language (.fml) analysis models through the domain, \
conceptual-agent, and operational-agent stages, renders stage artifacts, and runs the \
resulting agent network as a deterministic discrete-event simulation.\n\n\
Inputs are .fml sources or canonical stage dumps (detected by content, not extension). \
Diagnostics go to stderr; set FAMASS_COLOR=never to force plain output (auto is the default \
and colors only when stderr is a terminal)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an analysis model and report every rule violation.
    Validate {
        /// The .fml model to check.
        file: PathBuf,
    },
    /// Compile a model and write every stage's artifacts.
    Deploy {
        /// The .fml model to compile.
        file: PathBuf,
        /// Directory the artifacts are written into.
        #[arg(short, long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Render one stage's diagrams and structured dump.
    Emit {
        /// An .fml model, or a dump of the requested stage.
        file: PathBuf,
        /// Stage to render.
        #[arg(long, value_enum)]
        stage: StageArg,
        /// Directory the artifacts are written into.
        #[arg(short, long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run a model and report its KPIs.
    Simulate {
        /// An .fml model, or an operational-stage dump.
        file: PathBuf,
        /// Number of periods to run.
        #[arg(long, value_name = "N", default_value_t = 100)]
        horizon: u64,
        /// Run seed for stochastic demand.
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        /// Record one line per agent action.
        #[arg(long)]
        trace: bool,
        /// Write kpis.csv (and trace.csv with --trace) here instead of
        /// printing everything to stdout.
        #[arg(short, long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a model's experimental plan and report per-cell statistics.
    Experiment {
        /// The .fml model; its factors, uncertainties, and KPIs form the plan.
        file: PathBuf,
        /// Replications per scenario cell.
        #[arg(long, value_name = "N", default_value_t = 1)]
        replications: u64,
        /// Base seed the per-run seeds are derived from.
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        /// Number of periods per run.
        #[arg(long, value_name = "N", default_value_t = 100)]
        horizon: u64,
        /// Write report.csv and report.dump here instead of printing the
        /// report to stdout.
        #[arg(short, long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    Dm,
    Cam,
    Oam,
}

impl From<StageArg> for Stage {
    fn from(value: StageArg) -> Stage {
        match value {
            StageArg::Dm => Stage::Dm,
            StageArg::Cam => Stage::Cam,
            StageArg::Oam => Stage::Oam,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Deploy { file, out } => cmd_deploy(&file, &out),
        Command::Emit { file, stage, out } => cmd_emit(&file, stage.into(), &out),
        Command::Simulate { file, horizon, seed, trace, out } => {
            cmd_simulate(&file, horizon, seed, trace, out.as_deref())
        }
        Command::Experiment { file, replications, seed, horizon, out } => {
            cmd_experiment(&file, replications, seed, horizon, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let paint = color_enabled();
            for line in failure.lines {
                if paint {
                    eprintln!("\x1b[31m{line}\x1b[0m");
                } else {
                    eprintln!("{line}");
                }
            }
            ExitCode::from(1)
        }
    }
}

/// Diagnostics bound for stderr: one line per problem, in the stable
/// `file:line:col: code: message` format wherever a source position exists.
struct Failure {
    lines: Vec<String>,
}

impl Failure {
    fn new(message: impl Display) -> Self {
        Failure { lines: vec![format!("error: {message}")] }
    }

    fn lines(lines: Vec<String>) -> Self {
        Failure { lines }
    }
}

fn color_enabled() -> bool {
    match std::env::var("FAMASS_COLOR").as_deref() {
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

// ---- input loading -------------------------------------------------------

enum Input {
    Fml(ParsedModel),
    Dump(StageDump),
}

/// Reads a model file and classifies it by content: canonical dumps are
/// JSON objects, everything else is parsed as FML.
fn read_input(path: &Path) -> Result<Input, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let stage = load(&text)
            .map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
        return Ok(Input::Dump(stage));
    }
    parse_and_check(path, &text).map(Input::Fml)
}

/// Parses and validates an FML document, turning any parse error or rule
/// violation into stable one-per-line diagnostics.
fn parse_and_check(path: &Path, text: &str) -> Result<ParsedModel, Failure> {
    let parsed = parse_fml(text).map_err(|errors| {
        Failure::lines(
            errors
                .iter()
                .map(|e| format!("{}:{e}", path.display()))
                .collect(),
        )
    })?;
    let report = resolve_with_spans(&parsed.model, &parsed.spans);
    if report.is_empty() {
        Ok(parsed)
    } else {
        Err(Failure::lines(
            report
                .violations
                .iter()
                .map(|v| format!("{}:{v}", path.display()))
                .collect(),
        ))
    }
}

/// Runs the three deployment stages on a validated model.
fn build_pipeline(
    parsed: &ParsedModel,
) -> Result<(DomainModel, ConceptualAgentModel, OperationalAgentModel), Failure> {
    let dm = build_domain_model(&parsed.model.dpa).map_err(Failure::new)?;
    let cam = build_cam(&dm, &parsed.model.saoa).map_err(Failure::new)?;
    let oam = build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).map_err(Failure::new)?;
    Ok((dm, cam, oam))
}

/// Resolves any accepted input to an operational model ready to run.
fn load_runnable(path: &Path) -> Result<OperationalAgentModel, Failure> {
    match read_input(path)? {
        Input::Fml(parsed) => Ok(build_pipeline(&parsed)?.2),
        Input::Dump(StageDump::Oam(oam)) => Ok(oam),
        Input::Dump(other) => Err(Failure::new(format!(
            "a {} dump cannot be simulated; rerun with the source model or an oam dump",
            other.stage(),
        ))),
    }
}

/// The file stem the output artifacts are named after. A trailing stage
/// segment is dropped, so re-emitting from `demo.cam.dump` writes the same
/// file names a deploy of `demo.fml` does.
fn model_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    for stage in Stage::ALL {
        if let Some(base) = stem.strip_suffix(&format!(".{stage}")) {
            if !base.is_empty() {
                return base.to_string();
            }
        }
    }
    stem
}

// ---- output writing ------------------------------------------------------

/// Writes every file atomically: all bodies go to temporaries first, and
/// the temporaries are renamed into place only after every write succeeded,
/// so a failed run never leaves a partial artifact set.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::new(format!("cannot create {}: {e}", dir.display())))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    let mut write_failure = None;
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        match fs::write(&tmp, body) {
            Ok(()) => staged.push((tmp, dir.join(name))),
            Err(e) => {
                write_failure = Some(Failure::new(format!(
                    "cannot write {}: {e}",
                    dir.join(name).display()
                )));
                break;
            }
        }
    }
    if let Some(failure) = write_failure {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
        return Err(failure);
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target)
            .map_err(|e| Failure::new(format!("cannot write {}: {e}", target.display())))?;
    }
    Ok(())
}

fn named(artifacts: &[Artifact], model: &str) -> Vec<(String, String)> {
    artifacts
        .iter()
        .map(|a| (a.file_name(model), a.body.clone()))
        .collect()
}

// ---- subcommands ---------------------------------------------------------

fn cmd_validate(file: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::new(format!("cannot read {}: {e}", file.display())))?;
    parse_and_check(file, &text)?;
    Ok(())
}

fn cmd_deploy(file: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::new(format!("cannot read {}: {e}", file.display())))?;
    let parsed = parse_and_check(file, &text)?;
    let (dm, cam, oam) = build_pipeline(&parsed)?;
    let artifacts = famass::emit::emit_all(&dm, &cam, &oam);
    write_all(out, &named(&artifacts, &model_name(file)))
}

/// One stage's artifacts: its diagrams plus its structured dump.
fn stage_artifacts(stage: &StageDump) -> Vec<Artifact> {
    let mut artifacts = match stage {
        StageDump::Dm(dm) => emit_class_artifacts(dm),
        StageDump::Cam(cam) => vec![emit_package_diagram(cam)],
        StageDump::Oam(oam) => emit_behavior_and_protocols(oam),
    };
    artifacts.push(Artifact {
        kind: ArtifactKind::StructuredDump,
        target: stage.stage(),
        qualifier: None,
        body: dump(stage),
    });
    artifacts
}

fn cmd_emit(file: &Path, stage: Stage, out: &Path) -> Result<(), Failure> {
    let model = match read_input(file)? {
        Input::Fml(parsed) => {
            let (dm, cam, oam) = build_pipeline(&parsed)?;
            match stage {
                Stage::Dm => StageDump::Dm(dm),
                Stage::Cam => StageDump::Cam(cam),
                Stage::Oam => StageDump::Oam(oam),
            }
        }
        Input::Dump(loaded) => {
            if loaded.stage() != stage {
                return Err(Failure::new(format!(
                    "{} holds a {} dump, not {stage}; pass the matching --stage or the source model",
                    file.display(),
                    loaded.stage(),
                )));
            }
            loaded
        }
    };
    write_all(out, &named(&stage_artifacts(&model), &model_name(file)))
}

fn cmd_simulate(
    file: &Path,
    horizon: u64,
    seed: u64,
    trace: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let oam = load_runnable(file)?;
    let cfg = SimConfig {
        horizon,
        seed,
        collect_trace: trace,
        ..SimConfig::default()
    };
    let outcome = run_full(&oam, &cfg).map_err(Failure::new)?;
    let kpis = outcome.report.to_csv();
    match out {
        Some(dir) => {
            let mut files = vec![("kpis.csv".to_string(), kpis)];
            if trace {
                files.push(("trace.csv".to_string(), trace_csv(&outcome.trace)));
            }
            write_all(dir, &files)
        }
        None => {
            print!("{kpis}");
            if trace {
                println!();
                print!("{}", trace_csv(&outcome.trace));
            }
            Ok(())
        }
    }
}

fn cmd_experiment(
    file: &Path,
    replications: u64,
    seed: u64,
    horizon: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::new(format!("cannot read {}: {e}", file.display())))?;
    if text.trim_start().starts_with('{') {
        return Err(Failure::new(
            "experiments need the analysis model's experimental aspects; pass the .fml source",
        ));
    }
    let parsed = parse_and_check(file, &text)?;
    let (_, _, oam) = build_pipeline(&parsed)?;
    let plan = ExperimentPlan::from_gpa(&parsed.model.gpa, horizon, seed, replications);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = run_plan_parallel(&oam, &plan, workers).map_err(Failure::new)?;
    match out {
        Some(dir) => write_all(
            dir,
            &[
                ("report.csv".to_string(), report.to_csv()),
                ("report.dump".to_string(), canonical("experiment", &report)),
            ],
        ),
        None => {
            print!("{}", report.to_csv());
            Ok(())
        }
    }
}

//! Command-line surface over the modeling kernel: validate, run, inspect and
//! step through ARWFML bundles, and emit the built-in fixtures.

mod inspect;
mod step;

use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use m2ar_core::arwfml::validate;
use m2ar_core::bundle_io::{parse_bundle, serialize_bundle};
use m2ar_core::engine::{run, EngineError, Phase, Scenario};
use m2ar_core::fixture::{fixture, FIXTURE_NAMES};
use m2ar_core::meta2::Bundle;

pub use step::{script_for, Session};

/// Process exit statuses.
pub mod status {
    pub const OK: u8 = 0;
    pub const INVALID: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const RUNTIME: u8 = 3;
    pub const NOT_COMPLETED: u8 = 4;
}

/// Environment variable holding the stderr log level.
pub const LOG_ENV: &str = "M2AR_LOG";
/// Suffix of the scenario file written next to a fixture bundle.
pub const SCENARIO_EXTENSION: &str = ".scenario.json";

#[derive(Debug, Parser)]
#[command(name = "m2ar", version, about = "Validate, run and inspect ARWFML bundles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print diagnostics, one per line.
    Validate { bundle: PathBuf },
    /// Run a scenario and write the trace and final snapshot.
    Run {
        bundle: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        flowscene: Option<String>,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        /// Overrides the scenario's stop time; later events are dropped.
        #[arg(long = "stop-t")]
        stop_t: Option<f64>,
    },
    /// Write a built-in bundle and its scenario into a directory.
    Fixture {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List models with instance and reference counts.
    Inspect {
        bundle: PathBuf,
        #[arg(long)]
        model: Option<String>,
    },
    /// Read commands from stdin and apply them one at a time.
    Step {
        bundle: PathBuf,
        #[arg(long)]
        flowscene: Option<String>,
    },
}

/// A failed command: the exit status and what to tell the user.
#[derive(Debug)]
pub struct Failure {
    pub status: u8,
    pub message: String,
}

impl Failure {
    fn new(status: u8, message: impl fmt::Display) -> Self {
        Self {
            status,
            message: message.to_string(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self::new(status::RUNTIME, format!("{}: {e}", path.display()))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::new(status::RUNTIME, e)
    }
}

type Outcome = Result<u8, Failure>;

/// Runs one command; failures are reported on `err`.
pub fn execute(command: Command, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match command {
        Command::Validate { bundle } => cmd_validate(&bundle, out),
        Command::Run {
            bundle,
            scenario,
            flowscene,
            trace,
            snapshot,
            stop_t,
        } => cmd_run(
            &RunArgs {
                bundle,
                scenario,
                flowscene,
                trace,
                snapshot,
                stop_t,
            },
            out,
        ),
        Command::Fixture { name, out: dir } => cmd_fixture(&name, &dir, out),
        Command::Inspect { bundle, model } => cmd_inspect(&bundle, model.as_deref(), out),
        Command::Step { bundle, flowscene } => cmd_step(&bundle, flowscene.as_deref(), input, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "m2ar: {}", f.message);
            f.status
        }
    }
}

/// Reads and parses a bundle; unreadable or malformed files are usage errors.
pub fn read_bundle(path: &Path) -> Result<Bundle, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(status::USAGE, format!("{}: {e}", path.display())))?;
    parse_bundle(&bytes).map_err(|e| Failure::new(status::USAGE, format!("{}: {e}", path.display())))
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(status::USAGE, format!("{}: {e}", path.display())))?;
    Scenario::parse(&bytes).map_err(|e| Failure::new(status::USAGE, format!("{}: {e}", path.display())))
}

/// Maps engine load and run errors onto exit statuses.
fn engine_failure(e: EngineError) -> Failure {
    let code = match &e {
        EngineError::ValidationFailed(_)
        | EngineError::ObjectSpaceRefCount { .. }
        | EngineError::Inconsistent { .. } => status::INVALID,
        EngineError::NoFlowScene | EngineError::AmbiguousFlowScene(_) | EngineError::UnknownFlowScene(_) => {
            status::USAGE
        }
        _ => status::RUNTIME,
    };
    let mut message = e.to_string();
    if let EngineError::ValidationFailed(diags) = &e {
        for d in diags {
            message.push_str(&format!("\n{d}"));
        }
    }
    Failure::new(code, message)
}

/// Exit status for the phase a run ended in.
pub fn phase_status(phase: Phase) -> u8 {
    match phase {
        Phase::Completed => status::OK,
        Phase::Failed => status::RUNTIME,
        Phase::Loaded | Phase::AwaitOrigin | Phase::Running => status::NOT_COMPLETED,
    }
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let bundle = read_bundle(path)?;
    let diagnostics = validate(&bundle);
    for d in &diagnostics {
        writeln!(out, "{d}")?;
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    log::info!("{errors} error(s), {} warning(s)", diagnostics.len() - errors);
    Ok(if errors == 0 { status::OK } else { status::INVALID })
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub bundle: PathBuf,
    pub scenario: PathBuf,
    pub flowscene: Option<String>,
    pub trace: PathBuf,
    pub snapshot: PathBuf,
    pub stop_t: Option<f64>,
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let bundle = read_bundle(&args.bundle)?;
    let scenario = read_scenario(&args.scenario)?;
    let stop_t = args.stop_t.unwrap_or(scenario.stop_t);
    if !(stop_t.is_finite() && stop_t >= 0.0) {
        return Err(Failure::new(
            status::USAGE,
            format!("--stop-t {stop_t} must be finite and >= 0"),
        ));
    }
    let kept = scenario.events.iter().take_while(|e| e.t <= stop_t).count();
    if kept < scenario.events.len() {
        log::info!("dropping {} event(s) after t={stop_t}", scenario.events.len() - kept);
    }
    let outcome = run(&bundle, args.flowscene.as_deref(), &scenario.events[..kept], stop_t).map_err(engine_failure)?;

    fs::write(&args.trace, outcome.trace.to_jsonl()).map_err(|e| Failure::io(&args.trace, e))?;
    fs::write(&args.snapshot, outcome.snapshot.to_document()).map_err(|e| Failure::io(&args.snapshot, e))?;

    let phase = outcome.state.phase();
    for notice in outcome.state.notices() {
        writeln!(out, "notice: {notice}")?;
    }
    let note = match phase {
        Phase::AwaitOrigin => " (stuck: awaiting origin)",
        Phase::Running => " (stuck: workflow not completed)",
        _ => "",
    };
    writeln!(out, "phase: {phase}{note} at t={stop_t}")?;
    writeln!(
        out,
        "trace: {} ({} records)\nsnapshot: {} ({} of {} visible)\nduration: {:.3} ms",
        args.trace.display(),
        outcome.trace.len(),
        args.snapshot.display(),
        outcome.snapshot.visible_count(),
        outcome.snapshot.entries.len(),
        started.elapsed().as_secs_f64() * 1e3,
    )?;
    Ok(phase_status(phase))
}

pub fn cmd_fixture(name: &str, dir: &Path, out: &mut dyn Write) -> Outcome {
    let Some((bundle, scenario)) = fixture(name) else {
        return Err(Failure::new(
            status::USAGE,
            format!("unknown fixture `{name}` (known: {})", FIXTURE_NAMES.join(", ")),
        ));
    };
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let bundle_path = dir.join(format!("{name}.m2ar.json"));
    let scenario_path = dir.join(format!("{name}{SCENARIO_EXTENSION}"));
    fs::write(&bundle_path, serialize_bundle(&bundle)).map_err(|e| Failure::io(&bundle_path, e))?;
    fs::write(&scenario_path, scenario.to_document()).map_err(|e| Failure::io(&scenario_path, e))?;
    writeln!(out, "{}\n{}", bundle_path.display(), scenario_path.display())?;
    Ok(status::OK)
}

pub fn cmd_inspect(path: &Path, model: Option<&str>, out: &mut dyn Write) -> Outcome {
    let bundle = read_bundle(path)?;
    if let Some(id) = model {
        if bundle.model(id).is_none() {
            return Err(Failure::new(status::USAGE, format!("no model `{id}`")));
        }
    }
    out.write_all(inspect::report(&bundle, model).as_bytes())?;
    Ok(status::OK)
}

pub fn cmd_step(path: &Path, flowscene: Option<&str>, input: &mut dyn BufRead, out: &mut dyn Write) -> Outcome {
    let bundle = read_bundle(path)?;
    let mut session = Session::start(&bundle, flowscene).map_err(engine_failure)?;
    writeln!(
        out,
        "flowscene {}; waiting for origin {}\nphase: {}",
        session.state().program().flowscene_id(),
        session.state().program().origin_detectable(),
        session.state().phase()
    )?;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        if !session.execute(&line, out)? {
            break;
        }
    }
    Ok(status::OK)
}

//! Line-oriented stepping session.
//!
//! Event commands are delivered at the current clock unless prefixed with
//! `at <t>`:
//!
//! ```text
//! detect <id> [pose-json]
//! click <id>
//! observer <key> <value>
//! advance <t>
//! at <t> detect|click|observer ...
//! snapshot [path]
//! trace [path]
//! help
//! quit
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};

use m2ar_core::engine::{load, EngineError, EngineState, EventKind, Phase, Scenario, SimEvent};
use m2ar_core::meta2::{Bundle, Identifier};
use m2ar_core::scene3d::Pose;

const HELP: &str = "commands: detect <id> [pose-json] | click <id> | observer <key> <value> | advance <t> | \
at <t> <event command> | snapshot [path] | trace [path] | help | quit";

pub struct Session {
    state: EngineState,
    next_seq: u64,
}

fn parse_time(word: Option<&str>) -> Result<f64, String> {
    let word = word.ok_or("missing time")?;
    let t: f64 = word.parse().map_err(|_| format!("invalid time `{word}`"))?;
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(format!("time {t} must be finite and >= 0"))
    }
}

fn parse_id(word: Option<&str>, what: &str) -> Result<Identifier, String> {
    word.and_then(|w| Identifier::new(w).ok())
        .ok_or_else(|| format!("missing {what}"))
}

/// Splits off the first whitespace-delimited word.
fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

fn parse_event(command: &str, rest: &str) -> Result<Option<(Option<f64>, EventKind)>, String> {
    let kind = match command {
        "detect" => {
            let (det, pose) = split_word(rest);
            let pose = if pose.is_empty() {
                None
            } else {
                let p: Pose = serde_json::from_str(pose).map_err(|e| format!("invalid pose: {e}"))?;
                Some(p)
            };
            EventKind::Detect {
                detectable: parse_id(Some(det).filter(|d| !d.is_empty()), "detectable id")?,
                pose,
            }
        }
        "click" => EventKind::Click {
            augmentation: parse_id(rest.split_whitespace().next(), "augmentation id")?,
        },
        "observer" => {
            let (key, value) = split_word(rest);
            if key.is_empty() || value.is_empty() {
                return Err("usage: observer <key> <value>".into());
            }
            EventKind::Observer {
                key: key.to_owned(),
                value: value.trim_end().to_owned(),
            }
        }
        "advance" => {
            return Ok(Some((
                Some(parse_time(rest.split_whitespace().next())?),
                EventKind::Advance,
            )))
        }
        _ => return Ok(None),
    };
    Ok(Some((None, kind)))
}

impl Session {
    pub fn start(bundle: &Bundle, flowscene: Option<&str>) -> Result<Self, EngineError> {
        Ok(Self {
            state: load(bundle, flowscene)?,
            next_seq: 0,
        })
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    /// Delivers one event and reports what it caused.
    fn deliver(&mut self, t: f64, kind: EventKind, out: &mut dyn Write) -> io::Result<()> {
        let event = SimEvent::new(self.next_seq, t, kind);
        let (records, notices) = (self.state.trace().len(), self.state.notices().len());
        if let Err(e) = self.state.apply(&event) {
            return writeln!(out, "error: {e}");
        }
        self.next_seq += 1;
        for r in &self.state.trace().records()[records..] {
            let sep = if r.details.is_empty() { "" } else { ": " };
            writeln!(out, "t={} {} {}{sep}{}", r.t, r.kind, r.subject, r.details)?;
        }
        for n in &self.state.notices()[notices..] {
            writeln!(out, "notice: {n}")?;
        }
        self.print_phase(out)
    }

    fn print_phase(&self, out: &mut dyn Write) -> io::Result<()> {
        let phase = self.state.phase();
        match phase {
            Phase::AwaitOrigin => writeln!(
                out,
                "phase: {phase} (awaiting origin {}) at t={}",
                self.state.program().origin_detectable(),
                self.state.clock()
            ),
            _ => writeln!(out, "phase: {phase} at t={}", self.state.clock()),
        }
    }

    fn emit(text: &str, path: &str, out: &mut dyn Write) -> io::Result<()> {
        if path.is_empty() {
            out.write_all(text.as_bytes())
        } else {
            match fs::write(path, text) {
                Ok(()) => writeln!(out, "wrote {path}"),
                Err(e) => writeln!(out, "error: {path}: {e}"),
            }
        }
    }

    /// Executes one input line; returns `false` once the session should end.
    pub fn execute(&mut self, line: &str, out: &mut dyn Write) -> io::Result<bool> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(true);
        }
        let (command, rest) = split_word(line);
        match command {
            "quit" | "exit" => return Ok(false),
            "help" => writeln!(out, "{HELP}")?,
            "snapshot" => Self::emit(&self.state.snapshot().to_document(), rest, out)?,
            "trace" => Self::emit(&self.state.trace().to_jsonl(), rest, out)?,
            "phase" => self.print_phase(out)?,
            "at" => {
                let (time, rest) = split_word(rest);
                let (command, rest) = split_word(rest);
                match parse_time(Some(time).filter(|w| !w.is_empty())).and_then(|t| match parse_event(command, rest)? {
                    Some((None, kind)) => Ok((t, kind)),
                    _ => Err(format!("`at` takes detect, click or observer, not `{command}`")),
                }) {
                    Ok((t, kind)) => self.deliver(t, kind, out)?,
                    Err(e) => writeln!(out, "error: {e}")?,
                }
            }
            _ => match parse_event(command, rest) {
                Ok(Some((t, kind))) => {
                    let t = t.unwrap_or(self.state.clock());
                    self.deliver(t, kind, out)?
                }
                Ok(None) => writeln!(out, "unknown command `{command}`; {HELP}")?,
                Err(e) => writeln!(out, "error: {e}")?,
            },
        }
        Ok(true)
    }
}

/// Step commands delivering `scenario` exactly as a scripted run would,
/// ending with the advance to its stop time.
pub fn script_for(scenario: &Scenario) -> String {
    let mut s = String::new();
    for e in &scenario.events {
        let _ = match &e.kind {
            EventKind::Advance => writeln!(s, "advance {}", e.t),
            EventKind::Detect { detectable, pose: None } => writeln!(s, "at {} detect {detectable}", e.t),
            EventKind::Detect {
                detectable,
                pose: Some(p),
            } => writeln!(
                s,
                "at {} detect {detectable} {}",
                e.t,
                serde_json::to_string(p).expect("poses serialize")
            ),
            EventKind::Click { augmentation } => writeln!(s, "at {} click {augmentation}", e.t),
            EventKind::Observer { key, value } => writeln!(s, "at {} observer {key} {value}", e.t),
        };
    }
    let _ = writeln!(s, "advance {}", scenario.stop_t);
    s
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::meta2::Identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    OriginDetected,
    ConditionSatisfied,
    StatechangeApplied,
    ResolveApplied,
    EndReached,
    WorkflowCompleted,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OriginDetected => "origin_detected",
            Self::ConditionSatisfied => "condition_satisfied",
            Self::StatechangeApplied => "statechange_applied",
            Self::ResolveApplied => "resolve_applied",
            Self::EndReached => "end_reached",
            Self::WorkflowCompleted => "workflow_completed",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub seq: u64,
    pub t: f64,
    pub kind: TraceKind,
    pub subject: Identifier,
    pub details: String,
}

/// Append-only execution log. `seq` counts from 0 and `t` never decreases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, t: f64, kind: TraceKind, subject: &Identifier, details: impl Into<String>) {
        let seq = self.records.len() as u64;
        self.records.push(TraceRecord {
            seq,
            t,
            kind,
            subject: subject.clone(),
            details: details.into(),
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind(&self, kind: TraceKind) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    /// JSON Lines, one canonical record per line.
    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| canonical::to_line(r) + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

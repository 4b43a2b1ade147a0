use std::fmt;

use serde::{Deserialize, Serialize};

use super::Identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Where a diagnostic points. Bundle-level findings carry no model id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Location {
    pub model_id: Option<Identifier>,
    pub instance_id: Option<Identifier>,
}

impl Location {
    pub fn bundle() -> Self {
        Self::default()
    }

    pub fn model(model_id: &Identifier) -> Self {
        Self {
            model_id: Some(model_id.clone()),
            instance_id: None,
        }
    }

    pub fn instance(model_id: &Identifier, instance_id: &Identifier) -> Self {
        Self {
            model_id: Some(model_id.clone()),
            instance_id: Some(instance_id.clone()),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.model_id, &self.instance_id) {
            (None, _) => f.write_str("<bundle>"),
            (Some(m), None) => write!(f, "{m}"),
            (Some(m), Some(i)) => write!(f, "{m}/{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub location: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &str, location: Location, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code: code.to_owned(),
            location,
            message: message.into(),
        }
    }

    pub fn warning(code: &str, location: Location, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code: code.to_owned(),
            location,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.severity, self.code, self.location, self.message)
    }
}

/// Orders by (model id, instance id, code); ties keep generation order.
pub fn sort_diagnostics(diagnostics: &mut [Diagnostic]) {
    diagnostics.sort_by(|a, b| {
        (&a.location.model_id, &a.location.instance_id, &a.code).cmp(&(
            &b.location.model_id,
            &b.location.instance_id,
            &b.code,
        ))
    });
}

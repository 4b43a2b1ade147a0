use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::meta2::Identifier;
use crate::scene3d::Pose;

/// External stimulus delivered to a running engine at time `t` (seconds).
/// `seq` breaks ties between events sharing a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub seq: u64,
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A Detectable came into view; a missing pose means identity.
    Detect {
        detectable: Identifier,
        pose: Option<Pose>,
    },
    Click {
        augmentation: Identifier,
    },
    Observer {
        key: String,
        value: String,
    },
    /// Only moves the clock.
    Advance,
}

impl SimEvent {
    pub fn new(seq: u64, t: f64, kind: EventKind) -> Self {
        Self { seq, t, kind }
    }

    pub fn advance(seq: u64, t: f64) -> Self {
        Self::new(seq, t, EventKind::Advance)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EventKind::Detect { .. } => "detect",
            EventKind::Click { .. } => "click",
            EventKind::Observer { .. } => "observer",
            EventKind::Advance => "advance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Malformed(String),
    #[error("event {index}: time {t} must be finite and >= 0")]
    InvalidTime { index: usize, t: f64 },
    #[error("event {index}: time {t} precedes the previous event at {previous}")]
    Unsorted { index: usize, t: f64, previous: f64 },
}

/// An input script for one run: events in non-decreasing time order and the
/// time the run is advanced to at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub stop_t: f64,
    pub events: Vec<SimEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDto {
    stop_t: f64,
    #[serde(default)]
    events: Vec<EventDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum EventDto {
    Detect {
        t: f64,
        detectable: Identifier,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pose: Option<Pose>,
    },
    Click {
        t: f64,
        augmentation: Identifier,
    },
    Observer {
        t: f64,
        key: String,
        value: String,
    },
    Advance {
        t: f64,
    },
}

impl From<&SimEvent> for EventDto {
    fn from(e: &SimEvent) -> Self {
        let t = e.t;
        match &e.kind {
            EventKind::Detect { detectable, pose } => EventDto::Detect {
                t,
                detectable: detectable.clone(),
                pose: *pose,
            },
            EventKind::Click { augmentation } => EventDto::Click {
                t,
                augmentation: augmentation.clone(),
            },
            EventKind::Observer { key, value } => EventDto::Observer {
                t,
                key: key.clone(),
                value: value.clone(),
            },
            EventKind::Advance => EventDto::Advance { t },
        }
    }
}

impl EventDto {
    fn into_event(self, seq: u64) -> SimEvent {
        match self {
            EventDto::Detect { t, detectable, pose } => SimEvent::new(seq, t, EventKind::Detect { detectable, pose }),
            EventDto::Click { t, augmentation } => SimEvent::new(seq, t, EventKind::Click { augmentation }),
            EventDto::Observer { t, key, value } => SimEvent::new(seq, t, EventKind::Observer { key, value }),
            EventDto::Advance { t } => SimEvent::advance(seq, t),
        }
    }
}

fn valid_time(t: f64) -> bool {
    t.is_finite() && t >= 0.0
}

impl Scenario {
    /// Parses a scenario document; events are numbered in file order.
    pub fn parse(document: &[u8]) -> Result<Self, ScenarioError> {
        let dto: ScenarioDto = serde_json::from_slice(document).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
        if !valid_time(dto.stop_t) {
            return Err(ScenarioError::Malformed(format!(
                "stop_t {} must be finite and >= 0",
                dto.stop_t
            )));
        }
        let events: Vec<SimEvent> = dto
            .events
            .into_iter()
            .zip(0u64..)
            .map(|(e, seq)| e.into_event(seq))
            .collect();
        let mut previous = 0.0;
        for (index, e) in events.iter().enumerate() {
            if !valid_time(e.t) {
                return Err(ScenarioError::InvalidTime { index, t: e.t });
            }
            if e.t < previous {
                return Err(ScenarioError::Unsorted {
                    index,
                    t: e.t,
                    previous,
                });
            }
            previous = e.t;
        }
        Ok(Self {
            stop_t: dto.stop_t,
            events,
        })
    }

    pub fn to_document(&self) -> String {
        let dto = ScenarioDto {
            stop_t: self.stop_t,
            events: self.events.iter().map(EventDto::from).collect(),
        };
        canonical::to_document(&dto)
    }
}

//! Deterministic interpreter for ARWFML FlowScenes.
//!
//! A run waits for its origin Detectable, then moves tokens from Start along
//! `flow` edges. Conditions hold tokens until satisfied, StatechangeRefs
//! apply their Statechange model to the scene, Resolves disable a Condition,
//! and End consumes tokens. Everything observable goes into the [`Trace`].
//!
//! Rules:
//! - timer: fires at the first processed time `>= armed_at + duration_s`;
//! - detection: fires while its Detectable is detected (level-triggered);
//! - click: needs a click on its Augmentation at `t >= armed_at`; each click
//!   is consumed by at most one Condition, lowest Condition id first;
//! - observer: fires while a stored value for one of its keys equals
//!   `observer_value` (any value when that is unset).

mod event;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arwfml::{names, validate};
use crate::canonical;
use crate::meta2::{resolve, Bundle, ClassInstance, Diagnostic, Identifier, InstanceRef, Model, Resolved};
use crate::scene3d::{apply_statechange, world_pose, Pose, SceneState};

pub use event::{EventKind, Scenario, ScenarioError, SimEvent};
pub use trace::{Trace, TraceKind, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Compiled but not armed; [`load`] hands out states already past this.
    Loaded,
    AwaitOrigin,
    Running,
    Completed,
    Failed,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Completed | Phase::Failed)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Loaded => "Loaded",
            Phase::AwaitOrigin => "AwaitOrigin",
            Phase::Running => "Running",
            Phase::Completed => "Completed",
            Phase::Failed => "Failed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("bundle has {} validation error(s)", .0.len())]
    ValidationFailed(Vec<Diagnostic>),
    #[error("bundle has no FlowScene")]
    NoFlowScene,
    #[error("bundle has several FlowScenes ({}); choose one", join(.0))]
    AmbiguousFlowScene(Vec<Identifier>),
    #[error("no FlowScene `{0}`")]
    UnknownFlowScene(String),
    #[error("FlowScene `{flowscene}` has {count} ObjectSpaceRefs; exactly one is supported")]
    ObjectSpaceRefCount { flowscene: Identifier, count: usize },
    #[error("FlowScene `{flowscene}` is inconsistent: {reason}")]
    Inconsistent { flowscene: Identifier, reason: String },
    #[error("event time {0} must be finite and >= 0")]
    InvalidTime(f64),
    #[error("event at t={t} precedes the engine clock {clock}")]
    TimeRegression { clock: f64, t: f64 },
    #[error("event at t={t} is after the stop time {stop_t}")]
    EventAfterStop { t: f64, stop_t: f64 },
}

fn join(ids: &[Identifier]) -> String {
    ids.iter().map(Identifier::as_str).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tok-{}", self.0)
    }
}

/// A unit of control flow sitting at one FlowScene node. `armed_at` is the
/// time it entered a Condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub id: TokenId,
    pub at_node: Identifier,
    pub armed_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Timer(f64),
    Click(Identifier),
    Detection(Identifier),
    Observer {
        keys: Vec<String>,
        value: Option<String>,
    },
    /// Kind not interpretable; the Condition never fires.
    Never,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Start,
    End,
    Condition(Rule),
    Statechange(Identifier),
    Resolve(Option<Identifier>),
}

/// The immutable part of a run: the chosen FlowScene compiled against its
/// ObjectSpace and Statechange models.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    flowscene: Identifier,
    objectspace: Model,
    origin: Identifier,
    nodes: BTreeMap<Identifier, Node>,
    successors: BTreeMap<Identifier, Vec<Identifier>>,
    statechanges: BTreeMap<Identifier, Model>,
}

impl Program {
    pub fn flowscene_id(&self) -> &Identifier {
        &self.flowscene
    }

    pub fn objectspace(&self) -> &Model {
        &self.objectspace
    }

    pub fn origin_detectable(&self) -> &Identifier {
        &self.origin
    }

    fn is_condition(&self, node: &Identifier) -> bool {
        matches!(self.nodes.get(node), Some(Node::Condition(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PendingClick {
    augmentation: Identifier,
    t: f64,
}

/// One engine instance. Cloning is cheap for the compiled program, which is shared.
#[derive(Debug, Clone)]
pub struct EngineState {
    program: Arc<Program>,
    phase: Phase,
    clock: f64,
    tokens: BTreeMap<TokenId, Token>,
    next_token: u64,
    scene: SceneState,
    disabled_conditions: BTreeSet<Identifier>,
    trace: Trace,
    clicks: Vec<PendingClick>,
    observed: BTreeMap<String, String>,
    notices: Vec<String>,
}

fn ref_attr<'a>(class: &'a ClassInstance, name: &str) -> Option<&'a InstanceRef> {
    class.attribute(name).and_then(|v| v.as_ref_value())
}

fn resolved_model<'a>(bundle: &'a Bundle, r: Option<&InstanceRef>, scene_type: &str) -> Option<&'a Model> {
    match resolve(bundle, r?).ok()? {
        Resolved::Model(m) if m.scene_type == scene_type => Some(m),
        _ => None,
    }
}

fn compile_rule(fs: &Model, cond: &ClassInstance) -> Rule {
    let observed = || ref_attr(cond, names::OBSERVES).and_then(|r| r.instance_id()).cloned();
    match cond.attribute(names::KIND).and_then(|v| v.as_text()) {
        Some("timer") => cond
            .attribute(names::DURATION_S)
            .and_then(|v| v.as_number())
            .map_or(Rule::Never, Rule::Timer),
        Some("click") => observed().map_or(Rule::Never, Rule::Click),
        Some("detection") => observed().map_or(Rule::Never, Rule::Detection),
        Some("observer") => {
            let own = cond
                .attribute(names::OBSERVER_KEY)
                .and_then(|v| v.as_text())
                .filter(|k| !k.is_empty());
            let linked = fs
                .relations_of(names::OBSERVES_LINK)
                .filter(|r| r.to_instance == cond.id)
                .filter_map(|r| fs.class(r.from_instance.as_str()))
                .filter_map(|o| o.attribute(names::KEY).and_then(|v| v.as_text()));
            let mut keys: Vec<String> = own.into_iter().chain(linked).map(str::to_owned).collect();
            keys.sort();
            keys.dedup();
            let value = cond
                .attribute(names::OBSERVER_VALUE)
                .and_then(|v| v.as_text())
                .map(str::to_owned);
            Rule::Observer { keys, value }
        }
        _ => Rule::Never,
    }
}

fn compile(bundle: &Bundle, fs: &Model) -> Result<Program, EngineError> {
    let inconsistent = |reason: &str| EngineError::Inconsistent {
        flowscene: fs.id.clone(),
        reason: reason.to_owned(),
    };
    let osrefs: Vec<&ClassInstance> = fs.classes_of(names::OBJECT_SPACE_REF).collect();
    let [osref] = osrefs.as_slice() else {
        return Err(EngineError::ObjectSpaceRefCount {
            flowscene: fs.id.clone(),
            count: osrefs.len(),
        });
    };
    let objectspace = resolved_model(bundle, ref_attr(osref, names::OBJECTSPACE_ATTR), names::OBJECT_SPACE)
        .ok_or_else(|| inconsistent("objectspace does not resolve"))?;
    let origin = fs
        .ports_of(&osref.id)
        .find(|p| p.port == names::ORIGIN_PORT)
        .and_then(|p| p.target.as_ref())
        .and_then(|t| t.instance_id())
        .cloned()
        .ok_or_else(|| inconsistent("Origin port has no target"))?;

    let mut nodes = BTreeMap::new();
    let mut statechanges = BTreeMap::new();
    for class in fs.classes() {
        let node = match class.metaclass.as_str() {
            names::START => Node::Start,
            names::END => Node::End,
            names::CONDITION => Node::Condition(compile_rule(fs, class)),
            names::STATECHANGE_REF => {
                let model = resolved_model(bundle, ref_attr(class, names::STATECHANGE_MODEL), names::STATECHANGE)
                    .ok_or_else(|| inconsistent("statechange_model does not resolve"))?;
                statechanges.insert(class.id.clone(), model.clone());
                Node::Statechange(model.id.clone())
            }
            names::RESOLVE => Node::Resolve(ref_attr(class, names::RESOLVES).and_then(|r| r.instance_id()).cloned()),
            _ => continue,
        };
        nodes.insert(class.id.clone(), node);
    }

    let mut successors: BTreeMap<Identifier, Vec<Identifier>> = BTreeMap::new();
    for edge in fs.relations_of(names::FLOW) {
        successors
            .entry(edge.from_instance.clone())
            .or_default()
            .push(edge.to_instance.clone());
    }

    Ok(Program {
        flowscene: fs.id.clone(),
        objectspace: objectspace.clone(),
        origin,
        nodes,
        successors,
        statechanges,
    })
}

/// Validates `bundle`, compiles the chosen FlowScene (the only one when
/// `flowscene_id` is `None`) and returns a state awaiting the origin.
pub fn load(bundle: &Bundle, flowscene_id: Option<&str>) -> Result<EngineState, EngineError> {
    let errors: Vec<Diagnostic> = validate(bundle).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(EngineError::ValidationFailed(errors));
    }
    let fs = match flowscene_id {
        Some(id) => bundle
            .model(id)
            .filter(|m| m.scene_type == names::FLOW_SCENE)
            .ok_or_else(|| EngineError::UnknownFlowScene(id.to_owned()))?,
        None => {
            let all: Vec<&Model> = bundle.models_of(names::FLOW_SCENE).collect();
            match all.as_slice() {
                [] => return Err(EngineError::NoFlowScene),
                [only] => *only,
                many => {
                    return Err(EngineError::AmbiguousFlowScene(
                        many.iter().map(|m| m.id.clone()).collect(),
                    ))
                }
            }
        }
    };
    let program = compile(bundle, fs)?;
    let scene = SceneState::from_objectspace(&program.objectspace);

    let mut state = EngineState {
        program: Arc::new(program),
        phase: Phase::Loaded,
        clock: 0.0,
        tokens: BTreeMap::new(),
        next_token: 0,
        scene,
        disabled_conditions: BTreeSet::new(),
        trace: Trace::default(),
        clicks: Vec::new(),
        observed: BTreeMap::new(),
        notices: Vec::new(),
    };
    let starts: Vec<Identifier> = fs.classes_of(names::START).map(|s| s.id.clone()).collect();
    for start in starts {
        state.spawn(start);
    }
    state.phase = Phase::AwaitOrigin;
    log::debug!("loaded FlowScene {}", state.program.flowscene);
    Ok(state)
}

/// Delivers one event and runs the workflow to quiescence.
pub fn inject(mut state: EngineState, event: &SimEvent) -> Result<EngineState, EngineError> {
    state.apply(event)?;
    Ok(state)
}

/// Advances every token that can move at the current clock.
pub fn fire_ready(mut state: EngineState) -> EngineState {
    state.run_to_quiescence();
    state
}

pub fn snapshot(state: &EngineState) -> SceneSnapshot {
    state.snapshot()
}

/// Result of a scripted run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub snapshot: SceneSnapshot,
    pub state: EngineState,
}

/// Loads `bundle`, delivers `events` in order and finally advances to `stop_t`.
pub fn run(
    bundle: &Bundle,
    flowscene_id: Option<&str>,
    events: &[SimEvent],
    stop_t: f64,
) -> Result<RunOutcome, EngineError> {
    let mut state = load(bundle, flowscene_id)?;
    for e in events {
        if e.t > stop_t {
            return Err(EngineError::EventAfterStop { t: e.t, stop_t });
        }
        state.apply(e)?;
    }
    state.apply(&SimEvent::advance(events.len() as u64, stop_t))?;
    Ok(RunOutcome {
        trace: state.trace.clone(),
        snapshot: state.snapshot(),
        state,
    })
}

impl EngineState {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.values()
    }

    pub fn scene(&self) -> &SceneState {
        &self.scene
    }

    pub fn disabled_conditions(&self) -> &BTreeSet<Identifier> {
        &self.disabled_conditions
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Events that had no effect and other non-fatal remarks.
    pub fn notices(&self) -> &[String] {
        &self.notices
    }

    /// In-place form of [`inject`]. On error the state is left untouched.
    pub fn apply(&mut self, event: &SimEvent) -> Result<(), EngineError> {
        if !(event.t.is_finite() && event.t >= 0.0) {
            return Err(EngineError::InvalidTime(event.t));
        }
        if event.t < self.clock {
            return Err(EngineError::TimeRegression {
                clock: self.clock,
                t: event.t,
            });
        }
        self.clock = event.t;
        match self.phase {
            Phase::Completed | Phase::Failed => {
                self.notices.push(format!(
                    "t={}: {} event #{} ignored, workflow is {}",
                    event.t,
                    event.name(),
                    event.seq,
                    self.phase
                ));
            }
            Phase::Loaded | Phase::AwaitOrigin => match &event.kind {
                EventKind::Detect { detectable, pose } if *detectable == self.program.origin => {
                    let pose = pose.unwrap_or(Pose::IDENTITY);
                    self.scene.mark_detected(detectable, pose);
                    self.scene.origin_frame = Some(pose);
                    self.trace
                        .push(self.clock, TraceKind::OriginDetected, detectable, "workflow started");
                    self.phase = Phase::Running;
                    self.run_to_quiescence();
                }
                _ => log::debug!("t={}: {} ignored before origin detection", event.t, event.name()),
            },
            Phase::Running => {
                self.record(event);
                self.run_to_quiescence();
            }
        }
        Ok(())
    }

    fn record(&mut self, event: &SimEvent) {
        match &event.kind {
            EventKind::Detect { detectable, pose } => {
                if !self.scene.detectables.contains_key(detectable) {
                    self.notices
                        .push(format!("t={}: unknown detectable `{detectable}` ignored", event.t));
                    return;
                }
                let pose = pose.unwrap_or(Pose::IDENTITY);
                self.scene.mark_detected(detectable, pose);
                if *detectable == self.program.origin {
                    self.scene.origin_frame = Some(pose);
                }
            }
            EventKind::Click { augmentation } => {
                if !self.scene.augmentations.contains_key(augmentation) {
                    self.notices.push(format!(
                        "t={}: click on unknown augmentation `{augmentation}` ignored",
                        event.t
                    ));
                    return;
                }
                self.clicks.push(PendingClick {
                    augmentation: augmentation.clone(),
                    t: event.t,
                });
            }
            EventKind::Observer { key, value } => {
                self.observed.insert(key.clone(), value.clone());
            }
            EventKind::Advance => {}
        }
    }

    fn spawn(&mut self, node: Identifier) {
        let id = TokenId(self.next_token);
        self.next_token += 1;
        let armed_at = self.program.is_condition(&node).then_some(self.clock);
        self.tokens.insert(
            id,
            Token {
                id,
                at_node: node,
                armed_at,
            },
        );
    }

    /// Removes the token and places one new token on each successor, in edge id order.
    fn forward(&mut self, id: TokenId) {
        let Some(token) = self.tokens.remove(&id) else {
            return;
        };
        let program = Arc::clone(&self.program);
        for next in program.successors.get(&token.at_node).into_iter().flatten() {
            self.spawn(next.clone());
        }
    }

    /// Pairs armed click Conditions with pending clicks: Conditions in
    /// (condition id, token id) order each take the earliest eligible click.
    fn click_grants(&self) -> BTreeMap<TokenId, usize> {
        let mut waiting: Vec<(&Identifier, TokenId, &Identifier, f64)> = self
            .tokens
            .values()
            .filter(|t| !self.disabled_conditions.contains(&t.at_node))
            .filter_map(|t| match self.program.nodes.get(&t.at_node) {
                Some(Node::Condition(Rule::Click(aug))) => {
                    Some((&t.at_node, t.id, aug, t.armed_at.unwrap_or(self.clock)))
                }
                _ => None,
            })
            .collect();
        waiting.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut taken = BTreeSet::new();
        let mut grants = BTreeMap::new();
        for (_, token, aug, armed_at) in waiting {
            let pick = self
                .clicks
                .iter()
                .enumerate()
                .find(|(i, c)| !taken.contains(i) && c.augmentation == *aug && c.t >= armed_at)
                .map(|(i, _)| i);
            if let Some(i) = pick {
                taken.insert(i);
                grants.insert(token, i);
            }
        }
        grants
    }

    fn satisfied(&self, rule: &Rule, token: &Token, click: Option<&usize>) -> Option<String> {
        let armed_at = token.armed_at.unwrap_or(self.clock);
        match rule {
            Rule::Timer(duration) => {
                (self.clock >= armed_at + duration).then(|| format!("timer {duration} s armed at {armed_at}"))
            }
            Rule::Click(aug) => click.map(|i| format!("click on {aug} at {}", self.clicks[*i].t)),
            Rule::Detection(det) => self.scene.is_detected(det.as_str()).then(|| format!("{det} detected")),
            Rule::Observer { keys, value } => keys.iter().find_map(|k| {
                let stored = self.observed.get(k)?;
                value
                    .as_ref()
                    .is_none_or(|v| v == stored)
                    .then(|| format!("observer {k}={stored}"))
            }),
            Rule::Never => None,
        }
    }

    fn run_to_quiescence(&mut self) {
        if self.phase != Phase::Running {
            return;
        }
        let program = Arc::clone(&self.program);
        loop {
            let mut progressed = false;
            let grants = self.click_grants();
            let mut used_clicks = BTreeSet::new();
            let ids: Vec<TokenId> = self.tokens.keys().copied().collect();
            for id in ids {
                let Some(token) = self.tokens.get(&id).cloned() else {
                    continue;
                };
                let node_id = &token.at_node;
                let Some(node) = program.nodes.get(node_id) else {
                    self.tokens.remove(&id);
                    self.notices
                        .push(format!("t={}: token at non-flow node `{node_id}` dropped", self.clock));
                    progressed = true;
                    continue;
                };
                match node {
                    Node::Start => {
                        self.forward(id);
                        progressed = true;
                    }
                    Node::End => {
                        self.tokens.remove(&id);
                        self.trace.push(self.clock, TraceKind::EndReached, node_id, "");
                        progressed = true;
                    }
                    Node::Condition(_) if self.disabled_conditions.contains(node_id) => {
                        self.tokens.remove(&id);
                        progressed = true;
                    }
                    Node::Condition(rule) => {
                        let grant = grants.get(&id);
                        if let Some(details) = self.satisfied(rule, &token, grant) {
                            used_clicks.extend(grant.copied());
                            self.trace
                                .push(self.clock, TraceKind::ConditionSatisfied, node_id, details);
                            self.forward(id);
                            progressed = true;
                        }
                    }
                    Node::Statechange(model_id) => {
                        let model = &program.statechanges[node_id];
                        match apply_statechange(&self.scene, model) {
                            Ok(next) => {
                                self.scene = next;
                                self.trace.push(
                                    self.clock,
                                    TraceKind::StatechangeApplied,
                                    node_id,
                                    format!("applied {model_id}"),
                                );
                                self.forward(id);
                                progressed = true;
                            }
                            Err(e) => {
                                self.notices
                                    .push(format!("t={}: statechange {model_id} failed: {e}", self.clock));
                                self.phase = Phase::Failed;
                                return;
                            }
                        }
                    }
                    Node::Resolve(target) => {
                        let details = match target {
                            Some(cond) => {
                                self.disabled_conditions.insert(cond.clone());
                                let before = self.tokens.len();
                                self.tokens.retain(|_, t| t.at_node != *cond);
                                format!("disabled {cond}, dropped {} token(s)", before - self.tokens.len())
                            }
                            None => "no condition to resolve".to_owned(),
                        };
                        self.trace.push(self.clock, TraceKind::ResolveApplied, node_id, details);
                        self.forward(id);
                        progressed = true;
                    }
                }
            }
            let mut used: Vec<usize> = used_clicks.into_iter().collect();
            used.sort_unstable_by(|a, b| b.cmp(a));
            for i in used {
                self.clicks.remove(i);
            }
            if !progressed {
                break;
            }
        }
        if self.tokens.is_empty() {
            self.phase = Phase::Completed;
            self.trace.push(
                self.clock,
                TraceKind::WorkflowCompleted,
                &program.flowscene,
                "all tokens consumed",
            );
        }
    }

    /// Visibility and world pose of every augmentation. Poses are omitted
    /// while they cannot be computed, e.g. before the origin is known.
    pub fn snapshot(&self) -> SceneSnapshot {
        let entries = self
            .scene
            .augmentations
            .iter()
            .map(|(id, aug)| {
                let world_pose = world_pose(&self.scene, &self.program.objectspace, id).ok();
                (
                    id.clone(),
                    SnapshotEntry {
                        visible: aug.visible,
                        world_pose,
                    },
                )
            })
            .collect();
        SceneSnapshot { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotEntry {
    pub visible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world_pose: Option<Pose>,
}

/// Per-augmentation appearance, keyed by augmentation id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SceneSnapshot {
    pub entries: BTreeMap<Identifier, SnapshotEntry>,
}

impl SceneSnapshot {
    pub fn to_document(&self) -> String {
        canonical::to_document(self)
    }

    pub fn get(&self, augmentation: &str) -> Option<&SnapshotEntry> {
        self.entries.get(augmentation)
    }

    pub fn visible_count(&self) -> usize {
        self.entries.values().filter(|e| e.visible).count()
    }
}

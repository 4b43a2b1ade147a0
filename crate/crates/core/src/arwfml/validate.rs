use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{metamodel, names, CONDITION_KINDS};
use crate::meta2::{
    conforms, resolve, sort_diagnostics, AssetKind, Bundle, ClassInstance, Diagnostic, Identifier, InstanceRef,
    Location, Model, Resolved,
};

/// ARWFML rule codes. These are stable public identifiers.
pub mod codes {
    /// FlowScene has exactly one Start and at least one End.
    pub const V001: &str = "V001";
    /// ObjectSpaceRef.objectspace points at an ObjectSpace model.
    pub const V002: &str = "V002";
    /// Origin port targets an `is_origin` Detectable of the referenced ObjectSpace.
    /// As a warning: an ObjectSpace declares more than one origin.
    pub const V003: &str = "V003";
    /// StatechangeRef.statechange_model points at a Statechange model.
    pub const V004: &str = "V004";
    /// Reference.target is an Augmentation of the ObjectSpace in use.
    /// As a warning: the Reference changes nothing.
    pub const V005: &str = "V005";
    /// Condition kind and its parameters agree.
    pub const V006: &str = "V006";
    /// Flow graph sanity.
    pub const V007: &str = "V007";
    /// `child` graph acyclic, `anchored` targets are Detectables.
    pub const V008: &str = "V008";
    /// Augmentations carry a GLTF asset; as a warning, Detectables lack an image.
    pub const V009: &str = "V009";
    /// Resolve.resolves targets a Condition of the same FlowScene.
    pub const V010: &str = "V010";
    /// No FlowScene to execute (warning).
    pub const V011: &str = "V011";
    /// Two ObjectSpaceRefs of one FlowScene share an Origin target.
    pub const V012: &str = "V012";
}

/// Runs generic conformance and, if it reports no errors, the ARWFML rule
/// catalog. Output is ordered by (model id, instance id, code).
pub fn validate(bundle: &Bundle) -> Vec<Diagnostic> {
    let generic = conforms(bundle, metamodel());
    if generic.iter().any(Diagnostic::is_error) {
        return generic;
    }
    let mut v = Validator { bundle, out: generic };
    v.run();
    let mut out = v.out;
    sort_diagnostics(&mut out);
    out
}

struct Validator<'a> {
    bundle: &'a Bundle,
    out: Vec<Diagnostic>,
}

impl<'a> Validator<'a> {
    fn run(&mut self) {
        let bundle = self.bundle;
        if bundle.models_of(names::FLOW_SCENE).next().is_none() {
            self.warning(
                codes::V011,
                Location::bundle(),
                "bundle contains no FlowScene to execute",
            );
        }
        for model in bundle.models() {
            match model.scene_type.as_str() {
                names::OBJECT_SPACE => self.objectspace(model),
                names::STATECHANGE => self.statechange(model),
                names::FLOW_SCENE => self.flow_scene(model),
                _ => {}
            }
        }
    }

    fn error(&mut self, code: &str, at: Location, message: impl Into<String>) {
        self.out.push(Diagnostic::error(code, at, message));
    }

    fn warning(&mut self, code: &str, at: Location, message: impl Into<String>) {
        self.out.push(Diagnostic::warning(code, at, message));
    }

    fn resolve_class(&self, r: &InstanceRef) -> Option<(&'a Model, &'a ClassInstance)> {
        match resolve(self.bundle, r).ok()? {
            Resolved::Class { model, instance } => Some((model, instance)),
            _ => None,
        }
    }

    fn resolve_model(&self, r: &InstanceRef, scene_type: &str) -> Option<&'a Model> {
        match resolve(self.bundle, r).ok()? {
            Resolved::Model(m) if m.scene_type == scene_type => Some(m),
            _ => None,
        }
    }

    /// ObjectSpace models a FlowScene refers to through well-typed ObjectSpaceRefs.
    fn objectspaces_of(&self, flow_scene: &Model) -> BTreeSet<&'a Identifier> {
        flow_scene
            .classes_of(names::OBJECT_SPACE_REF)
            .filter_map(|r| r.attribute(names::OBJECTSPACE_ATTR)?.as_ref_value())
            .filter_map(|r| self.resolve_model(r, names::OBJECT_SPACE))
            .map(|m| &m.id)
            .collect()
    }

    /// Whether `r` names a `metaclass` instance inside one of `spaces`
    /// (any ObjectSpace when `spaces` is empty).
    fn is_class_in(&self, r: &InstanceRef, metaclass: &str, spaces: &BTreeSet<&Identifier>) -> bool {
        self.resolve_class(r).is_some_and(|(model, inst)| {
            model.scene_type == names::OBJECT_SPACE
                && inst.metaclass == metaclass
                && (spaces.is_empty() || spaces.contains(&model.id))
        })
    }

    fn objectspace(&mut self, model: &'a Model) {
        let origins = model.classes_of(names::DETECTABLE).filter(|d| is_origin(d)).count();
        if origins > 1 {
            self.warning(
                codes::V003,
                Location::model(&model.id),
                format!("{origins} Detectables are marked is_origin"),
            );
        }

        for aug in model.classes_of(names::AUGMENTATION) {
            let ok = aug
                .attribute(names::OBJECT3D)
                .and_then(|v| v.as_asset())
                .and_then(|a| self.bundle.assets.get(a))
                .is_some_and(|a| a.kind == AssetKind::Gltf && !a.uri.is_empty());
            if !ok {
                self.error(
                    codes::V009,
                    Location::instance(&model.id, &aug.id),
                    "object3d must name a non-empty GLTF asset",
                );
            }
        }
        for det in model.classes_of(names::DETECTABLE) {
            let ok = det
                .attribute(names::IMAGE)
                .and_then(|v| v.as_asset())
                .and_then(|a| self.bundle.assets.get(a))
                .is_some_and(|a| a.kind == AssetKind::Image && !a.uri.is_empty());
            if !ok {
                self.warning(
                    codes::V009,
                    Location::instance(&model.id, &det.id),
                    "Detectable has no image asset",
                );
            }
        }

        let parents: BTreeMap<&Identifier, &Identifier> = model
            .relations_of(names::CHILD)
            .map(|r| (&r.to_instance, &r.from_instance))
            .collect();
        for aug in model.classes_of(names::AUGMENTATION) {
            let mut seen = BTreeSet::new();
            let mut current = &aug.id;
            while let Some(parent) = parents.get(current) {
                if *parent == &aug.id {
                    self.error(
                        codes::V008,
                        Location::instance(&model.id, &aug.id),
                        "augmentation is its own ancestor along `child`",
                    );
                    break;
                }
                if !seen.insert(*parent) {
                    break;
                }
                current = parent;
            }
        }
        for rel in model.relations_of(names::ANCHORED) {
            let target_ok = model
                .class(rel.to_instance.as_str())
                .is_some_and(|c| c.metaclass == names::DETECTABLE);
            if !target_ok {
                self.error(
                    codes::V008,
                    Location::instance(&model.id, &rel.id),
                    format!("anchored target `{}` is not a Detectable", rel.to_instance),
                );
            }
        }
    }

    fn statechange(&mut self, model: &'a Model) {
        let spaces: BTreeSet<&Identifier> = self
            .bundle
            .models_of(names::FLOW_SCENE)
            .filter(|fs| {
                fs.classes_of(names::STATECHANGE_REF).any(|r| {
                    r.attribute(names::STATECHANGE_MODEL)
                        .and_then(|v| v.as_ref_value())
                        .and_then(|v| self.resolve_model(v, names::STATECHANGE))
                        .is_some_and(|m| m.id == model.id)
                })
            })
            .flat_map(|fs| self.objectspaces_of(fs))
            .collect();

        for reference in model.classes_of(names::REFERENCE) {
            let at = Location::instance(&model.id, &reference.id);
            let target_ok = reference
                .attribute(names::TARGET)
                .and_then(|v| v.as_ref_value())
                .is_some_and(|r| self.is_class_in(r, names::AUGMENTATION, &spaces));
            if !target_ok {
                self.error(
                    codes::V005,
                    at.clone(),
                    "target must be an Augmentation of the ObjectSpace in use",
                );
            }
            let empty = reference
                .attribute(names::CHANGES)
                .and_then(|v| v.as_change_list())
                .is_none_or(|c| c.is_empty());
            if empty {
                self.warning(codes::V005, at, "reference changes nothing");
            }
        }
    }

    fn flow_scene(&mut self, fs: &'a Model) {
        let at_model = Location::model(&fs.id);
        let starts = fs.classes_of(names::START).count();
        let ends = fs.classes_of(names::END).count();
        if starts != 1 {
            self.error(
                codes::V001,
                at_model.clone(),
                format!("expected exactly one Start, found {starts}"),
            );
        }
        if ends == 0 {
            self.error(codes::V001, at_model, "FlowScene has no End");
        }

        self.objectspace_refs(fs);
        let spaces = self.objectspaces_of(fs);

        for sref in fs.classes_of(names::STATECHANGE_REF) {
            let ok = sref
                .attribute(names::STATECHANGE_MODEL)
                .and_then(|v| v.as_ref_value())
                .and_then(|r| self.resolve_model(r, names::STATECHANGE))
                .is_some();
            if !ok {
                self.error(
                    codes::V004,
                    Location::instance(&fs.id, &sref.id),
                    "statechange_model must reference a Statechange model",
                );
            }
        }

        for cond in fs.classes_of(names::CONDITION) {
            if let Some(problem) = self.condition_problem(fs, cond, &spaces) {
                self.error(codes::V006, Location::instance(&fs.id, &cond.id), problem);
            }
        }

        self.flow_graph(fs);

        for res in fs.classes_of(names::RESOLVE) {
            let Some(target) = res.attribute(names::RESOLVES).and_then(|v| v.as_ref_value()) else {
                continue;
            };
            let ok = self
                .resolve_class(target)
                .is_some_and(|(m, c)| m.id == fs.id && c.metaclass == names::CONDITION);
            if !ok {
                self.error(
                    codes::V010,
                    Location::instance(&fs.id, &res.id),
                    "resolves must target a Condition of this FlowScene",
                );
            }
        }
    }

    fn objectspace_refs(&mut self, fs: &'a Model) {
        let mut origin_targets: BTreeMap<&InstanceRef, &Identifier> = BTreeMap::new();
        for osref in fs.classes_of(names::OBJECT_SPACE_REF) {
            let at = Location::instance(&fs.id, &osref.id);
            let space = osref
                .attribute(names::OBJECTSPACE_ATTR)
                .and_then(|v| v.as_ref_value())
                .and_then(|r| self.resolve_model(r, names::OBJECT_SPACE));
            let Some(space) = space else {
                self.error(codes::V002, at, "objectspace must reference an ObjectSpace model");
                continue;
            };

            let target = fs
                .ports_of(&osref.id)
                .find(|p| p.port == names::ORIGIN_PORT)
                .and_then(|p| p.target.as_ref());
            let Some(target) = target else {
                self.error(codes::V003, at, "Origin port has no target");
                continue;
            };
            let origin_ok = self
                .resolve_class(target)
                .is_some_and(|(m, c)| m.id == space.id && c.metaclass == names::DETECTABLE && is_origin(c));
            if !origin_ok {
                self.error(
                    codes::V003,
                    at.clone(),
                    format!("Origin must be an is_origin Detectable of `{}`", space.id),
                );
            }
            if let Some(first) = origin_targets.insert(target, &osref.id) {
                self.error(codes::V012, at, format!("Origin target already used by `{first}`"));
            }
        }
    }

    fn condition_problem(&self, fs: &Model, cond: &ClassInstance, spaces: &BTreeSet<&Identifier>) -> Option<String> {
        let kind = cond.attribute(names::KIND).and_then(|v| v.as_text()).unwrap_or("");
        let observes = cond.attribute(names::OBSERVES).and_then(|v| v.as_ref_value());
        match kind {
            "timer" => {
                let duration = cond.attribute(names::DURATION_S).and_then(|v| v.as_number());
                match duration {
                    Some(d) if d.is_finite() && d > 0.0 => None,
                    Some(d) => Some(format!("timer duration_s must be > 0, found {d}")),
                    None => Some("timer condition needs duration_s".into()),
                }
            }
            "click" if observes.is_some_and(|r| self.is_class_in(r, names::AUGMENTATION, spaces)) => None,
            "click" => Some("click condition must observe an Augmentation".into()),
            "detection" if observes.is_some_and(|r| self.is_class_in(r, names::DETECTABLE, spaces)) => None,
            "detection" => Some("detection condition must observe a Detectable".into()),
            "observer" => {
                let linked = fs.relations_of(names::OBSERVES_LINK).any(|r| r.to_instance == cond.id);
                let keyed = cond
                    .attribute(names::OBSERVER_KEY)
                    .and_then(|v| v.as_text())
                    .is_some_and(|k| !k.is_empty());
                (!linked && !keyed).then(|| "observer condition needs an observes_link or observer_key".into())
            }
            other => Some(format!(
                "unknown condition kind `{other}` (expected one of {})",
                CONDITION_KINDS.join(", ")
            )),
        }
    }

    fn flow_graph(&mut self, fs: &'a Model) {
        let mut successors: BTreeMap<&Identifier, Vec<&Identifier>> = BTreeMap::new();
        for edge in fs.relations_of(names::FLOW) {
            let from = fs.class(edge.from_instance.as_str());
            let to = fs.class(edge.to_instance.as_str());
            let at = Location::instance(&fs.id, &edge.id);
            match (from, to) {
                (Some(from), Some(_)) if from.metaclass == names::END => {
                    self.error(codes::V007, at, "End must not have outgoing flow");
                }
                (Some(_), Some(_)) => successors
                    .entry(&edge.from_instance)
                    .or_default()
                    .push(&edge.to_instance),
                _ => self.error(codes::V007, at, "flow edge endpoint does not exist"),
            }
        }

        let mut reached: BTreeSet<&Identifier> = BTreeSet::new();
        let mut queue: VecDeque<&Identifier> = fs.classes_of(names::START).map(|s| &s.id).collect();
        while let Some(node) = queue.pop_front() {
            for next in successors.get(node).into_iter().flatten() {
                if reached.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        let unreachable: Vec<&Identifier> = fs
            .classes()
            .filter(|c| names::FLOW_TARGETS.contains(&c.metaclass.as_str()))
            .map(|c| &c.id)
            .filter(|id| !reached.contains(id))
            .collect();
        for id in unreachable {
            self.error(codes::V007, Location::instance(&fs.id, id), "not reachable from Start");
        }
    }
}

fn is_origin(detectable: &ClassInstance) -> bool {
    detectable
        .attribute(names::IS_ORIGIN)
        .and_then(|v| v.as_bool())
        .unwrap_or(false)
}

use std::collections::BTreeMap;

use super::{
    resolve, sort_diagnostics, AttributeDefinition, AttributeValue, Bundle, Diagnostic, Identifier, InstanceRef,
    Location, Metamodel, Model, RefTarget, Resolved, SceneTypeDefinition,
};

/// Diagnostic codes emitted by [`conforms`].
pub mod codes {
    pub const METAMODEL_MISMATCH: &str = "MetamodelMismatch";
    pub const DUPLICATE_ID: &str = "DuplicateId";
    pub const UNKNOWN_SCENE_TYPE: &str = "UnknownSceneType";
    pub const UNKNOWN_METACLASS: &str = "UnknownMetaclass";
    pub const UNKNOWN_RELATIONCLASS: &str = "UnknownRelationclass";
    pub const UNKNOWN_PORT: &str = "UnknownPort";
    pub const UNKNOWN_PORT_OWNER: &str = "UnknownPortOwner";
    pub const UNKNOWN_ATTRIBUTE: &str = "UnknownAttribute";
    pub const MISSING_ATTRIBUTE: &str = "MissingAttribute";
    pub const ATTRIBUTE_KIND_MISMATCH: &str = "AttributeKindMismatch";
    pub const INVALID_VALUE: &str = "InvalidValue";
    pub const INVALID_PLACEMENT: &str = "InvalidPlacement";
    pub const UNKNOWN_ASSET: &str = "UnknownAsset";
    pub const DANGLING_REFERENCE: &str = "DanglingReference";
    pub const REF_KIND_MISMATCH: &str = "RefKindMismatch";
    pub const REF_TARGET_MISMATCH: &str = "RefTargetMismatch";
    pub const DANGLING_ENDPOINT: &str = "DanglingEndpoint";
    pub const ROLE_VIOLATION: &str = "RoleViolation";
    pub const CARDINALITY_VIOLATION: &str = "CardinalityViolation";
}

/// Checks every model of `bundle` against `metamodel`.
///
/// Findings that depend on an already-reported defect (e.g. role checks on
/// an endpoint whose metaclass is unknown) are not reported twice.
pub fn conforms(bundle: &Bundle, metamodel: &Metamodel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if bundle.metamodel_name != metamodel.name() {
        out.push(Diagnostic::error(
            codes::METAMODEL_MISMATCH,
            Location::bundle(),
            format!(
                "bundle targets metamodel `{}`, expected `{}`",
                bundle.metamodel_name,
                metamodel.name()
            ),
        ));
    }
    duplicate_ids(bundle, &mut out);

    for model in bundle.models() {
        let Some(scene) = metamodel.scene_type(&model.scene_type) else {
            out.push(Diagnostic::error(
                codes::UNKNOWN_SCENE_TYPE,
                Location::model(&model.id),
                format!("unknown scene type `{}`", model.scene_type),
            ));
            continue;
        };
        let checker = ModelChecker {
            bundle,
            metamodel,
            model,
            scene,
        };
        checker.check(&mut out);
    }

    sort_diagnostics(&mut out);
    out
}

fn duplicate_ids(bundle: &Bundle, out: &mut Vec<Diagnostic>) {
    let mut seen: BTreeMap<&Identifier, &Identifier> = BTreeMap::new();
    for model in bundle.models() {
        for id in model.instance_ids() {
            if let Some(first) = seen.insert(id, &model.id) {
                out.push(Diagnostic::error(
                    codes::DUPLICATE_ID,
                    Location::instance(&model.id, id),
                    format!("instance id `{id}` already used in model `{first}`"),
                ));
            }
        }
    }
}

struct ModelChecker<'a> {
    bundle: &'a Bundle,
    metamodel: &'a Metamodel,
    model: &'a Model,
    scene: &'a SceneTypeDefinition,
}

impl ModelChecker<'_> {
    fn check(&self, out: &mut Vec<Diagnostic>) {
        let model = self.model;
        for class in model.classes() {
            let at = Location::instance(&model.id, &class.id);
            let Some(def) = self.scene.find_metaclass(&class.metaclass) else {
                out.push(Diagnostic::error(
                    codes::UNKNOWN_METACLASS,
                    at,
                    format!(
                        "metaclass `{}` is not declared in scene type `{}`",
                        class.metaclass, self.scene.name
                    ),
                ));
                continue;
            };
            self.check_attributes(&at, &def.attributes, &class.attributes, out);
            if class.placement.is_some_and(|p| !p.is_well_formed()) {
                out.push(Diagnostic::error(
                    codes::INVALID_PLACEMENT,
                    at,
                    "placement needs a unit rotation and positive finite scale",
                ));
            }
        }

        for relation in model.relations() {
            let at = Location::instance(&model.id, &relation.id);
            let Some(def) = self.scene.find_relationclass(&relation.relationclass) else {
                out.push(Diagnostic::error(
                    codes::UNKNOWN_RELATIONCLASS,
                    at,
                    format!(
                        "relationclass `{}` is not declared in scene type `{}`",
                        relation.relationclass, self.scene.name
                    ),
                ));
                continue;
            };
            for (role, endpoint) in [
                (&def.from_role, &relation.from_instance),
                (&def.to_role, &relation.to_instance),
            ] {
                match self.endpoint_type(endpoint) {
                    None => out.push(Diagnostic::error(
                        codes::DANGLING_ENDPOINT,
                        at.clone(),
                        format!("{} endpoint `{endpoint}` does not exist in this model", role.name),
                    )),
                    Some(EndpointType::Unknown) => {}
                    Some(EndpointType::Known(type_name)) if !role.admits(type_name) => out.push(Diagnostic::error(
                        codes::ROLE_VIOLATION,
                        at.clone(),
                        format!(
                            "role `{}` of `{}` does not admit `{type_name}` (allowed: {})",
                            role.name,
                            def.name,
                            role.allowed_endpoint_types.join(", ")
                        ),
                    )),
                    Some(EndpointType::Known(_)) => {}
                }
            }
            self.check_attributes(&at, &def.attributes, &relation.attributes, out);
        }

        self.check_cardinalities(out);

        for port in model.ports() {
            let at = Location::instance(&model.id, &port.id);
            let Some(owner) = model.class(port.owner.as_str()) else {
                out.push(Diagnostic::error(
                    codes::UNKNOWN_PORT_OWNER,
                    at,
                    format!("port owner `{}` is not a class instance of this model", port.owner),
                ));
                continue;
            };
            let Some(owner_def) = self.scene.find_metaclass(&owner.metaclass) else {
                continue;
            };
            let Some(def) = owner_def.find_port(&port.port) else {
                out.push(Diagnostic::error(
                    codes::UNKNOWN_PORT,
                    at,
                    format!("metaclass `{}` declares no port `{}`", owner.metaclass, port.port),
                ));
                continue;
            };
            if let Some(target) = &port.target {
                self.check_ref(&at, &port.port, &def.ref_target, target, out);
            }
        }
    }

    fn endpoint_type(&self, id: &Identifier) -> Option<EndpointType<'_>> {
        if let Some(class) = self.model.class(id.as_str()) {
            return Some(match self.scene.find_metaclass(&class.metaclass) {
                Some(_) => EndpointType::Known(&class.metaclass),
                None => EndpointType::Unknown,
            });
        }
        self.model.port(id.as_str()).map(|port| EndpointType::Known(&port.port))
    }

    fn check_cardinalities(&self, out: &mut Vec<Diagnostic>) {
        let model = self.model;
        for def in &self.scene.relationclasses {
            for (role, is_from) in [(&def.from_role, true), (&def.to_role, false)] {
                if role.cardinality == super::Cardinality::ANY {
                    continue;
                }
                let mut counts: BTreeMap<&Identifier, usize> = BTreeMap::new();
                for rel in model.relations_of(&def.name) {
                    let end = if is_from { &rel.from_instance } else { &rel.to_instance };
                    *counts.entry(end).or_default() += 1;
                }
                let eligible = model
                    .classes()
                    .filter(|c| role.admits(&c.metaclass))
                    .map(|c| &c.id)
                    .chain(model.ports().filter(|p| role.admits(&p.port)).map(|p| &p.id));
                for id in eligible {
                    let count = counts.get(id).copied().unwrap_or(0);
                    if !role.cardinality.admits(count) {
                        out.push(Diagnostic::error(
                            codes::CARDINALITY_VIOLATION,
                            Location::instance(&model.id, id),
                            format!(
                                "takes part in {count} `{}` relation(s) as `{}`, allowed {}",
                                def.name, role.name, role.cardinality
                            ),
                        ));
                    }
                }
            }
        }
    }

    fn check_attributes(
        &self,
        at: &Location,
        defs: &[AttributeDefinition],
        values: &BTreeMap<String, AttributeValue>,
        out: &mut Vec<Diagnostic>,
    ) {
        for (name, value) in values {
            let Some(def) = defs.iter().find(|d| &d.name == name) else {
                out.push(Diagnostic::error(
                    codes::UNKNOWN_ATTRIBUTE,
                    at.clone(),
                    format!("attribute `{name}` is not declared"),
                ));
                continue;
            };
            if value.kind() != def.value_kind {
                out.push(Diagnostic::error(
                    codes::ATTRIBUTE_KIND_MISMATCH,
                    at.clone(),
                    format!(
                        "attribute `{name}` holds {} but is declared {}",
                        value.kind(),
                        def.value_kind
                    ),
                ));
                continue;
            }
            self.check_value(at, def, value, out);
        }
        for def in defs.iter().filter(|d| d.required) {
            if !values.contains_key(&def.name) {
                out.push(Diagnostic::error(
                    codes::MISSING_ATTRIBUTE,
                    at.clone(),
                    format!("required attribute `{}` is missing", def.name),
                ));
            }
        }
    }

    fn check_value(&self, at: &Location, def: &AttributeDefinition, value: &AttributeValue, out: &mut Vec<Diagnostic>) {
        let invalid = |why: &str| {
            Diagnostic::error(
                codes::INVALID_VALUE,
                at.clone(),
                format!("attribute `{}`: {why}", def.name),
            )
        };
        match value {
            AttributeValue::Number(n) if !n.is_finite() => out.push(invalid("number is not finite")),
            AttributeValue::Vector3(v) if !v.iter().all(|c| c.is_finite()) => {
                out.push(invalid("vector component is not finite"))
            }
            AttributeValue::Quaternion(q) if !q.is_unit() => out.push(invalid("quaternion is not unit length")),
            AttributeValue::ChangeList(c) if !c.is_well_formed() => {
                out.push(invalid("change list needs unit rotation and positive finite scale"))
            }
            AttributeValue::AssetRef(asset) if !self.bundle.assets.contains_key(asset) => out.push(Diagnostic::error(
                codes::UNKNOWN_ASSET,
                at.clone(),
                format!("attribute `{}` names unregistered asset `{asset}`", def.name),
            )),
            AttributeValue::InstanceRef(target) => {
                if let Some(ref_target) = &def.ref_target {
                    self.check_ref(at, &def.name, ref_target, target, out);
                }
            }
            _ => {}
        }
    }

    fn check_ref(
        &self,
        at: &Location,
        slot: &str,
        expected: &RefTarget,
        target: &InstanceRef,
        out: &mut Vec<Diagnostic>,
    ) {
        let resolved = match resolve(self.bundle, target) {
            Ok(r) => r,
            Err(err) => {
                out.push(Diagnostic::error(
                    codes::DANGLING_REFERENCE,
                    at.clone(),
                    format!("`{slot}`: {err}"),
                ));
                return;
            }
        };
        if target.kind() != expected.kind {
            out.push(Diagnostic::error(
                codes::REF_KIND_MISMATCH,
                at.clone(),
                format!("`{slot}` expects a {:?} reference, found {target}", expected.kind),
            ));
            return;
        }
        if !self.type_is_declared(&resolved) {
            return;
        }
        let type_name = resolved.type_name();
        if !expected.permits(type_name) {
            out.push(Diagnostic::error(
                codes::REF_TARGET_MISMATCH,
                at.clone(),
                format!(
                    "`{slot}` must point at one of [{}], found `{type_name}`",
                    expected.allowed_types.join(", ")
                ),
            ));
        }
    }

    /// Whether the referenced element's own type is known, i.e. not already reported.
    fn type_is_declared(&self, resolved: &Resolved<'_>) -> bool {
        let Some(scene) = self.metamodel.scene_type(&resolved.model().scene_type) else {
            return false;
        };
        match resolved {
            Resolved::Class { instance, .. } => scene.find_metaclass(&instance.metaclass).is_some(),
            Resolved::Port { model, instance } => model
                .class(instance.owner.as_str())
                .and_then(|owner| scene.find_metaclass(&owner.metaclass))
                .is_some_and(|c| c.find_port(&instance.port).is_some()),
            Resolved::Model(_) => true,
        }
    }
}

enum EndpointType<'a> {
    Known(&'a str),
    Unknown,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta2::{
        build_metamodel, Cardinality, ClassInstance, MetaClass, PortInstance, RefTargetKind, RelationclassDefinition,
        RelationclassInstance, RoleDefinition, ValueKind,
    };
    use crate::scene3d::Quat;

    fn id(s: &str) -> Identifier {
        Identifier::new(s).unwrap()
    }

    fn metamodel() -> Metamodel {
        let space = SceneTypeDefinition::new("Space")
            .metaclass(
                MetaClass::new("Thing")
                    .attribute(AttributeDefinition::required("label", ValueKind::Text))
                    .attribute(AttributeDefinition::optional("spin", ValueKind::Quaternion))
                    .attribute(
                        AttributeDefinition::optional("buddy", ValueKind::InstanceRef)
                            .with_ref_target(RefTarget::of(RefTargetKind::MetaclassInstance, &["Thing"])),
                    )
                    .port("Out", RefTarget::any(RefTargetKind::SceneTypeInstance)),
            )
            .metaclass(MetaClass::new("Marker"))
            .relationclass(RelationclassDefinition::new(
                "on",
                RoleDefinition::new("fr", &["Thing"]).with_cardinality(Cardinality::AT_MOST_ONE),
                RoleDefinition::new("tr", &["Marker"]),
            ));
        build_metamodel("Test", "1", vec![space]).unwrap()
    }

    fn thing(name: &str) -> ClassInstance {
        ClassInstance::new(id(name), "Thing").with("label", AttributeValue::Text(name.into()))
    }

    fn bundle() -> Bundle {
        let mut b = Bundle::new("Test");
        let mut m = Model::new(id("m"), "space", "Space");
        m.insert_class(thing("a"));
        m.insert_class(thing("b").with(
            "buddy",
            AttributeValue::InstanceRef(InstanceRef::class(&id("m"), &id("a"))),
        ));
        m.insert_class(ClassInstance::new(id("k"), "Marker"));
        m.insert_relation(RelationclassInstance::new(id("r1"), "on", &id("a"), &id("k")));
        m.insert_port(PortInstance {
            id: id("p"),
            port: "Out".into(),
            owner: id("a"),
            target: Some(InstanceRef::model(&id("m"))),
        });
        b.insert_model(m);
        b
    }

    fn codes_of(d: &[Diagnostic]) -> Vec<&str> {
        d.iter().map(|d| d.code.as_str()).collect()
    }

    #[test]
    fn clean_bundle_conforms() {
        assert_eq!(conforms(&bundle(), &metamodel()), vec![]);
    }

    #[test]
    fn missing_required_attribute_reported_once_per_instance() {
        let mut b = bundle();
        b.model_mut("m").unwrap().class_mut("a").unwrap().attributes.clear();
        b.model_mut("m")
            .unwrap()
            .class_mut("b")
            .unwrap()
            .attributes
            .remove("label");
        let d = conforms(&b, &metamodel());
        assert_eq!(codes_of(&d), vec![codes::MISSING_ATTRIBUTE; 2]);
    }

    #[test]
    fn wrong_kind_and_bad_quaternion() {
        let mut b = bundle();
        let a = b.model_mut("m").unwrap().class_mut("a").unwrap();
        a.attributes.insert("label".into(), AttributeValue::Number(3.0));
        a.attributes
            .insert("spin".into(), AttributeValue::Quaternion(Quat::new(0.0, 0.0, 0.0, 0.5)));
        let d = conforms(&b, &metamodel());
        assert_eq!(codes_of(&d), vec![codes::ATTRIBUTE_KIND_MISMATCH, codes::INVALID_VALUE]);
    }

    #[test]
    fn role_and_cardinality_violations() {
        let mut b = bundle();
        let m = b.model_mut("m").unwrap();
        m.insert_relation(RelationclassInstance::new(id("r2"), "on", &id("k"), &id("k")));
        m.insert_relation(RelationclassInstance::new(id("r3"), "on", &id("a"), &id("k")));
        let d = conforms(&b, &metamodel());
        assert_eq!(codes_of(&d), vec![codes::CARDINALITY_VIOLATION, codes::ROLE_VIOLATION]);
        assert_eq!(d[0].location.instance_id, Some(id("a")));
        assert_eq!(d[1].location.instance_id, Some(id("r2")));
    }

    #[test]
    fn unknown_metaclass_suppresses_dependent_findings() {
        let mut b = bundle();
        b.model_mut("m").unwrap().class_mut("a").unwrap().metaclass = "Thingy".into();
        let d = conforms(&b, &metamodel());
        assert_eq!(codes_of(&d), vec![codes::UNKNOWN_METACLASS]);
    }

    #[test]
    fn reference_checks() {
        let mut b = bundle();
        let m = b.model_mut("m").unwrap();
        m.class_mut("b").unwrap().attributes.insert(
            "buddy".into(),
            AttributeValue::InstanceRef(InstanceRef::class(&id("m"), &id("k"))),
        );
        m.port_mut("p").unwrap().target = Some(InstanceRef::class(&id("m"), &id("a")));
        m.insert_class(thing("c").with(
            "buddy",
            AttributeValue::InstanceRef(InstanceRef::class(&id("m"), &id("gone"))),
        ));
        let d = conforms(&b, &metamodel());
        assert_eq!(
            codes_of(&d),
            vec![
                codes::REF_TARGET_MISMATCH,
                codes::DANGLING_REFERENCE,
                codes::REF_KIND_MISMATCH
            ]
        );
    }

    #[test]
    fn structural_problems() {
        let mut b = bundle();
        b.metamodel_name = "Other".into();
        let mut stray = Model::new(id("z"), "z", "Nowhere");
        stray.insert_class(ClassInstance::new(id("a"), "Thing"));
        b.insert_model(stray);
        let m = b.model_mut("m").unwrap();
        m.insert_port(PortInstance {
            id: id("q"),
            port: "In".into(),
            owner: id("a"),
            target: None,
        });
        m.insert_relation(RelationclassInstance::new(id("r9"), "on", &id("a"), &id("ghost")));
        let d = conforms(&b, &metamodel());
        assert_eq!(
            codes_of(&d),
            vec![
                codes::METAMODEL_MISMATCH,
                codes::CARDINALITY_VIOLATION,
                codes::UNKNOWN_PORT,
                codes::DANGLING_ENDPOINT,
                codes::UNKNOWN_SCENE_TYPE,
                codes::DUPLICATE_ID,
            ]
        );
    }

    #[test]
    fn report_is_deterministic() {
        let mut b = bundle();
        b.model_mut("m").unwrap().class_mut("b").unwrap().attributes.clear();
        assert_eq!(conforms(&b, &metamodel()), conforms(&b, &metamodel()));
    }
}

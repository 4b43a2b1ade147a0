//! Small hand-built ARWFML bundles for engine and validator tests.
#![allow(dead_code)]

use m2ar_core::arwfml::names;
use m2ar_core::meta2::{
    AssetKind, AttributeValue, Bundle, ClassInstance, Identifier, InstanceRef, Model, PortInstance,
    RelationclassInstance,
};
use m2ar_core::scene3d::{ChangeList, Pose};

pub const OS: &str = "os";
pub const FS: &str = "fs";
pub const ORIGIN: &str = "det-origin";
pub const MARKER: &str = "det-x";
pub const AUG_A: &str = "aug-a";
pub const AUG_B: &str = "aug-b";

pub fn id(s: &str) -> Identifier {
    Identifier::new(s).unwrap()
}

pub fn text(s: &str) -> AttributeValue {
    AttributeValue::Text(s.to_owned())
}

pub fn class_ref(model: &str, instance: &str) -> AttributeValue {
    AttributeValue::InstanceRef(InstanceRef::class(&id(model), &id(instance)))
}

pub fn model_ref(model: &str) -> AttributeValue {
    AttributeValue::InstanceRef(InstanceRef::model(&id(model)))
}

/// ObjectSpace with an origin marker, a second marker and two augmentations
/// at (0,0,0) and (1,0,0), plus Statechange models `sc-a` / `sc-b` that
/// show the respective augmentation.
pub fn base_bundle() -> Bundle {
    let mut b = Bundle::new(names::METAMODEL);
    b.insert_asset(id("img"), AssetKind::Image, "marker.png");
    b.insert_asset(id("mesh"), AssetKind::Gltf, "brick.gltf");
    let mut os = Model::new(id(OS), "objects", names::OBJECT_SPACE);
    for (det, origin) in [(ORIGIN, true), (MARKER, false)] {
        os.insert_class(
            ClassInstance::new(id(det), names::DETECTABLE)
                .with(names::IMAGE, AttributeValue::AssetRef(id("img")))
                .with(names::IS_ORIGIN, AttributeValue::Boolean(origin)),
        );
    }
    for (i, aug) in [AUG_A, AUG_B].into_iter().enumerate() {
        os.insert_class(
            ClassInstance::new(id(aug), names::AUGMENTATION)
                .with(names::OBJECT3D, AttributeValue::AssetRef(id("mesh")))
                .placed(Pose::from_position([i as f64, 0.0, 0.0])),
        );
    }
    b.insert_model(os);
    for (sc, aug) in [("sc-a", AUG_A), ("sc-b", AUG_B)] {
        let mut m = Model::new(id(sc), sc, names::STATECHANGE);
        m.insert_class(
            ClassInstance::new(id(&format!("ref-{sc}")), names::REFERENCE)
                .with(names::TARGET, class_ref(OS, aug))
                .with(
                    names::CHANGES,
                    AttributeValue::ChangeList(ChangeList {
                        visible: Some(true),
                        ..Default::default()
                    }),
                ),
        );
        b.insert_model(m);
    }
    b
}

/// FlowScene under construction. `start` and `end` exist from the outset;
/// flow edges are numbered in insertion order.
pub struct Flow {
    pub model: Model,
    edges: usize,
}

impl Flow {
    pub fn new() -> Self {
        let mut model = Model::new(id(FS), "flow", names::FLOW_SCENE);
        model.insert_class(
            ClassInstance::new(id("osref"), names::OBJECT_SPACE_REF).with(names::OBJECTSPACE_ATTR, model_ref(OS)),
        );
        model.insert_port(PortInstance {
            id: id("port-origin"),
            port: names::ORIGIN_PORT.to_owned(),
            owner: id("osref"),
            target: Some(InstanceRef::class(&id(OS), &id(ORIGIN))),
        });
        model.insert_class(ClassInstance::new(id("start"), names::START));
        model.insert_class(ClassInstance::new(id("end"), names::END));
        Self { model, edges: 0 }
    }

    pub fn node(mut self, class: ClassInstance) -> Self {
        self.model.insert_class(class);
        self
    }

    pub fn timer(self, cond: &str, duration: f64) -> Self {
        self.node(
            ClassInstance::new(id(cond), names::CONDITION)
                .with(names::KIND, text("timer"))
                .with(names::DURATION_S, AttributeValue::Number(duration)),
        )
    }

    pub fn click(self, cond: &str, aug: &str) -> Self {
        self.node(
            ClassInstance::new(id(cond), names::CONDITION)
                .with(names::KIND, text("click"))
                .with(names::OBSERVES, class_ref(OS, aug)),
        )
    }

    pub fn detection(self, cond: &str, det: &str) -> Self {
        self.node(
            ClassInstance::new(id(cond), names::CONDITION)
                .with(names::KIND, text("detection"))
                .with(names::OBSERVES, class_ref(OS, det)),
        )
    }

    pub fn observer(self, cond: &str, key: Option<&str>, value: Option<&str>) -> Self {
        let mut c = ClassInstance::new(id(cond), names::CONDITION).with(names::KIND, text("observer"));
        if let Some(k) = key {
            c = c.with(names::OBSERVER_KEY, text(k));
        }
        if let Some(v) = value {
            c = c.with(names::OBSERVER_VALUE, text(v));
        }
        self.node(c)
    }

    pub fn statechange(self, node: &str, model: &str) -> Self {
        self.node(ClassInstance::new(id(node), names::STATECHANGE_REF).with(names::STATECHANGE_MODEL, model_ref(model)))
    }

    pub fn resolve(self, node: &str, cond: &str) -> Self {
        self.node(ClassInstance::new(id(node), names::RESOLVE).with(names::RESOLVES, class_ref(FS, cond)))
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges += 1;
        let rel = RelationclassInstance::new(id(&format!("flow-{:02}", self.edges)), names::FLOW, &id(from), &id(to));
        self.model.insert_relation(rel);
        self
    }

    /// Chains `nodes` with flow edges.
    pub fn path(mut self, nodes: &[&str]) -> Self {
        for pair in nodes.windows(2) {
            self = self.edge(pair[0], pair[1]);
        }
        self
    }

    pub fn bundle(self) -> Bundle {
        let mut b = base_bundle();
        b.insert_model(self.model);
        b
    }
}

//! The color-brick demonstration: an image marker serving as world origin,
//! three bricks (green, blue, red) revealed one after another by timer
//! Conditions.
//!
//! Ids are fixed so emitted files are byte-identical across runs.

use crate::arwfml::names;
use crate::engine::{EventKind, Scenario, SimEvent};
use crate::meta2::{
    AssetKind, AttributeValue, Bundle, ClassInstance, Identifier, InstanceRef, Model, PortInstance,
    RelationclassInstance,
};
use crate::scene3d::{ChangeList, Pose};

pub const COLOR_BRICK: &str = "color-brick";
pub const FIXTURE_NAMES: [&str; 1] = [COLOR_BRICK];

/// Seconds each timer Condition waits.
pub const TIMER_DURATION_S: f64 = 2.0;
/// Time the scenario detects the origin marker.
pub const ORIGIN_DETECTED_AT: f64 = 1.0;
pub const STOP_T: f64 = 10.0;
/// Height of one brick; bricks are stacked along +y.
pub const BRICK_HEIGHT: f64 = 0.05;

pub const OBJECTSPACE_ID: &str = "objectspace";
pub const FLOWSCENE_ID: &str = "flowscene";
pub const ORIGIN_MARKER_ID: &str = "det-origin-marker";
/// Bricks in reveal order.
pub const BRICKS: [&str; 3] = ["green", "blue", "red"];

fn id(s: &str) -> Identifier {
    Identifier::new(s).expect("fixture ids are non-empty")
}

pub fn augmentation_id(color: &str) -> Identifier {
    id(&format!("aug-{color}-brick"))
}

pub fn statechange_model_id(color: &str) -> Identifier {
    id(&format!("sc-{color}-brick"))
}

fn brick_position(index: usize) -> [f64; 3] {
    [0.0, BRICK_HEIGHT * index as f64, 0.0]
}

fn objectspace(bundle: &mut Bundle) -> Model {
    let os_id = id(OBJECTSPACE_ID);
    let mut os = Model::new(os_id, "Color brick objects", names::OBJECT_SPACE);
    let marker = id(ORIGIN_MARKER_ID);
    let marker_image = id("asset-origin-marker");
    bundle.insert_asset(marker_image.clone(), AssetKind::Image, "origin-marker.png");
    os.insert_class(
        ClassInstance::new(marker.clone(), names::DETECTABLE)
            .named("Origin marker")
            .with(names::IMAGE, AttributeValue::AssetRef(marker_image))
            .with(names::IS_ORIGIN, AttributeValue::Boolean(true)),
    );
    for (i, color) in BRICKS.iter().enumerate() {
        let aug = augmentation_id(color);
        let asset = id(&format!("asset-{color}-brick"));
        bundle.insert_asset(asset.clone(), AssetKind::Gltf, &format!("{color}-brick.gltf"));
        os.insert_class(
            ClassInstance::new(aug.clone(), names::AUGMENTATION)
                .named(&format!("{} brick", capitalize(color)))
                .with(names::OBJECT3D, AttributeValue::AssetRef(asset))
                .with(names::INITIALLY_VISIBLE, AttributeValue::Boolean(false))
                .placed(Pose::from_position(brick_position(i))),
        );
        os.insert_relation(RelationclassInstance::new(
            id(&format!("anchor-{color}-brick")),
            names::ANCHORED,
            &aug,
            &marker,
        ));
    }
    os
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}

fn statechange(index: usize, color: &str) -> Model {
    let mut sc = Model::new(
        statechange_model_id(color),
        &format!("Show {color} brick"),
        names::STATECHANGE,
    );
    let changes = ChangeList {
        visible: Some(true),
        position: Some(brick_position(index)),
        ..ChangeList::default()
    };
    sc.insert_class(
        ClassInstance::new(id(&format!("ref-{color}-brick")), names::REFERENCE)
            .named(&format!("{} brick appears", capitalize(color)))
            .with(
                names::TARGET,
                AttributeValue::InstanceRef(InstanceRef::class(&id(OBJECTSPACE_ID), &augmentation_id(color))),
            )
            .with(names::CHANGES, AttributeValue::ChangeList(changes)),
    );
    sc
}

fn flowscene() -> Model {
    let fs_id = id(FLOWSCENE_ID);
    let mut fs = Model::new(fs_id.clone(), "Color brick assembly", names::FLOW_SCENE);
    let osref = id("osref-objectspace");
    fs.insert_class(
        ClassInstance::new(osref.clone(), names::OBJECT_SPACE_REF)
            .named("Objects")
            .with(
                names::OBJECTSPACE_ATTR,
                AttributeValue::InstanceRef(InstanceRef::model(&id(OBJECTSPACE_ID))),
            ),
    );
    fs.insert_port(PortInstance {
        id: id("port-origin"),
        port: names::ORIGIN_PORT.to_owned(),
        owner: osref,
        target: Some(InstanceRef::class(&id(OBJECTSPACE_ID), &id(ORIGIN_MARKER_ID))),
    });

    // Start → cond-1 → scref-1 → cond-2 → scref-2 → cond-3 → scref-3 → cond-4 → End
    let mut chain = vec![id("start")];
    fs.insert_class(ClassInstance::new(id("start"), names::START).named("Start"));
    for n in 1..=4 {
        let cond = id(&format!("cond-{n}"));
        fs.insert_class(
            ClassInstance::new(cond.clone(), names::CONDITION)
                .named(&format!("Wait {n}"))
                .with(names::KIND, AttributeValue::Text("timer".into()))
                .with(names::DURATION_S, AttributeValue::Number(TIMER_DURATION_S)),
        );
        chain.push(cond);
        if let Some(color) = BRICKS.get(n - 1) {
            let scref = id(&format!("scref-{n}"));
            fs.insert_class(
                ClassInstance::new(scref.clone(), names::STATECHANGE_REF)
                    .named(&format!("Show {color} brick"))
                    .with(
                        names::STATECHANGE_MODEL,
                        AttributeValue::InstanceRef(InstanceRef::model(&statechange_model_id(color))),
                    ),
            );
            chain.push(scref);
        }
    }
    fs.insert_class(ClassInstance::new(id("end"), names::END).named("End"));
    chain.push(id("end"));
    for (n, pair) in chain.windows(2).enumerate() {
        fs.insert_relation(RelationclassInstance::new(
            id(&format!("flow-{:02}", n + 1)),
            names::FLOW,
            &pair[0],
            &pair[1],
        ));
    }
    fs
}

pub fn color_brick_bundle() -> Bundle {
    let mut bundle = Bundle::new(names::METAMODEL);
    let os = objectspace(&mut bundle);
    bundle.insert_model(os);
    for (i, color) in BRICKS.iter().enumerate() {
        bundle.insert_model(statechange(i, color));
    }
    bundle.insert_model(flowscene());
    bundle
}

/// Origin detected at 1 s, then advances at every timer expiry and the stop time.
pub fn color_brick_scenario() -> Scenario {
    let mut events = vec![SimEvent::new(
        0,
        ORIGIN_DETECTED_AT,
        EventKind::Detect {
            detectable: id(ORIGIN_MARKER_ID),
            pose: None,
        },
    )];
    let mut t = ORIGIN_DETECTED_AT;
    while t + TIMER_DURATION_S < STOP_T {
        t += TIMER_DURATION_S;
        events.push(SimEvent::advance(events.len() as u64, t));
    }
    events.push(SimEvent::advance(events.len() as u64, STOP_T));
    Scenario { stop_t: STOP_T, events }
}

/// A copy of the color-brick bundle with one deliberate defect.
#[derive(Debug, Clone)]
pub struct Mutant {
    /// Rule code the defect violates.
    pub code: &'static str,
    pub description: &'static str,
    pub bundle: Bundle,
}

fn mutant(code: &'static str, description: &'static str, edit: impl FnOnce(&mut Bundle)) -> Mutant {
    let mut bundle = color_brick_bundle();
    edit(&mut bundle);
    Mutant {
        code,
        description,
        bundle,
    }
}

fn flow_mut(b: &mut Bundle) -> &mut Model {
    b.model_mut(FLOWSCENE_ID).expect("fixture has a FlowScene")
}

fn objectspace_mut(b: &mut Bundle) -> &mut Model {
    b.model_mut(OBJECTSPACE_ID).expect("fixture has an ObjectSpace")
}

/// One single-defect variant of the fixture per ARWFML rule, V001 to V012.
pub fn color_brick_mutants() -> Vec<Mutant> {
    let os = id(OBJECTSPACE_ID);
    vec![
        mutant("V001", "a second Start", |b| {
            flow_mut(b).insert_class(ClassInstance::new(id("start-2"), names::START));
        }),
        mutant("V002", "ObjectSpaceRef points at a Statechange model", |b| {
            let osref = flow_mut(b).class_mut("osref-objectspace").expect("osref");
            osref.attributes.insert(
                names::OBJECTSPACE_ATTR.to_owned(),
                AttributeValue::InstanceRef(InstanceRef::model(&statechange_model_id("green"))),
            );
        }),
        mutant("V003", "origin marker no longer flagged is_origin", |b| {
            let marker = objectspace_mut(b).class_mut(ORIGIN_MARKER_ID).expect("marker");
            marker
                .attributes
                .insert(names::IS_ORIGIN.to_owned(), AttributeValue::Boolean(false));
        }),
        mutant("V004", "StatechangeRef points at the ObjectSpace", |b| {
            let scref = flow_mut(b).class_mut("scref-1").expect("scref-1");
            scref.attributes.insert(
                names::STATECHANGE_MODEL.to_owned(),
                AttributeValue::InstanceRef(InstanceRef::model(&os)),
            );
        }),
        mutant("V005", "Reference targets the Detectable", |b| {
            let model = b.model_mut(statechange_model_id("green").as_str()).expect("sc");
            let reference = model.class_mut("ref-green-brick").expect("reference");
            reference.attributes.insert(
                names::TARGET.to_owned(),
                AttributeValue::InstanceRef(InstanceRef::class(&os, &id(ORIGIN_MARKER_ID))),
            );
        }),
        mutant("V006", "timer with zero duration", |b| {
            let cond = flow_mut(b).class_mut("cond-1").expect("cond-1");
            cond.attributes
                .insert(names::DURATION_S.to_owned(), AttributeValue::Number(0.0));
        }),
        mutant("V007", "End disconnected from the flow", |b| {
            flow_mut(b).remove_relation("flow-08");
        }),
        mutant("V008", "augmentation is its own child", |b| {
            let green = augmentation_id("green");
            objectspace_mut(b).insert_relation(RelationclassInstance::new(
                id("child-loop"),
                names::CHILD,
                &green,
                &green,
            ));
        }),
        mutant("V009", "augmentation uses the marker image as 3D object", |b| {
            let aug = objectspace_mut(b)
                .class_mut(augmentation_id("green").as_str())
                .expect("green brick");
            aug.attributes.insert(
                names::OBJECT3D.to_owned(),
                AttributeValue::AssetRef(id("asset-origin-marker")),
            );
        }),
        mutant("V010", "Resolve targets a StatechangeRef", |b| {
            let fs = flow_mut(b);
            fs.insert_class(ClassInstance::new(id("resolve-1"), names::RESOLVE).with(
                names::RESOLVES,
                AttributeValue::InstanceRef(InstanceRef::class(&id(FLOWSCENE_ID), &id("scref-1"))),
            ));
            fs.insert_relation(RelationclassInstance::new(
                id("flow-09"),
                names::FLOW,
                &id("cond-4"),
                &id("resolve-1"),
            ));
        }),
        mutant("V011", "FlowScene removed", |b| {
            b.remove_model(FLOWSCENE_ID);
        }),
        mutant("V012", "second ObjectSpaceRef shares the Origin", |b| {
            let fs = flow_mut(b);
            let osref = id("osref-objectspace-2");
            fs.insert_class(ClassInstance::new(osref.clone(), names::OBJECT_SPACE_REF).with(
                names::OBJECTSPACE_ATTR,
                AttributeValue::InstanceRef(InstanceRef::model(&os)),
            ));
            fs.insert_port(PortInstance {
                id: id("port-origin-2"),
                port: names::ORIGIN_PORT.to_owned(),
                owner: osref,
                target: Some(InstanceRef::class(&os, &id(ORIGIN_MARKER_ID))),
            });
        }),
    ]
}

/// Bundle and scenario of a named fixture.
pub fn fixture(name: &str) -> Option<(Bundle, Scenario)> {
    (name == COLOR_BRICK).then(|| (color_brick_bundle(), color_brick_scenario()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_advances_through_every_expiry() {
        let times: Vec<f64> = color_brick_scenario().events.iter().map(|e| e.t).collect();
        assert_eq!(times, [1.0, 3.0, 5.0, 7.0, 9.0, 10.0]);
    }

    #[test]
    fn flow_is_a_single_chain() {
        let fs = flowscene();
        let edges: Vec<(&str, &str)> = fs
            .relations_of(names::FLOW)
            .map(|r| (r.from_instance.as_str(), r.to_instance.as_str()))
            .collect();
        assert_eq!(
            edges,
            [
                ("start", "cond-1"),
                ("cond-1", "scref-1"),
                ("scref-1", "cond-2"),
                ("cond-2", "scref-2"),
                ("scref-2", "cond-3"),
                ("cond-3", "scref-3"),
                ("scref-3", "cond-4"),
                ("cond-4", "end"),
            ]
        );
    }
}

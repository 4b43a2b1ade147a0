//! The ARWFML language: ObjectSpace, Statechange and FlowScene scene types
//! defined on the generic kernel, plus language-level well-formedness rules.
//!
//! Reference attributes whose target typing is owned by a dedicated rule
//! (`objectspace`, `statechange_model`, `target`, `resolves`, the `Origin`
//! port) only constrain the reference kind at the metamodel level, so a
//! mistyped reference surfaces as its V-code rather than a generic mismatch.

pub mod names;
mod validate;

use std::sync::LazyLock;

use crate::meta2::{
    build_metamodel, AttributeDefinition, AttributeValue, Cardinality, MetaClass, Metamodel, RefTarget, RefTargetKind,
    RelationclassDefinition, RoleDefinition, SceneTypeDefinition, ValueKind,
};

pub use validate::{codes, validate};

/// Condition kinds understood by the engine.
pub const CONDITION_KINDS: [&str; 4] = ["timer", "click", "detection", "observer"];

static ARWFML: LazyLock<Metamodel> = LazyLock::new(arwfml_metamodel);

/// Shared instance of [`arwfml_metamodel`].
pub fn metamodel() -> &'static Metamodel {
    &ARWFML
}

/// Builds the ARWFML metamodel.
pub fn arwfml_metamodel() -> Metamodel {
    use names::*;

    let instance = |kinds: &[&str]| RefTarget::of(RefTargetKind::MetaclassInstance, kinds);
    let any_instance = RefTarget::any(RefTargetKind::MetaclassInstance);
    let any_model = RefTarget::any(RefTargetKind::SceneTypeInstance);

    let object_space = SceneTypeDefinition::new(OBJECT_SPACE)
        .metaclass(
            MetaClass::new(AUGMENTATION)
                .attribute(AttributeDefinition::required(OBJECT3D, ValueKind::AssetRef))
                .attribute(
                    AttributeDefinition::optional(INITIALLY_VISIBLE, ValueKind::Boolean)
                        .with_default(AttributeValue::Boolean(false)),
                ),
        )
        .metaclass(
            MetaClass::new(DETECTABLE)
                .attribute(AttributeDefinition::optional(IMAGE, ValueKind::AssetRef))
                .attribute(
                    AttributeDefinition::optional(IS_ORIGIN, ValueKind::Boolean)
                        .with_default(AttributeValue::Boolean(false)),
                ),
        )
        .relationclass(RelationclassDefinition::new(
            CHILD,
            RoleDefinition::new(FROM_ROLE, &[AUGMENTATION]),
            // an augmentation has at most one parent
            RoleDefinition::new(TO_ROLE, &[AUGMENTATION]).with_cardinality(Cardinality::AT_MOST_ONE),
        ))
        .relationclass(RelationclassDefinition::new(
            ANCHORED,
            RoleDefinition::new(FROM_ROLE, &[AUGMENTATION]).with_cardinality(Cardinality::AT_MOST_ONE),
            RoleDefinition::new(TO_ROLE, &[DETECTABLE]),
        ));

    let statechange = SceneTypeDefinition::new(STATECHANGE).metaclass(
        MetaClass::new(REFERENCE)
            .attribute(
                AttributeDefinition::required(TARGET, ValueKind::InstanceRef).with_ref_target(any_instance.clone()),
            )
            .attribute(AttributeDefinition::required(CHANGES, ValueKind::ChangeList)),
    );

    let flow_scene =
        SceneTypeDefinition::new(FLOW_SCENE)
            .metaclass(MetaClass::new(START))
            .metaclass(MetaClass::new(END))
            .metaclass(
                MetaClass::new(OBJECT_SPACE_REF)
                    .attribute(
                        AttributeDefinition::required(OBJECTSPACE_ATTR, ValueKind::InstanceRef)
                            .with_ref_target(any_model.clone()),
                    )
                    .port(ORIGIN_PORT, any_instance.clone()),
            )
            .metaclass(
                MetaClass::new(CONDITION)
                    .attribute(AttributeDefinition::required(KIND, ValueKind::Text))
                    .attribute(AttributeDefinition::optional(DURATION_S, ValueKind::Number))
                    .attribute(
                        AttributeDefinition::optional(OBSERVES, ValueKind::InstanceRef)
                            .with_ref_target(instance(&[AUGMENTATION, DETECTABLE])),
                    )
                    .attribute(AttributeDefinition::optional(OBSERVER_KEY, ValueKind::Text))
                    .attribute(AttributeDefinition::optional(OBSERVER_VALUE, ValueKind::Text)),
            )
            .metaclass(MetaClass::new(STATECHANGE_REF).attribute(
                AttributeDefinition::required(STATECHANGE_MODEL, ValueKind::InstanceRef).with_ref_target(any_model),
            ))
            .metaclass(MetaClass::new(RESOLVE).attribute(
                AttributeDefinition::optional(RESOLVES, ValueKind::InstanceRef).with_ref_target(any_instance),
            ))
            .metaclass(MetaClass::new(OBSERVER).attribute(AttributeDefinition::required(KEY, ValueKind::Text)))
            .relationclass(RelationclassDefinition::new(
                FLOW,
                RoleDefinition::new(FROM_ROLE, &FLOW_SOURCES),
                RoleDefinition::new(TO_ROLE, &FLOW_TARGETS),
            ))
            .relationclass(RelationclassDefinition::new(
                OBSERVES_LINK,
                RoleDefinition::new(FROM_ROLE, &[OBSERVER]),
                RoleDefinition::new(TO_ROLE, &[CONDITION]),
            ));

    build_metamodel(
        METAMODEL,
        METAMODEL_VERSION,
        vec![object_space, statechange, flow_scene],
    )
    .expect("the ARWFML definition is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn referentially_transparent() {
        assert_eq!(arwfml_metamodel(), arwfml_metamodel());
        assert_eq!(&arwfml_metamodel(), metamodel());
    }

    #[test]
    fn scene_types_in_order() {
        let names: Vec<_> = metamodel().scene_types().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["ObjectSpace", "Statechange", "FlowScene"]);
    }
}

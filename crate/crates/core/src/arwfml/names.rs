//! Names of the ARWFML scene types, classes, relations, ports and attributes.

pub const METAMODEL: &str = "ARWFML";
pub const METAMODEL_VERSION: &str = "1.0";

pub const OBJECT_SPACE: &str = "ObjectSpace";
pub const STATECHANGE: &str = "Statechange";
pub const FLOW_SCENE: &str = "FlowScene";

pub const AUGMENTATION: &str = "Augmentation";
pub const DETECTABLE: &str = "Detectable";
pub const CHILD: &str = "child";
pub const ANCHORED: &str = "anchored";

pub const OBJECT3D: &str = "object3d";
pub const INITIALLY_VISIBLE: &str = "initially_visible";
pub const IMAGE: &str = "image";
pub const IS_ORIGIN: &str = "is_origin";

pub const REFERENCE: &str = "Reference";
pub const TARGET: &str = "target";
pub const CHANGES: &str = "changes";

pub const START: &str = "Start";
pub const END: &str = "End";
pub const OBJECT_SPACE_REF: &str = "ObjectSpaceRef";
pub const CONDITION: &str = "Condition";
pub const STATECHANGE_REF: &str = "StatechangeRef";
pub const RESOLVE: &str = "Resolve";
pub const OBSERVER: &str = "Observer";
pub const FLOW: &str = "flow";
pub const OBSERVES_LINK: &str = "observes_link";
pub const ORIGIN_PORT: &str = "Origin";

pub const OBJECTSPACE_ATTR: &str = "objectspace";
pub const KIND: &str = "kind";
pub const DURATION_S: &str = "duration_s";
pub const OBSERVES: &str = "observes";
pub const OBSERVER_KEY: &str = "observer_key";
pub const OBSERVER_VALUE: &str = "observer_value";
pub const STATECHANGE_MODEL: &str = "statechange_model";
pub const RESOLVES: &str = "resolves";
pub const KEY: &str = "key";

pub const FROM_ROLE: &str = "fr";
pub const TO_ROLE: &str = "tr";

/// Flow nodes that may emit flow edges.
pub const FLOW_SOURCES: [&str; 4] = [START, CONDITION, STATECHANGE_REF, RESOLVE];
/// Flow nodes that may receive flow edges.
pub const FLOW_TARGETS: [&str; 4] = [CONDITION, STATECHANGE_REF, RESOLVE, END];

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AttributeValue;

/// The closed set of attribute payload kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Text,
    Number,
    Boolean,
    Vector3,
    Quaternion,
    AssetRef,
    InstanceRef,
    ChangeList,
}

impl ValueKind {
    pub const ALL: [ValueKind; 8] = [
        ValueKind::Text,
        ValueKind::Number,
        ValueKind::Boolean,
        ValueKind::Vector3,
        ValueKind::Quaternion,
        ValueKind::AssetRef,
        ValueKind::InstanceRef,
        ValueKind::ChangeList,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Boolean => "boolean",
            ValueKind::Vector3 => "vector3",
            ValueKind::Quaternion => "quaternion",
            ValueKind::AssetRef => "asset_ref",
            ValueKind::InstanceRef => "instance_ref",
            ValueKind::ChangeList => "change_list",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefTargetKind {
    MetaclassInstance,
    PortInstance,
    SceneTypeInstance,
}

/// What an instance reference may point at. An empty `allowed_types` list
/// accepts any metaclass, port or scene type of the given kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefTarget {
    pub kind: RefTargetKind,
    pub allowed_types: Vec<String>,
}

impl RefTarget {
    pub fn any(kind: RefTargetKind) -> Self {
        Self {
            kind,
            allowed_types: Vec::new(),
        }
    }

    pub fn of(kind: RefTargetKind, types: &[&str]) -> Self {
        Self {
            kind,
            allowed_types: types.iter().map(|t| (*t).to_owned()).collect(),
        }
    }

    pub fn permits(&self, type_name: &str) -> bool {
        self.allowed_types.is_empty() || self.allowed_types.iter().any(|t| t == type_name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDefinition {
    pub name: String,
    pub value_kind: ValueKind,
    pub required: bool,
    pub default: Option<AttributeValue>,
    pub ref_target: Option<RefTarget>,
}

impl AttributeDefinition {
    pub fn required(name: &str, value_kind: ValueKind) -> Self {
        Self {
            name: name.to_owned(),
            value_kind,
            required: true,
            default: None,
            ref_target: None,
        }
    }

    pub fn optional(name: &str, value_kind: ValueKind) -> Self {
        Self {
            required: false,
            ..Self::required(name, value_kind)
        }
    }

    pub fn with_default(mut self, default: AttributeValue) -> Self {
        self.default = Some(default);
        self
    }

    pub fn with_ref_target(mut self, target: RefTarget) -> Self {
        self.ref_target = Some(target);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDefinition {
    pub name: String,
    pub ref_target: RefTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaClass {
    pub name: String,
    pub attributes: Vec<AttributeDefinition>,
    pub ports: Vec<PortDefinition>,
}

impl MetaClass {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            attributes: Vec::new(),
            ports: Vec::new(),
        }
    }

    pub fn attribute(mut self, def: AttributeDefinition) -> Self {
        self.attributes.push(def);
        self
    }

    pub fn port(mut self, name: &str, ref_target: RefTarget) -> Self {
        self.ports.push(PortDefinition {
            name: name.to_owned(),
            ref_target,
        });
        self
    }

    pub fn find_attribute(&self, name: &str) -> Option<&AttributeDefinition> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn find_port(&self, name: &str) -> Option<&PortDefinition> {
        self.ports.iter().find(|p| p.name == name)
    }
}

/// `max = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cardinality {
    pub min: u32,
    pub max: Option<u32>,
}

impl Cardinality {
    pub const ANY: Cardinality = Cardinality { min: 0, max: None };
    pub const AT_MOST_ONE: Cardinality = Cardinality { min: 0, max: Some(1) };

    pub fn admits(&self, count: usize) -> bool {
        count >= self.min as usize && self.max.is_none_or(|m| count <= m as usize)
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(max) => write!(f, "{}..{}", self.min, max),
            None => write!(f, "{}..*", self.min),
        }
    }
}

/// One end of a relationclass. The cardinality bounds how many relations of
/// the owning relationclass each eligible instance takes part in at this end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDefinition {
    pub name: String,
    pub allowed_endpoint_types: Vec<String>,
    pub cardinality: Cardinality,
}

impl RoleDefinition {
    pub fn new(name: &str, types: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            allowed_endpoint_types: types.iter().map(|t| (*t).to_owned()).collect(),
            cardinality: Cardinality::ANY,
        }
    }

    pub fn with_cardinality(mut self, cardinality: Cardinality) -> Self {
        self.cardinality = cardinality;
        self
    }

    pub fn admits(&self, type_name: &str) -> bool {
        self.allowed_endpoint_types.iter().any(|t| t == type_name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationclassDefinition {
    pub name: String,
    pub from_role: RoleDefinition,
    pub to_role: RoleDefinition,
    pub attributes: Vec<AttributeDefinition>,
}

impl RelationclassDefinition {
    pub fn new(name: &str, from_role: RoleDefinition, to_role: RoleDefinition) -> Self {
        Self {
            name: name.to_owned(),
            from_role,
            to_role,
            attributes: Vec::new(),
        }
    }

    pub fn find_attribute(&self, name: &str) -> Option<&AttributeDefinition> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneTypeDefinition {
    pub name: String,
    pub metaclasses: Vec<MetaClass>,
    pub relationclasses: Vec<RelationclassDefinition>,
}

impl SceneTypeDefinition {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            metaclasses: Vec::new(),
            relationclasses: Vec::new(),
        }
    }

    pub fn metaclass(mut self, class: MetaClass) -> Self {
        self.metaclasses.push(class);
        self
    }

    pub fn relationclass(mut self, rel: RelationclassDefinition) -> Self {
        self.relationclasses.push(rel);
        self
    }

    pub fn find_metaclass(&self, name: &str) -> Option<&MetaClass> {
        self.metaclasses.iter().find(|c| c.name == name)
    }

    pub fn find_relationclass(&self, name: &str) -> Option<&RelationclassDefinition> {
        self.relationclasses.iter().find(|r| r.name == name)
    }

    /// Whether `name` is a metaclass or port declared in this scene type.
    fn declares_endpoint_type(&self, name: &str) -> bool {
        self.metaclasses
            .iter()
            .any(|c| c.name == name || c.ports.iter().any(|p| p.name == name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetamodelError {
    #[error("duplicate name `{name}` in {scope}")]
    DuplicateName { scope: String, name: String },
    #[error("role `{role}` of relationclass `{relationclass}` names unknown endpoint type `{endpoint}`")]
    UnresolvedEndpointType {
        relationclass: String,
        role: String,
        endpoint: String,
    },
    #[error("invalid definition of `{name}`: {reason}")]
    InvalidDefinition { name: String, reason: String },
}

/// A validated, immutable language definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Metamodel {
    name: String,
    version: String,
    scene_types: Vec<SceneTypeDefinition>,
}

impl Metamodel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn scene_types(&self) -> &[SceneTypeDefinition] {
        &self.scene_types
    }

    pub fn scene_type(&self, name: &str) -> Option<&SceneTypeDefinition> {
        self.scene_types.iter().find(|s| s.name == name)
    }
}

/// Checks a set of scene-type descriptions and freezes them into a [`Metamodel`].
pub fn build_metamodel(
    name: &str,
    version: &str,
    scene_types: Vec<SceneTypeDefinition>,
) -> Result<Metamodel, MetamodelError> {
    unique(scene_types.iter().map(|s| s.name.as_str()), name)?;
    for scene in &scene_types {
        check_scene_type(scene)?;
    }
    Ok(Metamodel {
        name: name.to_owned(),
        version: version.to_owned(),
        scene_types,
    })
}

fn unique<'a>(names: impl IntoIterator<Item = &'a str>, scope: &str) -> Result<(), MetamodelError> {
    let mut seen = BTreeSet::new();
    for name in names {
        if name.is_empty() {
            return Err(MetamodelError::InvalidDefinition {
                name: scope.to_owned(),
                reason: "empty name".into(),
            });
        }
        if !seen.insert(name) {
            return Err(MetamodelError::DuplicateName {
                scope: scope.to_owned(),
                name: name.to_owned(),
            });
        }
    }
    Ok(())
}

fn check_scene_type(scene: &SceneTypeDefinition) -> Result<(), MetamodelError> {
    let scope = format!("scene type `{}`", scene.name);
    unique(
        scene
            .metaclasses
            .iter()
            .map(|c| c.name.as_str())
            .chain(scene.relationclasses.iter().map(|r| r.name.as_str())),
        &scope,
    )?;

    for class in &scene.metaclasses {
        let scope = format!("metaclass `{}`", class.name);
        unique(
            class
                .attributes
                .iter()
                .map(|a| a.name.as_str())
                .chain(class.ports.iter().map(|p| p.name.as_str())),
            &scope,
        )?;
        for attr in &class.attributes {
            check_attribute(attr)?;
        }
    }

    for rel in &scene.relationclasses {
        if rel.from_role.name == rel.to_role.name {
            return Err(MetamodelError::InvalidDefinition {
                name: rel.name.clone(),
                reason: "from_role and to_role share a name".into(),
            });
        }
        unique(
            rel.attributes.iter().map(|a| a.name.as_str()),
            &format!("relationclass `{}`", rel.name),
        )?;
        for attr in &rel.attributes {
            check_attribute(attr)?;
        }
        for role in [&rel.from_role, &rel.to_role] {
            if role.allowed_endpoint_types.is_empty() {
                return Err(MetamodelError::InvalidDefinition {
                    name: rel.name.clone(),
                    reason: format!("role `{}` allows no endpoint types", role.name),
                });
            }
            if role.cardinality.max.is_some_and(|max| max < role.cardinality.min) {
                return Err(MetamodelError::InvalidDefinition {
                    name: rel.name.clone(),
                    reason: format!("role `{}` has min > max", role.name),
                });
            }
            if let Some(endpoint) = role
                .allowed_endpoint_types
                .iter()
                .find(|t| !scene.declares_endpoint_type(t))
            {
                return Err(MetamodelError::UnresolvedEndpointType {
                    relationclass: rel.name.clone(),
                    role: role.name.clone(),
                    endpoint: endpoint.clone(),
                });
            }
        }
    }
    Ok(())
}

fn check_attribute(attr: &AttributeDefinition) -> Result<(), MetamodelError> {
    let invalid = |reason: &str| MetamodelError::InvalidDefinition {
        name: attr.name.clone(),
        reason: reason.to_owned(),
    };
    match (attr.value_kind == ValueKind::InstanceRef, attr.ref_target.is_some()) {
        (true, false) => return Err(invalid("instance_ref attribute without ref_target")),
        (false, true) => return Err(invalid("ref_target on a non-reference attribute")),
        _ => {}
    }
    if let Some(default) = &attr.default {
        if default.kind() != attr.value_kind {
            return Err(invalid("default does not match value_kind"));
        }
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Identifier, RefTargetKind, ValueKind};
use crate::scene3d::{ChangeList, Pose, Quat, Vec3};

/// Typed pointer to a class instance, a port instance, or a whole model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "ref", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceRef {
    ClassInstance { model: Identifier, instance: Identifier },
    PortInstance { model: Identifier, instance: Identifier },
    Model { model: Identifier },
}

impl InstanceRef {
    pub fn class(model: &Identifier, instance: &Identifier) -> Self {
        Self::ClassInstance {
            model: model.clone(),
            instance: instance.clone(),
        }
    }

    pub fn port(model: &Identifier, instance: &Identifier) -> Self {
        Self::PortInstance {
            model: model.clone(),
            instance: instance.clone(),
        }
    }

    pub fn model(model: &Identifier) -> Self {
        Self::Model { model: model.clone() }
    }

    pub fn kind(&self) -> RefTargetKind {
        match self {
            InstanceRef::ClassInstance { .. } => RefTargetKind::MetaclassInstance,
            InstanceRef::PortInstance { .. } => RefTargetKind::PortInstance,
            InstanceRef::Model { .. } => RefTargetKind::SceneTypeInstance,
        }
    }

    pub fn model_id(&self) -> &Identifier {
        match self {
            InstanceRef::ClassInstance { model, .. }
            | InstanceRef::PortInstance { model, .. }
            | InstanceRef::Model { model } => model,
        }
    }

    pub fn instance_id(&self) -> Option<&Identifier> {
        match self {
            InstanceRef::ClassInstance { instance, .. } | InstanceRef::PortInstance { instance, .. } => Some(instance),
            InstanceRef::Model { .. } => None,
        }
    }
}

impl fmt::Display for InstanceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceRef::ClassInstance { model, instance } => write!(f, "class {model}/{instance}"),
            InstanceRef::PortInstance { model, instance } => write!(f, "port {model}/{instance}"),
            InstanceRef::Model { model } => write!(f, "model {model}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeValue {
    Text(String),
    Number(f64),
    Boolean(bool),
    Vector3(Vec3),
    Quaternion(Quat),
    AssetRef(Identifier),
    InstanceRef(InstanceRef),
    ChangeList(ChangeList),
}

impl AttributeValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            AttributeValue::Text(_) => ValueKind::Text,
            AttributeValue::Number(_) => ValueKind::Number,
            AttributeValue::Boolean(_) => ValueKind::Boolean,
            AttributeValue::Vector3(_) => ValueKind::Vector3,
            AttributeValue::Quaternion(_) => ValueKind::Quaternion,
            AttributeValue::AssetRef(_) => ValueKind::AssetRef,
            AttributeValue::InstanceRef(_) => ValueKind::InstanceRef,
            AttributeValue::ChangeList(_) => ValueKind::ChangeList,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttributeValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttributeValue::Boolean(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_asset(&self) -> Option<&Identifier> {
        match self {
            AttributeValue::AssetRef(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_ref_value(&self) -> Option<&InstanceRef> {
        match self {
            AttributeValue::InstanceRef(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_change_list(&self) -> Option<&ChangeList> {
        match self {
            AttributeValue::ChangeList(c) => Some(c),
            _ => None,
        }
    }
}

pub type Attributes = BTreeMap<String, AttributeValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassInstance {
    pub id: Identifier,
    pub metaclass: String,
    pub display_name: String,
    pub attributes: Attributes,
    pub placement: Option<Pose>,
}

impl ClassInstance {
    pub fn new(id: Identifier, metaclass: &str) -> Self {
        Self {
            display_name: id.to_string(),
            id,
            metaclass: metaclass.to_owned(),
            attributes: Attributes::new(),
            placement: None,
        }
    }

    pub fn named(mut self, display_name: &str) -> Self {
        self.display_name = display_name.to_owned();
        self
    }

    pub fn with(mut self, name: &str, value: AttributeValue) -> Self {
        self.attributes.insert(name.to_owned(), value);
        self
    }

    pub fn placed(mut self, pose: Pose) -> Self {
        self.placement = Some(pose);
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeValue> {
        self.attributes.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationclassInstance {
    pub id: Identifier,
    pub relationclass: String,
    pub from_instance: Identifier,
    pub to_instance: Identifier,
    pub attributes: Attributes,
}

impl RelationclassInstance {
    pub fn new(id: Identifier, relationclass: &str, from: &Identifier, to: &Identifier) -> Self {
        Self {
            id,
            relationclass: relationclass.to_owned(),
            from_instance: from.clone(),
            to_instance: to.clone(),
            attributes: Attributes::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortInstance {
    pub id: Identifier,
    pub port: String,
    pub owner: Identifier,
    pub target: Option<InstanceRef>,
}

/// One instance of a scene type. Instances are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub id: Identifier,
    pub name: String,
    pub scene_type: String,
    class_instances: BTreeMap<Identifier, ClassInstance>,
    relationclass_instances: BTreeMap<Identifier, RelationclassInstance>,
    port_instances: BTreeMap<Identifier, PortInstance>,
}

impl Model {
    pub fn new(id: Identifier, name: &str, scene_type: &str) -> Self {
        Self {
            id,
            name: name.to_owned(),
            scene_type: scene_type.to_owned(),
            class_instances: BTreeMap::new(),
            relationclass_instances: BTreeMap::new(),
            port_instances: BTreeMap::new(),
        }
    }

    /// Inserts or replaces the class instance with the same id.
    pub fn insert_class(&mut self, instance: ClassInstance) -> Option<ClassInstance> {
        self.class_instances.insert(instance.id.clone(), instance)
    }

    pub fn insert_relation(&mut self, relation: RelationclassInstance) -> Option<RelationclassInstance> {
        self.relationclass_instances.insert(relation.id.clone(), relation)
    }

    pub fn insert_port(&mut self, port: PortInstance) -> Option<PortInstance> {
        self.port_instances.insert(port.id.clone(), port)
    }

    pub fn remove_class(&mut self, id: &str) -> Option<ClassInstance> {
        self.class_instances.remove(id)
    }

    pub fn remove_relation(&mut self, id: &str) -> Option<RelationclassInstance> {
        self.relationclass_instances.remove(id)
    }

    pub fn remove_port(&mut self, id: &str) -> Option<PortInstance> {
        self.port_instances.remove(id)
    }

    pub fn class(&self, id: &str) -> Option<&ClassInstance> {
        self.class_instances.get(id)
    }

    pub fn class_mut(&mut self, id: &str) -> Option<&mut ClassInstance> {
        self.class_instances.get_mut(id)
    }

    pub fn relation(&self, id: &str) -> Option<&RelationclassInstance> {
        self.relationclass_instances.get(id)
    }

    pub fn relation_mut(&mut self, id: &str) -> Option<&mut RelationclassInstance> {
        self.relationclass_instances.get_mut(id)
    }

    pub fn port(&self, id: &str) -> Option<&PortInstance> {
        self.port_instances.get(id)
    }

    pub fn port_mut(&mut self, id: &str) -> Option<&mut PortInstance> {
        self.port_instances.get_mut(id)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassInstance> {
        self.class_instances.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationclassInstance> {
        self.relationclass_instances.values()
    }

    pub fn ports(&self) -> impl Iterator<Item = &PortInstance> {
        self.port_instances.values()
    }

    pub fn classes_of<'a>(&'a self, metaclass: &'a str) -> impl Iterator<Item = &'a ClassInstance> {
        self.classes().filter(move |c| c.metaclass == metaclass)
    }

    pub fn relations_of<'a>(&'a self, relationclass: &'a str) -> impl Iterator<Item = &'a RelationclassInstance> {
        self.relations().filter(move |r| r.relationclass == relationclass)
    }

    pub fn ports_of<'a>(&'a self, owner: &'a Identifier) -> impl Iterator<Item = &'a PortInstance> {
        self.ports().filter(move |p| &p.owner == owner)
    }

    pub fn instance_count(&self) -> usize {
        self.class_instances.len() + self.relationclass_instances.len() + self.port_instances.len()
    }

    /// All instance ids in the model, with repetitions where kinds collide.
    pub fn instance_ids(&self) -> impl Iterator<Item = &Identifier> {
        self.class_instances
            .keys()
            .chain(self.relationclass_instances.keys())
            .chain(self.port_instances.keys())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Gltf,
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub kind: AssetKind,
    pub uri: String,
}

/// The interchange unit: models plus the asset registry, both ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub format_version: String,
    pub metamodel_name: String,
    models: BTreeMap<Identifier, Model>,
    pub assets: BTreeMap<Identifier, AssetEntry>,
}

impl Bundle {
    pub const FORMAT_VERSION: &'static str = "1.0";

    pub fn new(metamodel_name: &str) -> Self {
        Self {
            format_version: Self::FORMAT_VERSION.to_owned(),
            metamodel_name: metamodel_name.to_owned(),
            models: BTreeMap::new(),
            assets: BTreeMap::new(),
        }
    }

    pub fn insert_model(&mut self, model: Model) -> Option<Model> {
        self.models.insert(model.id.clone(), model)
    }

    pub fn remove_model(&mut self, id: &str) -> Option<Model> {
        self.models.remove(id)
    }

    pub fn model(&self, id: &str) -> Option<&Model> {
        self.models.get(id)
    }

    pub fn model_mut(&mut self, id: &str) -> Option<&mut Model> {
        self.models.get_mut(id)
    }

    pub fn models(&self) -> impl Iterator<Item = &Model> {
        self.models.values()
    }

    pub fn models_of<'a>(&'a self, scene_type: &'a str) -> impl Iterator<Item = &'a Model> {
        self.models().filter(move |m| m.scene_type == scene_type)
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn insert_asset(&mut self, id: Identifier, kind: AssetKind, uri: &str) {
        self.assets.insert(
            id,
            AssetEntry {
                kind,
                uri: uri.to_owned(),
            },
        );
    }

    /// Finds the class instance with `id` in any model.
    pub fn find_class(&self, id: &str) -> Option<(&Model, &ClassInstance)> {
        self.models().find_map(|m| m.class(id).map(|c| (m, c)))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Resolved<'a> {
    Class {
        model: &'a Model,
        instance: &'a ClassInstance,
    },
    Port {
        model: &'a Model,
        instance: &'a PortInstance,
    },
    Model(&'a Model),
}

impl<'a> Resolved<'a> {
    pub fn model(&self) -> &'a Model {
        match *self {
            Resolved::Class { model, .. } | Resolved::Port { model, .. } | Resolved::Model(model) => model,
        }
    }

    /// Metaclass, port, or scene type name of the referenced element.
    pub fn type_name(&self) -> &'a str {
        match *self {
            Resolved::Class { instance, .. } => &instance.metaclass,
            Resolved::Port { instance, .. } => &instance.port,
            Resolved::Model(model) => &model.scene_type,
        }
    }

    pub fn as_class(&self) -> Option<&'a ClassInstance> {
        match *self {
            Resolved::Class { instance, .. } => Some(instance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("dangling reference: {0}")]
    DanglingReference(InstanceRef),
}

pub fn resolve<'a>(bundle: &'a Bundle, target: &InstanceRef) -> Result<Resolved<'a>, ResolveError> {
    let dangling = || ResolveError::DanglingReference(target.clone());
    let model = bundle.model(target.model_id().as_str()).ok_or_else(dangling)?;
    match target {
        InstanceRef::ClassInstance { instance, .. } => model
            .class(instance.as_str())
            .map(|instance| Resolved::Class { model, instance })
            .ok_or_else(dangling),
        InstanceRef::PortInstance { instance, .. } => model
            .port(instance.as_str())
            .map(|instance| Resolved::Port { model, instance })
            .ok_or_else(dangling),
        InstanceRef::Model { .. } => Ok(Resolved::Model(model)),
    }
}

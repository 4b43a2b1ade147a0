//! Canonical JSON interchange for [`Bundle`]s and the file-based workspace.
//!
//! Document shape:
//!
//! ```json
//! {
//!   "assets": { "<id>": { "kind": "gltf" | "image", "uri": "..." } },
//!   "format": "m2ar-bundle",
//!   "metamodel": "ARWFML",
//!   "models": [ { "id", "name", "scene_type", "classes", "relations", "ports" } ],
//!   "version": "1.0"
//! }
//! ```
//!
//! Attribute values are tagged as `{"kind": <value kind>, "value": ...}`;
//! vectors are `[x, y, z]` and quaternions `[x, y, z, w]`.

mod workspace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical;
use crate::meta2::{
    AssetEntry, AttributeValue, Bundle, ClassInstance, Identifier, InstanceRef, Model, PortInstance,
    RelationclassInstance, ValueKind,
};
use crate::scene3d::{ChangeList, Pose, Quat, Vec3};

pub use workspace::{
    list_bundles, load_bundle, load_workspace, save_bundle, AssetLocation, Workspace, WorkspaceError, ASSETS_DIR,
    BUNDLE_EXTENSION,
};

pub const FORMAT_TAG: &str = "m2ar-bundle";
pub const FORMAT_VERSION: &str = Bundle::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("unsupported format version `{0}` (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("unknown value kind `{0}`")]
    UnknownValueKind(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
}

fn malformed(msg: impl std::fmt::Display) -> ParseError {
    ParseError::MalformedDocument(msg.to_string())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentDto {
    format: String,
    version: String,
    metamodel: String,
    #[serde(default)]
    assets: BTreeMap<Identifier, AssetEntry>,
    #[serde(default)]
    models: Vec<ModelDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDto {
    id: Identifier,
    name: String,
    scene_type: String,
    #[serde(default)]
    classes: Vec<ClassDto>,
    #[serde(default)]
    relations: Vec<RelationDto>,
    #[serde(default)]
    ports: Vec<PortDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDto {
    id: Identifier,
    #[serde(rename = "type")]
    metaclass: String,
    name: String,
    #[serde(default)]
    attributes: BTreeMap<String, ValueDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    placement: Option<Pose>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDto {
    id: Identifier,
    #[serde(rename = "type")]
    relationclass: String,
    from: Identifier,
    to: Identifier,
    #[serde(default)]
    attributes: BTreeMap<String, ValueDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortDto {
    id: Identifier,
    #[serde(rename = "type")]
    port: String,
    owner: Identifier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<InstanceRef>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueDto {
    kind: String,
    value: Value,
}

impl From<&AttributeValue> for ValueDto {
    fn from(v: &AttributeValue) -> Self {
        let value = match v {
            AttributeValue::Text(s) => serde_json::to_value(s),
            AttributeValue::Number(n) => serde_json::to_value(n),
            AttributeValue::Boolean(b) => serde_json::to_value(b),
            AttributeValue::Vector3(v) => serde_json::to_value(v),
            AttributeValue::Quaternion(q) => serde_json::to_value(q),
            AttributeValue::AssetRef(id) => serde_json::to_value(id),
            AttributeValue::InstanceRef(r) => serde_json::to_value(r),
            AttributeValue::ChangeList(c) => serde_json::to_value(c),
        }
        .expect("attribute payloads serialize");
        Self {
            kind: v.kind().as_str().to_owned(),
            value,
        }
    }
}

impl ValueDto {
    fn decode(self) -> Result<AttributeValue, ParseError> {
        let kind = ValueKind::parse(&self.kind).ok_or_else(|| ParseError::UnknownValueKind(self.kind.clone()))?;
        let payload = |e: serde_json::Error| malformed(format!("{} value: {e}", self.kind));
        let v = self.value;
        Ok(match kind {
            ValueKind::Text => AttributeValue::Text(serde_json::from_value(v).map_err(payload)?),
            ValueKind::Number => AttributeValue::Number(serde_json::from_value(v).map_err(payload)?),
            ValueKind::Boolean => AttributeValue::Boolean(serde_json::from_value(v).map_err(payload)?),
            ValueKind::Vector3 => AttributeValue::Vector3(serde_json::from_value::<Vec3>(v).map_err(payload)?),
            ValueKind::Quaternion => AttributeValue::Quaternion(serde_json::from_value::<Quat>(v).map_err(payload)?),
            ValueKind::AssetRef => AttributeValue::AssetRef(serde_json::from_value(v).map_err(payload)?),
            ValueKind::InstanceRef => AttributeValue::InstanceRef(serde_json::from_value(v).map_err(payload)?),
            ValueKind::ChangeList => {
                AttributeValue::ChangeList(serde_json::from_value::<ChangeList>(v).map_err(payload)?)
            }
        })
    }
}

fn encode_attributes(attrs: &BTreeMap<String, AttributeValue>) -> BTreeMap<String, ValueDto> {
    attrs.iter().map(|(k, v)| (k.clone(), ValueDto::from(v))).collect()
}

fn decode_attributes(attrs: BTreeMap<String, ValueDto>) -> Result<BTreeMap<String, AttributeValue>, ParseError> {
    attrs.into_iter().map(|(k, v)| Ok((k, v.decode()?))).collect()
}

/// Parses a canonical (or merely well-formed) bundle document.
///
/// Only structure is checked here: known format and version, known value
/// kinds, unique model ids, and instance ids unique across the bundle.
pub fn parse_bundle(document: &[u8]) -> Result<Bundle, ParseError> {
    let root: Value = serde_json::from_slice(document).map_err(malformed)?;
    let Value::Object(header) = &root else {
        return Err(malformed("top level must be an object"));
    };
    match header.get("format") {
        Some(Value::String(f)) if f == FORMAT_TAG => {}
        _ => return Err(malformed(format!("`format` must be \"{FORMAT_TAG}\""))),
    }
    match header.get("version") {
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(Value::String(v)) => return Err(ParseError::UnsupportedVersion(v.clone())),
        _ => return Err(malformed("`version` must be a string")),
    }
    let doc: DocumentDto = serde_json::from_value(root).map_err(malformed)?;

    let mut bundle = Bundle::new(&doc.metamodel);
    bundle.format_version = doc.version;
    bundle.assets = doc.assets;

    let mut instance_ids = BTreeSet::new();
    for dto in doc.models {
        let mut model = Model::new(dto.id, &dto.name, &dto.scene_type);
        let mut claim = |id: &Identifier| {
            if instance_ids.insert(id.clone()) {
                Ok(())
            } else {
                Err(ParseError::DuplicateId(id.to_string()))
            }
        };
        for c in dto.classes {
            claim(&c.id)?;
            model.insert_class(ClassInstance {
                id: c.id,
                metaclass: c.metaclass,
                display_name: c.name,
                attributes: decode_attributes(c.attributes)?,
                placement: c.placement,
            });
        }
        for r in dto.relations {
            claim(&r.id)?;
            let mut rel = RelationclassInstance::new(r.id, &r.relationclass, &r.from, &r.to);
            rel.attributes = decode_attributes(r.attributes)?;
            model.insert_relation(rel);
        }
        for p in dto.ports {
            claim(&p.id)?;
            model.insert_port(PortInstance {
                id: p.id,
                port: p.port,
                owner: p.owner,
                target: p.target,
            });
        }
        let id = model.id.to_string();
        if bundle.insert_model(model).is_some() {
            return Err(ParseError::DuplicateId(id));
        }
    }
    Ok(bundle)
}

/// Canonical text of `bundle`: sorted keys, id-ordered arrays, LF endings.
pub fn serialize_bundle(bundle: &Bundle) -> String {
    let doc = DocumentDto {
        format: FORMAT_TAG.to_owned(),
        version: bundle.format_version.clone(),
        metamodel: bundle.metamodel_name.clone(),
        assets: bundle.assets.clone(),
        models: bundle
            .models()
            .map(|m| ModelDto {
                id: m.id.clone(),
                name: m.name.clone(),
                scene_type: m.scene_type.clone(),
                classes: m
                    .classes()
                    .map(|c| ClassDto {
                        id: c.id.clone(),
                        metaclass: c.metaclass.clone(),
                        name: c.display_name.clone(),
                        attributes: encode_attributes(&c.attributes),
                        placement: c.placement,
                    })
                    .collect(),
                relations: m
                    .relations()
                    .map(|r| RelationDto {
                        id: r.id.clone(),
                        relationclass: r.relationclass.clone(),
                        from: r.from_instance.clone(),
                        to: r.to_instance.clone(),
                        attributes: encode_attributes(&r.attributes),
                    })
                    .collect(),
                ports: m
                    .ports()
                    .map(|p| PortDto {
                        id: p.id.clone(),
                        port: p.port.clone(),
                        owner: p.owner.clone(),
                        target: p.target.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    canonical::to_document(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta2::AssetKind;

    const EMPTY: &str = r#"{"assets":{},"format":"m2ar-bundle","metamodel":"ARWFML","models":[],"version":"1.0"}"#;

    fn id(s: &str) -> Identifier {
        Identifier::new(s).unwrap()
    }

    #[test]
    fn empty_document() {
        let b = parse_bundle(EMPTY.as_bytes()).unwrap();
        assert_eq!(b.model_count(), 0);
        let text = serialize_bundle(&b);
        let v: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["assets", "format", "metamodel", "models", "version"]);
        assert_eq!(text, "{\n  \"assets\": {},\n  \"format\": \"m2ar-bundle\",\n  \"metamodel\": \"ARWFML\",\n  \"models\": [],\n  \"version\": \"1.0\"\n}\n");
    }

    #[test]
    fn rejects_wrong_version_and_format() {
        let v = EMPTY.replace("\"1.0\"", "\"9.9\"");
        assert_eq!(
            parse_bundle(v.as_bytes()),
            Err(ParseError::UnsupportedVersion("9.9".into()))
        );
        let f = EMPTY.replace("m2ar-bundle", "other");
        assert!(matches!(
            parse_bundle(f.as_bytes()),
            Err(ParseError::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_bundle(b"not json"),
            Err(ParseError::MalformedDocument(_))
        ));
        assert!(matches!(parse_bundle(b"[]"), Err(ParseError::MalformedDocument(_))));
    }

    fn with_model(model_json: &str) -> String {
        EMPTY.replace("\"models\":[]", &format!("\"models\":[{model_json}]"))
    }

    #[test]
    fn rejects_unknown_kind_and_duplicates() {
        let doc = with_model(
            r#"{"id":"m","name":"m","scene_type":"S","classes":[{"id":"c","type":"T","name":"c","attributes":{"a":{"kind":"matrix","value":1}}}]}"#,
        );
        assert_eq!(
            parse_bundle(doc.as_bytes()),
            Err(ParseError::UnknownValueKind("matrix".into()))
        );
        let doc = with_model(
            r#"{"id":"m","name":"m","scene_type":"S","classes":[{"id":"c","type":"T","name":"c"}],"ports":[{"id":"c","type":"P","owner":"c"}]}"#,
        );
        assert_eq!(parse_bundle(doc.as_bytes()), Err(ParseError::DuplicateId("c".into())));
        let m = r#"{"id":"m","name":"m","scene_type":"S"}"#;
        let doc = with_model(&format!("{m},{m}"));
        assert_eq!(parse_bundle(doc.as_bytes()), Err(ParseError::DuplicateId("m".into())));
    }

    #[test]
    fn payload_type_errors_are_malformed() {
        let doc = with_model(
            r#"{"id":"m","name":"m","scene_type":"S","classes":[{"id":"c","type":"T","name":"c","attributes":{"a":{"kind":"vector3","value":[1,2]}}}]}"#,
        );
        assert!(matches!(
            parse_bundle(doc.as_bytes()),
            Err(ParseError::MalformedDocument(_))
        ));
        let doc = with_model(r#"{"id":"","name":"m","scene_type":"S"}"#);
        assert!(matches!(
            parse_bundle(doc.as_bytes()),
            Err(ParseError::MalformedDocument(_))
        ));
    }

    #[test]
    fn all_value_kinds_round_trip() {
        let mut b = Bundle::new("ARWFML");
        b.insert_asset(id("a1"), AssetKind::Gltf, "x.gltf");
        let mut m = Model::new(id("m"), "model", "S");
        let c = ClassInstance::new(id("c"), "T")
            .with("t", AttributeValue::Text("héllo \"q\"".into()))
            .with("n", AttributeValue::Number(0.1 + 0.2))
            .with("b", AttributeValue::Boolean(true))
            .with("v", AttributeValue::Vector3([-0.0, 1e-300, 3.5]))
            .with(
                "q",
                AttributeValue::Quaternion(Quat::from_axis_angle([1.0, 1.0, 0.0], 1.0)),
            )
            .with("a", AttributeValue::AssetRef(id("a1")))
            .with("r", AttributeValue::InstanceRef(InstanceRef::port(&id("m"), &id("p"))))
            .with(
                "cl",
                AttributeValue::ChangeList(ChangeList {
                    visible: Some(false),
                    scale: Some([2.0; 3]),
                    ..Default::default()
                }),
            )
            .placed(Pose::from_position([1.0, 2.0, 3.0]));
        m.insert_class(c);
        m.insert_port(PortInstance {
            id: id("p"),
            port: "P".into(),
            owner: id("c"),
            target: Some(InstanceRef::model(&id("m"))),
        });
        m.insert_relation(RelationclassInstance::new(id("r"), "R", &id("c"), &id("c")));
        b.insert_model(m);

        let text = serialize_bundle(&b);
        let back = parse_bundle(text.as_bytes()).unwrap();
        assert_eq!(back, b);
        assert_eq!(serialize_bundle(&back), text);
        assert!(text.contains(r#""ref": "port_instance""#));
    }
}

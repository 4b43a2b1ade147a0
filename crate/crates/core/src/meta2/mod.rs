//! Generic scene-type metamodeling kernel.
//!
//! A [`Metamodel`] declares scene types, each holding metaclasses (with
//! attributes and ports) and relationclasses whose endpoints attach through
//! from/to roles. A [`Bundle`] is a set of [`Model`]s instantiating those
//! scene types, plus the asset registry their attributes point into.
//! [`conforms`] checks a bundle against a metamodel and reports diagnostics
//! in a deterministic order.

mod conformance;
mod diagnostic;
mod instance;
mod metamodel;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conformance::{codes, conforms};
pub use diagnostic::{sort_diagnostics, Diagnostic, Location, Severity};
pub use instance::{
    resolve, AssetEntry, AssetKind, AttributeValue, Bundle, ClassInstance, InstanceRef, Model, PortInstance,
    RelationclassInstance, ResolveError, Resolved,
};
pub use metamodel::{
    build_metamodel, AttributeDefinition, Cardinality, MetaClass, Metamodel, MetamodelError, PortDefinition, RefTarget,
    RefTargetKind, RelationclassDefinition, RoleDefinition, SceneTypeDefinition, ValueKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("identifiers must be non-empty")]
pub struct EmptyIdentifier;

/// Opaque, non-empty token naming a model, instance or asset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Identifier(String);

impl Identifier {
    pub fn new(value: impl Into<String>) -> Result<Self, EmptyIdentifier> {
        let value = value.into();
        if value.is_empty() {
            Err(EmptyIdentifier)
        } else {
            Ok(Self(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Identifier {
    type Error = EmptyIdentifier;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl TryFrom<&str> for Identifier {
    type Error = EmptyIdentifier;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Identifier> for String {
    fn from(id: Identifier) -> Self {
        id.0
    }
}

impl AsRef<str> for Identifier {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Identifier {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

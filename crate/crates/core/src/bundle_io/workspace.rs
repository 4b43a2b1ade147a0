//! File-based bundle store: one `<name>.m2ar.json` per bundle under a root
//! directory, with referenced asset files under `assets/`.
//!
//! A workspace directory has a single-writer contract: callers must not run
//! concurrent writers against the same root. This is not enforced.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use url::Url;

use super::{parse_bundle, serialize_bundle, ParseError};
use crate::meta2::Bundle;

pub const BUNDLE_EXTENSION: &str = ".m2ar.json";
pub const ASSETS_DIR: &str = "assets";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{}: {source}", path.display())]
    IoFailure { path: PathBuf, source: io::Error },
    #[error("bundle `{0}` already exists")]
    NameCollision(String),
    #[error("invalid bundle name `{0}`")]
    InvalidName(String),
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
}

impl WorkspaceError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::IoFailure {
            path: path.to_owned(),
            source,
        }
    }

    /// The underlying I/O error kind, if this is an I/O failure.
    pub fn io_kind(&self) -> Option<io::ErrorKind> {
        match self {
            Self::IoFailure { source, .. } => Some(source.kind()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

/// Where an asset URI points once resolved against a workspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssetLocation {
    File(PathBuf),
    Absolute(Url),
}

/// Opens an existing directory as a workspace.
pub fn load_workspace(root: impl AsRef<Path>) -> Result<Workspace, WorkspaceError> {
    let root = root.as_ref();
    let meta = fs::metadata(root).map_err(|e| WorkspaceError::io(root, e))?;
    if !meta.is_dir() {
        return Err(WorkspaceError::io(
            root,
            io::Error::new(io::ErrorKind::NotADirectory, "workspace root is not a directory"),
        ));
    }
    Ok(Workspace { root: root.to_owned() })
}

fn check_name(name: &str) -> Result<(), WorkspaceError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(WorkspaceError::InvalidName(name.to_owned()))
    }
}

impl Workspace {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn assets_dir(&self) -> PathBuf {
        self.root.join(ASSETS_DIR)
    }

    pub fn bundle_path(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}{BUNDLE_EXTENSION}"))
    }

    /// Absolute URIs are kept as-is; anything else is relative to `assets/`.
    pub fn asset_location(&self, uri: &str) -> AssetLocation {
        match Url::parse(uri) {
            Ok(url) => AssetLocation::Absolute(url),
            Err(_) => AssetLocation::File(self.assets_dir().join(uri)),
        }
    }
}

/// Writes `bundle` as `<name>.m2ar.json`; never overwrites an existing bundle.
pub fn save_bundle(ws: &Workspace, name: &str, bundle: &Bundle) -> Result<PathBuf, WorkspaceError> {
    check_name(name)?;
    let path = ws.bundle_path(name);
    let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
            return Err(WorkspaceError::NameCollision(name.to_owned()))
        }
        Err(e) => return Err(WorkspaceError::io(&path, e)),
    };
    file.write_all(serialize_bundle(bundle).as_bytes())
        .and_then(|()| file.sync_all())
        .map_err(|e| WorkspaceError::io(&path, e))?;
    log::debug!("saved bundle {}", path.display());
    Ok(path)
}

pub fn load_bundle(ws: &Workspace, name: &str) -> Result<Bundle, WorkspaceError> {
    check_name(name)?;
    let path = ws.bundle_path(name);
    let bytes = fs::read(&path).map_err(|e| WorkspaceError::io(&path, e))?;
    parse_bundle(&bytes).map_err(|source| WorkspaceError::Parse { path, source })
}

/// Names of all stored bundles, sorted.
pub fn list_bundles(ws: &Workspace) -> Result<Vec<String>, WorkspaceError> {
    let entries = fs::read_dir(&ws.root).map_err(|e| WorkspaceError::io(&ws.root, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| WorkspaceError::io(&ws.root, e))?;
        let is_file = entry.file_type().map(|t| t.is_file()).unwrap_or(false);
        if let (true, Some(file_name)) = (is_file, entry.file_name().to_str()) {
            if let Some(name) = file_name.strip_suffix(BUNDLE_EXTENSION) {
                if !name.is_empty() {
                    names.push(name.to_owned());
                }
            }
        }
    }
    names.sort();
    Ok(names)
}

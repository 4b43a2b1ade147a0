use std::io::ErrorKind;

use m2ar_core::arwfml::names;
use m2ar_core::bundle_io::{
    list_bundles, load_bundle, load_workspace, save_bundle, serialize_bundle, AssetLocation, WorkspaceError,
};
use m2ar_core::fixture::color_brick_bundle;
use m2ar_core::meta2::Bundle;

fn empty() -> Bundle {
    Bundle::new(names::METAMODEL)
}

#[test]
fn save_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ws = load_workspace(dir.path()).unwrap();
    let b = color_brick_bundle();
    let path = save_bundle(&ws, "color-brick", &b).unwrap();
    assert_eq!(path, dir.path().join("color-brick.m2ar.json"));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), serialize_bundle(&b));
    assert_eq!(load_bundle(&ws, "color-brick").unwrap(), b);
}

#[test]
fn listing_is_sorted_and_ignores_other_files() {
    let dir = tempfile::tempdir().unwrap();
    let ws = load_workspace(dir.path()).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
    std::fs::create_dir(dir.path().join("folder.m2ar.json")).unwrap();
    save_bundle(&ws, "zeta", &empty()).unwrap();
    save_bundle(&ws, "alpha", &empty()).unwrap();
    assert_eq!(list_bundles(&ws).unwrap(), ["alpha", "zeta"]);
}

#[test]
fn existing_names_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let ws = load_workspace(dir.path()).unwrap();
    save_bundle(&ws, "b", &empty()).unwrap();
    let err = save_bundle(&ws, "b", &color_brick_bundle()).unwrap_err();
    assert!(matches!(err, WorkspaceError::NameCollision(ref n) if n == "b"));
    assert_eq!(load_bundle(&ws, "b").unwrap(), empty());
}

#[test]
fn failures_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    let ws = load_workspace(dir.path()).unwrap();
    let missing = load_bundle(&ws, "absent").unwrap_err();
    assert_eq!(missing.io_kind(), Some(ErrorKind::NotFound));

    for bad in ["", "../escape", ".hidden", "a/b"] {
        assert!(
            matches!(save_bundle(&ws, bad, &empty()), Err(WorkspaceError::InvalidName(_))),
            "{bad}"
        );
    }

    std::fs::write(dir.path().join("broken.m2ar.json"), "{").unwrap();
    assert!(matches!(load_bundle(&ws, "broken"), Err(WorkspaceError::Parse { .. })));

    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    assert!(load_workspace(&file).unwrap_err().io_kind().is_some());
    assert_eq!(
        load_workspace(dir.path().join("nope")).unwrap_err().io_kind(),
        Some(ErrorKind::NotFound)
    );
}

#[test]
fn asset_uris_resolve_against_the_assets_folder() {
    let dir = tempfile::tempdir().unwrap();
    let ws = load_workspace(dir.path()).unwrap();
    assert_eq!(
        ws.asset_location("bricks/green.gltf"),
        AssetLocation::File(dir.path().join("assets").join("bricks/green.gltf"))
    );
    assert!(matches!(
        ws.asset_location("https://example.org/m.png"),
        AssetLocation::Absolute(_)
    ));
}

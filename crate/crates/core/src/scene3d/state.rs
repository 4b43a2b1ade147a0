use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{ChangeList, Pose};
use crate::arwfml::names;
use crate::meta2::{Identifier, Model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationState {
    pub visible: bool,
    pub local_pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectableState {
    pub detected: bool,
    pub world_pose: Option<Pose>,
}

/// Runtime appearance of one ObjectSpace. All world poses live in the frame
/// the origin detection was reported in.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneState {
    pub augmentations: BTreeMap<Identifier, AugmentationState>,
    pub detectables: BTreeMap<Identifier, DetectableState>,
    pub origin_frame: Option<Pose>,
}

impl SceneState {
    /// Initial state: placements as local poses, `initially_visible` (default
    /// hidden), nothing detected.
    pub fn from_objectspace(objectspace: &Model) -> Self {
        let augmentations = objectspace
            .classes_of(names::AUGMENTATION)
            .map(|aug| {
                let visible = aug
                    .attribute(names::INITIALLY_VISIBLE)
                    .and_then(|v| v.as_bool())
                    .unwrap_or(false);
                let state = AugmentationState {
                    visible,
                    local_pose: aug.placement.unwrap_or(Pose::IDENTITY),
                };
                (aug.id.clone(), state)
            })
            .collect();
        let detectables = objectspace
            .classes_of(names::DETECTABLE)
            .map(|d| (d.id.clone(), DetectableState::default()))
            .collect();
        Self {
            augmentations,
            detectables,
            origin_frame: None,
        }
    }

    pub fn mark_detected(&mut self, detectable: &Identifier, pose: Pose) {
        self.detectables.insert(
            detectable.clone(),
            DetectableState {
                detected: true,
                world_pose: Some(pose),
            },
        );
    }

    pub fn is_detected(&self, detectable: &str) -> bool {
        self.detectables.get(detectable).is_some_and(|d| d.detected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("origin has not been detected")]
    OriginUnknown,
    #[error("child/anchored chain through `{0}` is cyclic")]
    CycleDetected(Identifier),
    #[error("unknown augmentation `{0}`")]
    UnknownAugmentation(Identifier),
    #[error("augmentation `{augmentation}` is anchored to `{detectable}`, which has not been detected")]
    AnchorUndetected {
        augmentation: Identifier,
        detectable: Identifier,
    },
    #[error("reference `{reference}` targets `{target}`, which is not an augmentation of the scene")]
    UnknownTarget { reference: Identifier, target: String },
}

/// The Detectable `augmentation` is anchored to, if any (lowest relation id wins).
pub fn anchor_of<'a>(objectspace: &'a Model, augmentation: &str) -> Option<&'a Identifier> {
    objectspace
        .relations_of(names::ANCHORED)
        .find(|r| r.from_instance.as_str() == augmentation)
        .map(|r| &r.to_instance)
}

/// The parent of `augmentation` along the `child` relation (parent → child).
pub fn parent_of<'a>(objectspace: &'a Model, augmentation: &str) -> Option<&'a Identifier> {
    objectspace
        .relations_of(names::CHILD)
        .find(|r| r.to_instance.as_str() == augmentation)
        .map(|r| &r.from_instance)
}

/// World pose of an augmentation.
///
/// Walks upward from the augmentation: an anchored element sits in its
/// Detectable's detected pose, a child in its parent's world pose, and a
/// free root in the origin frame.
pub fn world_pose(state: &SceneState, objectspace: &Model, augmentation: &Identifier) -> Result<Pose, SceneError> {
    let origin = state.origin_frame.ok_or(SceneError::OriginUnknown)?;
    let mut chain = Vec::new();
    let mut visited = BTreeSet::new();
    let mut current = augmentation;
    let frame = loop {
        let aug = state
            .augmentations
            .get(current)
            .ok_or_else(|| SceneError::UnknownAugmentation(current.clone()))?;
        if !visited.insert(current) {
            return Err(SceneError::CycleDetected(current.clone()));
        }
        chain.push(aug.local_pose);
        if let Some(detectable) = anchor_of(objectspace, current.as_str()) {
            let pose = state
                .detectables
                .get(detectable)
                .filter(|d| d.detected)
                .and_then(|d| d.world_pose);
            break pose.ok_or_else(|| SceneError::AnchorUndetected {
                augmentation: current.clone(),
                detectable: detectable.clone(),
            })?;
        }
        match parent_of(objectspace, current.as_str()) {
            Some(parent) => current = parent,
            None => break origin,
        }
    };
    Ok(chain.iter().rev().fold(frame, |world, local| world.compose(local)))
}

/// Applies every Reference of a Statechange model in instance-id order.
/// Present channels overwrite, absent ones are left alone.
pub fn apply_statechange(state: &SceneState, statechange: &Model) -> Result<SceneState, SceneError> {
    let mut next = state.clone();
    for reference in statechange.classes_of(names::REFERENCE) {
        let target = reference
            .attribute(names::TARGET)
            .and_then(|v| v.as_ref_value())
            .and_then(|r| r.instance_id());
        let aug = target
            .and_then(|t| next.augmentations.get_mut(t))
            .ok_or_else(|| SceneError::UnknownTarget {
                reference: reference.id.clone(),
                target: target.map_or_else(|| "<none>".to_owned(), |t| t.to_string()),
            })?;
        let changes = reference
            .attribute(names::CHANGES)
            .and_then(|v| v.as_change_list())
            .copied()
            .unwrap_or_default();
        apply_changes(aug, &changes);
    }
    Ok(next)
}

fn apply_changes(aug: &mut AugmentationState, changes: &ChangeList) {
    if let Some(visible) = changes.visible {
        aug.visible = visible;
    }
    if let Some(position) = changes.position {
        aug.local_pose.position = position;
    }
    if let Some(rotation) = changes.rotation {
        aug.local_pose.rotation = rotation;
    }
    if let Some(scale) = changes.scale {
        aug.local_pose.scale = scale;
    }
}

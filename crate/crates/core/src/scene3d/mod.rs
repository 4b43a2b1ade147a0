//! Pose mathematics and runtime scene state.

mod pose;
mod state;

pub use pose::{hadamard, ChangeList, Pose, Quat, Vec3, UNIT_NORM_TOLERANCE};
pub use state::{
    anchor_of, apply_statechange, parent_of, world_pose, AugmentationState, DetectableState, SceneError, SceneState,
};

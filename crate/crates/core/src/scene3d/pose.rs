use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// Tolerance on `|q| - 1` for a quaternion to count as a rotation.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Composition keeps quaternions bit-exact unless `|q|²` drifts past this.
const RENORMALIZE_THRESHOLD: f64 = 1e-12;

pub type Vec3 = [f64; 3];

pub fn hadamard(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2]]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Rotation quaternion stored as `(x, y, z, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl From<[f64; 4]> for Quat {
    fn from([x, y, z, w]: [f64; 4]) -> Self {
        Self { x, y, z, w }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        q.to_array()
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (angle / 2.0).sin_cos();
        let k = s / len;
        Self::new(axis[0] * k, axis[1] * k, axis[2] * k, c)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w
    }

    pub fn is_unit(self) -> bool {
        let n = self.norm();
        n.is_finite() && (n - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n, self.z / n, self.w / n)
    }

    /// Renormalizes only when the norm has drifted, so unit inputs pass through unchanged.
    fn renormalized(self) -> Self {
        if (self.norm_squared() - 1.0).abs() > RENORMALIZE_THRESHOLD {
            self.normalized()
        } else {
            self
        }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u × v) + 2u × (u × v)
        let u = [self.x, self.y, self.z];
        let t = cross(u, v);
        let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
        let ut = cross(u, t);
        [
            v[0] + self.w * t[0] + ut[0],
            v[1] + self.w * t[1] + ut[1],
            v[2] + self.w * t[2] + ut[2],
        ]
    }
}

impl Mul for Quat {
    type Output = Quat;

    fn mul(self, r: Quat) -> Quat {
        let l = self;
        Quat {
            w: l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            x: l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            y: l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            z: l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        }
    }
}

/// Position, rotation and componentwise scale of an element. Missing
/// fields deserialize to their identity values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: [0.0; 3],
        rotation: Quat::IDENTITY,
        scale: [1.0; 3],
    };

    pub fn from_position(position: Vec3) -> Self {
        Self {
            position,
            ..Self::IDENTITY
        }
    }

    pub fn new(position: Vec3, rotation: Quat, scale: Vec3) -> Self {
        Self {
            position,
            rotation,
            scale,
        }
    }

    /// Unit rotation and strictly positive, finite scale.
    pub fn is_well_formed(&self) -> bool {
        self.rotation.is_unit()
            && self.position.iter().all(|c| c.is_finite())
            && self.scale.iter().all(|s| s.is_finite() && *s > 0.0)
    }

    /// `self ∘ local`: expresses a pose given relative to `self` in `self`'s parent frame.
    ///
    /// Scale composes componentwise without shear correction, so the result
    /// matches the homogeneous-matrix product only when `self.scale` is
    /// uniform or the rotations are scale-axis aligned.
    pub fn compose(&self, local: &Pose) -> Pose {
        let offset = self.rotation.rotate(hadamard(self.scale, local.position));
        Pose {
            position: add(self.position, offset),
            rotation: (self.rotation * local.rotation).renormalized(),
            scale: hadamard(self.scale, local.scale),
        }
    }
}

/// Channels a Statechange Reference overwrites on its target augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeList {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Quat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec3>,
}

impl ChangeList {
    pub fn is_empty(&self) -> bool {
        self.visible.is_none() && self.position.is_none() && self.rotation.is_none() && self.scale.is_none()
    }

    pub fn is_fully_specified(&self) -> bool {
        self.visible.is_some() && self.position.is_some() && self.rotation.is_some() && self.scale.is_some()
    }

    pub fn is_well_formed(&self) -> bool {
        self.rotation.is_none_or(|q| q.is_unit())
            && self.position.is_none_or(|p| p.iter().all(|c| c.is_finite()))
            && self.scale.is_none_or(|s| s.iter().all(|c| c.is_finite() && *c > 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec3, b: Vec3) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn identity_is_neutral_on_both_sides() {
        let p = Pose::new(
            [0.3, -1.2, 4.0],
            Quat::from_axis_angle([1.0, 2.0, 0.5], 0.7),
            [2.0, 0.5, 1.5],
        );
        assert_eq!(Pose::IDENTITY.compose(&p), p);
        assert_eq!(p.compose(&Pose::IDENTITY), p);
    }

    #[test]
    fn pure_translation_adds() {
        let parent = Pose::from_position([1.0, 0.0, 0.0]);
        let local = Pose::from_position([0.0, 1.0, 0.0]);
        assert_eq!(parent.compose(&local).position, [1.0, 1.0, 0.0]);
    }

    #[test]
    fn quarter_turns_about_z() {
        let quarter = Quat::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2);
        let parent = Pose::new([0.0; 3], quarter, [1.0; 3]);
        let moved = parent.compose(&Pose::from_position([1.0, 0.0, 0.0]));
        assert!(close(moved.position, [0.0, 1.0, 0.0]));

        let half = parent.compose(&parent).rotation;
        let expected = Quat::from_axis_angle([0.0, 0.0, 1.0], 2.0 * FRAC_PI_2);
        assert!(close([half.x, half.y, half.z], [expected.x, expected.y, expected.z]));
        assert!((half.w - expected.w).abs() < 1e-12);
    }

    #[test]
    fn parent_scale_stretches_child_offset() {
        let parent = Pose::new([0.0; 3], Quat::IDENTITY, [2.0, 3.0, 4.0]);
        let out = parent.compose(&Pose::new([1.0, 1.0, 1.0], Quat::IDENTITY, [0.5; 3]));
        assert_eq!(out.position, [2.0, 3.0, 4.0]);
        assert_eq!(out.scale, [1.0, 1.5, 2.0]);
    }

    #[test]
    fn drifted_rotation_is_renormalized() {
        let drifted = Quat::new(0.0, 0.0, 0.0, 1.0 + 1e-7);
        let out = Pose::new([0.0; 3], drifted, [1.0; 3]).compose(&Pose::IDENTITY);
        assert!((out.rotation.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_poses_are_detected() {
        assert!(Pose::IDENTITY.is_well_formed());
        let mut p = Pose::IDENTITY;
        p.scale[1] = 0.0;
        assert!(!p.is_well_formed());
        p = Pose::IDENTITY;
        p.rotation = Quat::new(0.0, 0.0, 0.0, 2.0);
        assert!(!p.is_well_formed());
    }

    #[test]
    fn change_list_shape() {
        assert!(ChangeList::default().is_empty());
        let full = ChangeList {
            visible: Some(true),
            position: Some([0.0; 3]),
            rotation: Some(Quat::IDENTITY),
            scale: Some([1.0; 3]),
        };
        assert!(full.is_fully_specified());
        assert!(full.is_well_formed());
    }
}

//! Observation vectors.
//!
//! Policy observation (70 dims, fixed layout):
//!
//! | slice    | contents                                   |
//! |----------|--------------------------------------------|
//! | 0..32    | joint positions q (noisy)                  |
//! | 32..35   | bottle base center keypoint (noisy), m     |
//! | 35..38   | bottle lid center keypoint (noisy), m      |
//! | 38..70   | commanded joint targets q̃                  |
//!
//! The privileged observation (191 dims) is a strict superset: its first 70
//! entries are the noise-free policy layout, followed by critic-only state.
//!
//! | slice     | contents                                  |
//! |-----------|-------------------------------------------|
//! | 70..102   | joint velocities                          |
//! | 102..126  | fingertip positions, 8 x 3                |
//! | 126..174  | contact keypoint world positions, 16 x 3  |
//! | 174..178  | bottle orientation quaternion (w, i, j, k)|
//! | 178..184  | bottle linear + angular velocity          |
//! | 184..187  | current random force, N                   |
//! | 187..188  | brake breakaway torque                    |
//! | 188..191  | mass / friction / shape random scales     |

use serde::{Deserialize, Serialize};

use crate::hand::NUM_JOINTS;

pub const OBS_DIM: usize = 70;
pub const PRIV_DIM: usize = 191;

/// What the actor sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

/// What the critic sees; never fed to the actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivilegedObservation(pub Vec<f64>);

impl Observation {
    pub fn zeros() -> Self {
        Self(vec![0.0; OBS_DIM])
    }

    pub fn joint_positions(&self) -> &[f64] {
        &self.0[0..NUM_JOINTS]
    }

    pub fn keypoint_base(&self) -> &[f64] {
        &self.0[32..35]
    }

    pub fn keypoint_lid(&self) -> &[f64] {
        &self.0[35..38]
    }

    pub fn joint_targets(&self) -> &[f64] {
        &self.0[38..70]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl PrivilegedObservation {
    pub fn zeros() -> Self {
        Self(vec![0.0; PRIV_DIM])
    }

    /// The noise-free policy-layout prefix.
    pub fn policy_prefix(&self) -> &[f64] {
        &self.0[0..OBS_DIM]
    }

    pub fn brake_torque(&self) -> f64 {
        self.0[187]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_are_fixed() {
        assert_eq!(Observation::zeros().0.len(), OBS_DIM);
        assert_eq!(PrivilegedObservation::zeros().0.len(), PRIV_DIM);
    }
}
